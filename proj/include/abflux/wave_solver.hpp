#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "abflux/errors.hpp"
#include "abflux/lattice.hpp"
#include "abflux/model_resolvent.hpp"
#include "abflux/quadrature.hpp"

namespace abflux {

struct DecaySeries {
    std::vector<double> times;
    std::vector<double> local_norm;
    std::uint64_t config_fingerprint = 0;
    double data_norm = 0.0;  // local norm of the initial velocity, sets the noise floor
};

enum class Regime { super_polynomial, power, power_log };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::super_polynomial: return "super_polynomial";
        case Regime::power: return "power";
        default: return "power_log";
    }
}

struct DecayClassification {
    Regime regime = Regime::power;
    std::optional<double> fitted_exponent;
    std::optional<double> q;
    double rss_power = 0.0, rss_log = 0.0;
    std::string details;
};

// FNV-1a over raw bytes.
class Fingerprint {
public:
    template <class T>
    Fingerprint& add(const T& v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (auto c : b) h_ = (h_ ^ c) * 1099511628211ull;
        return *this;
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 1469598103934665603ull;
};

struct WaveOptions {
    double probe_radius = 2.0;
    int r_nodes = 48;
    int nodes_per_panel = 16;
    double panel_width = 0.0;  // 0: one period of sin(t_max lambda)
    double lambda_max = 0.0;   // 0: where the transformed data has decayed
    // When set, receives u_l(t, r) per mode on the probe radial nodes, row-major in t.
    std::map<int, std::vector<cplx>>* modes_out = nullptr;
};

namespace detail {

// J_nu(x) / (x/2)^nu for real x >= 0.
inline double scaled_j_real(double nu, double x) {
    if (x < 1e-5) return (1.0 - x * x / (4 * (nu + 1))) / std::tgamma(nu + 1);
    return boost::math::cyl_bessel_j(nu, x) / std::pow(x / 2, nu);
}

// Composite rule on [0, R]: geometric panels toward 0, then uniform panels.
inline Rule graded_rule(double R, double width, int levels, int nodes) {
    const Rule ref = gauss_legendre(nodes);
    Rule out;
    auto push = [&](double a, double b) {
        auto m = mapped(ref, a, b);
        out.x.insert(out.x.end(), m.x.begin(), m.x.end());
        out.w.insert(out.w.end(), m.w.begin(), m.w.end());
    };
    double first = std::min(width, R);
    push(0.0, first * std::pow(0.25, levels));
    for (int k = levels - 1; k >= 0; --k) push(first * std::pow(0.25, k + 1), first * std::pow(0.25, k));
    int n = static_cast<int>(std::ceil((R - first) / width - 1e-12));
    for (int k = 0; k < n; ++k) push(first + (R - first) * k / n, first + (R - first) * (k + 1) / n);
    return out;
}

// lambda -> f_hat(lambda) / lambda^nu as a piecewise Legendre interpolant.
class TransformedMode {
public:
    TransformedMode(double nu, const std::function<cplx(double)>& f, double R, double lambda_max, bool tabulate = true)
        : nu_(nu), L_(lambda_max) {
        rr_ = graded_rule(R, 0.25, 40, 16);
        for (size_t k = 0; k < rr_.x.size(); ++k) fr_.push_back(f(rr_.x[k]) * std::pow(rr_.x[k] / 2, nu) * rr_.x[k]);
        if (!tabulate) return;
        ref_ = gauss_legendre(24);
        for (int p = 0; p < pieces_; ++p) {
            double a = L_ * p / pieces_, b = L_ * (p + 1) / pieces_;
            auto m = mapped(ref_, a, b);
            std::vector<cplx> v;
            for (double x : m.x) v.push_back(direct(x));
            vals_.push_back(std::move(v));
            ip_.emplace_back(ref_, a, b);
        }
    }
    cplx direct(double lam) const {
        cplx s = 0.0;
        for (size_t k = 0; k < rr_.x.size(); ++k) s += rr_.w[k] * scaled_j_real(nu_, lam * rr_.x[k]) * fr_[k];
        return s;
    }
    cplx operator()(double lam) const {
        int p = std::clamp(static_cast<int>(lam / L_ * pieces_), 0, pieces_ - 1);
        return ip_[p](vals_[p], lam);
    }

private:
    double nu_, L_;
    static constexpr int pieces_ = 48;
    Rule rr_, ref_;
    std::vector<cplx> fr_;
    std::vector<std::vector<cplx>> vals_;
    std::vector<LegendreInterpolant> ip_;
};

// First lambda past which the transform stays below 1e-15 of its maximum.
inline double band_limit(double nu, const std::function<cplx(double)>& f, double R) {
    TransformedMode probe(nu, f, R, 1.0, false);
    std::vector<double> mag;
    double mx = 0.0;
    for (int k = 1; k <= 160; ++k) {
        double lam = 0.25 * k;
        double v = std::abs(probe.direct(lam)) * std::pow(lam, nu);
        mag.push_back(v);
        mx = std::max(mx, v);
    }
    int run = 0;
    for (size_t k = 0; k < mag.size(); ++k) {
        run = mag[k] < 1e-15 * mx ? run + 1 : 0;
        if (run == 4) return 0.25 * (k + 1);
    }
    throw QuadratureError("initial data is not band limited enough");
}

}  // namespace detail

// sin(t sqrt(P)) / sqrt(P) f1 for one pole of flux beta at the origin,
// mode by mode through the Hankel transform; local norm over the probe disk.
inline DecaySeries single_pole_wave(double beta, const PolarFunction& f1, const std::vector<double>& t_grid,
                                    double eps = 1e-12, const WaveOptions& opt = {}) {
    (void)eps;
    if (t_grid.empty()) return {};
    double tmax = 0.0;
    for (double t : t_grid) tmax = std::max(tmax, std::abs(t));
    double width = opt.panel_width > 0 ? opt.panel_width : std::min(0.25, 2 * std::numbers::pi / std::max(tmax, 1e-12));
    const int npp = opt.nodes_per_panel;
    // at least 8 nodes per period of sin(t lambda)
    if (tmax * width / (2 * std::numbers::pi) * 8 > npp * (1 + 1e-12))
        throw QuadratureError("t exceeds the range certified by the panel width");

    const Rule rq = mapped(gauss_legendre(opt.r_nodes), 0.0, opt.probe_radius);
    const size_t M = rq.x.size(), T = t_grid.size();
    std::vector<double> acc(T, 0.0);
    DecaySeries out;
    out.times = t_grid;
    Fingerprint fp;
    fp.add(beta).add(f1.R_supp);
    double data2 = 0.0;
    const LegendreInterpolant ip(gauss_legendre(static_cast<int>(f1.grid.x.size())), 0.0, f1.R_supp);

    for (auto& [l, samples] : f1.modes) {
        fp.add(l);
        for (auto& v : samples) fp.add(v);
        const double nu = nu_l(beta, l);
        std::function<cplx(double)> f;
        if (auto it = f1.exact.find(l); it != f1.exact.end() && it->second) f = it->second;
        else f = [&ip, &samples, R = f1.R_supp](double r) { return r > R ? cplx(0) : ip(samples, r); };
        for (size_t m = 0; m < M; ++m)
            if (rq.x[m] <= f1.R_supp) data2 += rq.w[m] * std::norm(f(rq.x[m])) * rq.x[m];

        const double Lmax = opt.lambda_max > 0 ? opt.lambda_max : detail::band_limit(nu, f, f1.R_supp);
        const detail::TransformedMode g(nu, f, f1.R_supp, Lmax);
        const Rule lq = detail::graded_rule(Lmax, width, 30, npp);

        std::vector<cplx> u(T * M, 0.0);
        std::vector<double> st(T);
        std::vector<cplx> b(M);
        for (size_t k = 0; k < lq.x.size(); ++k) {
            const double lam = lq.x[k];
            const cplx c = lq.w[k] * std::pow(lam, nu) * g(lam);
            for (size_t m = 0; m < M; ++m) b[m] = c * boost::math::cyl_bessel_j(nu, lam * rq.x[m]);
            for (size_t t = 0; t < T; ++t) {
                const double s = std::sin(t_grid[t] * lam);
                cplx* row = &u[t * M];
                for (size_t m = 0; m < M; ++m) row[m] += s * b[m];
            }
        }
        for (size_t t = 0; t < T; ++t)
            for (size_t m = 0; m < M; ++m) acc[t] += rq.w[m] * std::norm(u[t * M + m]) * rq.x[m];
        if (opt.modes_out) (*opt.modes_out)[l] = std::move(u);
    }
    for (size_t t = 0; t < T; ++t) out.local_norm.push_back(std::sqrt(2 * std::numbers::pi * acc[t]));
    out.data_norm = std::sqrt(2 * std::numbers::pi * data2);
    out.config_fingerprint = fp.value();
    return out;
}

struct LatticeWaveOptions {
    double probe_radius = 2.0;
    Vec2 probe_center;           // config frame
    double sample_interval = 1.0;
    std::vector<double>* energy = nullptr;  // per-step discrete energy when set
};

// Leapfrog for u'' = -H u with u(0) = 0, u'(0) = f1; local norm sampled at
// multiples of sample_interval. The step is cfl * h rounded down so that the
// sampling times fall on steps.
inline DecaySeries lattice_wave(const MagneticLattice& L, const Field& f1, double T, double cfl,
                                double support_radius, const LatticeWaveOptions& opt = {}) {
    if (!(cfl > 0) || cfl > 1.0 / std::sqrt(2.0) + 1e-15) throw CFLError("cfl must lie in (0, 1/sqrt 2]");
    if (T > 0.9 * (L.N * L.h - support_radius)) throw HorizonError("T exceeds the reflection-free horizon");
    if (f1.size() != L.sites()) throw DomainError("initial data has the wrong size");
    const int per = static_cast<int>(std::ceil(opt.sample_interval / (cfl * L.h) - 1e-12));
    const double dt = opt.sample_interval / per;
    const long steps = static_cast<long>(std::floor(T / dt + 1e-9));
    const Vec2 c = opt.probe_center + L.shift;
    std::vector<size_t> disk;
    for (size_t x = 0; x < L.sites(); ++x)
        if (norm(L.position(x) - c) <= opt.probe_radius) disk.push_back(x);
    auto local = [&](const Field& u) {
        double s = 0.0;
        for (size_t x : disk) s += std::norm(u[x]);
        return std::sqrt(s * L.h * L.h);
    };
    Field prev(L.sites(), 0.0), cur(L.sites(), 0.0), next(L.sites()), hu;
    for (size_t x = 0; x < L.sites(); ++x)
        if (L.active[x]) cur[x] = dt * f1[x];
    DecaySeries out;
    Fingerprint fp;
    fp.add(L.h).add(L.N);
    for (auto& p : L.poles) fp.add(p.position.x).add(p.position.y).add(p.flux);
    out.config_fingerprint = fp.value();
    out.data_norm = local(f1);
    out.times.push_back(0.0);
    out.local_norm.push_back(0.0);
    const double dt2 = dt * dt;
    for (long n = 1; n <= steps; ++n) {
        // cur holds u^n
        if (n % per == 0) {
            out.times.push_back(n * dt);
            out.local_norm.push_back(local(cur));
        }
        if (n == steps) break;
        L.apply(cur, hu);
        for (size_t x = 0; x < L.sites(); ++x) next[x] = 2.0 * cur[x] - prev[x] - dt2 * hu[x];
        if (opt.energy) {
            double kin = 0.0;
            for (size_t x = 0; x < L.sites(); ++x) kin += std::norm(next[x] - cur[x]);
            cplx pot = inner(hu, next);
            opt.energy->push_back(kin / dt2 + pot.real());
        }
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return out;
}

// Classify local-energy decay over [t_lo, t_hi].
inline DecayClassification decay_fit(const DecaySeries& s, double t_lo, double t_hi) {
    std::vector<double> t, v;
    for (size_t k = 0; k < s.times.size(); ++k)
        if (s.times[k] >= t_lo && s.times[k] <= t_hi && s.times[k] > 0) t.push_back(s.times[k]), v.push_back(s.local_norm[k]);
    if (t.size() < 20) throw WindowError("decay window needs at least 20 samples");
    if (std::log10(t.back() / t.front()) < 1.5 - 1e-9) throw WindowError("decay window spans fewer than 1.5 decades");
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, x);
    const double floor = 1e-12 * std::max(s.data_norm, vmax);
    std::vector<double> lt, lv;
    for (size_t k = 0; k < t.size(); ++k) {
        if (!(v[k] > floor)) break;
        lt.push_back(std::log(t[k]));
        lv.push_back(std::log(v[k]));
    }
    DecayClassification c;
    if (lt.size() < 3) {
        c.regime = Regime::super_polynomial;
        c.details = "series at the noise floor across the window";
        return c;
    }
    std::vector<double> slope;
    for (size_t k = 1; k < lt.size(); ++k) slope.push_back((lv[k] - lv[k - 1]) / (lt[k] - lt[k - 1]));
    bool steepening = true;
    for (size_t k = 1; k < slope.size(); ++k)
        if (slope[k] > slope[k - 1] + 1e-9 * std::abs(slope[k - 1])) steepening = false;
    const bool truncated = lt.size() < t.size();
    if ((steepening && slope.back() < -3) || (truncated && slope.back() < -3)) {
        c.regime = Regime::super_polynomial;
        c.details = truncated ? "dropped below the noise floor inside the window" : "local slope steepens past -3";
        return c;
    }
    auto line = [](const std::vector<double>& x, const std::vector<double>& y, double& a, double& b) {
        const size_t n = x.size();
        double mx = 0, my = 0;
        for (size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
        mx /= n, my /= n;
        double sxy = 0, sxx = 0;
        for (size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
        b = sxy / sxx;
        a = my - b * mx;
        double rss = 0;
        for (size_t i = 0; i < n; ++i) rss += std::pow(y[i] - a - b * x[i], 2);
        return rss;
    };
    double a, b;
    c.rss_power = line(lt, lv, a, b);
    const double p = -b;
    // log v + log t = log A - q log log t
    std::vector<double> llt, y2;
    for (size_t k = 0; k < lt.size(); ++k) {
        if (lt[k] <= 0) throw WindowError("log-corrected model needs t > 1");
        llt.push_back(std::log(lt[k]));
        y2.push_back(lv[k] + lt[k]);
    }
    double a2, b2;
    c.rss_log = line(llt, y2, a2, b2);
    c.q = -b2;
    if (c.rss_power <= c.rss_log) {
        c.regime = Regime::power;
        c.fitted_exponent = p;
    } else {
        c.regime = Regime::power_log;
        c.fitted_exponent = 1.0;
    }
    return c;
}

// t^{1 + 2 mu_m} * local_norm(t); diagnostic only.
inline std::vector<double> decay_profile(const DecaySeries& s, double mu_m) {
    std::vector<double> out;
    for (size_t k = 0; k < s.times.size(); ++k) out.push_back(std::pow(s.times[k], 1 + 2 * mu_m) * s.local_norm[k]);
    return out;
}

}  // namespace abflux
