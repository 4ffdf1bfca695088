#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/tools/minima.hpp>

#include "abflux/errors.hpp"
#include "abflux/flux_geometry.hpp"
#include "abflux/lattice.hpp"
#include "abflux/model_resolvent.hpp"
#include "abflux/parallel.hpp"

namespace abflux {

enum class Source { model, lattice };

struct ResolventSample {
    double s;
    double value;
    Source source;
};

// Samples ordered by decreasing s. s_ref is the reference shift (0 for the
// zero-energy kernel, otherwise the smallest lattice shift).
struct SampleSet {
    std::vector<ResolventSample> samples;
    double s_ref = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline void sort_desc(std::vector<ResolventSample>& v) {
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.s > b.s; });
}

// 2D kernel sum (1/2pi) sum_l g_l e^{il(theta_p - theta_q)} for one pair.
inline cplx model_green_difference(double beta, double s, Vec2 p, Vec2 q, int L) {
    const double rp = norm(p), rq = norm(q);
    const double dth = std::atan2(p.y, p.x) - std::atan2(q.y, q.x);
    const cplx lam(0, s);
    cplx tot = 0.0;
    for (int l = -L; l <= L; ++l) {
        cplx g = kernel(beta, l, lam, rp, rq) / rq - r00_kernel(beta, l, rp, rq) / rq;
        tot += g * std::polar(1.0, l * dth);
    }
    return tot / (2 * std::numbers::pi);
}

}  // namespace detail

// value(s) = max over probe pairs |G_s(p, q) - G_00(p, q)| for the single pole
// of flux beta at the origin.
inline SampleSet sample_curve_model(double beta, double chi_radius, const std::vector<Vec2>& probes,
                                    const std::vector<double>& s_grid, int L = 48) {
    for (auto& p : probes) {
        if (norm(p) > chi_radius) throw DomainError("probe outside the cutoff disk");
        if (norm(p) == 0.0) throw DomainError("probe at the pole");
    }
    SampleSet out;
    out.samples.resize(s_grid.size());
    parallel_for(s_grid.size(), [&](size_t k) {
        double s = s_grid[k];
        if (!(s > 0)) throw DomainError("shift s must be positive");
        double v = 0.0;
        for (size_t a = 0; a < probes.size(); ++a)
            for (size_t b = a + 1; b < probes.size(); ++b)
                v = std::max(v, std::abs(detail::model_green_difference(beta, s, probes[a], probes[b], L)));
        out.samples[k] = {s, v, Source::model};
    });
    detail::sort_desc(out.samples);
    return out;
}

// Lattice Green function G_s(p, q) at probe pairs, referenced to the smallest
// shift. Probes are config-frame points and snap to the nearest sites.
inline SampleSet sample_curve_lattice(const MagneticLattice& L, double chi_radius, const std::vector<Vec2>& probes,
                                      const std::vector<double>& s_grid, double tol = 1e-10) {
    if (s_grid.size() < 2) throw DomainError("lattice sampling needs at least two shifts");
    if (probes.size() < 2) throw DomainError("need at least two probes");
    SampleSet out;
    const double smin = *std::min_element(s_grid.begin(), s_grid.end());
    if (L.N * L.h < 3.0 / smin) out.warnings.push_back("domain smaller than 3/s_min; boundary may bias the reference");
    std::vector<size_t> sites;
    for (auto& p : probes) {
        if (norm(p) > chi_radius) throw DomainError("probe outside the cutoff disk");
        sites.push_back(L.nearest_site(p + L.shift));
    }
    const size_t K = s_grid.size(), P = sites.size();
    size_t ref = std::min_element(s_grid.begin(), s_grid.end()) - s_grid.begin();
    std::vector<double> val(K, 0.0);
    for (size_t a = 0; a + 1 < P; ++a) {
        Field rhs(L.sites(), 0.0);
        rhs[sites[a]] = 1.0 / (L.h * L.h);
        auto G = solve_multishift_at(L, s_grid, rhs, sites, tol);
        for (size_t k = 0; k < K; ++k)
            for (size_t b = a + 1; b < P; ++b) val[k] = std::max(val[k], std::abs(G[k][b] - G[ref][b]));
    }
    for (size_t k = 0; k < K; ++k)
        if (k != ref) out.samples.push_back({s_grid[k], val[k], Source::lattice});
    out.s_ref = smin;
    detail::sort_desc(out.samples);
    return out;
}

enum class FitModel { power, log_inverse };

inline std::string to_string(FitModel m) { return m == FitModel::power ? "power" : "log_inverse"; }

// power: v = amplitude * s^exponent (or amplitude * |s^p - s_ref^p|);
// log_inverse: v = amplitude / |log s - exponent| (exponent holds c2).
struct ExponentFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double r_squared = 0.0;
    FitModel model = FitModel::power;
    double rss = 0.0;  // in log space
};

struct LogModelFit {
    ExponentFit best;       // log_inverse fit
    ExponentFit power_alt;  // power fit on the same data
    double preference_ratio = 0.0;
    bool log_preferred() const { return preference_ratio < 0.5; }
};

namespace detail {

inline void check_samples(const std::vector<ResolventSample>& v, size_t min_count = 5, double min_decades = 1.5) {
    for (auto& x : v)
        if (!(x.value > 0) || !std::isfinite(x.value) || !(x.s > 0)) throw DegenerateDataError("non-positive sample");
    if (v.size() < min_count) throw WindowError("too few samples for a fit");
    double lo = v.front().s, hi = v.front().s;
    for (auto& x : v) lo = std::min(lo, x.s), hi = std::max(hi, x.s);
    if (std::log10(hi / lo) < min_decades - 1e-9) throw WindowError("samples span too few decades");
}

// Best constant offset c for y ~ m + c, returning (c, rss).
inline std::pair<double, double> offset_fit(const std::vector<double>& y, const std::vector<double>& m) {
    double c = 0.0;
    for (size_t i = 0; i < y.size(); ++i) c += y[i] - m[i];
    c /= y.size();
    double rss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) rss += (y[i] - m[i] - c) * (y[i] - m[i] - c);
    return {c, rss};
}

inline double r2_from(const std::vector<double>& y, double rss) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= y.size();
    double tss = 0.0;
    for (double v : y) tss += (v - mean) * (v - mean);
    return tss > 0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 1.0;
}

// Minimize f over [lo, hi]: coarse scan then Brent on the bracketing cell.
template <class F>
std::pair<double, double> scan_minimize(F f, double lo, double hi, int n = 2000) {
    double bx = lo, bf = std::numeric_limits<double>::infinity();
    int bk = 0;
    for (int k = 0; k <= n; ++k) {
        double x = lo + (hi - lo) * k / n;
        double v = f(x);
        if (v < bf) bf = v, bx = x, bk = k;
    }
    if (!std::isfinite(bf)) return {bx, bf};
    double a = lo + (hi - lo) * std::max(bk - 1, 0) / n, b = lo + (hi - lo) * std::min(bk + 1, n) / n;
    std::uintmax_t it = 200;
    auto r = boost::math::tools::brent_find_minima(f, a, b, 52, it);
    if (r.second < bf) return r;
    return {bx, bf};
}

}  // namespace detail

// Least-squares line through (log s, log value). With s_ref > 0 the model is
// amplitude * |s^p - s_ref^p| (reference-subtracted data).
inline ExponentFit fit_power(const std::vector<ResolventSample>& samples, double s_ref = 0.0) {
    detail::check_samples(samples);
    std::vector<double> x, y;
    for (auto& v : samples) x.push_back(std::log(v.s)), y.push_back(std::log(v.value));
    ExponentFit f;
    f.model = FitModel::power;
    if (s_ref <= 0) {
        const size_t n = x.size();
        double mx = 0, my = 0;
        for (size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
        mx /= n, my /= n;
        double sxy = 0, sxx = 0;
        for (size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
        f.exponent = sxy / sxx;
        double c = my - f.exponent * mx;
        f.amplitude = std::exp(c);
        for (size_t i = 0; i < n; ++i) f.rss += std::pow(y[i] - c - f.exponent * x[i], 2);
    } else {
        for (auto& v : samples)
            if (v.s <= s_ref) throw DegenerateDataError("samples must lie above the reference shift");
        auto model = [&](double p) {
            std::vector<double> m;
            for (auto& v : samples) m.push_back(std::log(std::abs(std::pow(v.s, p) - std::pow(s_ref, p))));
            return m;
        };
        auto rss = [&](double p) { return detail::offset_fit(y, model(p)).second; };
        auto [p, r] = detail::scan_minimize(rss, 0.01, 3.0, 600);
        f.exponent = p;
        f.amplitude = std::exp(detail::offset_fit(y, model(p)).first);
        f.rss = r;
    }
    f.r_squared = detail::r2_from(y, f.rss);
    return f;
}

inline LogModelFit fit_log_model(const std::vector<ResolventSample>& samples, double s_ref = 0.0) {
    detail::check_samples(samples);
    std::vector<double> x, y;
    for (auto& v : samples) x.push_back(std::log(v.s)), y.push_back(std::log(v.value));
    const double xmin = *std::min_element(x.begin(), x.end()), xmax = *std::max_element(x.begin(), x.end());
    const double xr = s_ref > 0 ? std::log(s_ref) : 0.0;
    auto model = [&](double c2) {
        std::vector<double> m;
        for (double xi : x) {
            double v = s_ref > 0 ? 1.0 / (xi - c2) - 1.0 / (xr - c2) : 1.0 / (xi - c2);
            m.push_back(std::log(std::abs(v)));
        }
        return m;
    };
    auto rss = [&](double c2) {
        auto m = model(c2);
        for (double v : m)
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        return detail::offset_fit(y, m).second;
    };
    const double left_hi = (s_ref > 0 ? std::min(xr, xmin) : xmin) - 1e-3;
    auto r1 = detail::scan_minimize(rss, xmax + 1e-3, xmax + 60.0);
    auto r2 = detail::scan_minimize(rss, left_hi - 200.0, left_hi);
    auto best = r1.second <= r2.second ? r1 : r2;
    if (!std::isfinite(best.second)) throw NonConvergenceError("log model fit failed");
    LogModelFit out;
    out.best.model = FitModel::log_inverse;
    out.best.exponent = best.first;
    out.best.amplitude = std::exp(detail::offset_fit(y, model(best.first)).first);
    out.best.rss = best.second;
    out.best.r_squared = detail::r2_from(y, best.second);
    out.power_alt = fit_power(samples, s_ref);
    const double tiny = 1e-300;
    out.preference_ratio = out.best.rss / std::max(out.power_alt.rss, tiny);
    return out;
}

// ---------------------------------------------------------------------------
// Resolvent identity check on the lattice.

struct VodevParams {
    double h = 0.0625;
    int N = 64;
    bool direct = true;  // sparse direct factorization, else CG
    double tol = 1e-12;  // CG relative residual
    unsigned seed = 7;
};

struct VodevReport {
    double residual = 0.0;
    double max_link_difference_outside = 0.0;
};

namespace detail {

class ShiftedSolver {
public:
    ShiftedSolver(const MagneticLattice& L, double s, const VodevParams& p, const std::vector<size_t>& act)
        : L_(L), s_(s), p_(p), act_(act) {
        if (p.direct) {
            std::vector<long> pos(L.sites(), -1);
            for (size_t k = 0; k < act.size(); ++k) pos[act[k]] = static_cast<long>(k);
            auto A = to_sparse(L, s * s);
            std::vector<Eigen::Triplet<cplx>> t;
            for (int k = 0; k < A.outerSize(); ++k)
                for (Eigen::SparseMatrix<cplx>::InnerIterator it(A, k); it; ++it)
                    t.emplace_back(pos[it.row()], pos[it.col()], it.value());
            Eigen::SparseMatrix<cplx> B(act.size(), act.size());
            B.setFromTriplets(t.begin(), t.end());
            llt_.compute(B);
            if (llt_.info() != Eigen::Success) throw ConvergenceError("sparse factorization failed");
        }
    }
    Field solve(const Field& b) const {
        if (!p_.direct) return solve_shifted(L_, s_, b, p_.tol);
        Eigen::VectorXcd v(act_.size());
        for (size_t k = 0; k < act_.size(); ++k) v[k] = b[act_[k]];
        Eigen::VectorXcd x = llt_.solve(v);
        Field out(L_.sites(), 0.0);
        for (size_t k = 0; k < act_.size(); ++k) out[act_[k]] = x[k];
        return out;
    }

private:
    const MagneticLattice& L_;
    double s_;
    VodevParams p_;
    std::vector<size_t> act_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<cplx>> llt_;
};

}  // namespace detail

// Relative residual of R~(lambda)(I - K(lambda)) v = F(lambda) v with
// lambda = i s_lambda, z = i s_z, for a random compactly supported v.
// chi equals 1 within chi1_radius of the cut and ramps to 0 at twice that.
inline VodevReport vodev_check(const Configuration& cfg, double s_lambda, double s_z, double chi1_radius,
                               const VodevParams& prm = {}) {
    if (!(s_lambda > 0) || !(s_z > 0)) throw DomainError("spectral parameters must be i s with s > 0");
    if (!(chi1_radius > 0)) throw DomainError("cutoff radius must be positive");
    const MagneticLattice multi = build(cfg, prm.h, prm.N);
    const double beta = total_flux(cfg);
    const MagneticLattice single =
        build(Configuration({{cfg.poles().front().position, beta}}, true), prm.h, prm.N);
    const Configuration snapped = multi.snapped_config();
    const Vec2 o = multi.base_pole();
    const size_t S = multi.sites();

    std::vector<double> chi(S, 0.0), dist(S, 0.0);
    for (size_t x = 0; x < S; ++x) {
        double d = snapped.distance_to_cut(multi.position(x) - o);
        dist[x] = d;
        chi[x] = std::clamp((2 * chi1_radius - d) / chi1_radius, 0.0, 1.0);
    }
    if (2 * chi1_radius + snapped.scale() > 0.8 * prm.N * prm.h) throw DomainError("cutoff not well inside the grid");

    const MagneticLattice gt = gauge_transform(multi, discrete_phase(multi, PhaseMode::relative_to_beta_A0));
    VodevReport rep;
    for (size_t x = 0; x < S; ++x) {
        if (gt.active[x] != single.active[x]) throw GaugeMismatchError("active site sets differ");
        const size_t n = gt.side();
        const size_t nb[2] = {x + n, x + 1};
        for (size_t y : nb) {
            if (y >= S || (y == x + 1 && (x + 1) % n == 0)) continue;
            if (!gt.active[x] || !gt.active[y]) continue;
            double diff = std::abs(gt.link(x, y) - single.link(x, y));
            if (diff > 1e-10 && !(chi[x] == 1.0 && chi[y] == 1.0))
                throw GaugeMismatchError("operators differ where the cutoff is below 1");
            if (!(chi[x] == 1.0 && chi[y] == 1.0)) rep.max_link_difference_outside = std::max(rep.max_link_difference_outside, diff);
        }
    }

    std::vector<size_t> act;
    for (size_t x = 0; x < S; ++x)
        if (gt.active[x]) act.push_back(x);
    detail::ShiftedSolver Rt_l(gt, s_lambda, prm, act), Rt_z(gt, s_z, prm, act);
    detail::ShiftedSolver Rb_l(single, s_lambda, prm, act), Rb_z(single, s_z, prm, act);

    std::mt19937_64 rng(prm.seed);
    std::normal_distribution<double> g;
    Field v(S, 0.0);
    for (size_t x = 0; x < S; ++x)
        if (gt.active[x] && dist[x] <= 3 * chi1_radius) v[x] = cplx(g(rng), g(rng));

    auto comm = [&](const Field& u) {  // [P_beta, chi] u
        Field cu(S), a, b;
        for (size_t x = 0; x < S; ++x) cu[x] = chi[x] * u[x];
        single.apply(cu, a);
        single.apply(u, b);
        for (size_t x = 0; x < S; ++x) a[x] -= chi[x] * b[x];
        return a;
    };
    const double lam2_minus_z2 = -s_lambda * s_lambda + s_z * s_z;
    Field w = Rt_z.solve(v);
    Field cw = comm(w), k1(S);
    for (size_t x = 0; x < S; ++x) k1[x] = (1 - chi[x]) * v[x] - cw[x];
    Field ql = Rb_l.solve(k1), qz = Rb_z.solve(k1), q(S);
    for (size_t x = 0; x < S; ++x) q[x] = ql[x] - qz[x];
    Field cq = comm(q), vk(S), rhs(S);
    for (size_t x = 0; x < S; ++x) {
        cplx kv = lam2_minus_z2 * chi[x] * (2 - chi[x]) * w[x] + cq[x];
        vk[x] = v[x] - kv;
        rhs[x] = w[x] + (1 - chi[x]) * q[x];
    }
    Field lhs = Rt_l.solve(vk);
    double num = 0, den = 0;
    for (size_t x = 0; x < S; ++x) num += std::norm(lhs[x] - rhs[x]), den += std::norm(rhs[x]);
    rep.residual = std::sqrt(num / den);
    return rep;
}

}  // namespace abflux
