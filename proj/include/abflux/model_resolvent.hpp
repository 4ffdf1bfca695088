#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "abflux/errors.hpp"
#include "abflux/quadrature.hpp"
#include "abflux/special_functions.hpp"

namespace abflux {

inline double nu_l(double beta, int l) { return std::abs(l + beta); }

namespace detail {

inline void check_kernel_args(double beta, int l, cplx lambda, double r, double rt) {
    if (!(r > 0) || !(rt > 0)) throw DomainError("radii must be positive");
    if (lambda == cplx(0)) throw DomainError("lambda must be nonzero");
    if (std::abs(lambda) * std::max(r, rt) > kSeriesMaxArg) throw DomainError("|lambda| max(r, rt) exceeds 30");
    if (distance_to_integer(nu_l(beta, l)) <= 1e-8) throw NearIntegerOrderError("integer partial-wave order");
}

}  // namespace detail

// (i pi / 2) J_nu(lambda r<) H1_nu(lambda r>) rt with nu = |l + beta|.
inline cplx kernel(double beta, int l, cplx lambda, double r, double rt, double eps = kDefaultSeriesEps) {
    detail::check_kernel_args(beta, l, lambda, r, rt);
    const double nu = nu_l(beta, l);
    const double lo = std::min(r, rt), hi = std::max(r, rt);
    const cplx i(0, 1);
    return i * (std::numbers::pi / 2) * bessel_j(nu, lambda * lo, eps) * hankel1(nu, lambda * hi, eps) * rt;
}

inline double r00_kernel(double beta, int l, double r, double rt) {
    if (!(r > 0) || !(rt > 0)) throw DomainError("radii must be positive");
    const double nu = nu_l(beta, l);
    if (nu == 0.0) throw DomainError("zero order has no zero-energy kernel");
    return std::pow(std::min(r, rt) / std::max(r, rt), nu) * rt / (2 * nu);
}

enum class Branch { analytic, plus, minus };

struct MuSplit {
    double mu_plus, mu_minus;
};

inline MuSplit mu_split(double beta) {
    if (!(beta >= -0.5 && beta <= 0.5) || beta == 0.0)
        throw DomainError("beta must lie in [-1/2, 1/2] without 0");
    double mp = beta > 0 ? beta : beta + 1;
    return {mp, 1 - mp};
}

struct SplitA {
    cplx a0;
    cplx apm;
    Branch branch;
    double mu;  // exponent carried by the branch: kernel = a0 + lambda^{2 mu} apm
};

inline SplitA split_A(double beta, int l, cplx lambda, double r, double rt, double eps = kDefaultSeriesEps) {
    detail::check_kernel_args(beta, l, lambda, r, rt);
    const auto mus = mu_split(beta);
    const double nu = nu_l(beta, l);
    const Branch br = (l + beta > 0) ? Branch::plus : Branch::minus;
    const double mu = br == Branch::plus ? mus.mu_plus : mus.mu_minus;
    const int m = static_cast<int>(std::lround(nu - mu));
    const double lo = std::min(r, rt), hi = std::max(r, rt);
    const double sn = boost::math::sin_pi(nu), cs = boost::math::cos_pi(nu);
    const cplx i(0, 1);

    auto slo = detail::scaled_series(nu, lambda * lo, eps).sum;
    auto shi_m = detail::scaled_series(-nu, lambda * hi, eps).sum;
    cplx a0 = (std::numbers::pi / 2) / sn * std::pow(lo / hi, nu) * cplx(slo * shi_m) * rt;

    auto sr = detail::scaled_series(nu, lambda * r, eps).sum;
    auto srt = detail::scaled_series(nu, lambda * rt, eps).sum;
    cplx lam2m = std::pow(lambda * lambda, m);
    cplx apm = i * (std::numbers::pi / 2) * (1.0 + i * cs / sn) * std::pow(r * rt / 4, nu) * lam2m * cplx(sr * srt) * rt;
    return {a0, apm, br, mu};
}

// Coefficients of the small-lambda expansion of one partial-wave kernel on a
// radial grid: kernel(r_i, r_j) = sum over (j, branch) of C * lambda^{exponent}.
struct ModelExpansion {
    double beta = 0.0;
    int l = 0;
    std::vector<double> radii;
    std::map<std::pair<int, Branch>, Eigen::MatrixXcd> coefficients;
    std::map<std::pair<int, Branch>, double> exponents;

    Eigen::MatrixXcd evaluate(cplx lambda) const {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(radii.size(), radii.size());
        for (auto& [key, c] : coefficients) out += std::pow(lambda, exponents.at(key)) * c;
        return out;
    }
};

inline ModelExpansion model_expansion(double beta, int l, const std::vector<double>& radii, int jmax) {
    const auto mus = mu_split(beta);
    const double nu = nu_l(beta, l);
    if (distance_to_integer(nu) <= 1e-8) throw NearIntegerOrderError("integer partial-wave order");
    const Branch br = (l + beta > 0) ? Branch::plus : Branch::minus;
    const double mu = br == Branch::plus ? mus.mu_plus : mus.mu_minus;
    const int m = static_cast<int>(std::lround(nu - mu));
    const double sn = boost::math::sin_pi(nu), cs = boost::math::cos_pi(nu);
    const cplx i(0, 1);
    auto c = [](double n, int k) {
        return std::pow(-0.25, k) / (std::tgamma(k + 1.0) * std::tgamma(n + k + 1.0));
    };
    const size_t n = radii.size();
    ModelExpansion ex;
    ex.beta = beta;
    ex.l = l;
    ex.radii = radii;
    for (int j = 0; j <= jmax; ++j) {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n), P = Eigen::MatrixXcd::Zero(n, n);
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b) {
                double r = radii[a], rt = radii[b];
                double lo = std::min(r, rt), hi = std::max(r, rt);
                double sa = 0.0;
                for (int p = 0; p <= j; ++p) sa += c(nu, p) * std::pow(lo, 2 * p) * c(-nu, j - p) * std::pow(hi, 2 * (j - p));
                A(a, b) = (std::numbers::pi / 2) / sn * std::pow(lo / hi, nu) * sa * rt;
                int k = j - m;
                if (k >= 0) {
                    double sp = 0.0;
                    for (int p = 0; p <= k; ++p) sp += c(nu, p) * std::pow(r, 2 * p) * c(nu, k - p) * std::pow(rt, 2 * (k - p));
                    P(a, b) = i * (std::numbers::pi / 2) * (1.0 + i * cs / sn) * std::pow(r * rt / 4, nu) * sp * rt;
                }
            }
        ex.coefficients[{j, Branch::analytic}] = A;
        ex.exponents[{j, Branch::analytic}] = 2.0 * j;
        if (j >= m) {
            ex.coefficients[{j, br}] = P;
            ex.exponents[{j, br}] = 2.0 * j + 2.0 * mu;
        }
    }
    return ex;
}

namespace detail {

// Majorant of one mode's J.J part of the kernel for r, rt <= M, |lambda| <= lambda0.
inline double jj_term(double nu, double sin_beta, double M, double lambda0) {
    return M * std::exp(2 * lambda0 * M) * std::pow(std::numbers::e * lambda0 * M / (2 * nu), 2 * nu) /
           (4 * nu * sin_beta);
}

// Majorant of one mode's J.J_{-} part with geometric ratio rho = r</r>.
inline double jjm_term(double nu, double sin_beta, double M, double lambda0, double rho) {
    const double B = lambda0 * M * lambda0 * M / 4;
    const double n = std::floor(nu);
    const double extra = std::numbers::pi * nu * std::exp(n * std::log(std::max(B, 1e-300)) - std::lgamma(nu + 1) - std::lgamma(n + 1)) /
                         (0.8856 * sin_beta);
    return M / (2 * nu) * std::pow(rho, nu) * std::exp(2 * B) * (1 + extra);
}

}  // namespace detail

// Certified bound on sum over |l| > L of |kernel| for r, rt <= M,
// |lambda| <= lambda0 and r</r> <= rho.
inline double truncation_bound(double beta, int L, double M, double lambda0, double rho = 0.5) {
    if (L < 2) throw DomainError("truncation bound needs L >= 2");
    if (!(rho < 1)) throw DiagonalError("no pointwise tail bound on the diagonal r = rt");
    if (!(rho >= 0) || !(M > 0) || !(lambda0 >= 0)) throw DomainError("invalid bound parameters");
    const double sb = std::abs(boost::math::sin_pi(beta));
    if (sb < 1e-12) throw IntegerFluxError("integer flux has no partial-wave bound");
    double total = 0.0, last = 0.0;
    const int extra = 4000;
    for (int k = L + 1; k <= L + extra; ++k) {
        for (double nu : {k + beta, k - beta}) {
            if (nu <= 0) continue;
            double t = detail::jj_term(nu, sb, M, lambda0) + detail::jjm_term(nu, sb, M, lambda0, rho);
            total += t;
            last = std::max(last, t);
        }
    }
    // geometric remainder beyond the explicit range
    if (rho > 0) total += 2 * last * rho / (1 - rho);
    return total;
}

// Radial data f_l sampled on Gauss-Legendre nodes over [0, R_supp].
struct PolarFunction {
    double R_supp = 1.0;
    Rule grid;
    std::map<int, std::vector<cplx>> modes;
    std::map<int, std::function<cplx(double)>> exact;  // optional generators of the samples

    static PolarFunction on_grid(double R, int nodes = 128) {
        PolarFunction f;
        f.R_supp = R;
        f.grid = mapped(gauss_legendre(nodes), 0.0, R);
        return f;
    }

    void set_mode(int l, const std::function<cplx(double)>& g) {
        std::vector<cplx> v;
        for (double r : grid.x) v.push_back(g(r));
        modes[l] = std::move(v);
        exact[l] = g;
    }

    // Mode value at any r in [0, R_supp]: the generator when known,
    // otherwise barycentric interpolation of the samples.
    cplx value(int l, double r) const {
        if (auto it = exact.find(l); it != exact.end() && it->second) return it->second(r);
        LegendreInterpolant ip(gauss_legendre(static_cast<int>(grid.x.size())), 0.0, R_supp);
        return ip(modes.at(l), r);
    }
};

namespace detail {

inline double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

inline void check_truncation(double beta, cplx lambda, const PolarFunction& f, int L, double eps) {
    double tail = 0.0;
    const double sb = std::abs(boost::math::sin_pi(beta));
    for (auto& [l, v] : f.modes) {
        if (std::abs(l) <= L) continue;
        double a = max_abs(v);
        if (a == 0.0) continue;
        double nu = nu_l(beta, l);
        double M = f.R_supp, l0 = std::abs(lambda);
        tail += a * M * (jj_term(nu, sb, M, l0) + jjm_term(nu, sb, M, l0, 1.0));
    }
    if (tail > eps) throw TruncationError("dropped modes exceed the requested tolerance");
}

}  // namespace detail

// (R_beta(lambda; l) f_l)(r) at arbitrary radii r > 0 for every stored |l| <= L.
inline std::map<int, std::vector<cplx>> apply_resolvent_at(double beta, cplx lambda, const PolarFunction& f, int L,
                                                           double eps, const std::vector<double>& radii,
                                                           int sub_nodes = 96) {
    if (std::abs(lambda) * f.R_supp > 20) throw DomainError("|lambda| R_supp exceeds 20");
    if (lambda == cplx(0)) throw DomainError("lambda must be nonzero");
    detail::check_truncation(beta, lambda, f, L, eps);
    const Rule ref = gauss_legendre(sub_nodes);
    const LegendreInterpolant interp(gauss_legendre(static_cast<int>(f.grid.x.size())), 0.0, f.R_supp);
    const cplx pref = cplx(0, std::numbers::pi / 2);
    std::map<int, std::vector<cplx>> out;
    for (auto& [l, samples] : f.modes) {
        if (std::abs(l) > L) continue;
        const auto gen = f.exact.find(l);
        auto fval = [&](double x) {
            return gen != f.exact.end() && gen->second ? gen->second(x) : interp(samples, x);
        };
        const double nu = nu_l(beta, l);
        if (distance_to_integer(nu) <= 1e-8) throw NearIntegerOrderError("integer partial-wave order");
        std::vector<cplx> res;
        for (double r : radii) {
            if (!(r > 0)) throw DomainError("output radius must be positive");
            const double rc = std::min(r, f.R_supp);
            cplx inner = 0.0, outer = 0.0;
            // r~ < r: J(lambda r~) H(lambda r)
            auto lo = mapped(ref, 0.0, rc);
            for (size_t k = 0; k < lo.x.size(); ++k) {
                double x = lo.x[k];
                inner += lo.w[k] * bessel_j(nu, lambda * x) * x * fval(x);
            }
            if (rc < f.R_supp) {
                auto hi = mapped(ref, rc, f.R_supp);
                for (size_t k = 0; k < hi.x.size(); ++k) {
                    double x = hi.x[k];
                    outer += hi.w[k] * hankel1(nu, lambda * x) * x * fval(x);
                }
            }
            res.push_back(pref * (hankel1(nu, lambda * r) * inner + bessel_j(nu, lambda * r) * outer));
        }
        out[l] = std::move(res);
    }
    return out;
}

// Zero-energy operator R_00 applied mode by mode, same conventions as above.
inline std::map<int, std::vector<cplx>> apply_r00_at(double beta, const PolarFunction& f, int L,
                                                     const std::vector<double>& radii, int sub_nodes = 96) {
    const Rule ref = gauss_legendre(sub_nodes);
    const LegendreInterpolant interp(gauss_legendre(static_cast<int>(f.grid.x.size())), 0.0, f.R_supp);
    std::map<int, std::vector<cplx>> out;
    for (auto& [l, samples] : f.modes) {
        if (std::abs(l) > L) continue;
        std::vector<cplx> res;
        for (double r : radii) {
            if (!(r > 0)) throw DomainError("output radius must be positive");
            const double rc = std::min(r, f.R_supp);
            cplx v = 0.0;
            auto lo = mapped(ref, 0.0, rc);
            for (size_t k = 0; k < lo.x.size(); ++k) v += lo.w[k] * r00_kernel(beta, l, r, lo.x[k]) * interp(samples, lo.x[k]);
            if (rc < f.R_supp) {
                auto hi = mapped(ref, rc, f.R_supp);
                for (size_t k = 0; k < hi.x.size(); ++k) v += hi.w[k] * r00_kernel(beta, l, r, hi.x[k]) * interp(samples, hi.x[k]);
            }
            res.push_back(v);
        }
        out[l] = std::move(res);
    }
    return out;
}

inline PolarFunction apply_resolvent(double beta, cplx lambda, const PolarFunction& f, int L = 48,
                                     double eps = 1e-12) {
    PolarFunction g;
    g.R_supp = f.R_supp;
    g.grid = f.grid;
    g.modes = apply_resolvent_at(beta, lambda, f, L, eps, f.grid.x);
    return g;
}

// Nystrom matrix of one mode on the rule nodes: M_ij = kernel(r_i, r_j) w_j.
inline Eigen::MatrixXcd resolvent_matrix(double beta, int l, cplx lambda, const Rule& rule) {
    const size_t n = rule.x.size();
    Eigen::MatrixXcd M(n, n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) M(i, j) = kernel(beta, l, lambda, rule.x[i], rule.x[j]) * rule.w[j];
    return M;
}

}  // namespace abflux
