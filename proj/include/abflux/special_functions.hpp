#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "abflux/errors.hpp"

namespace abflux {

using cplx = std::complex<double>;

inline constexpr double kSeriesMaxArg = 30.0;
inline constexpr int kSeriesMaxTerms = 200;
inline constexpr double kDefaultSeriesEps = 1e-15;

inline double gamma_fn(double x) {
    if (!(x > 0)) throw DomainError("gamma_fn needs a positive argument");
    return std::tgamma(x);
}

namespace detail {

using ld = long double;
using cld = std::complex<long double>;

// Neumaier-compensated complex accumulator.
struct CompensatedSum {
    ld re = 0, im = 0, cre = 0, cim = 0;
    static void add1(ld& s, ld& c, ld v) {
        ld t = s + v;
        if (std::abs(s) >= std::abs(v)) c += (s - t) + v;
        else c += (v - t) + s;
        s = t;
    }
    void add(cld v) {
        add1(re, cre, v.real());
        add1(im, cim, v.imag());
    }
    cld value() const { return {re + cre, im + cim}; }
};

inline ld rgamma(ld x) {
    if (x <= 0 && x == std::floor(x)) return 0;
    return 1 / std::tgamma(x);
}

struct SeriesResult {
    cld sum;    // sum_k (-z^2/4)^k / (k! Gamma(nu+k+1))
    cld dsum;   // sum_k (2k+nu) (-z^2/4)^k / (k! Gamma(nu+k+1))
};

// Power series of J_nu(z)/(z/2)^nu for any real nu (negative allowed,
// used for J_{-nu}).
inline SeriesResult scaled_series(double nu, cplx z, double eps) {
    if (!(eps >= 1e-15)) throw DomainError("series tolerance must be at least 1e-15");
    if (std::abs(z) > kSeriesMaxArg) throw DomainError("|z| exceeds the certified series range");
    const cld q = -cld(z) * cld(z) / ld(4);
    const ld n = nu;
    cld term = rgamma(n + 1);
    CompensatedSum s, ds;
    s.add(term);
    ds.add(n * term);
    int small = 0;
    for (int k = 0; k < kSeriesMaxTerms; ++k) {
        ld den = ld(k + 1) * (n + k + 1);
        if (den == 0) throw NearIntegerOrderError("negative integer order in Bessel series");
        term *= q / den;
        s.add(term);
        ds.add(ld(2 * (k + 1) + n) * term);
        ld mag = std::abs(s.value());
        if (std::abs(term) < ld(eps) * mag || (mag == 0 && term == cld(0))) {
            if (++small >= 3) return {s.value(), ds.value()};
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("Bessel series did not converge within 200 terms");
}

inline cld half_power(double nu, cplx z) { return std::pow(cld(z) / ld(2), ld(nu)); }

// J_nu for any real nu, principal branch of (z/2)^nu.
inline cplx bessel_j_any(double nu, cplx z, double eps) {
    if (z == cplx(0)) {
        if (nu == 0) return 1.0;
        if (nu > 0) return 0.0;
        throw DomainError("J of negative order is singular at z = 0");
    }
    auto s = scaled_series(nu, z, eps);
    return cplx(half_power(nu, z) * s.sum);
}

}  // namespace detail

inline cplx scaled_j(double nu, cplx z, double eps = kDefaultSeriesEps) {
    if (!(nu >= 0)) throw DomainError("order must be non-negative");
    return cplx(detail::scaled_series(nu, z, eps).sum);
}

inline cplx bessel_j(double nu, cplx z, double eps = kDefaultSeriesEps) {
    if (!(nu >= 0)) throw DomainError("order must be non-negative");
    return detail::bessel_j_any(nu, z, eps);
}

// J_nu and its z-derivative from the termwise differentiated series.
inline std::pair<cplx, cplx> bessel_j_with_derivative(double nu, cplx z, double eps = kDefaultSeriesEps) {
    if (z == cplx(0)) throw DomainError("derivative series needs z != 0");
    auto s = detail::scaled_series(nu, z, eps);
    auto hp = detail::half_power(nu, z);
    return {cplx(hp * s.sum), cplx(hp * s.dsum / detail::cld(z))};
}

inline double distance_to_integer(double x) { return std::abs(x - std::round(x)); }

inline cplx hankel1(double nu, cplx z, double eps = kDefaultSeriesEps) {
    if (distance_to_integer(nu) <= 1e-8) throw NearIntegerOrderError("Hankel formula degenerates at integer order");
    if (z == cplx(0)) throw DomainError("Hankel function is singular at z = 0");
    const double sn = boost::math::sin_pi(nu), cs = boost::math::cos_pi(nu);
    const cplx i(0, 1);
    return (1.0 + i * cs / sn) * detail::bessel_j_any(nu, z, eps) - i / sn * detail::bessel_j_any(-nu, z, eps);
}

}  // namespace abflux
