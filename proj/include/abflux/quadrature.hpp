#pragma once

#include <cmath>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "abflux/errors.hpp"

namespace abflux {

struct Rule {
    std::vector<double> x, w;
};

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline Rule gauss_legendre(int n) {
    if (n < 1) throw DomainError("rule needs at least one node");
    auto pos = boost::math::legendre_p_zeros<double>(n);
    Rule r;
    std::vector<double> nodes;
    for (double z : pos)
        if (z > 0) nodes.push_back(z);
    std::vector<double> all;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) all.push_back(-*it);
    if (n % 2) all.push_back(0.0);
    for (double z : nodes) all.push_back(z);
    for (double z : all) {
        double dp = boost::math::legendre_p_prime(n, z);
        r.x.push_back(z);
        r.w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
    }
    return r;
}

inline Rule mapped(const Rule& ref, double a, double b) {
    Rule r;
    double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (size_t i = 0; i < ref.x.size(); ++i) {
        r.x.push_back(m + h * ref.x[i]);
        r.w.push_back(h * ref.w[i]);
    }
    return r;
}

// Barycentric interpolation through Gauss-Legendre nodes mapped to [a, b].
class LegendreInterpolant {
public:
    LegendreInterpolant() = default;
    LegendreInterpolant(const Rule& ref, double a, double b) : a_(a), b_(b), t_(ref.x) {
        for (size_t j = 0; j < t_.size(); ++j) {
            double s = std::sqrt((1.0 - t_[j] * t_[j]) * ref.w[j]);
            lam_.push_back(j % 2 ? -s : s);
        }
    }

    template <class V>
    auto operator()(const std::vector<V>& f, double x) const {
        double t = (2.0 * x - a_ - b_) / (b_ - a_);
        V num{};
        double den = 0.0;
        for (size_t j = 0; j < t_.size(); ++j) {
            double d = t - t_[j];
            if (d == 0.0) return f[j];
            double c = lam_[j] / d;
            num += c * f[j];
            den += c;
        }
        return V(num / den);
    }

private:
    double a_ = 0, b_ = 1;
    std::vector<double> t_, lam_;
};

}  // namespace abflux
