#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "abflux/flux_geometry.hpp"
#include "abflux/model_resolvent.hpp"

using namespace abflux;
namespace {

constexpr double kPi = std::numbers::pi;
const cplx I(0, 1);

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

PolarFunction bump(double beta, int l, double R = 6.0) {
    auto f = PolarFunction::on_grid(R);
    double nu = nu_l(beta, l);
    f.set_mode(l, [nu](double r) { return cplx(std::pow(r, nu) * std::exp(-r * r)); });
    return f;
}

}  // namespace

TEST(ModelResolvent, KernelSymmetry) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int k = 0; k < 100; ++k) {
        double beta = 0.1 + 0.35 * u(rng) / 3, r = u(rng), rt = u(rng);
        int l = static_cast<int>(u(rng) * 2) - 3;
        cplx lam(0.2 * u(rng), u(rng));
        EXPECT_LE(rel(kernel(beta, l, lam, r, rt) / rt, kernel(beta, l, lam, rt, r) / r), 1e-14);
    }
}

TEST(ModelResolvent, HalfIntegerClosedForm) {
    for (cplx lam : {cplx(0, 0.5), cplx(0.3, 0.8), cplx(0, 2)})
        for (auto [r, rt] : {std::pair{0.4, 1.3}, std::pair{2.0, 0.7}, std::pair{1.0, 1.0}}) {
            double lo = std::min(r, rt), hi = std::max(r, rt);
            cplx closed = std::sin(lam * lo) * std::exp(I * lam * hi) / (lam * std::sqrt(r * rt)) * rt;
            EXPECT_LE(rel(kernel(0.5, 0, lam, r, rt), closed), 1e-13);
        }
}

TEST(ModelResolvent, ZeroEnergyLimitRate) {
    for (double beta : {0.2, 0.4, -0.3})
        for (int l : {-1, 0, 1}) {
            double nu = nu_l(beta, l);
            if (nu >= 1) continue;
            double r = 0.6, rt = 1.4, ref = r00_kernel(beta, l, r, rt);
            double q1 = std::abs(kernel(beta, l, cplx(0, 1e-3), r, rt) - ref) / std::pow(1e-3, 2 * nu);
            double q2 = std::abs(kernel(beta, l, cplx(0, 1e-4), r, rt) - ref) / std::pow(1e-4, 2 * nu);
            EXPECT_NEAR(q1 / q2, 1.0, 0.05) << beta << " " << l;
        }
}

TEST(ModelResolvent, R00Examples) {
    EXPECT_NEAR(r00_kernel(0.5, 0, 1.0, 2.0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r00_kernel(0.3, 2, 1.7, 1.7), 1.7 / (2 * 2.3), 1e-15);
}

TEST(ModelResolvent, ApplicationIsModeDiagonal) {
    auto f = bump(0.3, 0);
    auto g = apply_resolvent(0.3, cplx(0, 0.5), f);
    ASSERT_EQ(g.modes.size(), 1u);
    EXPECT_EQ(g.modes.begin()->first, 0);
}

TEST(ModelResolvent, RadialEquationResidual) {
    // 8th-order central differences of the radial operator applied to the output
    const double c2[] = {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
    const double c1[] = {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    const double h = 0.02;
    for (double beta : {0.25, 0.5, -0.4})
        for (int l : {0, 1, -2}) {
            double nu = nu_l(beta, l);
            auto f = bump(beta, l);
            cplx lam(0, 0.6);
            for (double r0 : {0.5, 1.2, 2.5}) {
                std::vector<double> radii;
                for (int k = -4; k <= 4; ++k) radii.push_back(r0 + k * h);
                auto u = apply_resolvent_at(beta, lam, f, 48, 1e-12, radii).at(l);
                cplx d2 = 0, d1 = 0;
                for (int k = 0; k < 9; ++k) {
                    d2 += c2[k] * u[k];
                    d1 += c1[k] * u[k];
                }
                d2 /= h * h;
                d1 /= h;
                cplx lhs = -d2 - d1 / r0 + nu * nu / (r0 * r0) * u[4] - lam * lam * u[4];
                EXPECT_LE(std::abs(lhs - f.value(l, r0)), 1e-8) << beta << " " << l << " " << r0;
            }
        }
}

TEST(ModelResolvent, HalfIntegerQuadratureOracle) {
    auto f = bump(0.5, 0, 5.0);
    cplx lam(0, 0.8);
    std::vector<double> radii{0.3, 1.0, 2.2, 4.0};
    auto got = apply_resolvent_at(0.5, lam, f, 48, 1e-12, radii).at(0);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (size_t i = 0; i < radii.size(); ++i) {
        double r = radii[i];
        auto closed = [&](double rt) {
            double lo = std::min(r, rt), hi = std::max(r, rt);
            return std::sin(lam * lo) * std::exp(I * lam * hi) / (lam * std::sqrt(r * rt)) * rt * std::sqrt(rt) *
                   std::exp(-rt * rt);
        };
        auto part = [&](auto pick, double a, double b) {
            return GK::integrate([&](double x) { return pick(closed(x)); }, a, b, 15, 1e-14);
        };
        auto re = [](cplx z) { return z.real(); };
        auto im = [](cplx z) { return z.imag(); };
        cplx oracle(part(re, 0, r) + part(re, r, 5.0), part(im, 0, r) + part(im, r, 5.0));
        EXPECT_LE(std::abs(got[i] - oracle), 1e-10 * std::max(1.0, std::abs(oracle)));
    }
}

TEST(ModelResolvent, SplitReassembly) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 100; ++k) {
        double beta = (u(rng) < 0.5 ? -1 : 1) * (0.05 + 0.45 * u(rng));
        int l = static_cast<int>(u(rng) * 7) - 3;
        double r = 0.1 + 2 * u(rng), rt = 0.1 + 2 * u(rng);
        cplx lam = std::polar(0.01 + 0.9 * u(rng), kPi * (0.05 + 0.9 * u(rng)));
        if (distance_to_integer(nu_l(beta, l)) < 1e-3) continue;
        auto s = split_A(beta, l, lam, r, rt);
        EXPECT_EQ(s.branch, l + beta > 0 ? Branch::plus : Branch::minus);
        cplx back = s.a0 + std::pow(lam, 2 * s.mu) * s.apm;
        EXPECT_LE(rel(back, kernel(beta, l, lam, r, rt)), 1e-12);
    }
}

TEST(ModelResolvent, SplitPartsEvenAndRegular) {
    for (double beta : {0.3, -0.2})
        for (int l : {0, 2, -1}) {
            cplx lam(0.025, 0.05);
            auto a = split_A(beta, l, lam, 0.7, 1.1), b = split_A(beta, l, -lam, 0.7, 1.1);
            EXPECT_LE(rel(a.apm, b.apm), 1e-14);
            EXPECT_LE(rel(a.a0, b.a0), 1e-14);
            // a0 is analytic in lambda^2: the difference shrinks fourfold per halving
            auto d1 = split_A(beta, l, lam, 0.7, 1.1).a0 - split_A(beta, l, lam / 2.0, 0.7, 1.1).a0;
            auto d2 = split_A(beta, l, lam / 2.0, 0.7, 1.1).a0 - split_A(beta, l, lam / 4.0, 0.7, 1.1).a0;
            EXPECT_NEAR(std::abs(d1 / d2), 4.0, 0.1);
        }
}

TEST(ModelResolvent, MuSplit) {
    EXPECT_DOUBLE_EQ(mu_split(0.3).mu_plus, 0.3);
    EXPECT_DOUBLE_EQ(mu_split(-0.3).mu_plus, 0.7);
    EXPECT_THROW(mu_split(0.0), DomainError);
    EXPECT_THROW(mu_split(0.7), DomainError);
}

TEST(ModelResolvent, ExpansionReproducesKernel) {
    std::vector<double> radii{0.3, 0.8, 1.5};
    for (double beta : {0.3, -0.45}) {
        for (int l : {-2, 0, 1}) {
            auto ex = model_expansion(beta, l, radii, 6);
            for (auto& [key, e] : ex.exponents) {
                double mu = (e - 2 * key.first) / 2;
                if (key.second == Branch::plus) EXPECT_NEAR(mu, mu_split(beta).mu_plus, 1e-15);
                if (key.second == Branch::minus) EXPECT_NEAR(mu, mu_split(beta).mu_minus, 1e-15);
            }
            cplx lam(0, 0.1);
            auto M = ex.evaluate(lam);
            for (size_t a = 0; a < radii.size(); ++a)
                for (size_t b = 0; b < radii.size(); ++b)
                    EXPECT_LE(rel(M(a, b), kernel(beta, l, lam, radii[a], radii[b])), 1e-12);
        }
    }
}

TEST(ModelResolvent, TruncationBound) {
    double prev = truncation_bound(0.3, 2, 2.0, 0.5);
    for (int L = 3; L <= 40; ++L) {
        double b = truncation_bound(0.3, L, 2.0, 0.5);
        EXPECT_LT(b, prev);
        prev = b;
    }
    EXPECT_LT(truncation_bound(0.3, 40, 2.0, 0.5), 1e-12);
    EXPECT_THROW(truncation_bound(0.3, 40, 2.0, 0.5, 1.0), DiagonalError);
    EXPECT_THROW(truncation_bound(0.3, 1, 2.0, 0.5), DomainError);
}

TEST(ModelResolvent, TruncationBoundDominatesActualTail) {
    for (double beta : {0.3, -0.15})
        for (int L : {4, 10}) {
            double bound = truncation_bound(beta, L, 2.0, 0.5, 0.5);
            for (auto [r, rt] : {std::pair{1.0, 2.0}, std::pair{2.0, 1.0}, std::pair{0.5, 1.0}}) {
                double tail = 0.0;
                for (int l = L + 1; l <= L + 60; ++l)
                    for (int sgn : {1, -1}) tail += std::abs(kernel(beta, sgn * l, cplx(0, 0.5), r, rt));
                EXPECT_LE(tail, bound);
                EXPECT_GT(tail, 0.0);
            }
        }
}

TEST(ModelResolvent, FluxPeriodicity) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int k = 0; k < 50; ++k) {
        // dyadic flux so that beta + 1 is exact
        double beta = std::ldexp(std::floor(std::ldexp(0.1 + 0.3 * u(rng) / 2, 12)), -12);
        int l = static_cast<int>(u(rng) * 3) - 2;
        cplx lam(0, u(rng));
        double r = u(rng), rt = u(rng);
        EXPECT_LE(rel(kernel(beta, l, lam, r, rt), kernel(beta + 1, l - 1, lam, r, rt)), 1e-14);
    }
}

TEST(ModelResolvent, ZeroEnergyConvergenceOfApplication) {
    double beta = 0.3;
    auto f = bump(beta, 0, 4.0);
    std::vector<double> radii{0.5, 1.0, 1.5};
    auto r00 = apply_r00_at(beta, f, 48, radii).at(0);
    std::vector<double> q;
    for (double s : {1e-3, 1e-2, 1e-1}) {
        auto u = apply_resolvent_at(beta, cplx(0, s), f, 48, 1e-12, radii).at(0);
        double d = 0.0;
        for (size_t i = 0; i < u.size(); ++i) d += std::norm(u[i] - r00[i]);
        q.push_back(std::sqrt(d) / std::pow(s, 2 * mu_pair(beta).mu_m));
    }
    for (double v : q) {
        EXPECT_GT(v, 0.2 * q.front());
        EXPECT_LT(v, 5 * q.front());
    }
}

TEST(ModelResolvent, WeightedSymmetryOnImaginaryAxis) {
    auto rule = mapped(gauss_legendre(40), 0.0, 3.0);
    for (double beta : {0.3, -0.4})
        for (int l : {0, 1}) {
            auto M = resolvent_matrix(beta, l, cplx(0, 0.4), rule);
            Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(M.rows(), M.cols());
            for (int i = 0; i < M.rows(); ++i) D(i, i) = rule.x[i] * rule.w[i];
            Eigen::MatrixXcd S = D * M;
            EXPECT_LE((S - S.transpose()).norm(), 1e-10 * S.norm());
            EXPECT_LE(S.imag().norm(), 1e-12 * S.norm());
        }
}

TEST(ModelResolvent, DroppedModesAreCertified) {
    auto f = PolarFunction::on_grid(3.0, 32);
    f.set_mode(0, [](double r) { return cplx(std::exp(-r * r)); });
    f.set_mode(5, [](double r) { return cplx(1e3 * std::exp(-r * r)); });
    EXPECT_THROW(apply_resolvent(0.3, cplx(0, 0.5), f, 3, 1e-12), TruncationError);
    EXPECT_NO_THROW(apply_resolvent(0.3, cplx(0, 0.5), f, 5, 1e-12));
}

TEST(ModelResolvent, ErrorsPropagate) {
    EXPECT_THROW(kernel(0.3, 0, cplx(0, 20), 2.0, 1.0), DomainError);
    EXPECT_THROW(kernel(1.0, 0, cplx(0, 1), 1.0, 1.0), NearIntegerOrderError);
    EXPECT_THROW(kernel(0.5, 0, cplx(0, 1), 0.0, 1.0), DomainError);
}
