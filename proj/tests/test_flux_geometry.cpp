#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "abflux/flux_geometry.hpp"

using namespace abflux;
namespace {

constexpr double kPi = std::numbers::pi;

Configuration two_pole(double a1 = 0.25, double a2 = 0.5) { return Configuration({{{0, 0}, a1}, {{1, 0}, a2}}); }

// s3 and s4 share a ray from the base pole, s4 beyond s3.
Configuration shared_ray() {
    return Configuration({{{0, 0}, 0.3}, {{0, 1}, 0.2}, {{1, 0}, 0.15}, {{2, 0}, 0.35}});
}

// Brute-force circulation of the field around a circle (uniform trapezoid,
// spectrally accurate for periodic integrands).
double circulation(const Configuration& c, Vec2 centre, double radius, int n = 4000) {
    double f = 0.0;
    for (int k = 0; k < n; ++k) {
        double t = 2 * kPi * k / n;
        Vec2 x = centre + radius * Vec2{std::cos(t), std::sin(t)};
        Vec2 dx = (2 * kPi * radius / n) * Vec2{-std::sin(t), std::cos(t)};
        for (auto& p : c.poles()) {
            Vec2 r = x - p.position;
            f += p.flux * cross(r, dx) / dot(r, r);
        }
    }
    return f;
}

std::vector<Vec2> circle(Vec2 c, double r, int n = 64) {
    std::vector<Vec2> v;
    for (int k = 0; k <= n; ++k) v.push_back(c + r * Vec2{std::cos(2 * kPi * k / n), std::sin(2 * kPi * k / n)});
    return v;
}

}  // namespace

TEST(FluxGeometry, TotalFlux) {
    EXPECT_DOUBLE_EQ(total_flux(Configuration({{{0, 0}, 0.5}, {{1, 0}, 0.5}})), 1.0);
    EXPECT_DOUBLE_EQ(total_flux(two_pole()), 0.75);
    EXPECT_DOUBLE_EQ(total_flux(Configuration({{{0, 0}, 0.3}, {{1, 0}, -0.3}})), 0.0);
}

TEST(FluxGeometry, ConfigurationValidation) {
    EXPECT_THROW(Configuration({{{0, 0}, 1.0}}), ConfigError);
    EXPECT_THROW(Configuration({{{0, 0}, 0.5}, {{0, 1e-10}, 0.5}}), ConfigError);
    EXPECT_THROW(Configuration(std::vector<Pole>{}), ConfigError);
    Configuration c({{{2, 3}, 0.5}, {{3, 3}, 0.25}});
    EXPECT_EQ(c.poles()[0].position.x, 0.0);
    EXPECT_EQ(c.poles()[0].position.y, 0.0);
    EXPECT_EQ(c.poles()[1].position.x, 1.0);
    EXPECT_EQ(c.origin().x, 2.0);
}

TEST(FluxGeometry, MuPair) {
    auto a = mu_pair(0.25), b = mu_pair(0.75), c = mu_pair(-0.5);
    EXPECT_DOUBLE_EQ(a.mu_m, 0.25);
    EXPECT_DOUBLE_EQ(a.mu_M, 0.75);
    EXPECT_DOUBLE_EQ(b.mu_m, 0.25);
    EXPECT_DOUBLE_EQ(b.mu_M, 0.75);
    EXPECT_DOUBLE_EQ(c.mu_m, 0.5);
    EXPECT_DOUBLE_EQ(c.mu_M, 0.5);
    EXPECT_THROW(mu_pair(2.0), IntegerFluxError);
}

TEST(FluxGeometry, MuPairProperties) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int k = 0; k < 500; ++k) {
        double b = u(rng);
        auto p = mu_pair(b), q = mu_pair(b + 1);
        EXPECT_NEAR(p.mu_m, q.mu_m, 1e-12);
        EXPECT_NEAR(p.mu_M, q.mu_M, 1e-12);
        EXPECT_NEAR(p.mu_m + p.mu_M, 1.0, 1e-12);
        EXPECT_GT(p.mu_m, 0.0);
        EXPECT_LE(p.mu_m, 0.5);
        EXPECT_GE(p.mu_M, 0.5);
        EXPECT_LT(p.mu_M, 1.0);
    }
}

TEST(FluxGeometry, TildeAlphaSharedRay) {
    auto c = shared_ray();
    EXPECT_NEAR(tilde_alpha(c, {0.5, 0}), 0.15 + 0.35, 1e-15);
    EXPECT_NEAR(tilde_alpha(c, {1.5, 0}), 0.35, 1e-15);
    EXPECT_NEAR(tilde_alpha(c, {0, 0.5}), 0.2, 1e-15);
    EXPECT_NEAR(tilde_alpha(two_pole(), {0.3, 0}), 0.5, 1e-15);
    EXPECT_THROW(tilde_alpha(c, {0.5, 0.5}), NotOnCutError);
    EXPECT_THROW(tilde_alpha(c, {1, 0}), AtPoleError);
}

TEST(FluxGeometry, CutPiecesFollowSharedRay) {
    auto s = flux_summary(shared_ray());
    ASSERT_EQ(s.alpha_tilde.size(), 3u);
    double on_first = 0, on_second = 0;
    for (auto& p : s.alpha_tilde) {
        if (p.to.x == 1 && p.to.y == 0) on_first = p.alpha_tilde;
        if (p.to.x == 2 && p.to.y == 0) on_second = p.alpha_tilde;
    }
    EXPECT_NEAR(on_first, 0.5, 1e-15);
    EXPECT_NEAR(on_second, 0.35, 1e-15);
}

TEST(FluxGeometry, Colinearity) {
    EXPECT_TRUE(colinearity_check(Configuration({{{0, 0}, 0.1}, {{1, 0}, 0.1}, {{0, 1}, 0.1}})));
    EXPECT_FALSE(colinearity_check(Configuration({{{0, 0}, 0.1}, {{1, 0}, 0.1}, {{2, 0}, 0.1}})));
    EXPECT_TRUE(colinearity_check(two_pole()));
}

TEST(FluxGeometry, SheetCount) {
    EXPECT_EQ(riemann_sheet_count(0.5), 2);
    EXPECT_EQ(riemann_sheet_count(1.0), 1);
    EXPECT_EQ(riemann_sheet_count(0.75), 4);
    EXPECT_EQ(riemann_sheet_count(-1.0 / 3.0), 3);
    EXPECT_EQ(riemann_sheet_count(17.0 / 64.0), 64);
    EXPECT_FALSE(riemann_sheet_count(std::sqrt(2.0)).has_value());
    EXPECT_FALSE(riemann_sheet_count(1.0 / 65.0).has_value());
}

TEST(FluxGeometry, FluxSummaryClasses) {
    EXPECT_EQ(flux_summary(Configuration({{{0, 0}, 0.5}, {{1, 0}, 0.5}})).flux_class, FluxClass::integer);
    EXPECT_FALSE(flux_summary(Configuration({{{0, 0}, 0.5}, {{1, 0}, 0.5}})).mu_m.has_value());
    EXPECT_EQ(flux_summary(Configuration({{{0, 0}, 0.25}, {{1, 0}, 0.25}})).flux_class, FluxClass::half_odd_integer);
    auto s = flux_summary(two_pole());
    EXPECT_EQ(s.flux_class, FluxClass::rational);
    EXPECT_EQ(s.sheets, 4);
    EXPECT_EQ(flux_summary(Configuration({{{0, 0}, std::sqrt(0.1)}})).flux_class, FluxClass::irrational);
}

TEST(FluxGeometry, PhaseTrivialCases) {
    Configuration one({{{0, 0}, 0.5}});
    for (Vec2 p : {Vec2{1, 0}, Vec2{-0.3, 0.2}, Vec2{0, -4}})
        EXPECT_NEAR(std::abs(phase(one, p, PhaseMode::relative_to_beta_A0) - 1.0), 0.0, 1e-14);
    auto c = two_pole();
    Vec2 b = base_point(c);
    EXPECT_NEAR(std::abs(phase(c, b, PhaseMode::full_A) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(phase(c, b, PhaseMode::relative_to_beta_A0) - 1.0), 0.0, 1e-15);
    EXPECT_THROW(phase(c, {0.5, 0}, PhaseMode::full_A), OnCutError);
}

TEST(FluxGeometry, LoopAroundSecondPoleMatchesCirculation) {
    auto c = two_pole();
    auto loop = circle({1, 0}, 0.3);
    cplx got = phase_along(c, loop, PhaseMode::full_A);
    cplx oracle = std::polar(1.0, circulation(c, {1, 0}, 0.3));
    EXPECT_NEAR(std::abs(got - oracle), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(got - std::polar(1.0, 2 * kPi * 0.5)), 0.0, 1e-12);
}

TEST(FluxGeometry, HolonomyExamples) {
    auto c = two_pole();
    EXPECT_NEAR(std::abs(holonomy(c, circle({5, 5}, 1)) - 1.0), 0.0, 1e-15);
    Configuration half({{{0, 0}, 0.5}});
    EXPECT_NEAR(std::abs(holonomy(half, circle({0, 0}, 1)) - cplx(-1, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(holonomy(half, circle({0, 0}, 1)) - std::polar(1.0, circulation(half, {0, 0}, 1))), 0.0, 1e-12);
    cplx both = holonomy(c, circle({0.5, 0}, 2));
    EXPECT_NEAR(std::abs(both - std::polar(1.0, circulation(c, {0.5, 0}, 2))), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(both - std::polar(1.0, 2 * kPi * 0.75)), 0.0, 1e-14);
    EXPECT_THROW(holonomy(c, {{-1, 0}, {2, 0}, {2, 1}}), PoleOnLoopError);
}

// Even-odd crossing count as an independent inside test for simple polygons.
static bool inside_even_odd(const std::vector<Vec2>& poly, Vec2 p) {
    bool in = false;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        Vec2 a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

TEST(FluxGeometry, HolonomyMatchesEvenOddCounter) {
    Configuration c({{{0, 0}, 0.21}, {{1, 0.3}, 0.37}, {{-0.4, 1.1}, 0.13}});
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        // random star-shaped (hence simple) counter-clockwise polygon
        Vec2 ctr{u(rng) * 2 - 0.7, u(rng) * 2 - 0.5};
        int n = 5 + static_cast<int>(u(rng) * 10);
        std::vector<double> ang;
        for (int k = 0; k < n; ++k) ang.push_back(2 * kPi * u(rng));
        std::sort(ang.begin(), ang.end());
        std::vector<Vec2> poly;
        for (double a : ang) poly.push_back(ctr + (0.3 + 1.5 * u(rng)) * Vec2{std::cos(a), std::sin(a)});
        bool skip = false;
        for (auto& p : c.poles())
            for (size_t i = 0; i < poly.size(); ++i)
                if (segment_distance(p.position, poly[i], poly[(i + 1) % poly.size()]) < 1e-6) skip = true;
        if (skip) continue;
        double f = 0.0;
        for (auto& p : c.poles())
            if (inside_even_odd(poly, p.position)) f += p.flux;
        EXPECT_NEAR(std::abs(holonomy(c, poly) - std::polar(1.0, 2 * kPi * f)), 0.0, 1e-12);
    }
}

namespace {

// Random polyline from the base point to the target through vertices far
// from the poles; the last leg is straight and checked against the cut.
std::optional<std::vector<Vec2>> random_path(const Configuration& c, Vec2 target, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Vec2> path{base_point(c)};
    int n = 1 + static_cast<int>(u(rng) * 6);
    for (int k = 0; k < n; ++k) {
        double a = 2 * kPi * u(rng), r = 3 + 3 * u(rng);
        path.push_back(c.centroid() + r * Vec2{std::cos(a), std::sin(a)});
    }
    path.push_back(target);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        for (auto& s : c.segments())
            if (segments_distance(path[i], path[i + 1], s.a, s.b) < 1e-3) return std::nullopt;
        for (auto& p : c.poles())
            if (segment_distance(p.position, path[i], path[i + 1]) < 1e-3) return std::nullopt;
    }
    return path;
}

}  // namespace

TEST(FluxGeometry, RelativePhaseIsPathIndependent) {
    Configuration c({{{0, 0}, 0.21}, {{1, 0.3}, 0.37}, {{-0.4, 1.1}, 0.13}});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    int checked = 0;
    while (checked < 40) {
        Vec2 t{u(rng), u(rng)};
        if (c.distance_to_cut(t) < 0.05) continue;
        auto p1 = random_path(c, t, rng), p2 = random_path(c, t, rng);
        if (!p1 || !p2) continue;
        cplx a = phase_along(c, *p1, PhaseMode::relative_to_beta_A0);
        cplx b = phase_along(c, *p2, PhaseMode::relative_to_beta_A0);
        EXPECT_LE(std::abs(a - b), 1e-9);
        EXPECT_LE(std::abs(a - phase(c, t, PhaseMode::relative_to_beta_A0)), 1e-9);
        ++checked;
    }
}

TEST(FluxGeometry, FullPhaseIsPathIndependentForIntegerTotalFlux) {
    Configuration c({{{0, 0}, 0.5}, {{1, 0}, 0.5}});
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2, 2);
    int checked = 0;
    while (checked < 30) {
        Vec2 t{u(rng), u(rng)};
        if (c.distance_to_cut(t) < 0.05) continue;
        auto p1 = random_path(c, t, rng), p2 = random_path(c, t, rng);
        if (!p1 || !p2) continue;
        EXPECT_LE(std::abs(phase_along(c, *p1, PhaseMode::full_A) - phase_along(c, *p2, PhaseMode::full_A)), 1e-9);
        ++checked;
    }
}

TEST(FluxGeometry, MatchingConditionAcrossTheCut) {
    auto check = [](const Configuration& c, Vec2 z, Vec2 dir, PhaseMode mode) {
        SCOPED_TRACE(testing::Message() << z.x << "," << z.y << " mode " << static_cast<int>(mode));
        Vec2 nrm{-dir.y / norm(dir), dir.x / norm(dir)};  // left of the directed segment
        const double eps = 1e-10;
        cplx fp = phase(c, z + eps * nrm, mode), fm = phase(c, z - eps * nrm, mode);
        cplx jump = std::polar(1.0, 2 * kPi * tilde_alpha(c, z));
        EXPECT_LE(std::abs(fp - fm * jump), 1e-8);
    };
    auto c = two_pole();
    check(c, {0.3, 0}, {1, 0}, PhaseMode::relative_to_beta_A0);
    check(c, {0.3, 0}, {1, 0}, PhaseMode::full_A);
    check(c, {0.8, 0}, {1, 0}, PhaseMode::relative_to_beta_A0);
    auto s = shared_ray();
    check(s, {0.5, 0}, {1, 0}, PhaseMode::relative_to_beta_A0);
    check(s, {1.5, 0}, {1, 0}, PhaseMode::relative_to_beta_A0);
    check(s, {0, 0.4}, {0, 1}, PhaseMode::relative_to_beta_A0);
}

TEST(FluxGeometry, FullPhaseJumpsByTotalFluxAcrossBranchRay) {
    auto c = two_pole();
    Vec2 b = branch_direction(c);
    EXPECT_NEAR(b.x, -1.0, 1e-15);
    Vec2 z{-0.7, 0.0};
    cplx above = phase(c, z + Vec2{0, 1e-10}, PhaseMode::full_A);
    cplx below = phase(c, z - Vec2{0, 1e-10}, PhaseMode::full_A);
    EXPECT_LE(std::abs(above - below * std::polar(1.0, 2 * kPi * total_flux(c))), 1e-8);
    // relative phase is continuous there
    EXPECT_LE(std::abs(phase(c, z + Vec2{0, 1e-10}, PhaseMode::relative_to_beta_A0) -
                       phase(c, z - Vec2{0, 1e-10}, PhaseMode::relative_to_beta_A0)),
              1e-8);
}

TEST(FluxGeometry, FullPhaseMatchesLineIntegralOffBranchRay) {
    auto c = two_pole();
    for (Vec2 t : {Vec2{0.5, 1.0}, Vec2{2.0, -1.0}, Vec2{0.3, -0.4}, Vec2{-1.0, 2.0}}) {
        std::vector<Vec2> path{base_point(c), Vec2{3.0, 3.0}, Vec2{3.0, -3.0}, t};
        if (t.y > 0) path = {base_point(c), t};
        EXPECT_LE(std::abs(phase(c, t, PhaseMode::full_A) - phase_along(c, path, PhaseMode::full_A)), 1e-10);
    }
}
