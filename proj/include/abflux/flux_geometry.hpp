#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "abflux/errors.hpp"

namespace abflux {

using cplx = std::complex<double>;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Distance from p to the closed segment [a, b].
inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 d = b - a;
    double len2 = dot(d, d);
    double t = len2 > 0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
    return norm(p - (a + t * d));
}

// Minimal distance between closed segments [a, b] and [c, d].
inline double segments_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    double c1 = cross(b - a, c - a), c2 = cross(b - a, d - a);
    double c3 = cross(d - c, a - c), c4 = cross(d - c, b - c);
    if (((c1 > 0 && c2 < 0) || (c1 < 0 && c2 > 0)) && ((c3 > 0 && c4 < 0) || (c3 < 0 && c4 > 0)))
        return 0.0;
    return std::min({segment_distance(a, c, d), segment_distance(b, c, d),
                     segment_distance(c, a, b), segment_distance(d, a, b)});
}

inline constexpr double kFluxTol = 1e-12;

inline bool is_integer_flux(double a, double tol = kFluxTol) {
    return std::abs(a - std::round(a)) <= tol;
}

struct Pole {
    Vec2 position;
    double flux = 0.0;
};

// Pole set with the first pole moved to the origin. Segments run from the
// base pole to every other pole; their union is the cut.
class Configuration {
public:
    Configuration() = default;

    explicit Configuration(std::vector<Pole> poles, bool allow_integer_flux = false) {
        if (poles.empty()) throw ConfigError("configuration needs at least one pole");
        origin_ = poles.front().position;
        for (auto& p : poles) {
            if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y) || !std::isfinite(p.flux))
                throw ConfigError("non-finite pole data");
            if (!allow_integer_flux && is_integer_flux(p.flux))
                throw ConfigError("pole flux must not be an integer");
            p.position = p.position - origin_;
        }
        for (size_t i = 0; i < poles.size(); ++i)
            for (size_t j = i + 1; j < poles.size(); ++j)
                if (norm(poles[i].position - poles[j].position) <= 1e-9)
                    throw ConfigError("pole positions must be pairwise distinct");
        poles_ = std::move(poles);
        double diam = 0.0;
        for (auto& a : poles_)
            for (auto& b : poles_) diam = std::max(diam, norm(a.position - b.position));
        scale_ = std::max(1.0, diam);
    }

    const std::vector<Pole>& poles() const { return poles_; }
    size_t size() const { return poles_.size(); }
    // Position of the base pole before normalization.
    Vec2 origin() const { return origin_; }
    double scale() const { return scale_; }
    double tol() const { return 1e-12 * scale_; }

    struct Segment {
        Vec2 a, b;
        size_t pole;  // index of the far pole
    };
    std::vector<Segment> segments() const {
        std::vector<Segment> out;
        for (size_t k = 1; k < poles_.size(); ++k) out.push_back({poles_[0].position, poles_[k].position, k});
        return out;
    }

    double distance_to_cut(Vec2 p) const {
        double d = norm(p - poles_[0].position);
        for (auto& s : segments()) d = std::min(d, segment_distance(p, s.a, s.b));
        return d;
    }

    Vec2 centroid() const {
        Vec2 c;
        for (auto& p : poles_) c = c + p.position;
        return (1.0 / poles_.size()) * c;
    }

private:
    std::vector<Pole> poles_;
    Vec2 origin_;
    double scale_ = 1.0;
};

inline double total_flux(const Configuration& cfg) {
    double b = 0.0;
    for (auto& p : cfg.poles()) b += p.flux;
    return b;
}

struct MuPair {
    double mu_m, mu_M;
};

inline MuPair mu_pair(double beta) {
    if (is_integer_flux(beta)) throw IntegerFluxError("mu_m is undefined for integer total flux");
    double fl = std::floor(beta);
    double a = beta - fl, b = 1.0 + fl - beta;
    return {std::min(a, b), std::max(a, b)};
}

// Smallest q <= 64 with |beta - p/q| <= tol, found through continued-fraction
// convergents; nullopt means no such q (infinitely many sheets).
inline std::optional<int> riemann_sheet_count(double beta, double denom_tolerance = 1e-9) {
    if (is_integer_flux(beta, std::max(denom_tolerance, kFluxTol))) return 1;
    long double x = beta;
    long double h0 = 1, h1 = std::floor(x), k0 = 0, k1 = 1;
    long double frac = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (std::abs((long double)beta - h1 / k1) <= denom_tolerance) {
            if (k1 <= 64) return static_cast<int>(k1);
            return std::nullopt;
        }
        if (frac == 0) break;
        long double y = 1 / frac;
        long double a = std::floor(y);
        frac = y - a;
        long double h2 = a * h1 + h0, k2 = a * k1 + k0;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        if (k1 > 64) return std::nullopt;
    }
    return std::nullopt;
}

enum class FluxClass { integer, half_odd_integer, rational, irrational };

inline std::string to_string(FluxClass c) {
    switch (c) {
        case FluxClass::integer: return "integer";
        case FluxClass::half_odd_integer: return "half_odd_integer";
        case FluxClass::rational: return "rational";
        default: return "irrational";
    }
}

// Sub-interval of a cut segment with constant alpha-tilde.
struct CutPiece {
    Vec2 from, to;
    double alpha_tilde;
};

struct FluxSummary {
    double beta = 0.0;
    std::optional<double> mu_m, mu_M;
    FluxClass flux_class = FluxClass::irrational;
    std::optional<int> sheets;
    std::vector<CutPiece> alpha_tilde;
};

// Colinear poles on a common ray from the base pole share segment pieces;
// each piece carries the flux of every pole at or beyond its far end.
inline std::vector<CutPiece> cut_pieces(const Configuration& cfg) {
    const auto& P = cfg.poles();
    std::vector<bool> done(P.size(), false);
    std::vector<CutPiece> out;
    for (size_t k = 1; k < P.size(); ++k) {
        if (done[k]) continue;
        Vec2 dir = P[k].position;
        std::vector<size_t> ray;
        for (size_t j = 1; j < P.size(); ++j) {
            Vec2 q = P[j].position;
            if (std::abs(cross(dir, q)) <= cfg.tol() * norm(dir) * std::max(1.0, norm(q)) && dot(dir, q) > 0) {
                ray.push_back(j);
                done[j] = true;
            }
        }
        std::stable_sort(ray.begin(), ray.end(), [&](size_t a, size_t b) {
            return norm(P[a].position) < norm(P[b].position);
        });
        Vec2 prev = P[0].position;
        for (size_t i = 0; i < ray.size(); ++i) {
            double a = 0.0;
            for (size_t j = i; j < ray.size(); ++j) a += P[ray[j]].flux;
            out.push_back({prev, P[ray[i]].position, a});
            prev = P[ray[i]].position;
        }
    }
    return out;
}

inline FluxSummary flux_summary(const Configuration& cfg) {
    FluxSummary s;
    s.beta = total_flux(cfg);
    s.sheets = riemann_sheet_count(s.beta);
    if (is_integer_flux(s.beta)) {
        s.flux_class = FluxClass::integer;
    } else {
        auto mu = mu_pair(s.beta);
        s.mu_m = mu.mu_m;
        s.mu_M = mu.mu_M;
        if (s.sheets == 2) s.flux_class = FluxClass::half_odd_integer;
        else if (s.sheets) s.flux_class = FluxClass::rational;
        else s.flux_class = FluxClass::irrational;
    }
    s.alpha_tilde = cut_pieces(cfg);
    return s;
}

inline double tilde_alpha(const Configuration& cfg, Vec2 z) {
    double tol = cfg.tol();
    for (auto& p : cfg.poles())
        if (norm(z - p.position) <= tol) throw AtPoleError("point coincides with a pole");
    double a = 0.0;
    bool on = false;
    for (auto& s : cfg.segments()) {
        if (segment_distance(z, s.a, s.b) <= tol) {
            a += cfg.poles()[s.pole].flux;
            on = true;
        }
    }
    if (!on) throw NotOnCutError("point is not on the cut");
    return a;
}

inline bool colinearity_check(const Configuration& cfg) {
    const auto& P = cfg.poles();
    for (size_t i = 0; i < P.size(); ++i)
        for (size_t j = i + 1; j < P.size(); ++j)
            for (size_t k = j + 1; k < P.size(); ++k) {
                Vec2 a = P[i].position, b = P[j].position, c = P[k].position;
                double side = std::max({norm(b - a), norm(c - a), norm(c - b)});
                if (std::abs(cross(b - a, c - a)) / (side * side) <= 1e-12) return false;
            }
    return true;
}

enum class PhaseMode { full_A, relative_to_beta_A0 };

namespace detail {

// Line integral of the field along [a, b]; adaptive Gauss-Kronrod.
inline double field_integral(const Configuration& cfg, PhaseMode mode, Vec2 a, Vec2 b) {
    const auto& P = cfg.poles();
    const double beta = total_flux(cfg);
    Vec2 d = b - a;
    if (norm(d) == 0.0) return 0.0;
    auto f = [&](double t) {
        Vec2 x = a + t * d;
        double v = 0.0;
        for (size_t k = 0; k < P.size(); ++k) {
            double w = P[k].flux;
            if (mode == PhaseMode::relative_to_beta_A0 && k == 0) w -= beta;
            if (w == 0.0) continue;
            Vec2 r = x - P[k].position;
            v += w * cross(r, d) / dot(r, r);
        }
        return v;
    };
    // the integrand is a Lorentzian of width dist/|d| around each pole's foot
    // point; geometric breakpoints around the feet keep every piece smooth
    std::vector<double> brk{0.0, 1.0};
    double len2 = dot(d, d);
    for (auto& p : P) {
        double tk = dot(p.position - a, d) / len2;
        double w = std::max(std::abs(cross(p.position - a, d)) / len2, 1e-15);
        if (tk > 0 && tk < 1) brk.push_back(tk);
        for (double g = w; g < 1.0; g *= 4.0) {
            if (tk - g > 0 && tk - g < 1) brk.push_back(tk - g);
            if (tk + g > 0 && tk + g < 1) brk.push_back(tk + g);
        }
    }
    std::sort(brk.begin(), brk.end());
    double total = 0.0, err = 0.0;
    for (size_t i = 0; i + 1 < brk.size(); ++i)
        if (brk[i + 1] > brk[i])
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, brk[i], brk[i + 1], 8, 1e-13, &err);
    return total;
}

}  // namespace detail

inline Vec2 base_point(const Configuration& cfg) {
    Vec2 c = cfg.centroid();
    double rmax = 0.0;
    for (auto& p : cfg.poles()) rmax = std::max(rmax, norm(p.position - c));
    return c + Vec2{0.0, 1.0 + rmax};
}

// Phase e^{i f} accumulated along an explicit polyline (no cut checks).
inline cplx phase_along(const Configuration& cfg, const std::vector<Vec2>& path, PhaseMode mode) {
    double f = 0.0;
    for (size_t i = 0; i + 1 < path.size(); ++i) f += detail::field_integral(cfg, mode, path[i], path[i + 1]);
    return std::polar(1.0, f);
}

// Base point -> out to a circle enclosing the poles -> arc (short way) ->
// straight in to the point along a ray that misses the cut.
inline std::vector<Vec2> canonical_path(const Configuration& cfg, Vec2 point) {
    const double tol = cfg.tol();
    if (cfg.distance_to_cut(point) <= tol) throw OnCutError("point lies on the cut");
    Vec2 c = cfg.centroid();
    double rmax = 0.0;
    for (auto& p : cfg.poles()) rmax = std::max(rmax, norm(p.position - c));
    Vec2 base = base_point(cfg);
    double rp = norm(point - c);
    double R = std::max(1.0 + rmax, rp + 1.0);

    // escape directions: radial first, then a fan ordered by angular distance
    double th0 = rp > tol ? std::atan2(point.y - c.y, point.x - c.x) : std::numbers::pi / 2;
    std::vector<double> cand{th0};
    for (int k = 1; k <= 128; ++k) {
        double d = std::numbers::pi * ((k + 1) / 2) / 64.0;
        cand.push_back(k % 2 ? th0 + d : th0 - d);
    }
    // among directions that do not cross the cut, keep the one passing
    // farthest from every pole (the integrand is singular only there)
    double clearance = std::min(1e-6 * cfg.scale(), 0.5 * cfg.distance_to_cut(point));
    std::optional<Vec2> exit;
    double best = clearance;
    for (double th : cand) {
        Vec2 u{std::cos(th), std::sin(th)};
        Vec2 w = point - c;
        double b = dot(w, u), cc = dot(w, w) - R * R;
        double t = -b + std::sqrt(b * b - cc);
        Vec2 e = point + t * u;
        bool ok = true;
        for (auto& s : cfg.segments())
            if (segments_distance(point, e, s.a, s.b) <= clearance) { ok = false; break; }
        if (!ok) continue;
        double pd = std::numeric_limits<double>::infinity();
        for (auto& p : cfg.poles()) pd = std::min(pd, segment_distance(p.position, point, e));
        if (pd > best * (1 + 1e-12)) {
            best = pd;
            exit = e;
        }
    }
    if (!exit) throw PathConstructionError("no cut-avoiding path to the point");

    std::vector<Vec2> path{base};
    Vec2 ub = (1.0 / norm(base - c)) * (base - c);
    Vec2 start = c + R * ub;
    if (norm(start - base) > 0) path.push_back(start);
    double a0 = std::atan2(ub.y, ub.x);
    double a1 = std::atan2(exit->y - c.y, exit->x - c.x);
    double da = std::remainder(a1 - a0, 2 * std::numbers::pi);
    if (da <= -std::numbers::pi) da += 2 * std::numbers::pi;
    // chords of the arc stay outside the disk holding every pole
    double cmax = (rmax + 0.5) / R;
    double step = 2.0 * std::acos(std::min(cmax, 0.999));
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(da) / step)));
    for (int k = 1; k <= n; ++k) {
        double a = a0 + da * k / n;
        path.push_back(c + R * Vec2{std::cos(a), std::sin(a)});
    }
    path.back() = *exit;
    path.push_back(point);
    return path;
}

// Direction of the ray from the base pole along which the full phase jumps
// by the total flux: the bisector of the widest angular gap between cut
// segments (straight down for a lone pole).
inline Vec2 branch_direction(const Configuration& cfg) {
    std::vector<double> ang;
    for (auto& s : cfg.segments()) ang.push_back(std::atan2(s.b.y - s.a.y, s.b.x - s.a.x));
    if (ang.empty()) return {0.0, -1.0};
    std::sort(ang.begin(), ang.end());
    double best = -1.0, dir = 0.0;
    for (size_t i = 0; i < ang.size(); ++i) {
        double lo = ang[i];
        double hi = i + 1 < ang.size() ? ang[i + 1] : ang.front() + 2 * std::numbers::pi;
        if (hi - lo > best + 1e-12) {
            best = hi - lo;
            dir = 0.5 * (lo + hi);
        }
    }
    return {std::cos(dir), std::sin(dir)};
}

// One-sided limit of the phase at a point (possibly on the cut), reached
// along the canonical path of a nearby off-cut point on the wanted side.
// The relative phase is single valued off the cut and is integrated along
// that path; the full phase adds the total flux times the angle about the
// base pole, measured from the branch direction.
inline cplx phase_limit(const Configuration& cfg, Vec2 point, Vec2 side, PhaseMode mode) {
    for (auto& p : cfg.poles())
        if (norm(point - p.position) <= cfg.tol()) throw AtPoleError("phase is undefined at a pole");
    auto path = canonical_path(cfg, side);
    path.back() = point;
    cplx rel = phase_along(cfg, path, PhaseMode::relative_to_beta_A0);
    if (mode == PhaseMode::relative_to_beta_A0) return rel;
    Vec2 b = branch_direction(cfg);
    auto theta = [&](Vec2 x) {
        Vec2 r = x - cfg.poles().front().position;
        double t = std::atan2(cross(b, r), dot(b, r));
        return t < 0 ? t + 2 * std::numbers::pi : t;
    };
    return rel * std::polar(1.0, total_flux(cfg) * (theta(point) - theta(base_point(cfg))));
}

inline cplx phase(const Configuration& cfg, Vec2 point, PhaseMode mode) {
    return phase_limit(cfg, point, point, mode);
}

// Winding numbers of a closed polyline about each pole (angle accumulation).
inline std::vector<int> winding_numbers(const Configuration& cfg, const std::vector<Vec2>& loop) {
    if (loop.size() < 2) return std::vector<int>(cfg.size(), 0);
    std::vector<int> w;
    for (auto& p : cfg.poles()) {
        double ang = 0.0;
        for (size_t i = 0; i < loop.size(); ++i) {
            Vec2 a = loop[i], b = loop[(i + 1) % loop.size()];
            if (segment_distance(p.position, a, b) <= cfg.tol()) throw PoleOnLoopError("loop passes through a pole");
            Vec2 ra = a - p.position, rb = b - p.position;
            ang += std::atan2(cross(ra, rb), dot(ra, rb));
        }
        w.push_back(static_cast<int>(std::lround(ang / (2 * std::numbers::pi))));
    }
    return w;
}

// The loop is closed implicitly (last vertex joins the first).
inline cplx holonomy(const Configuration& cfg, const std::vector<Vec2>& loop) {
    auto w = winding_numbers(cfg, loop);
    double f = 0.0;
    for (size_t k = 0; k < w.size(); ++k) f += cfg.poles()[k].flux * w[k];
    return std::polar(1.0, 2 * std::numbers::pi * f);
}

}  // namespace abflux
