#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "abflux/errors.hpp"
#include "abflux/flux_geometry.hpp"
#include "abflux/parallel.hpp"

namespace abflux {

using Field = std::vector<cplx>;

// Square grid of sites (i h, j h), -N <= i, j <= N, carrying Peierls phases.
// Coordinates are in the lattice frame: config point p sits at p + shift.
struct MagneticLattice {
    double h = 1.0;
    int N = 0;
    Vec2 shift;                      // config frame -> lattice frame
    std::vector<Pole> poles;         // snapped poles, lattice frame
    std::vector<Vec2> pole_offsets;  // snapped minus requested position
    std::vector<cplx> xlink, ylink;  // link(x -> x + e_x), link(x -> x + e_y)
    std::vector<std::uint8_t> active;
    double exclusion_radius = 0.0;   // in units of h

    int side() const { return 2 * N + 1; }
    size_t sites() const { return static_cast<size_t>(side()) * side(); }
    size_t index(int i, int j) const { return static_cast<size_t>(i + N) * side() + (j + N); }
    Vec2 position(int i, int j) const { return {i * h, j * h}; }
    Vec2 position(size_t k) const {
        int i = static_cast<int>(k / side()) - N, j = static_cast<int>(k % side()) - N;
        return position(i, j);
    }
    size_t active_count() const {
        size_t c = 0;
        for (auto a : active) c += a;
        return c;
    }
    // Nearest site to a lattice-frame point.
    size_t nearest_site(Vec2 p) const {
        int i = static_cast<int>(std::lround(p.x / h)), j = static_cast<int>(std::lround(p.y / h));
        if (std::abs(i) >= N || std::abs(j) >= N) throw DomainError("point lies outside the lattice interior");
        return index(i, j);
    }

    // Parallel transporter from y back to x: exp(i int_y^x A . dl).
    cplx link(size_t x, size_t y) const {
        const size_t n = side();
        if (y == x + n) return xlink[x];
        if (x == y + n) return std::conj(xlink[y]);
        if (y == x + 1) return ylink[x];
        if (x == y + 1) return std::conj(ylink[y]);
        throw DomainError("sites are not neighbours");
    }

    // Product of transporters around the plaquette with lower-left corner (i, j),
    // counter-clockwise.
    cplx plaquette_holonomy(int i, int j) const {
        size_t a = index(i, j), b = index(i + 1, j), c = index(i + 1, j + 1), d = index(i, j + 1);
        return link(b, a) * link(c, b) * link(d, c) * link(a, d);
    }

    // Configuration of the snapped poles, normalized (base pole at origin).
    Configuration snapped_config(bool allow_integer = true) const { return Configuration(poles, allow_integer); }
    Vec2 base_pole() const { return poles.front().position; }

    void apply(const Field& u, Field& out, double sigma = 0.0) const {
        const int n = side();
        const double ih2 = 1.0 / (h * h);
        out.assign(sites(), cplx(0));
        parallel_for(static_cast<size_t>(n - 2), [&](size_t row) {
            const int i = static_cast<int>(row) + 1 - N;
            for (int j = -N + 1; j < N; ++j) {
                size_t x = index(i, j);
                if (!active[x]) continue;
                cplx v = 4.0 * u[x] - xlink[x] * u[x + n] - std::conj(xlink[x - n]) * u[x - n] - ylink[x] * u[x + 1] -
                         std::conj(ylink[x - 1]) * u[x - 1];
                out[x] = v * ih2 + sigma * u[x];
            }
        });
    }
};

namespace detail {

inline double snap_center(double v, double h) { return (std::floor(v / h) + 0.5) * h; }

// exp(i sum_k alpha_k * angle subtended at pole k going from y to x).
inline cplx exact_link(const std::vector<Pole>& poles, Vec2 x, Vec2 y) {
    double ph = 0.0;
    for (auto& p : poles) {
        Vec2 a = x - p.position, b = y - p.position;
        ph += p.flux * std::atan2(cross(b, a), dot(b, a));
    }
    return std::polar(1.0, ph);
}

}  // namespace detail

// Peierls lattice for the configuration. Poles snap to plaquette centres;
// sites within exclusion_radius * h of a pole and the outer ring are Dirichlet.
inline MagneticLattice build(const Configuration& cfg, double h, int N, double exclusion_radius = 0.0) {
    if (!(h > 0) || N < 2) throw DomainError("lattice needs h > 0 and N >= 2");
    MagneticLattice L;
    L.h = h;
    L.N = N;
    L.exclusion_radius = exclusion_radius;
    const auto& P = cfg.poles();
    Vec2 s1{detail::snap_center(P[0].position.x, h), detail::snap_center(P[0].position.y, h)};
    L.shift = s1 - P[0].position;
    for (auto& p : P) {
        Vec2 want = p.position + L.shift;
        Vec2 got{detail::snap_center(want.x, h), detail::snap_center(want.y, h)};
        if (std::max(std::abs(got.x), std::abs(got.y)) > (N - 10) * h)
            throw GeometryError("pole closer than 10h to the lattice boundary");
        for (auto& q : L.poles)
            if (norm(q.position - got) < 0.5 * h) throw ResolutionError("two poles share a plaquette");
        L.poles.push_back({got, p.flux});
        L.pole_offsets.push_back(got - want);
    }
    const size_t n = L.side();
    L.xlink.assign(L.sites(), cplx(1));
    L.ylink.assign(L.sites(), cplx(1));
    L.active.assign(L.sites(), 0);
    for (int i = -N; i <= N; ++i)
        for (int j = -N; j <= N; ++j) {
            size_t x = L.index(i, j);
            Vec2 p = L.position(i, j);
            if (i < N) L.xlink[x] = detail::exact_link(L.poles, p, L.position(i + 1, j));
            if (j < N) L.ylink[x] = detail::exact_link(L.poles, p, L.position(i, j + 1));
            bool act = std::abs(i) < N && std::abs(j) < N;
            for (auto& q : L.poles)
                if (norm(p - q.position) < exclusion_radius * h) act = false;
            L.active[x] = act;
        }
    (void)n;
    return L;
}

inline MagneticLattice gauge_transform(const MagneticLattice& L, const std::vector<cplx>& phi) {
    if (phi.size() != L.sites()) throw DomainError("gauge field has the wrong size");
    for (size_t x = 0; x < L.sites(); ++x)
        if (L.active[x] && phi[x] == cplx(0)) throw DomainError("gauge field vanishes on an active site");
    MagneticLattice G = L;
    const size_t n = L.side();
    for (size_t x = 0; x < L.sites(); ++x) {
        if (x + n < L.sites()) G.xlink[x] = std::conj(phi[x]) * L.xlink[x] * phi[x + n];
        if ((x + 1) % n != 0) G.ylink[x] = std::conj(phi[x]) * L.ylink[x] * phi[x + 1];
    }
    return G;
}

// e^{i f} at every site from the continuum phase function of the snapped
// poles. Sites that sit on the cut take the one-sided limit from the side of a
// point 1e-6 h away.
inline std::vector<cplx> discrete_phase(const MagneticLattice& L, PhaseMode mode) {
    const Configuration c = L.snapped_config();
    const Vec2 o = L.base_pole();
    const double eps = std::max(1e-6 * L.h, 1e3 * c.tol());
    std::vector<cplx> phi(L.sites(), cplx(1));
    parallel_for(L.sites(), [&](size_t x) {
        Vec2 p = L.position(x) - o, side = p;
        if (c.distance_to_cut(p) <= c.tol()) {
            for (int k = 0; k < 8; ++k) {
                double a = 0.3 + k * 0.7;
                Vec2 q = p + eps * Vec2{std::cos(a), std::sin(a)};
                if (c.distance_to_cut(q) > 0.5 * eps) { side = q; break; }
            }
        }
        phi[x] = phase_limit(c, p, side, mode);
    });
    return phi;
}

inline double field_norm(const Field& u) {
    double s = 0.0;
    for (auto& v : u) s += std::norm(v);
    return std::sqrt(s);
}

inline cplx inner(const Field& a, const Field& b) {
    cplx s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s;
}

inline double rayleigh_quotient(const MagneticLattice& L, const Field& u) {
    Field hu;
    L.apply(u, hu);
    return inner(u, hu).real() / inner(u, u).real();
}

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;
};

// CG for (H + s^2) u = rhs on the active sites.
inline Field solve_shifted(const MagneticLattice& L, double s, const Field& rhs, double tol = 1e-10,
                           int max_iter = 200000, SolveReport* report = nullptr) {
    if (!(s > 0)) throw DomainError("shift s must be positive");
    if (rhs.size() != L.sites()) throw DomainError("right-hand side has the wrong size");
    const double sigma = s * s;
    Field b = rhs;
    for (size_t x = 0; x < b.size(); ++x)
        if (!L.active[x]) b[x] = 0.0;
    Field u(L.sites(), cplx(0)), r = b, p = b, Ap;
    const double bn = field_norm(b);
    if (bn == 0.0) return u;
    double rr = inner(r, r).real();
    for (int it = 1; it <= max_iter; ++it) {
        L.apply(p, Ap, sigma);
        const double a = rr / inner(p, Ap).real();
        for (size_t x = 0; x < u.size(); ++x) {
            u[x] += a * p[x];
            r[x] -= a * Ap[x];
        }
        const double rr2 = inner(r, r).real();
        if (std::sqrt(rr2) <= tol * bn) {
            if (report) *report = {it, std::sqrt(rr2) / bn};
            return u;
        }
        const double bt = rr2 / rr;
        rr = rr2;
        for (size_t x = 0; x < u.size(); ++x) p[x] = r[x] + bt * p[x];
    }
    throw ConvergenceError("CG stopped at relative residual " + std::to_string(std::sqrt(rr) / bn));
}

// Multi-shift CG: solutions of (H + s_k^2) u = rhs for every shift at once,
// kept only at the listed sites. Result[k][m] = u_k(sites[m]).
inline std::vector<std::vector<cplx>> solve_multishift_at(const MagneticLattice& L, const std::vector<double>& s,
                                                          const Field& rhs, const std::vector<size_t>& sites,
                                                          double tol = 1e-10, int max_iter = 400000) {
    const size_t K = s.size(), M = sites.size();
    if (K == 0) return {};
    size_t base = 0;
    for (size_t k = 0; k < K; ++k) {
        if (!(s[k] > 0)) throw DomainError("shift s must be positive");
        if (s[k] < s[base]) base = k;
    }
    const double sigma0 = s[base] * s[base];
    Field b = rhs;
    for (size_t x = 0; x < b.size(); ++x)
        if (!L.active[x]) b[x] = 0.0;
    std::vector<std::vector<cplx>> xs(K, std::vector<cplx>(M, 0.0)), ps(K, std::vector<cplx>(M));
    for (size_t k = 0; k < K; ++k)
        for (size_t m = 0; m < M; ++m) ps[k][m] = b[sites[m]];
    const double bn = field_norm(b);
    if (bn == 0.0) return xs;
    std::vector<double> zeta(K, 1.0), zeta_old(K, 1.0);
    std::vector<bool> frozen(K, false);
    Field r = b, p = b, Ap;
    double rr = inner(r, r).real();
    double a_old = 1.0, b_old = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        L.apply(p, Ap, sigma0);
        const double a = rr / inner(p, Ap).real();
        for (size_t x = 0; x < r.size(); ++x) r[x] -= a * Ap[x];
        const double rr2 = inner(r, r).real();
        const double bt = rr2 / rr;
        for (size_t k = 0; k < K; ++k) {
            if (frozen[k]) continue;
            const double d = s[k] * s[k] - sigma0;
            const double zn = zeta[k] * zeta_old[k] * a_old /
                              (a * b_old * (zeta_old[k] - zeta[k]) + zeta_old[k] * a_old * (1.0 + d * a));
            const double ak = a * zn / zeta[k];
            const double bk = bt * (zn / zeta[k]) * (zn / zeta[k]);
            for (size_t m = 0; m < M; ++m) {
                xs[k][m] += ak * ps[k][m];
                ps[k][m] = zn * r[sites[m]] + bk * ps[k][m];
            }
            zeta_old[k] = zeta[k];
            zeta[k] = zn;
            if (std::abs(zn) * std::sqrt(rr2) <= 1e-3 * tol * bn) frozen[k] = true;
        }
        if (std::sqrt(rr2) <= tol * bn) return xs;
        for (size_t x = 0; x < r.size(); ++x) p[x] = r[x] + bt * p[x];
        rr = rr2;
        a_old = a;
        b_old = bt;
    }
    throw ConvergenceError("multi-shift CG stopped at relative residual " + std::to_string(std::sqrt(rr) / bn));
}

// Sparse matrix of H + sigma restricted to the full grid (inactive rows are
// empty) so that both lattices in a comparison share one index space.
inline Eigen::SparseMatrix<cplx> to_sparse(const MagneticLattice& L, double sigma = 0.0) {
    std::vector<Eigen::Triplet<cplx>> t;
    const int n = L.side();
    const double ih2 = 1.0 / (L.h * L.h);
    for (int i = -L.N; i <= L.N; ++i)
        for (int j = -L.N; j <= L.N; ++j) {
            size_t x = L.index(i, j);
            if (!L.active[x]) continue;
            t.emplace_back(x, x, 4.0 * ih2 + sigma);
            const size_t nb[4] = {x + n, x - n, x + 1, x - 1};
            for (size_t y : nb)
                if (L.active[y]) t.emplace_back(x, y, -L.link(x, y) * ih2);
        }
    Eigen::SparseMatrix<cplx> A(L.sites(), L.sites());
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

// Dense H on the active sites only.
inline Eigen::MatrixXcd to_dense_active(const MagneticLattice& L, std::vector<size_t>* map = nullptr) {
    std::vector<long> pos(L.sites(), -1);
    std::vector<size_t> act;
    for (size_t x = 0; x < L.sites(); ++x)
        if (L.active[x]) {
            pos[x] = static_cast<long>(act.size());
            act.push_back(x);
        }
    if (act.size() > 6000) throw DomainError("dense eigen-solve limited to 6000 active sites");
    auto A = to_sparse(L);
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(act.size(), act.size());
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(A, k); it; ++it)
            if (pos[it.row()] >= 0 && pos[it.col()] >= 0) D(pos[it.row()], pos[it.col()]) = it.value();
    if (map) *map = act;
    return D;
}

inline std::vector<double> lowest_eigenvalues(const MagneticLattice& L, int count) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense_active(L), Eigen::EigenvaluesOnly);
    std::vector<double> out;
    for (int k = 0; k < count && k < es.eigenvalues().size(); ++k) out.push_back(es.eigenvalues()[k]);
    return out;
}

// Inverse iteration with CG solves; stops when ||H u - rho u|| < tol rho.
inline double smallest_eigenvalue(const MagneticLattice& L, double tol = 1e-9, int max_iter = 2000) {
    if (L.active_count() < 9) throw DomainError("too few active sites for an eigenvalue estimate");
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    Field u(L.sites(), 0.0), hu;
    for (size_t x = 0; x < u.size(); ++x)
        if (L.active[x]) u[x] = cplx(g(rng), g(rng));
    // a tiny shift keeps the CG contract (s > 0) and does not move the fixed point
    const double s = 1e-7;
    for (int it = 0; it < max_iter; ++it) {
        double nu = field_norm(u);
        for (auto& v : u) v /= nu;
        L.apply(u, hu);
        double rho = inner(u, hu).real();
        double res = 0.0;
        for (size_t x = 0; x < u.size(); ++x) res += std::norm(hu[x] - rho * u[x]);
        if (std::sqrt(res) < tol * rho) return rho;
        u = solve_shifted(L, s, u, 1e-13);
    }
    throw ConvergenceError("inverse iteration did not converge");
}

struct ExclusionStudy {
    double lambda_1h, lambda_3h, relative_change;
    bool flagged;
};

inline ExclusionStudy exclusion_study(const Configuration& cfg, double h, int N) {
    double a = smallest_eigenvalue(build(cfg, h, N, 1.0));
    double b = smallest_eigenvalue(build(cfg, h, N, 3.0));
    double rc = std::abs(a - b) / b;
    return {a, b, rc, rc >= 0.02};
}

}  // namespace abflux
