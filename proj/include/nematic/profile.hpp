#pragma once

// The 1D radial transition problem: given a surface tensor Q0, minimize
//   F_lambda(Q) = int_0^L [ 1/2 |dQ/dt|^2 + lambda^2 f(Q) + g(Q) ] dt
// with Q(0) = Q0 and Q(L) = Q_inf, t = (r-1)/eta. D_lambda is the minimal
// value. The lambda = infinity problem is uniaxial and has a closed form:
// heteroclinic director paths with energy kappa (1 - |cos theta|).

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lbfgs.hpp"
#include "qtensor.hpp"

namespace nematic {

struct ProfileGrid {
    double length;  // truncation length in units of eta
    int n;          // node count, uniform nodes t_k in [0, length]

    ProfileGrid(double length_, int n_) : length(length_), n(n_) {
        if (n < 64) throw std::invalid_argument("ProfileGrid: need at least 64 nodes");
        if (length < 10.0 / kappa())
            throw std::invalid_argument("ProfileGrid: length below 10/kappa");
    }

    double dt() const { return length / (n - 1); }
    double t(int k) const { return dt() * k; }
};

inline ProfileGrid default_profile_grid() { return ProfileGrid(20.0 / kappa(), 1024); }

struct ProfileResult {
    std::vector<QTensor> values;
    double energy = 0.0;
    double grad_norm = 0.0;
    double d_lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string init_used;
};

// Trapezoid potential quadrature plus first-difference link terms. The
// gradient (when requested) is exact for this discrete functional;
// boundary nodes carry zero gradient.
inline double discrete_profile_energy(const std::vector<QTensor>& values, double lambda,
                                      const ProfileGrid& grid,
                                      std::vector<QTensor>* gradient = nullptr) {
    const int n = grid.n;
    const double h = grid.dt();
    const double lam2 = lambda * lambda;
    if (gradient) gradient->assign(static_cast<size_t>(n), QTensor{});

    double energy = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
        const QTensor d = values[static_cast<size_t>(k + 1)] - values[static_cast<size_t>(k)];
        energy += 0.5 * d.norm2() / h;
        if (gradient) {
            (*gradient)[static_cast<size_t>(k)] -= (1.0 / h) * d;
            (*gradient)[static_cast<size_t>(k + 1)] += (1.0 / h) * d;
        }
    }
    QTensor pg;
    for (int k = 0; k < n; ++k) {
        const double w = (k == 0 || k == n - 1) ? 0.5 * h : h;
        const double pv = potential_value_grad(values[static_cast<size_t>(k)], lam2,
                                               kRegDelta, pg);
        energy += w * pv;
        if (gradient) (*gradient)[static_cast<size_t>(k)] += w * pg;
    }
    if (gradient) {
        (*gradient)[0] = QTensor{};
        (*gradient)[static_cast<size_t>(n - 1)] = QTensor{};
    }
    return energy;
}

// Heteroclinic connection of the uniaxial problem: the director path from
// (sin theta, 0, cos theta) to +e3 with n3(t) = (A - e^{-kt})/(A + e^{-kt}),
// A = (1 + cos theta)/(1 - cos theta). theta = pi is the stationary
// antipode (returns -e3 for all t); use the -e3 target there instead.
inline double heteroclinic_n3(double theta, double t) {
    const double c = std::cos(theta);
    if (c >= 1.0 - 1e-14) return 1.0;
    if (c <= -1.0 + 1e-14) return -1.0;
    const double log_a = std::log1p(c) - std::log1p(-c);
    return std::tanh(0.5 * (kappa() * t + log_a));
}

inline Director geodesic_heteroclinic(double theta, double t) {
    if (theta < 0.0 || theta > kPi)
        throw std::invalid_argument("geodesic_heteroclinic: theta outside [0, pi]");
    const double n3 = heteroclinic_n3(theta, t);
    const double n1 = std::sqrt(std::max(0.0, 1.0 - n3 * n3));
    return Director{n1, 0.0, n3};
}

// |ndot|^2 along the heteroclinic, from the geodesic equation
// |ndot_3| = (kappa/2)(1 - n3^2) and |ndot|^2 = ndot_3^2 / (1 - n3^2).
inline double heteroclinic_speed2(double theta, double t) {
    const double n3 = heteroclinic_n3(theta, t);
    const double k = kappa();
    return 0.25 * k * k * (1.0 - n3 * n3);
}

// g restricted to unit directors, g(n) = sqrt(3/2) (1 - n3^2).
inline double director_field_potential(const Director& n) {
    return std::sqrt(1.5) * (1.0 - n.z * n.z);
}

// Geodesic to target +e3 or -e3; the -e3 branch is the mirror image of
// the +e3 branch started from pi - theta.
struct GeodesicPath {
    double theta = kPi / 2.0;
    int target = +1;  // +1 for +e3, -1 for -e3

    Director operator()(double t) const {
        if (target >= 0) return geodesic_heteroclinic(theta, t);
        const Director m = geodesic_heteroclinic(kPi - theta, t);
        return Director{m.x, m.y, -m.z};
    }
};

// D_inf(Q_b(theta, .)) = kappa (1 - |cos theta|).
inline double d_infinity(double theta) { return kappa() * (1.0 - std::abs(std::cos(theta))); }

// Discrete director energy matching F_inf(n) = int |ndot|^2 + g(n) dt.
inline double discrete_director_energy(const std::vector<Director>& path, double dt) {
    double e = 0.0;
    for (size_t k = 0; k + 1 < path.size(); ++k) {
        const double dx = path[k + 1].x - path[k].x;
        const double dy = path[k + 1].y - path[k].y;
        const double dz = path[k + 1].z - path[k].z;
        e += (dx * dx + dy * dy + dz * dz) / dt;
    }
    for (size_t k = 0; k < path.size(); ++k) {
        const double w = (k == 0 || k + 1 == path.size()) ? 0.5 * dt : dt;
        e += w * director_field_potential(path[k]);
    }
    return e;
}

// Projects a director path onto the x-z meridian without increasing its
// discrete energy: N = (sqrt(1 - n3^2), 0, n3).
inline std::vector<Director> meridian_reduce(const std::vector<Director>& path) {
    std::vector<Director> out;
    out.reserve(path.size());
    for (const Director& n : path) {
        const double r = std::sqrt(std::max(0.0, 1.0 - n.z * n.z));
        out.push_back(Director{r, 0.0, n.z});
    }
    return out;
}

struct ProfileOptions {
    LbfgsOptions lbfgs{.max_iterations = 20000, .tol_rel = 1e-8};
    bool try_all_inits = true;
};

namespace detail {

inline std::vector<double> pack_interior(const std::vector<QTensor>& values) {
    std::vector<double> x;
    x.reserve((values.size() - 2) * 5);
    for (size_t k = 1; k + 1 < values.size(); ++k)
        for (int i = 0; i < 5; ++i) x.push_back(values[k][i]);
    return x;
}

inline void unpack_interior(const std::vector<double>& x, std::vector<QTensor>& values) {
    size_t p = 0;
    for (size_t k = 1; k + 1 < values.size(); ++k)
        for (int i = 0; i < 5; ++i) values[k][i] = x[p++];
}

// Principal eigenvector by shifted power iteration (small, fixed count).
inline Director principal_director(const QTensor& t) {
    const Mat3 m = to_matrix(t);
    double vx = m[0] + 0.1, vy = m[4] + 0.2, vz = m[8] + 1.0;
    const double shift = 2.0;
    for (int it = 0; it < 60; ++it) {
        const double wx = (m[0] + shift) * vx + m[1] * vy + m[2] * vz;
        const double wy = m[3] * vx + (m[4] + shift) * vy + m[5] * vz;
        const double wz = m[6] * vx + m[7] * vy + (m[8] + shift) * vz;
        const double nn = std::sqrt(wx * wx + wy * wy + wz * wz);
        if (nn < 1e-30) break;
        vx = wx / nn;
        vy = wy / nn;
        vz = wz / nn;
    }
    return Director{vx, vy, vz};
}

}  // namespace detail

// The three default initializations for the profile solve.
inline std::vector<QTensor> profile_init_linear(const QTensor& q0, const ProfileGrid& grid) {
    const QTensor qi = q_infinity();
    std::vector<QTensor> v(static_cast<size_t>(grid.n));
    for (int k = 0; k < grid.n; ++k) {
        const double w = grid.t(k) / grid.length;
        v[static_cast<size_t>(k)] = (1.0 - w) * q0 + w * qi;
    }
    return v;
}

inline std::vector<QTensor> profile_init_geodesic(const QTensor& q0, const ProfileGrid& grid) {
    const Director n0 = detail::principal_director(q0);
    const double theta0 = std::acos(std::clamp(n0.z, -1.0, 1.0));
    const double phi0 = (std::abs(n0.x) + std::abs(n0.y) < 1e-14) ? 0.0 : std::atan2(n0.y, n0.x);
    std::vector<QTensor> v(static_cast<size_t>(grid.n));
    const GeodesicPath path{theta0, theta0 > kPi / 2.0 ? -1 : +1};
    const QTensor base0 = rotate_z(from_director(path(0.0)), phi0);
    const QTensor offset = q0 - base0;
    for (int k = 0; k < grid.n; ++k) {
        const double t = grid.t(k);
        QTensor u = rotate_z(from_director(path(t)), phi0);
        v[static_cast<size_t>(k)] = u + std::exp(-kappa() * t) * offset;
    }
    v[0] = q0;
    v[static_cast<size_t>(grid.n - 1)] = q_infinity();
    return v;
}

inline std::vector<QTensor> profile_init_jump(const QTensor& q0, const ProfileGrid& grid) {
    std::vector<QTensor> v(static_cast<size_t>(grid.n));
    const double t_jump = 2.0 / kappa();
    for (int k = 0; k < grid.n; ++k)
        v[static_cast<size_t>(k)] = grid.t(k) <= t_jump ? q0 : q_infinity();
    v[static_cast<size_t>(grid.n - 1)] = q_infinity();
    return v;
}

// Single L-BFGS descent from a given initialization; ends are pinned to
// q0 and Q_inf.
inline ProfileResult minimize_profile_from(const QTensor& q0, double lambda,
                                           const ProfileGrid& grid,
                                           std::vector<QTensor> init,
                                           const ProfileOptions& opts = {}) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("minimize_profile: lambda must be finite and positive");
    if (static_cast<int>(init.size()) != grid.n)
        throw std::invalid_argument("minimize_profile: initialization does not match grid");

    std::vector<QTensor> values = std::move(init);
    values[0] = q0;
    values[static_cast<size_t>(grid.n - 1)] = q_infinity();
    std::vector<double> x = detail::pack_interior(values);
    std::vector<QTensor> grad_nodes;
    auto fg = [&](const std::vector<double>& xv, std::vector<double>& gv) {
        detail::unpack_interior(xv, values);
        const double e = discrete_profile_energy(values, lambda, grid, &grad_nodes);
        gv.resize(xv.size());
        size_t p = 0;
        for (size_t k = 1; k + 1 < values.size(); ++k)
            for (int i = 0; i < 5; ++i) gv[p++] = grad_nodes[k][i];
        return e;
    };
    const LbfgsReport rep = lbfgs_minimize(fg, x, opts.lbfgs);
    detail::unpack_interior(x, values);

    ProfileResult out;
    out.values = std::move(values);
    out.energy = rep.energy;
    out.grad_norm = rep.grad_inf_norm;
    out.converged = rep.converged;
    out.iterations = rep.iterations;
    out.d_lambda = rep.energy;
    return out;
}

// Minimizes the discrete F_lambda with Dirichlet ends Q(0) = q0 and
// Q(L) = Q_inf, reporting the best of the default initializations.
// Finite lambda only; the lambda = infinity problem has its own closed
// form (d_infinity / geodesic_heteroclinic).
inline ProfileResult minimize_profile(const QTensor& q0, double lambda,
                                      const ProfileGrid& grid,
                                      const ProfileOptions& opts = {}) {
    struct Candidate {
        std::vector<QTensor> (*make)(const QTensor&, const ProfileGrid&);
        const char* name;
    };
    std::vector<Candidate> candidates{{profile_init_geodesic, "geodesic"}};
    if (opts.try_all_inits) {
        candidates.push_back({profile_init_linear, "linear"});
        candidates.push_back({profile_init_jump, "jump"});
    }

    ProfileResult best;
    best.energy = std::numeric_limits<double>::infinity();
    for (const Candidate& cand : candidates) {
        ProfileResult res = minimize_profile_from(q0, lambda, grid, cand.make(q0, grid), opts);
        if (res.energy < best.energy) {
            best = std::move(res);
            best.init_used = cand.name;
        }
    }
    best.d_lambda = best.energy;
    return best;
}

// D_lambda over a sorted list of lambdas, warm-starting each solve from
// the previous minimizer so the reported table is nondecreasing on a
// fixed grid.
inline std::vector<std::pair<double, double>> d_lambda_curve(
    const QTensor& q0, const std::vector<double>& lambdas, const ProfileGrid& grid,
    const ProfileOptions& opts = {}) {
    for (double l : lambdas)
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::invalid_argument("d_lambda_curve: lambdas must be finite and positive");

    std::vector<std::pair<double, double>> table;
    std::vector<QTensor> warm;
    for (double lambda : lambdas) {
        ProfileResult res = minimize_profile(q0, lambda, grid, opts);
        if (!warm.empty()) {
            // refine from the previous minimizer as well, keep the lower energy
            ProfileResult warm_res = minimize_profile_from(q0, lambda, grid, warm, opts);
            if (warm_res.energy < res.energy) {
                res = std::move(warm_res);
                res.init_used = "warm";
            }
        }
        warm = res.values;
        table.emplace_back(lambda, res.d_lambda);
    }
    return table;
}

struct LipschitzProbe {
    double ratio = 0.0;        // |D(a) - D(b)| / |a - b|
    double c_estimate = 0.0;   // sampled sup of lambda^2 f + g on |Q| <= M
    double bound = 0.0;        // sqrt(c_estimate)
    double d_a = 0.0, d_b = 0.0;
};

inline LipschitzProbe d_lipschitz_probe(const QTensor& q0a, const QTensor& q0b,
                                        double lambda, const ProfileGrid& grid,
                                        const ProfileOptions& opts = {},
                                        std::uint64_t seed = 991) {
    const double sep = (q0a - q0b).norm();
    if (sep < 1e-8)
        throw std::invalid_argument("d_lipschitz_probe: states closer than 1e-8");
    LipschitzProbe out;
    out.d_a = minimize_profile(q0a, lambda, grid, opts).d_lambda;
    out.d_b = minimize_profile(q0b, lambda, grid, opts).d_lambda;
    out.ratio = std::abs(out.d_a - out.d_b) / sep;

    const double m_bound = std::max(q0a.norm(), q0b.norm());
    const auto samples = sample_ball_around(QTensor{}, m_bound, 20000, seed);
    const double lam2 = lambda * lambda;
    for (const QTensor& s : samples) {
        const double v = lam2 * nematic_potential(s).value + field_potential(s).value;
        out.c_estimate = std::max(out.c_estimate, v);
    }
    // include the segment between the two states
    for (int k = 0; k <= 64; ++k) {
        const double w = k / 64.0;
        const QTensor s = (1.0 - w) * q0a + w * q0b;
        const double v = lam2 * nematic_potential(s).value + field_potential(s).value;
        out.c_estimate = std::max(out.c_estimate, v);
    }
    out.bound = std::sqrt(out.c_estimate);
    return out;
}

}  // namespace nematic
