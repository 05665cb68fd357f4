#pragma once

// The two upper-bound constructions, built as explicit axisymmetric
// fields.
//
// Finite-lambda mode: piecewise-in-theta 1D transition profiles anchored
// at a partition of [0, pi], mollified in theta, with polar caps set to
// the far-field state.
//
// Saturn mode: three regions in the upper half cross-section, mirrored
// through the equator.
//   Region 1 (theta <= pi/2 - eta)           uniaxial heteroclinic rays;
//   Region 2 (r >= 1 + 2 eta, near equator)  phase interpolation to Q_inf;
//   Region 3 (square of side 2 eta at the equator)  a square annulus of
//     phase interpolation around a complex-order-parameter vortex core of
//     winding -1, the defect ring.
//
// The core parametrizes the plane spanned by e1e1 - e3e3 and
// e1e3 + e3e1 around the center -1/2 (e2e2 - I/3); on that plane the
// nematic potential reduces to (3/16)(1 - |u|^2)^2 and |u| = 1 is exactly
// the set of unit uniaxial tensors with director in the x-z plane, so the
// core matches the surrounding uniaxial regions continuously.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "axisym.hpp"
#include "lbfgs.hpp"
#include "profile.hpp"
#include "qtensor.hpp"

namespace nematic {

// ---------------------------------------------------------------------------
// Complex order parameter patch

struct SquarePatch {
    int n = 0;          // nodes per side, uniform on [-1,1]^2
    double eps = 0.1;   // xi/eta
    std::vector<double> u;  // interleaved (u1, u2) per node, row-major in (s, tau)

    double h() const { return 2.0 / (n - 1); }
    size_t idx(int a, int b) const {
        return 2 * (static_cast<size_t>(a) * static_cast<size_t>(n) + static_cast<size_t>(b));
    }
    std::complex<double> at(int a, int b) const { return {u[idx(a, b)], u[idx(a, b) + 1]}; }
    void set(int a, int b, std::complex<double> v) {
        u[idx(a, b)] = v.real();
        u[idx(a, b) + 1] = v.imag();
    }
    double s_of(int a) const { return -1.0 + h() * a; }
    double tau_of(int b) const { return -1.0 + h() * b; }

    std::complex<double> bilinear(double s, double tau) const {
        const double hh = h();
        double x = std::clamp((s + 1.0) / hh, 0.0, static_cast<double>(n - 1));
        double y = std::clamp((tau + 1.0) / hh, 0.0, static_cast<double>(n - 1));
        int a = std::min(static_cast<int>(x), n - 2);
        int b = std::min(static_cast<int>(y), n - 2);
        const double fx = x - a, fy = y - b;
        return (1 - fx) * (1 - fy) * at(a, b) + fx * (1 - fy) * at(a + 1, b) +
               (1 - fx) * fy * at(a, b + 1) + fx * fy * at(a + 1, b + 1);
    }
};

inline SquarePatch make_patch(int n, double eps) {
    if (n < 17) throw std::invalid_argument("make_patch: need at least 17 nodes per side");
    if (!(eps > 0.0) || eps > 0.5)
        throw std::invalid_argument("make_patch: eps must lie in (0, 0.5]");
    SquarePatch p;
    p.n = n;
    p.eps = eps;
    p.u.assign(2 * static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
    return p;
}

// Degree of the boundary values, from accumulated phase increments.
inline double boundary_winding(const SquarePatch& p) {
    std::vector<std::complex<double>> loop;
    const int n = p.n;
    for (int a = 0; a + 1 < n; ++a) loop.push_back(p.at(a, 0));
    for (int b = 0; b + 1 < n; ++b) loop.push_back(p.at(n - 1, b));
    for (int a = n - 1; a > 0; --a) loop.push_back(p.at(a, n - 1));
    for (int b = n - 1; b > 0; --b) loop.push_back(p.at(0, b));
    double total = 0.0;
    for (size_t k = 0; k < loop.size(); ++k) {
        const std::complex<double> z0 = loop[k];
        const std::complex<double> z1 = loop[(k + 1) % loop.size()];
        total += std::arg(z1 * std::conj(z0));
    }
    return total / (2.0 * kPi);
}

// Number of cells whose corner values wind around zero.
inline int count_vortex_cells(const SquarePatch& p) {
    int count = 0;
    for (int a = 0; a + 1 < p.n; ++a)
        for (int b = 0; b + 1 < p.n; ++b) {
            const std::complex<double> c[4] = {p.at(a, b), p.at(a + 1, b),
                                               p.at(a + 1, b + 1), p.at(a, b + 1)};
            double w = 0.0;
            for (int k = 0; k < 4; ++k) w += std::arg(c[(k + 1) % 4] * std::conj(c[k]));
            if (std::abs(w) > kPi) ++count;
        }
    return count;
}

namespace detail {

// Discrete A int |grad u|^2 + (B/eps^2) int (1-|u|^2)^2 on the patch
// square, Dirichlet boundary. Exact gradient over interior nodes.
inline double patch_energy(const SquarePatch& p, double coef_grad, double coef_pot,
                           std::vector<double>* grad = nullptr) {
    const int n = p.n;
    const double h = p.h();
    if (grad) grad->assign(p.u.size(), 0.0);
    double e = 0.0;

    auto link = [&](int a0, int b0, int a1, int b1, double w) {
        const double du1 = p.u[p.idx(a1, b1)] - p.u[p.idx(a0, b0)];
        const double du2 = p.u[p.idx(a1, b1) + 1] - p.u[p.idx(a0, b0) + 1];
        e += coef_grad * w * (du1 * du1 + du2 * du2);
        if (grad) {
            const double c = 2.0 * coef_grad * w;
            (*grad)[p.idx(a0, b0)] -= c * du1;
            (*grad)[p.idx(a0, b0) + 1] -= c * du2;
            (*grad)[p.idx(a1, b1)] += c * du1;
            (*grad)[p.idx(a1, b1) + 1] += c * du2;
        }
    };
    for (int a = 0; a + 1 < n; ++a)
        for (int b = 0; b < n; ++b) link(a, b, a + 1, b, (b == 0 || b == n - 1) ? 0.5 : 1.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b + 1 < n; ++b) link(a, b, a, b + 1, (a == 0 || a == n - 1) ? 0.5 : 1.0);

    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double wa = (a == 0 || a == n - 1) ? 0.5 : 1.0;
            const double wb = (b == 0 || b == n - 1) ? 0.5 : 1.0;
            const double w = wa * wb * h * h;
            const double u1 = p.u[p.idx(a, b)], u2 = p.u[p.idx(a, b) + 1];
            const double m2 = u1 * u1 + u2 * u2;
            const double d = 1.0 - m2;
            e += coef_pot * w * d * d;
            if (grad) {
                const double c = -4.0 * coef_pot * w * d;
                (*grad)[p.idx(a, b)] += c * u1;
                (*grad)[p.idx(a, b) + 1] += c * u2;
            }
        }
    if (grad) {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (a == 0 || b == 0 || a == n - 1 || b == n - 1) {
                    (*grad)[p.idx(a, b)] = 0.0;
                    (*grad)[p.idx(a, b) + 1] = 0.0;
                }
    }
    return e;
}

inline LbfgsReport patch_minimize(SquarePatch& p, double coef_grad, double coef_pot,
                                  const LbfgsOptions& opts) {
    const int n = p.n;
    std::vector<double> x;
    x.reserve(2 * static_cast<size_t>(n - 2) * static_cast<size_t>(n - 2));
    for (int a = 1; a + 1 < n; ++a)
        for (int b = 1; b + 1 < n; ++b) {
            x.push_back(p.u[p.idx(a, b)]);
            x.push_back(p.u[p.idx(a, b) + 1]);
        }
    std::vector<double> gfull;
    auto fg = [&](const std::vector<double>& xv, std::vector<double>& gv) {
        size_t q = 0;
        for (int a = 1; a + 1 < n; ++a)
            for (int b = 1; b + 1 < n; ++b) {
                p.u[p.idx(a, b)] = xv[q++];
                p.u[p.idx(a, b) + 1] = xv[q++];
            }
        const double e = patch_energy(p, coef_grad, coef_pot, &gfull);
        gv.resize(xv.size());
        q = 0;
        for (int a = 1; a + 1 < n; ++a)
            for (int b = 1; b + 1 < n; ++b) {
                gv[q++] = gfull[p.idx(a, b)];
                gv[q++] = gfull[p.idx(a, b) + 1];
            }
        return e;
    };
    LbfgsReport rep = lbfgs_minimize(fg, x, opts);
    size_t q = 0;
    for (int a = 1; a + 1 < n; ++a)
        for (int b = 1; b + 1 < n; ++b) {
            p.u[p.idx(a, b)] = x[q++];
            p.u[p.idx(a, b) + 1] = x[q++];
        }
    return rep;
}

// Shrinks the boundary value radially toward a zero at the center; the
// standard vortex seed.
inline void seed_patch_interior(SquarePatch& p) {
    const int n = p.n;
    auto boundary_at_angle = [&](double alpha) {
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        const double gamma = 1.0 / std::max(std::abs(ca), std::abs(sa));
        const double s = std::clamp(gamma * ca, -1.0, 1.0);
        const double t = std::clamp(gamma * sa, -1.0, 1.0);
        return p.bilinear(s, t);  // boundary nodes are set, interior ignored on edge
    };
    for (int a = 1; a + 1 < n; ++a)
        for (int b = 1; b + 1 < n; ++b) {
            const double s = p.s_of(a), t = p.tau_of(b);
            const double rho = std::hypot(s, t);
            if (rho < 1e-14) {
                p.set(a, b, {0.0, 0.0});
                continue;
            }
            const double alpha = std::atan2(t, s);
            const double gamma = 1.0 / std::max(std::abs(std::cos(alpha)),
                                                std::abs(std::sin(alpha)));
            p.set(a, b, boundary_at_angle(alpha) * (rho / gamma));
        }
}

}  // namespace detail

struct GlReport {
    double energy = 0.0;
    double grad_inf_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    int vortex_cells = 0;
};

// Minimizes int 1/6 |grad u|^2 + 1/(2 eps^2) (1 - |u|^2)^2 over the patch
// with its boundary values held fixed.
inline GlReport gl_core_minimize(SquarePatch& patch, const LbfgsOptions& opts = {
                                     .max_iterations = 40000, .tol_rel = 1e-8}) {
    detail::seed_patch_interior(patch);
    const double coef_pot = 0.5 / (patch.eps * patch.eps);
    const LbfgsReport rep = detail::patch_minimize(patch, 1.0 / 6.0, coef_pot, opts);
    GlReport out;
    out.energy = rep.energy;
    out.grad_inf_norm = rep.grad_inf_norm;
    out.converged = rep.converged;
    out.iterations = rep.iterations;
    out.vortex_cells = count_vortex_cells(patch);
    return out;
}

// Canonical winding -1 boundary data u = conj(z)/|z| on the square edge.
inline SquarePatch make_canonical_patch(int n, double eps) {
    SquarePatch p = make_patch(n, eps);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a != 0 && b != 0 && a != n - 1 && b != n - 1) continue;
            std::complex<double> z(p.s_of(a), p.tau_of(b));
            p.set(a, b, std::conj(z) / std::abs(z));
        }
    return p;
}

// The explicit complex-order-parameter tensor
//   [[u1/sqrt6 + 1/3, 0, u2/sqrt6], [0, -2/3, 0], [u2/sqrt6, 0, 1/3 - u1/sqrt6]].
inline QTensor embed_complex(std::complex<double> u) {
    const double s6 = std::sqrt(6.0);
    const double a = u.real() / s6, b = u.imag() / s6;
    const Mat3 m = {a + 1.0 / 3.0, 0.0, b, 0.0, -2.0 / 3.0, 0.0, b, 0.0, 1.0 / 3.0 - a};
    return from_matrix(m);
}

namespace detail {

// Core-plane embedding used by the Saturn construction: |u| = 1 is the
// circle of unit uniaxial tensors with director (sin psi, 0, cos psi),
// u = -exp(2 i psi), and f restricted to the plane is (3/16)(1-|u|^2)^2.
inline QTensor embed_core(std::complex<double> u) {
    const double u1 = u.real(), u2 = u.imag();
    const Mat3 m = {1.0 / 6.0 + 0.5 * u1, 0.0,        -0.5 * u2,
                    0.0,                  -1.0 / 3.0,  0.0,
                    -0.5 * u2,            0.0,         1.0 / 6.0 - 0.5 * u1};
    return from_matrix(m);
}

inline std::complex<double> core_boundary_u(double psi) {
    return {-std::cos(2.0 * psi), -std::sin(2.0 * psi)};
}

// Director phase measured from e3 toward e1.
inline QTensor tensor_from_phase(double psi) {
    return from_director(Director{std::sin(psi), 0.0, std::cos(psi)});
}

struct SaturnPhases {
    double eta = 0.0;

    double phi_eta(double t) const {
        return std::acos(std::clamp(heteroclinic_n3(kPi / 2.0 - eta, t), -1.0, 1.0));
    }
    double phi_zero(double t) const {
        return std::acos(std::clamp(std::tanh(0.5 * kappa() * t), -1.0, 1.0));
    }

    // Edge phases on the outer square, parametrized by the polar angle of
    // the ray from the square center. Both phases use the same branch per
    // ray, so their convex mixtures represent valid director lines.
    void edge_phases(double alpha, double& psi_eta, double& psi_zero) const {
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        if (std::abs(ca) >= std::abs(sa)) {
            const double tau = sa / std::abs(ca);
            if (ca > 0.0) {  // right edge, from Region 2
                psi_eta = tau * phi_eta(2.0);
                psi_zero = tau * phi_zero(2.0);
            } else {  // left edge, the anchoring
                psi_eta = kPi / 2.0 - eta * tau;
                psi_zero = kPi / 2.0;
            }
        } else {
            const double s = ca / std::abs(sa);
            if (sa > 0.0) {  // top edge, heteroclinic at pi/2 - eta
                psi_eta = phi_eta(s + 1.0);
                psi_zero = phi_zero(s + 1.0);
            } else {  // bottom edge, its mirror image
                psi_eta = -phi_eta(s + 1.0);
                psi_zero = -phi_zero(s + 1.0);
            }
        }
    }
};

}  // namespace detail

struct SaturnTrial {
    AxiField field;
    SquarePatch patch;
    GlReport core_report;
    // cross-section core energy of the inner square with the exact
    // r(s)^2 sin(theta(tau)) metric carried in the quadrature
    double core_cross_energy = 0.0;
};

struct SaturnOptions {
    int patch_n = 0;  // 0: resolution chosen from eps
    LbfgsOptions gl{.max_iterations = 60000, .tol_rel = 1e-8};
};

inline SaturnTrial build_saturn_trial(const AxiGrid& g, const ModelParams& p,
                                      const SaturnOptions& opts = {}) {
    p.validate();
    const double eps = p.xi / p.eta;
    if (eps > 0.5)
        throw std::invalid_argument("build_saturn_trial: requires eps = xi/eta <= 1/2");
    int cells_in_layer = 0;
    for (double r : g.r)
        if (r > 1.0 && r <= 1.0 + 2.0 * p.eta) ++cells_in_layer;
    if (cells_in_layer < 16)
        throw std::invalid_argument("build_saturn_trial: fewer than 16 cells across the layer");

    const detail::SaturnPhases ph{p.eta};

    // Vortex core: minimize the tensor-consistent complex energy on the
    // inner square. In patch coordinates w = 2(s, tau) the cross-section
    // core energy is 1/4 |grad_w u|^2 + (3/64) eps^-2 (1-|u|^2)^2.
    SaturnTrial out;
    int patch_n = opts.patch_n;
    if (patch_n <= 0) patch_n = std::max(97, 2 * static_cast<int>(std::ceil(3.0 / eps)) + 1);
    out.patch = make_patch(patch_n, eps);
    SquarePatch& patch = out.patch;
    // boundary data u = -exp(2 i Psi_0), assembled on the upper half and
    // mirrored so the tensor reflection identity is exact
    for (int a = 0; a < patch_n; ++a)
        for (int b = 0; b < patch_n; ++b) {
            if (a != 0 && b != 0 && a != patch_n - 1 && b != patch_n - 1) continue;
            const double s = patch.s_of(a);
            const double tau = patch.tau_of(b);
            double pe, p0;
            ph.edge_phases(std::atan2(std::abs(tau), s), pe, p0);
            std::complex<double> ub = detail::core_boundary_u(p0);
            if (tau < 0.0) ub = std::conj(ub);
            patch.set(a, b, ub);
        }
    detail::seed_patch_interior(patch);
    const double coef_pot = 3.0 / (64.0 * eps * eps);
    const LbfgsReport rep = detail::patch_minimize(patch, 0.25, coef_pot, opts.gl);
    out.core_report.energy = rep.energy;
    out.core_report.grad_inf_norm = rep.grad_inf_norm;
    out.core_report.converged = rep.converged;
    out.core_report.iterations = rep.iterations;
    // enforce the mirror identity u(s,-tau) = conj(u(s,tau)) exactly
    for (int a = 0; a < patch_n; ++a)
        for (int b = 0; b < patch_n / 2; ++b) {
            const int bm = patch_n - 1 - b;
            const std::complex<double> lo = patch.at(a, b), hi = patch.at(a, bm);
            const std::complex<double> sym = 0.5 * (hi + std::conj(lo));
            patch.set(a, bm, sym);
            patch.set(a, b, std::conj(sym));
        }
    out.core_report.vortex_cells = count_vortex_cells(patch);

    // Inner-square core energy with the exact metric factors.
    {
        const double h = patch.h();
        double e = 0.0;
        auto metric = [&](double wa, double wb) {
            const double s = 0.5 * wa, tau = 0.5 * wb;  // inner-square coordinates
            const double r = 1.0 + p.eta * (s + 1.0);   // r-1 spans [eta/2, 3eta/2]
            const double th = kPi / 2.0 - p.eta * tau;
            return r * r * std::sin(th);
        };
        for (int a = 0; a + 1 < patch.n; ++a)
            for (int b = 0; b + 1 < patch.n; ++b) {
                const double wa = patch.s_of(a) + 0.5 * h;
                const double wb = patch.tau_of(b) + 0.5 * h;
                const std::complex<double> dus =
                    (patch.at(a + 1, b) + patch.at(a + 1, b + 1) - patch.at(a, b) -
                     patch.at(a, b + 1)) *
                    (0.5 / h);
                const std::complex<double> dut =
                    (patch.at(a, b + 1) + patch.at(a + 1, b + 1) - patch.at(a, b) -
                     patch.at(a + 1, b)) *
                    (0.5 / h);
                const std::complex<double> um = 0.25 * (patch.at(a, b) + patch.at(a + 1, b) +
                                                        patch.at(a, b + 1) + patch.at(a + 1, b + 1));
                const double d = 1.0 - std::norm(um);
                e += (0.25 * (std::norm(dus) + std::norm(dut)) +
                      3.0 / (64.0 * eps * eps) * d * d) *
                     metric(wa, wb) * h * h;
            }
        out.core_cross_energy = e;
    }

    // Assemble the axisymmetric field.
    auto upper_value = [&](double r, double theta) -> QTensor {
        const double t = (r - 1.0) / p.eta;
        if (theta <= kPi / 2.0 - p.eta)
            return from_director(geodesic_heteroclinic(theta, t));
        const double tau = (kPi / 2.0 - theta) / p.eta;  // in [0, 1)
        if (t >= 2.0) {
            const double phi = ph.phi_eta(t) * tau;
            return detail::tensor_from_phase(phi);
        }
        const double s = t - 1.0;
        if (std::max(std::abs(s), std::abs(tau)) >= 0.5) {
            const double rho = std::hypot(s, tau);
            const double alpha = std::atan2(tau, s);
            const double gamma =
                1.0 / std::max(std::abs(std::cos(alpha)), std::abs(std::sin(alpha)));
            double pe, p0;
            ph.edge_phases(alpha, pe, p0);
            const double w_outer = std::clamp((2.0 * rho - gamma) / gamma, 0.0, 1.0);
            return detail::tensor_from_phase(w_outer * pe + (1.0 - w_outer) * p0);
        }
        return detail::embed_core(patch.bilinear(2.0 * s, 2.0 * tau));
    };

    out.field = AxiField(g.nr(), g.nth());
    const int nth = g.nth();
    for (int j = 0; j < nth / 2; ++j) {
        const double theta = g.theta[static_cast<size_t>(j)];
        for (int i = 0; i < g.nr(); ++i) {
            const QTensor q = upper_value(g.r[static_cast<size_t>(i)], theta);
            out.field.at(i, j) = q;
            out.field.at(i, nth - 1 - j) = reflect_z(q);
        }
    }
    apply_boundary_rows(g, out.field);
    return out;
}

// ---------------------------------------------------------------------------
// Finite-lambda interpolated construction

struct TrialSpec {
    enum class Mode { finite_lambda, saturn };
    Mode mode = Mode::finite_lambda;
    double h = kPi / 8.0;           // theta partition width
    double eps_mollify = kPi / 64.0;  // smoothing width in theta
    ModelParams params;

    void validate() const {
        params.validate();
        if (mode == Mode::finite_lambda) {
            if (!(h > 0.0) || h > kPi / 4.0)
                throw std::invalid_argument("TrialSpec: h must lie in (0, pi/4]");
            if (!(eps_mollify > 0.0) || eps_mollify >= 0.5 * h)
                throw std::invalid_argument(
                    "TrialSpec: partition too coarse to embed the mollifier");
        }
    }
};

struct FiniteLambdaTrial {
    AxiField field;
    int active_intervals = 0;
    double cap_measure_theta = 0.0;  // theta-measure of the two polar caps
    double cap_solid_angle = 0.0;    // corresponding solid angle
    double sigma_budget = 0.0;       // explicit bound on the construction overhead
    std::vector<double> partition;   // interval endpoints
};

namespace detail {

// CDF of the C^2 bump kernel (35/32)(1 - x^2)^3 on [-1, 1].
inline double mollifier_cdf(double x) {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double x3 = x * x * x, x5 = x3 * x * x, x7 = x5 * x * x;
    return 0.5 + (35.0 / 32.0) * (x - x3 + 0.6 * x5 - x7 / 7.0);
}

}  // namespace detail

inline FiniteLambdaTrial build_finite_lambda_trial(
    const AxiGrid& g, const TrialSpec& spec,
    const ProfileGrid& pgrid = default_profile_grid(),
    const ProfileOptions& popts = {}) {
    spec.validate();
    if (spec.mode != TrialSpec::Mode::finite_lambda)
        throw std::invalid_argument("build_finite_lambda_trial: wrong mode");
    const ModelParams& p = spec.params;
    const double lambda = p.lambda();

    const int intervals = std::max(3, static_cast<int>(std::ceil(kPi / spec.h)));
    FiniteLambdaTrial out;
    out.partition.resize(static_cast<size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k)
        out.partition[static_cast<size_t>(k)] = kPi * k / intervals;
    out.active_intervals = intervals - 2;

    // one profile per active interval, anchored at the interval midpoint
    // (second-order Riemann sum of the transition cost)
    std::vector<ProfileResult> profiles(static_cast<size_t>(intervals));
    double max_d = 0.0;
    for (int k = 1; k + 1 < intervals; ++k) {
        const double theta_k = 0.5 * (out.partition[static_cast<size_t>(k)] +
                                      out.partition[static_cast<size_t>(k + 1)]);
        profiles[static_cast<size_t>(k)] =
            minimize_profile(boundary_tensor(theta_k), lambda, pgrid, popts);
        max_d = std::max(max_d, profiles[static_cast<size_t>(k)].d_lambda);
    }

    auto profile_value = [&](int k, double t) -> QTensor {
        if (k <= 0 || k >= intervals - 1) return q_infinity();  // caps
        const auto& v = profiles[static_cast<size_t>(k)].values;
        if (t >= pgrid.length) return q_infinity();
        const double x = t / pgrid.dt();
        const int i = std::min(static_cast<int>(x), pgrid.n - 2);
        const double f = x - i;
        return (1.0 - f) * v[static_cast<size_t>(i)] + f * v[static_cast<size_t>(i + 1)];
    };

    out.field = AxiField(g.nr(), g.nth());
    const double eps = spec.eps_mollify;
    for (int j = 0; j < g.nth(); ++j) {
        const double theta = g.theta[static_cast<size_t>(j)];
        // mollified mixture weights over the piecewise-constant partition;
        // mass outside [0, pi] extends with the cap value Q_inf
        double covered = 0.0;
        std::vector<std::pair<int, double>> weights;
        for (int k = 0; k < intervals; ++k) {
            const double lo = out.partition[static_cast<size_t>(k)];
            const double hi = out.partition[static_cast<size_t>(k + 1)];
            const double w = detail::mollifier_cdf((theta - lo) / eps) -
                             detail::mollifier_cdf((theta - hi) / eps);
            if (w > 0.0) {
                weights.emplace_back(k, w);
                covered += w;
            }
        }
        for (int i = 0; i < g.nr(); ++i) {
            const double t = (g.r[static_cast<size_t>(i)] - 1.0) / p.eta;
            QTensor q = (1.0 - covered) * q_infinity();
            for (const auto& [k, w] : weights) q += w * profile_value(k, t);
            out.field.at(i, j) = q;
        }
    }
    apply_boundary_rows(g, out.field);

    const double cap_hi = out.partition[1];
    const double cap_lo = out.partition[static_cast<size_t>(intervals - 1)];
    out.cap_measure_theta = cap_hi + (kPi - cap_lo);
    out.cap_solid_angle =
        2.0 * kPi * ((1.0 - std::cos(cap_hi)) + (1.0 + std::cos(cap_lo)));
    // overhead budget: missing cap energy + mollifier overlap + staircase
    // value variation + the theta-gradient cost of the mollified staircase
    // (the jumps |Q_i - Q_{i+1}| ~ h smeared over eps, supported on an
    // r-layer of width eta, contribute ~ eta^2 (h/eps) per unit of eta*E)
    out.sigma_budget = 2.0 * kPi * max_d *
                           (out.cap_measure_theta + 2.0 * eps * intervals + spec.h * kPi) +
                       8.0 * kPi * kPi * kappa() * p.eta * p.eta * (spec.h / eps);
    return out;
}

}  // namespace nematic
