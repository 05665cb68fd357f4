#pragma once

// Discretization and minimization of the full energy
//   E(Q) = int_{r>1} 1/2 |grad Q|^2 + xi^-2 f(Q) + eta^-2 g(Q)
// over equivariant fields Q(r,theta,phi) = rotate_z(Qbar(r,theta), phi).
// The cross-section energy density decomposes as
//   |grad Q|^2 = |dQbar/dr|^2 + r^-2 |dQbar/dtheta|^2
//              + (r sin theta)^-2 Xi[Qbar],
// integrated with measure 2 pi r^2 sin theta dr dtheta. Link terms use
// first differences with midpoint metric, potentials and Xi are nodal
// with trapezoid weights in r and midpoint weights in the staggered
// theta direction.

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbfgs.hpp"
#include "profile.hpp"
#include "qtensor.hpp"

namespace nematic {

struct AxiGridOptions {
    int n_theta = 128;          // even, staggered half-cell away from the poles
    double fine_span = 2.0;     // uniform fine region [1, 1 + fine_span*eta]
    double ratio = 1.05;        // geometric growth beyond the fine region
    double fine_dr_frac = 1.0 / 3.0;  // finest cell = fine_dr_frac * xi
    double max_dr_frac = 1.0 / 3.0;   // cap dr at max_dr_frac * eta
    double r_out_layers = 30.0;       // R_out = 1 + r_out_layers * eta
};

struct AxiGrid {
    std::vector<double> r;      // r[0] = 1, r.back() = R_out
    std::vector<double> theta;  // theta_j = (j + 1/2) * dtheta
    double dtheta = 0.0;
    double xi = 0.0, eta = 0.0;

    // derived quadrature tables
    std::vector<double> wr;        // trapezoid r-weights
    std::vector<double> sin_th;    // sin(theta_j)
    std::vector<double> sin_mid;   // sin(theta at link midpoints), size n_theta-1

    int nr() const { return static_cast<int>(r.size()); }
    int nth() const { return static_cast<int>(theta.size()); }
    size_t index(int i, int j) const {
        return static_cast<size_t>(i) * static_cast<size_t>(nth()) + static_cast<size_t>(j);
    }
};

inline AxiGrid make_axi_grid(const ModelParams& p, const AxiGridOptions& o = {}) {
    p.validate();
    if (o.n_theta < 8 || o.n_theta % 2 != 0)
        throw std::invalid_argument("make_axi_grid: n_theta must be even and >= 8");

    AxiGrid g;
    g.xi = p.xi;
    g.eta = p.eta;
    const double r_out = 1.0 + o.r_out_layers * p.eta;
    const double dr_fine = o.fine_dr_frac * p.xi;
    const double dr_max = o.max_dr_frac * p.eta;
    const double fine_end = 1.0 + o.fine_span * p.eta;

    g.r.push_back(1.0);
    double dr = std::min(dr_fine, dr_max);
    while (g.r.back() < fine_end && g.r.back() < r_out) {
        g.r.push_back(std::min(g.r.back() + dr, r_out));
    }
    while (g.r.back() < r_out) {
        dr = std::min(dr * o.ratio, dr_max);
        g.r.push_back(std::min(g.r.back() + dr, r_out));
    }
    if (g.r.size() < 8) throw std::invalid_argument("make_axi_grid: radial grid too coarse");

    g.dtheta = kPi / o.n_theta;
    for (int j = 0; j < o.n_theta; ++j) g.theta.push_back((j + 0.5) * g.dtheta);

    const int nr = g.nr();
    g.wr.assign(static_cast<size_t>(nr), 0.0);
    for (int i = 0; i + 1 < nr; ++i) {
        const double h = g.r[static_cast<size_t>(i + 1)] - g.r[static_cast<size_t>(i)];
        g.wr[static_cast<size_t>(i)] += 0.5 * h;
        g.wr[static_cast<size_t>(i + 1)] += 0.5 * h;
    }
    for (double th : g.theta) g.sin_th.push_back(std::sin(th));
    for (int j = 0; j + 1 < o.n_theta; ++j) g.sin_mid.push_back(std::sin((j + 1) * g.dtheta));
    return g;
}

struct AxiField {
    int nr = 0, nth = 0;
    std::vector<QTensor> values;

    AxiField() = default;
    AxiField(int nr_, int nth_) : nr(nr_), nth(nth_) {
        values.assign(static_cast<size_t>(nr) * static_cast<size_t>(nth), QTensor{});
    }

    QTensor& at(int i, int j) {
        return values[static_cast<size_t>(i) * static_cast<size_t>(nth) + static_cast<size_t>(j)];
    }
    const QTensor& at(int i, int j) const {
        return values[static_cast<size_t>(i) * static_cast<size_t>(nth) + static_cast<size_t>(j)];
    }
};

// Overwrites the Dirichlet rows: radial anchoring at r = 1, far-field
// state at r = R_out.
inline void apply_boundary_rows(const AxiGrid& g, AxiField& f) {
    for (int j = 0; j < g.nth(); ++j) {
        f.at(0, j) = boundary_tensor(g.theta[static_cast<size_t>(j)], 0.0);
        f.at(g.nr() - 1, j) = q_infinity();
    }
}

inline AxiField make_constant_field(const AxiGrid& g, const QTensor& value,
                                    bool with_boundary_rows = true) {
    AxiField f(g.nr(), g.nth());
    for (auto& q : f.values) q = value;
    if (with_boundary_rows) apply_boundary_rows(g, f);
    return f;
}

// Exponential relaxation of the anchoring toward Q_inf over the field
// length eta.
inline AxiField make_layer_field(const AxiGrid& g) {
    AxiField f(g.nr(), g.nth());
    const QTensor qi = q_infinity();
    for (int j = 0; j < g.nth(); ++j) {
        const QTensor qb = boundary_tensor(g.theta[static_cast<size_t>(j)], 0.0);
        for (int i = 0; i < g.nr(); ++i) {
            const double t = (g.r[static_cast<size_t>(i)] - 1.0) / g.eta;
            f.at(i, j) = qi + std::exp(-kappa() * t) * (qb - qi);
        }
    }
    apply_boundary_rows(g, f);
    return f;
}

// Oriented ansatz: every ray follows the heteroclinic toward +e3, the
// competitor without a ring (breaks the equatorial mirror symmetry).
inline AxiField make_dipole_field(const AxiGrid& g) {
    AxiField f(g.nr(), g.nth());
    for (int j = 0; j < g.nth(); ++j) {
        const GeodesicPath path{g.theta[static_cast<size_t>(j)], +1};
        for (int i = 0; i < g.nr(); ++i) {
            const double t = (g.r[static_cast<size_t>(i)] - 1.0) / g.eta;
            f.at(i, j) = from_director(path(t));
        }
    }
    apply_boundary_rows(g, f);
    return f;
}

// Copies the upper half (theta < pi/2) onto the lower half through the
// equatorial mirror.
inline AxiField mirror_upper_half(const AxiGrid& g, const AxiField& f) {
    AxiField out = f;
    const int nth = g.nth();
    for (int i = 0; i < g.nr(); ++i)
        for (int j = nth / 2; j < nth; ++j) out.at(i, j) = reflect_z(f.at(i, nth - 1 - j));
    return out;
}

struct EnergyBreakdown {
    double elastic = 0.0;
    double nematic = 0.0;  // xi^-2 f part
    double field = 0.0;    // eta^-2 g part
    std::vector<double> per_theta;  // atoms attributed to theta nodes
    std::vector<double> per_r;      // atoms attributed to r nodes

    double total() const { return elastic + nematic + field; }
    double upper() const {
        double s = 0.0;
        const size_t half = per_theta.size() / 2;
        for (size_t j = 0; j < half; ++j) s += per_theta[j];
        return s;
    }
    double lower() const {
        double s = 0.0;
        for (size_t j = per_theta.size() / 2; j < per_theta.size(); ++j) s += per_theta[j];
        return s;
    }
};

// Discrete energy; when grad is non-null it receives the exact gradient
// of this functional with the two Dirichlet rows zeroed.
inline EnergyBreakdown energy(const AxiGrid& g, const AxiField& f, const ModelParams& p,
                              AxiField* grad = nullptr) {
    const int nr = g.nr(), nth = g.nth();
    const double two_pi = 2.0 * kPi;
    const double inv_xi2 = 1.0 / (p.xi * p.xi);
    const double inv_eta2 = 1.0 / (p.eta * p.eta);

    EnergyBreakdown out;
    out.per_theta.assign(static_cast<size_t>(nth), 0.0);
    out.per_r.assign(static_cast<size_t>(nr), 0.0);
    if (grad) {
        grad->nr = nr;
        grad->nth = nth;
        grad->values.assign(static_cast<size_t>(nr) * static_cast<size_t>(nth), QTensor{});
    }

    // radial links
    for (int i = 0; i + 1 < nr; ++i) {
        const double dr = g.r[static_cast<size_t>(i + 1)] - g.r[static_cast<size_t>(i)];
        const double rm = 0.5 * (g.r[static_cast<size_t>(i + 1)] + g.r[static_cast<size_t>(i)]);
        const double coef = two_pi * rm * rm * g.dtheta / dr;
        for (int j = 0; j < nth; ++j) {
            const QTensor d = f.at(i + 1, j) - f.at(i, j);
            const double c = coef * g.sin_th[static_cast<size_t>(j)];
            const double atom = 0.5 * c * d.norm2();
            out.elastic += atom;
            out.per_theta[static_cast<size_t>(j)] += atom;
            out.per_r[static_cast<size_t>(i)] += 0.5 * atom;
            out.per_r[static_cast<size_t>(i + 1)] += 0.5 * atom;
            if (grad) {
                grad->at(i, j) -= c * d;
                grad->at(i + 1, j) += c * d;
            }
        }
    }

    // angular links (the r^2 metric cancels against the r^-2 derivative factor)
    for (int j = 0; j + 1 < nth; ++j) {
        const double smid = g.sin_mid[static_cast<size_t>(j)];
        for (int i = 0; i < nr; ++i) {
            const double c = two_pi * g.wr[static_cast<size_t>(i)] * smid / g.dtheta;
            const QTensor d = f.at(i, j + 1) - f.at(i, j);
            const double atom = 0.5 * c * d.norm2();
            out.elastic += atom;
            out.per_theta[static_cast<size_t>(j)] += 0.5 * atom;
            out.per_theta[static_cast<size_t>(j + 1)] += 0.5 * atom;
            out.per_r[static_cast<size_t>(i)] += atom;
            if (grad) {
                grad->at(i, j) -= c * d;
                grad->at(i, j + 1) += c * d;
            }
        }
    }

    // nodal terms: equivariance form Xi and the two potentials
    QTensor pg, xg;
    for (int i = 0; i < nr; ++i) {
        const double ri = g.r[static_cast<size_t>(i)];
        const double wi = g.wr[static_cast<size_t>(i)];
        for (int j = 0; j < nth; ++j) {
            const QTensor& q = f.at(i, j);
            const double sj = g.sin_th[static_cast<size_t>(j)];
            const double vol = two_pi * ri * ri * sj * wi * g.dtheta;
            const double xi_metric = two_pi * wi * g.dtheta / sj;

            const double xi_atom = 0.5 * xi_form(q) * xi_metric;
            const PotentialEval fe = nematic_potential(q);
            const PotentialEval ge = field_potential(q, p.reg_delta);
            const double f_atom = inv_xi2 * fe.value * vol;
            const double g_atom = inv_eta2 * ge.value * vol;

            out.elastic += xi_atom;
            out.nematic += f_atom;
            out.field += g_atom;
            const double atom = xi_atom + f_atom + g_atom;
            out.per_theta[static_cast<size_t>(j)] += atom;
            out.per_r[static_cast<size_t>(i)] += atom;
            if (grad) {
                xi_form_gradient(q, xg);
                QTensor& gq = grad->at(i, j);
                for (int k = 0; k < 5; ++k)
                    gq[k] += 0.5 * xi_metric * xg[k] + vol * (inv_xi2 * fe.gradient[k] +
                                                              inv_eta2 * ge.gradient[k]);
            }
        }
    }

    if (grad) {
        for (int j = 0; j < nth; ++j) {
            grad->at(0, j) = QTensor{};
            grad->at(nr - 1, j) = QTensor{};
        }
    }
    return out;
}

inline void energy_gradient(const AxiGrid& g, const AxiField& f, const ModelParams& p,
                            AxiField& grad) {
    energy(g, f, p, &grad);
}

// Per-node attribution of every energy atom (link atoms split between
// their endpoints); node sums over any region partition the total.
inline std::vector<double> energy_node_map(const AxiGrid& g, const AxiField& f,
                                           const ModelParams& p) {
    const int nr = g.nr(), nth = g.nth();
    const double two_pi = 2.0 * kPi;
    const double inv_xi2 = 1.0 / (p.xi * p.xi);
    const double inv_eta2 = 1.0 / (p.eta * p.eta);
    std::vector<double> map(static_cast<size_t>(nr) * static_cast<size_t>(nth), 0.0);

    for (int i = 0; i + 1 < nr; ++i) {
        const double dr = g.r[static_cast<size_t>(i + 1)] - g.r[static_cast<size_t>(i)];
        const double rm = 0.5 * (g.r[static_cast<size_t>(i + 1)] + g.r[static_cast<size_t>(i)]);
        const double coef = two_pi * rm * rm * g.dtheta / dr;
        for (int j = 0; j < nth; ++j) {
            const double atom = 0.5 * coef * g.sin_th[static_cast<size_t>(j)] *
                                (f.at(i + 1, j) - f.at(i, j)).norm2();
            map[g.index(i, j)] += 0.5 * atom;
            map[g.index(i + 1, j)] += 0.5 * atom;
        }
    }
    for (int j = 0; j + 1 < nth; ++j) {
        const double smid = g.sin_mid[static_cast<size_t>(j)];
        for (int i = 0; i < nr; ++i) {
            const double atom = 0.5 * two_pi * g.wr[static_cast<size_t>(i)] * smid / g.dtheta *
                                (f.at(i, j + 1) - f.at(i, j)).norm2();
            map[g.index(i, j)] += 0.5 * atom;
            map[g.index(i, j + 1)] += 0.5 * atom;
        }
    }
    for (int i = 0; i < nr; ++i) {
        const double ri = g.r[static_cast<size_t>(i)];
        const double wi = g.wr[static_cast<size_t>(i)];
        for (int j = 0; j < nth; ++j) {
            const QTensor& q = f.at(i, j);
            const double sj = g.sin_th[static_cast<size_t>(j)];
            const double vol = two_pi * ri * ri * sj * wi * g.dtheta;
            map[g.index(i, j)] += 0.5 * xi_form(q) * two_pi * wi * g.dtheta / sj +
                                  vol * (inv_xi2 * nematic_potential(q).value +
                                         inv_eta2 * field_potential(q, p.reg_delta).value);
        }
    }
    return map;
}

// Energy of the atoms attributed to nodes inside the (r, theta) box.
inline double box_energy(const AxiGrid& g, const AxiField& f, const ModelParams& p,
                         double r_lo, double r_hi, double theta_lo, double theta_hi) {
    const std::vector<double> map = energy_node_map(g, f, p);
    double s = 0.0;
    for (int i = 0; i < g.nr(); ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        if (r < r_lo || r >= r_hi) continue;
        for (int j = 0; j < g.nth(); ++j) {
            const double th = g.theta[static_cast<size_t>(j)];
            if (th >= theta_lo && th < theta_hi) s += map[g.index(i, j)];
        }
    }
    return s;
}

// Energy restricted to the cone theta in [lo, hi); a partition of [0, pi]
// reproduces the total exactly because every atom is attributed to one
// theta node.
inline double cone_energy(const AxiGrid& g, const EnergyBreakdown& b, double theta_lo,
                          double theta_hi) {
    if (!(theta_lo < theta_hi)) return 0.0;
    double s = 0.0;
    for (int j = 0; j < g.nth(); ++j) {
        const double th = g.theta[static_cast<size_t>(j)];
        if (th >= theta_lo && th < theta_hi) s += b.per_theta[static_cast<size_t>(j)];
    }
    return s;
}

inline double cone_energy(const AxiGrid& g, const AxiField& f, const ModelParams& p,
                          double theta_lo, double theta_hi) {
    return cone_energy(g, energy(g, f, p), theta_lo, theta_hi);
}

// E(upper hemisphere) / E(lower hemisphere); infinity when the lower
// half carries no energy beyond roundoff of the quadrature sums.
inline double symmetry_ratio(const AxiGrid& g, const AxiField& f, const ModelParams& p) {
    const EnergyBreakdown b = energy(g, f, p);
    const double lo = b.lower();
    if (lo <= 1e-13 * std::max(1.0, b.upper()))
        return std::numeric_limits<double>::infinity();
    return b.upper() / lo;
}

// Per-ray 1D transition energy of the rescaled radial restriction,
// integrated over the sphere. Dropping the angular terms and the r^2 >= 1
// metric factors makes this a lower bound for eta * E on the same grid.
inline double ray_lower_bound(const AxiGrid& g, const AxiField& f, const ModelParams& p) {
    const int nr = g.nr(), nth = g.nth();
    const double lam2 = p.lambda() * p.lambda();
    double total = 0.0;
    QTensor pg;
    for (int j = 0; j < nth; ++j) {
        double ray = 0.0;
        for (int i = 0; i + 1 < nr; ++i) {
            const double dt = (g.r[static_cast<size_t>(i + 1)] - g.r[static_cast<size_t>(i)]) / g.eta;
            ray += 0.5 * (f.at(i + 1, j) - f.at(i, j)).norm2() / dt;
        }
        for (int i = 0; i < nr; ++i) {
            const double wt = g.wr[static_cast<size_t>(i)] / g.eta;
            ray += wt * potential_value_grad(f.at(i, j), lam2, p.reg_delta, pg);
        }
        total += ray * g.sin_th[static_cast<size_t>(j)] * g.dtheta;
    }
    return 2.0 * kPi * total;
}

struct RingLocation {
    bool found = false;
    double r = 0.0;
    double theta = 0.0;
    double beta = 0.0;
};

// Scans interior nodes for the biaxiality maximum (norms under the core
// floor count as maximal). Below the 0.1 threshold no ring is reported,
// the legitimate outcome for dipole-like states.
inline RingLocation locate_ring(const AxiGrid& g, const AxiField& f,
                                double reg_delta = kRegDelta) {
    RingLocation best;
    for (int i = 1; i + 1 < g.nr(); ++i)
        for (int j = 0; j < g.nth(); ++j) {
            const double beta = biaxiality(f.at(i, j), reg_delta);
            if (beta > best.beta) {
                best.beta = beta;
                best.r = g.r[static_cast<size_t>(i)];
                best.theta = g.theta[static_cast<size_t>(j)];
            }
        }
    best.found = best.beta > 0.1;
    return best;
}

struct ConvergenceRecord {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double grad_inf_norm = std::numeric_limits<double>::quiet_NaN();
    bool energy_monotone = true;
    std::string status;  // "ok", "max-iterations", "nan-at-node (i,j)", ...
    std::string init_name;
};

struct AxiMinimizeOptions {
    LbfgsOptions lbfgs{.max_iterations = 20000, .tol_rel = 1e-6};
    // Mirror-symmetric 3-component mode (B1, B2, B4 only); the boundary
    // data and all constructions lie in this class but a full minimizer
    // must be free to leave it.
    bool three_component = false;
};

struct AxiMinimizeResult {
    AxiField field;
    EnergyBreakdown breakdown;
    ConvergenceRecord record;
};

namespace detail {

inline std::string find_nonfinite_node(const AxiGrid& g, const AxiField& f) {
    for (int i = 0; i < f.nr; ++i)
        for (int j = 0; j < f.nth; ++j)
            for (int k = 0; k < 5; ++k)
                if (!std::isfinite(f.at(i, j)[k]))
                    return "nan-at-node (" + std::to_string(i) + "," + std::to_string(j) + ")";
    (void)g;
    return "non-finite energy";
}

}  // namespace detail

inline AxiMinimizeResult axisym_minimize(const AxiGrid& g, const AxiField& field0,
                                         const ModelParams& p,
                                         const AxiMinimizeOptions& opts = {}) {
    if (field0.nr != g.nr() || field0.nth != g.nth())
        throw std::invalid_argument("axisym_minimize: field does not match grid");

    AxiMinimizeResult res;
    res.field = field0;
    apply_boundary_rows(g, res.field);

    const int nr = g.nr(), nth = g.nth();
    const std::array<int, 5> full_comps = {0, 1, 2, 3, 4};
    const std::array<int, 3> mirror_comps = {0, 1, 3};
    const int ncomp = opts.three_component ? 3 : 5;
    auto comp = [&](int c) { return opts.three_component ? mirror_comps[static_cast<size_t>(c)]
                                                         : full_comps[static_cast<size_t>(c)]; };
    if (opts.three_component) {
        for (auto& q : res.field.values) q[2] = q[4] = 0.0;
        apply_boundary_rows(g, res.field);
    }

    const size_t dof = static_cast<size_t>(nr - 2) * static_cast<size_t>(nth) *
                       static_cast<size_t>(ncomp);
    std::vector<double> x(dof);
    size_t pidx = 0;
    for (int i = 1; i + 1 < nr; ++i)
        for (int j = 0; j < nth; ++j)
            for (int c = 0; c < ncomp; ++c) x[pidx++] = res.field.at(i, j)[comp(c)];

    AxiField grad;
    auto fg = [&](const std::vector<double>& xv, std::vector<double>& gv) {
        size_t q = 0;
        for (int i = 1; i + 1 < nr; ++i)
            for (int j = 0; j < nth; ++j)
                for (int c = 0; c < ncomp; ++c) res.field.at(i, j)[comp(c)] = xv[q++];
        const EnergyBreakdown b = energy(g, res.field, p, &grad);
        gv.resize(xv.size());
        q = 0;
        for (int i = 1; i + 1 < nr; ++i)
            for (int j = 0; j < nth; ++j)
                for (int c = 0; c < ncomp; ++c) gv[q++] = grad.at(i, j)[comp(c)];
        return b.total();
    };

    const LbfgsReport rep = lbfgs_minimize(fg, x, opts.lbfgs);
    size_t q = 0;
    for (int i = 1; i + 1 < nr; ++i)
        for (int j = 0; j < nth; ++j)
            for (int c = 0; c < ncomp; ++c) res.field.at(i, j)[comp(c)] = x[q++];

    res.breakdown = energy(g, res.field, p);
    res.record.converged = rep.converged;
    res.record.iterations = rep.iterations;
    res.record.evaluations = rep.evaluations;
    res.record.energy = rep.energy;
    res.record.grad_inf_norm = rep.grad_inf_norm;
    res.record.energy_monotone = rep.energy_monotone;
    if (rep.converged)
        res.record.status = "ok";
    else if (!std::isfinite(rep.energy))
        res.record.status = detail::find_nonfinite_node(g, res.field);
    else if (rep.note == "iteration cap reached")
        res.record.status = "max-iterations";
    else
        res.record.status = rep.note;
    return res;
}

// Runs every initialization and returns the lowest-energy converged state
// (falling back to the lowest energy overall when none converges).
inline AxiMinimizeResult axisym_minimize_best(
    const AxiGrid& g, const std::vector<std::pair<std::string, AxiField>>& inits,
    const ModelParams& p, const AxiMinimizeOptions& opts = {},
    std::vector<AxiMinimizeResult>* all = nullptr) {
    if (inits.empty()) throw std::invalid_argument("axisym_minimize_best: no initializations");
    AxiMinimizeResult best;
    bool have_best = false;
    for (const auto& [name, f0] : inits) {
        AxiMinimizeResult r = axisym_minimize(g, f0, p, opts);
        r.record.init_name = name;
        const bool better =
            !have_best ||
            (r.record.converged && !best.record.converged) ||
            (r.record.converged == best.record.converged &&
             r.breakdown.total() < best.breakdown.total());
        if (all) all->push_back(r);
        if (better) {
            best = std::move(r);
            have_best = true;
        }
    }
    return best;
}

}  // namespace nematic
