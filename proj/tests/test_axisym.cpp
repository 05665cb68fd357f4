#include <catch_amalgamated.hpp>

#include <random>

#include "nematic/axisym.hpp"

using namespace nematic;

namespace {

ModelParams coarse_params() {
    ModelParams p;
    p.xi = 0.06;
    p.eta = 0.3;
    return p;
}

AxiGrid coarse_grid(const ModelParams& p, int n_theta = 48) {
    AxiGridOptions o;
    o.n_theta = n_theta;
    return make_axi_grid(p, o);
}

// Random admissible-looking state: perturbations decay into the far
// field so the energy stays at the scale of physical configurations.
AxiField random_field(const AxiGrid& g, std::uint64_t seed, double amplitude = 0.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    AxiField f = make_constant_field(g, q_infinity());
    for (int i = 1; i + 1 < g.nr(); ++i) {
        const double decay = std::exp(-(g.r[static_cast<size_t>(i)] - 1.0) / g.eta);
        for (int j = 0; j < g.nth(); ++j)
            for (int k = 0; k < 5; ++k) f.at(i, j)[k] += decay * u(rng);
    }
    return f;
}

}  // namespace

TEST_CASE("grid construction invariants") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    REQUIRE(g.r.front() == 1.0);
    REQUIRE(g.r.back() >= 1.0 + 30.0 * p.eta - 1e-12);
    REQUIRE(g.r[1] - g.r[0] <= p.xi / 3.0 + 1e-12);
    for (size_t i = 0; i + 1 < g.r.size(); ++i) REQUIRE(g.r[i + 1] > g.r[i]);
    for (size_t i = 1; i + 1 < g.r.size(); ++i) {
        const double growth = (g.r[i + 1] - g.r[i]) / (g.r[i] - g.r[i - 1]);
        REQUIRE(growth <= 1.05 + 1e-9);
    }
    REQUIRE(g.theta.front() > 0.0);
    REQUIRE(g.theta.back() < kPi);
    REQUIRE(std::abs(g.theta.front() - 0.5 * g.dtheta) < 1e-15);
    // staggered symmetrically about the equator
    const int nth = g.nth();
    for (int j = 0; j < nth / 2; ++j)
        REQUIRE(std::abs(g.theta[static_cast<size_t>(j)] +
                         g.theta[static_cast<size_t>(nth - 1 - j)] - kPi) < 1e-13);
    REQUIRE_THROWS_AS(make_axi_grid(p, AxiGridOptions{.n_theta = 9}), std::invalid_argument);
}

TEST_CASE("ground state has zero energy") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    const AxiField f = make_constant_field(g, q_infinity(), /*with_boundary_rows=*/false);
    const EnergyBreakdown b = energy(g, f, p);
    // the xi^-2 and eta^-2 factors amplify the potentials' cancellation
    // roundoff at the exact minimizer
    REQUIRE(std::abs(b.total()) < 1e-9);
    AxiField grad;
    energy_gradient(g, f, p, grad);
    for (const QTensor& q : grad.values) REQUIRE(q.norm() < 1e-12);
}

TEST_CASE("one-cell boundary jump against a hand quadrature oracle") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    AxiField f = make_constant_field(g, q_infinity(), false);
    for (int j = 0; j < g.nth(); ++j) f.at(0, j) = boundary_tensor(g.theta[static_cast<size_t>(j)]);

    const EnergyBreakdown b = energy(g, f, p);

    // independent re-derivation: first radial links + angular links along
    // the anchoring row + nodal terms of that row
    const double two_pi = 2.0 * kPi;
    const double dr0 = g.r[1] - g.r[0];
    const double rm = 0.5 * (g.r[1] + g.r[0]);
    const double w0 = g.wr[0];
    double oracle_elastic = 0.0, oracle_f = 0.0, oracle_g = 0.0;
    for (int j = 0; j < g.nth(); ++j) {
        const double th = g.theta[static_cast<size_t>(j)];
        const QTensor qb = boundary_tensor(th);
        oracle_elastic += 0.5 * (qb - q_infinity()).norm2() * two_pi * rm * rm *
                          std::sin(th) * g.dtheta / dr0;
        oracle_elastic += 0.5 * xi_form(qb) * two_pi * w0 * g.dtheta / std::sin(th);
        oracle_f += nematic_potential(qb).value / (p.xi * p.xi) * two_pi * std::sin(th) * w0 *
                    g.dtheta;
        oracle_g += field_potential(qb).value / (p.eta * p.eta) * two_pi * std::sin(th) * w0 *
                    g.dtheta;
    }
    for (int j = 0; j + 1 < g.nth(); ++j) {
        const QTensor d = boundary_tensor(g.theta[static_cast<size_t>(j + 1)]) -
                          boundary_tensor(g.theta[static_cast<size_t>(j)]);
        oracle_elastic +=
            0.5 * d.norm2() * two_pi * w0 * std::sin((j + 1) * g.dtheta) / g.dtheta;
    }
    REQUIRE(std::abs(b.elastic - oracle_elastic) < 1e-10 * oracle_elastic);
    REQUIRE(std::abs(b.nematic - oracle_f) < 1e-10 * std::max(1.0, oracle_f));
    REQUIRE(std::abs(b.field - oracle_g) < 1e-10 * oracle_g);
}

TEST_CASE("breakdown parts sum and bands partition the total") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    const AxiField f = random_field(g, 21);
    const EnergyBreakdown b = energy(g, f, p);
    REQUIRE(b.elastic >= 0.0);
    REQUIRE(b.field >= 0.0);
    REQUIRE(b.nematic >= -1e-10);

    double per_theta_sum = 0.0, per_r_sum = 0.0;
    for (double v : b.per_theta) per_theta_sum += v;
    for (double v : b.per_r) per_r_sum += v;
    REQUIRE(std::abs(per_theta_sum - b.total()) < 1e-10 * std::abs(b.total()));
    REQUIRE(std::abs(per_r_sum - b.total()) < 1e-10 * std::abs(b.total()));

    const double full = cone_energy(g, b, 0.0, kPi);
    REQUIRE(std::abs(full - b.total()) < 1e-10 * std::abs(b.total()));
    const double parts = cone_energy(g, b, 0.0, 0.7) + cone_energy(g, b, 0.7, 2.1) +
                         cone_energy(g, b, 2.1, kPi);
    REQUIRE(std::abs(parts - b.total()) < 1e-10 * std::abs(b.total()));
    REQUIRE(cone_energy(g, b, 1.0, 1.0) == 0.0);
    REQUIRE(std::abs(b.upper() + b.lower() - b.total()) < 1e-10 * std::abs(b.total()));
}

TEST_CASE("2D discrete gradient matches finite differences") {
    ModelParams p;
    p.xi = 0.12;
    p.eta = 0.4;
    AxiGridOptions o;
    o.n_theta = 16;
    const AxiGrid g = make_axi_grid(p, o);
    const AxiField f = random_field(g, 33);
    AxiField grad;
    energy(g, f, p, &grad);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double fd_eps = 1e-5;
    for (int trial = 0; trial < 60; ++trial) {
        // directional derivative along a random interior perturbation
        AxiField delta(g.nr(), g.nth());
        double n2 = 0.0;
        for (int i = 1; i + 1 < g.nr(); ++i)
            for (int j = 0; j < g.nth(); ++j)
                for (int k = 0; k < 5; ++k) {
                    delta.at(i, j)[k] = gauss(rng);
                    n2 += delta.at(i, j)[k] * delta.at(i, j)[k];
                }
        const double inv_norm = 1.0 / std::sqrt(n2);
        AxiField fp = f, fm = f;
        double analytic = 0.0;
        for (int i = 1; i + 1 < g.nr(); ++i)
            for (int j = 0; j < g.nth(); ++j)
                for (int k = 0; k < 5; ++k) {
                    const double d = delta.at(i, j)[k] * inv_norm;
                    fp.at(i, j)[k] += fd_eps * d;
                    fm.at(i, j)[k] -= fd_eps * d;
                    analytic += grad.at(i, j)[k] * d;
                }
        const double fd =
            (energy(g, fp, p).total() - energy(g, fm, p).total()) / (2.0 * fd_eps);
        REQUIRE(std::abs(fd - analytic) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
    // boundary rows are excluded from the gradient
    for (int j = 0; j < g.nth(); ++j) {
        REQUIRE(grad.at(0, j).norm() == 0.0);
        REQUIRE(grad.at(g.nr() - 1, j).norm() == 0.0);
    }
}

TEST_CASE("gradient descends from a non-critical state") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p, 24);
    const AxiField f = make_layer_field(g);
    AxiField grad;
    const double e0 = energy(g, f, p, &grad).total();
    double step = 1e-6;
    bool decreased = false;
    for (int tries = 0; tries < 40 && !decreased; ++tries, step *= 0.5) {
        AxiField trial = f;
        for (int i = 1; i + 1 < g.nr(); ++i)
            for (int j = 0; j < g.nth(); ++j)
                trial.at(i, j) -= step * grad.at(i, j);
        decreased = energy(g, trial, p).total() < e0;
    }
    REQUIRE(decreased);
}

TEST_CASE("azimuthal rotations leave the discrete energy invariant") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p, 24);
    const AxiField f = random_field(g, 55);
    const double e0 = energy(g, f, p).total();
    for (double phi : {0.3, 1.7, 4.0}) {
        AxiField rotated = f;
        for (QTensor& q : rotated.values) q = rotate_z(q, phi);
        REQUIRE(std::abs(energy(g, rotated, p).total() - e0) < 1e-10 * std::abs(e0));
    }
}

TEST_CASE("quadrature converges at second order on a smooth uniaxial field") {
    ModelParams p;
    p.xi = 0.2;
    p.eta = 0.5;
    auto smooth_field = [&](const AxiGrid& g) {
        AxiField f(g.nr(), g.nth());
        for (int i = 0; i < g.nr(); ++i)
            for (int j = 0; j < g.nth(); ++j) {
                const double t = (g.r[static_cast<size_t>(i)] - 1.0) / p.eta;
                const double th = g.theta[static_cast<size_t>(j)];
                // polynomial-in-angle phase relaxing to the pole
                const double psi = th * std::exp(-t) * (1.0 - th / kPi);
                f.at(i, j) = from_director(Director{std::sin(psi), 0.0, std::cos(psi)});
            }
        return f;
    };
    auto energy_at = [&](int nth, double dr_frac) {
        AxiGridOptions o;
        o.n_theta = nth;
        o.fine_dr_frac = dr_frac;
        o.max_dr_frac = dr_frac * p.xi / p.eta;  // cap = fine cell: uniform spacing
        o.ratio = 1.0 + 1e-9;
        const AxiGrid g = make_axi_grid(p, o);
        return energy(g, smooth_field(g), p).total();
    };
    const double e1 = energy_at(32, 1.0 / 3.0);
    const double e2 = energy_at(64, 1.0 / 6.0);
    const double e3 = energy_at(128, 1.0 / 12.0);
    const double order = std::log2(std::abs(e1 - e2) / std::abs(e2 - e3));
    REQUIRE(order >= 1.7);
    REQUIRE(order <= 2.5);
}

TEST_CASE("hemisphere symmetry diagnostics") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    SECTION("a mirrored field is exactly balanced") {
        AxiField f = random_field(g, 91);
        f = mirror_upper_half(g, f);
        const double ratio = symmetry_ratio(g, f, p);
        REQUIRE(std::abs(ratio - 1.0) < 1e-12);
    }
    SECTION("the oriented ansatz is far from balanced") {
        const AxiField dipole = make_dipole_field(g);
        const double ratio = symmetry_ratio(g, dipole, p);
        REQUIRE((ratio > 1.5 || ratio < 0.67));
    }
    SECTION("zero lower-half energy flags an infinite ratio") {
        AxiField f = make_constant_field(g, q_infinity(), false);
        for (int i = 1; i < g.nr() - 1; ++i) f.at(i, 0) = boundary_tensor(g.theta[0]);
        REQUIRE(std::isinf(symmetry_ratio(g, f, p)));
    }
}

TEST_CASE("per-ray transition energies bound the scaled total from below") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    SECTION("ground state") {
        const AxiField f = make_constant_field(g, q_infinity(), false);
        REQUIRE(std::abs(ray_lower_bound(g, f, p)) < 1e-12);
    }
    SECTION("random and layer fields") {
        for (std::uint64_t seed : {101ull, 202ull}) {
            const AxiField f = random_field(g, seed);
            const double lower = ray_lower_bound(g, f, p);
            const double scaled = p.eta * energy(g, f, p).total();
            REQUIRE(lower <= scaled + 1e-9 * std::abs(scaled));
        }
        const AxiField layer = make_layer_field(g);
        REQUIRE(ray_lower_bound(g, layer, p) <=
                p.eta * energy(g, layer, p).total() + 1e-10);
    }
}

TEST_CASE("ring detection") {
    const ModelParams p = coarse_params();
    const AxiGrid g = coarse_grid(p);
    SECTION("ground state has no ring") {
        const AxiField f = make_constant_field(g, q_infinity());
        REQUIRE_FALSE(locate_ring(g, f, p.reg_delta).found);
    }
    SECTION("a planted biaxial blob is found") {
        AxiField f = make_constant_field(g, q_infinity());
        QTensor blob;
        blob[0] = 0.6;  // maximally biaxial direction
        const int i_star = 12, j_star = g.nth() / 2 - 1;
        f.at(i_star, j_star) = blob;
        const RingLocation ring = locate_ring(g, f, p.reg_delta);
        REQUIRE(ring.found);
        REQUIRE(ring.r == g.r[i_star]);
        REQUIRE(ring.theta == g.theta[static_cast<size_t>(j_star)]);
        REQUIRE(ring.beta > 0.9);
    }
}

TEST_CASE("minimization on a coarse grid") {
    ModelParams p;
    p.xi = 0.08;
    p.eta = 0.32;
    const AxiGrid g = coarse_grid(p, 32);
    AxiMinimizeOptions opts;
    opts.lbfgs.tol_rel = 1e-5;
    opts.lbfgs.max_iterations = 6000;

    const AxiField layer = make_layer_field(g);
    const double e_layer_init = energy(g, layer, p).total();
    const AxiMinimizeResult from_layer = axisym_minimize(g, layer, p, opts);
    REQUIRE(from_layer.record.converged);
    REQUIRE(from_layer.record.energy_monotone);
    REQUIRE(from_layer.breakdown.total() <= e_layer_init);

    const AxiField cold = make_constant_field(g, q_infinity());
    const AxiMinimizeResult from_cold = axisym_minimize(g, cold, p, opts);
    REQUIRE(from_cold.record.converged);

    std::vector<AxiMinimizeResult> all;
    const AxiMinimizeResult best = axisym_minimize_best(
        g, {{"layer", layer}, {"cold", cold}}, p, opts, &all);
    REQUIRE(all.size() == 2);
    REQUIRE(best.breakdown.total() <=
            std::min(all[0].breakdown.total(), all[1].breakdown.total()) + 1e-12);

    // the relaxed state keeps a boundary layer: energy concentrated near r = 1
    double near = 0.0, far = 0.0;
    for (int i = 0; i < g.nr(); ++i) {
        if (g.r[static_cast<size_t>(i)] <= 1.0 + 10.0 * p.eta)
            near += best.breakdown.per_r[static_cast<size_t>(i)];
        else
            far += best.breakdown.per_r[static_cast<size_t>(i)];
    }
    REQUIRE(near > 20.0 * far);
}

TEST_CASE("three-component mode stays in the mirror class") {
    ModelParams p;
    p.xi = 0.08;
    p.eta = 0.32;
    const AxiGrid g = coarse_grid(p, 24);
    AxiMinimizeOptions opts;
    opts.three_component = true;
    opts.lbfgs.tol_rel = 1e-5;
    opts.lbfgs.max_iterations = 6000;
    const AxiMinimizeResult res = axisym_minimize(g, make_layer_field(g), p, opts);
    REQUIRE(res.record.converged);
    for (const QTensor& q : res.field.values) {
        REQUIRE(q[2] == 0.0);
        REQUIRE(q[4] == 0.0);
    }
}
