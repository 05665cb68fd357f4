#pragma once

// Limited-memory quasi-Newton minimizer with backtracking line search,
// shared by the 1D profile solver, the axisymmetric field solver, and the
// vortex-core solver. Operates on flat coefficient vectors.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace nematic {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 20000;
    // Converged when the gradient infinity norm drops below
    // tol_rel * max(1, |energy|).
    double tol_rel = 1e-8;
    double armijo_c1 = 1e-4;
    double step_shrink = 0.5;
    int max_line_search = 60;
};

struct LbfgsReport {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double grad_inf_norm = std::numeric_limits<double>::quiet_NaN();
    bool energy_monotone = true;
    std::string note;
};

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// value_and_grad fills grad (same size as x) and returns the energy.
inline LbfgsReport lbfgs_minimize(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& value_and_grad,
    std::vector<double>& x, const LbfgsOptions& opts = {}) {
    const size_t n = x.size();
    LbfgsReport rep;

    std::vector<double> g(n), x_new(n), g_new(n), dir(n);
    double fx = value_and_grad(x, g);
    rep.evaluations = 1;
    if (!std::isfinite(fx)) {
        rep.note = "non-finite energy at the initial point";
        rep.energy = fx;
        return rep;
    }

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    std::vector<double> alpha(static_cast<size_t>(opts.memory));

    for (int it = 0; it < opts.max_iterations; ++it) {
        rep.iterations = it;
        rep.energy = fx;
        rep.grad_inf_norm = detail::inf_norm(g);
        if (rep.grad_inf_norm < opts.tol_rel * std::max(1.0, std::abs(fx))) {
            rep.converged = true;
            return rep;
        }

        // Two-loop recursion for dir = -H g
        dir = g;
        const int h = static_cast<int>(s_hist.size());
        for (int i = h - 1; i >= 0; --i) {
            alpha[static_cast<size_t>(i)] = rho_hist[static_cast<size_t>(i)] *
                                            detail::dot(s_hist[static_cast<size_t>(i)], dir);
            const auto& y = y_hist[static_cast<size_t>(i)];
            for (size_t k = 0; k < n; ++k) dir[k] -= alpha[static_cast<size_t>(i)] * y[k];
        }
        if (h > 0) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = detail::dot(s, y) / std::max(detail::dot(y, y), 1e-300);
            for (double& v : dir) v *= gamma;
        }
        for (int i = 0; i < h; ++i) {
            const double beta = rho_hist[static_cast<size_t>(i)] *
                                detail::dot(y_hist[static_cast<size_t>(i)], dir);
            const auto& s = s_hist[static_cast<size_t>(i)];
            for (size_t k = 0; k < n; ++k)
                dir[k] += (alpha[static_cast<size_t>(i)] - beta) * s[k];
        }
        for (double& v : dir) v = -v;

        double gtd = detail::dot(g, dir);
        if (gtd >= 0.0) {  // not a descent direction: reset to steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (size_t k = 0; k < n; ++k) dir[k] = -g[k];
            gtd = -detail::dot(g, g);
        }

        // Sufficient decrease with an absolute roundoff allowance: near the
        // minimum the predicted decrease c1*step*gtd drops below the
        // cancellation noise of the energy sum, and a strict Armijo test
        // would stall the iteration there.
        const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, std::abs(fx));
        double step = 1.0;
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            for (size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * dir[k];
            f_new = value_and_grad(x_new, g_new);
            ++rep.evaluations;
            if (std::isfinite(f_new) && f_new <= fx + opts.armijo_c1 * step * gtd + noise) {
                accepted = true;
                break;
            }
            step *= opts.step_shrink;
        }
        if (!accepted) {
            rep.note = "line search failed";
            rep.energy = fx;
            return rep;
        }
        if (f_new > fx + noise) rep.energy_monotone = false;

        std::vector<double> s(n), y(n);
        for (size_t k = 0; k < n; ++k) {
            s[k] = x_new[k] - x[k];
            y[k] = g_new[k] - g[k];
        }
        const double sy = detail::dot(s, y);
        if (sy > 1e-300) {
            if (static_cast<int>(s_hist.size()) == opts.memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        x.swap(x_new);
        g.swap(g_new);
        fx = f_new;
    }

    rep.iterations = opts.max_iterations;
    rep.energy = fx;
    rep.grad_inf_norm = detail::inf_norm(g);
    rep.note = "iteration cap reached";
    return rep;
}

}  // namespace nematic
