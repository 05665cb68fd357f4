#pragma once

// Pointwise Q-tensor algebra for a nematic liquid crystal in a strong
// aligning field: the traceless-symmetric coefficient basis, the nematic
// and field potentials with analytic gradients, rotations about the field
// axis, boundary data, and the scalar diagnostics used by the solvers.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace nematic {

inline constexpr double kPi = 3.14159265358979323846;

// Transition rate of the field-aligned boundary layer, 24^(1/4).
inline double kappa() {
    static const double k = std::pow(24.0, 0.25);
    return k;
}

// Default norm floor used when evaluating g near Q = 0.
inline constexpr double kRegDelta = 1e-8;

// Additive constant in the nematic potential, fixed so min f = 0.
inline constexpr double kPotentialOffset = 2.0 / 9.0;

// Bound constant in Xi[Q] <= C |Q - Q_inf|^2 (exact for this basis).
inline constexpr double kXiBoundConstant = 4.0;

using Mat3 = std::array<double, 9>;  // row-major 3x3

struct Director {
    double x = 0.0, y = 0.0, z = 1.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// Traceless symmetric 3x3 tensor stored as 5 coefficients in the fixed
// orthonormal basis
//   B1 = (e1e1 - e2e2)/sqrt2,  B2 = (e1e1 + e2e2 - 2 e3e3)/sqrt6,
//   B3 = (e1e2 + e2e1)/sqrt2,  B4 = (e1e3 + e3e1)/sqrt2,
//   B5 = (e2e3 + e3e2)/sqrt2.
// Coefficient order q1..q5 is the on-disk contract for all file formats.
struct QTensor {
    std::array<double, 5> q{0.0, 0.0, 0.0, 0.0, 0.0};

    double& operator[](int i) { return q[static_cast<size_t>(i)]; }
    double operator[](int i) const { return q[static_cast<size_t>(i)]; }

    QTensor& operator+=(const QTensor& o) {
        for (int i = 0; i < 5; ++i) q[i] += o.q[i];
        return *this;
    }
    QTensor& operator-=(const QTensor& o) {
        for (int i = 0; i < 5; ++i) q[i] -= o.q[i];
        return *this;
    }
    QTensor& operator*=(double c) {
        for (double& v : q) v *= c;
        return *this;
    }

    friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
    friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
    friend QTensor operator*(double c, QTensor a) { return a *= c; }

    double norm2() const {
        return q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3] + q[4] * q[4];
    }
    double norm() const { return std::sqrt(norm2()); }
};

inline double dot(const QTensor& a, const QTensor& b) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += a.q[i] * b.q[i];
    return s;
}

inline Mat3 to_matrix(const QTensor& t) {
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
    const double a = t[0] / s2 + t[1] / s6;   // Q11
    const double b = -t[0] / s2 + t[1] / s6;  // Q22
    const double c = -2.0 * t[1] / s6;        // Q33
    const double d = t[2] / s2;               // Q12
    const double e = t[3] / s2;               // Q13
    const double f = t[4] / s2;               // Q23
    return {a, d, e, d, b, f, e, f, c};
}

// Projects the symmetric part of m onto the traceless basis.
inline QTensor from_matrix(const Mat3& m) {
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
    QTensor t;
    t[0] = (m[0] - m[4]) / s2;
    t[1] = (m[0] + m[4] - 2.0 * m[8]) / s6;
    t[2] = (m[1] + m[3]) / s2;
    t[3] = (m[2] + m[6]) / s2;
    t[4] = (m[5] + m[7]) / s2;
    return t;
}

inline double q33_component(const QTensor& t) { return -2.0 * t[1] / std::sqrt(6.0); }

// Q_inf = e3 x e3 - I/3, the far-field ground state.
inline QTensor q_infinity() {
    QTensor t;
    t[1] = -std::sqrt(2.0 / 3.0);
    return t;
}

// Model lengths in units of the particle radius. lambda = eta/xi.
struct ModelParams {
    double xi = 0.04;
    double eta = 0.2;
    double cste = kPotentialOffset;
    double reg_delta = kRegDelta;

    double lambda() const { return eta / xi; }

    void validate() const {
        if (!(xi > 0.0) || !(eta > 0.0))
            throw std::invalid_argument("ModelParams: xi and eta must be positive");
        if (!(reg_delta > 0.0) || reg_delta > 1e-3)
            throw std::invalid_argument("ModelParams: reg_delta must lie in (0, 1e-3]");
    }
};

// Q = s(n x n - I/3) for a unit director n.
inline QTensor from_director(const Director& n, double s = 1.0) {
    if (std::abs(n.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("from_director: director must be a unit vector");
    const double third = 1.0 / 3.0;
    Mat3 m = {n.x * n.x - third, n.x * n.y,         n.x * n.z,
              n.y * n.x,         n.y * n.y - third, n.y * n.z,
              n.z * n.x,         n.z * n.y,         n.z * n.z - third};
    for (double& v : m) v *= s;
    return from_matrix(m);
}

// Radial anchoring value at angles (theta, phi).
inline QTensor boundary_tensor(double theta, double phi = 0.0) {
    const double st = std::sin(theta), ct = std::cos(theta);
    return from_director(Director{st * std::cos(phi), st * std::sin(phi), ct});
}

struct PotentialEval {
    double value = 0.0;
    QTensor gradient;
};

inline double trace_cube(const QTensor& t) {
    const Mat3 m = to_matrix(t);
    // tr(M^3) = sum_ijk m_ij m_jk m_ki for symmetric M
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double mij = m[3 * i + j];
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += m[3 * j + k] * m[3 * k + i];
            s += mij * acc;
        }
    return s;
}

// f(Q) = -1/2 |Q|^2 - tr(Q^3) + 3/4 |Q|^4 + cste, gradient projected onto
// traceless symmetric perturbations.
inline PotentialEval nematic_potential(const QTensor& t, double cste = kPotentialOffset) {
    const double n2 = t.norm2();
    const Mat3 m = to_matrix(t);
    Mat3 m2{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += m[3 * i + k] * m[3 * k + j];
            m2[3 * i + j] = acc;
        }
    double tc = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) tc += m2[3 * i + k] * m[3 * k + i];

    PotentialEval out;
    out.value = -0.5 * n2 - tc + 0.75 * n2 * n2 + cste;
    const QTensor sq = from_matrix(m2);  // projection drops the trace part
    for (int i = 0; i < 5; ++i) out.gradient[i] = -t[i] - 3.0 * sq[i] + 3.0 * n2 * t[i];
    return out;
}

// g(Q) = sqrt(2/3) - Q33/|Q| with the norm floored at reg_delta; the
// gradient at exactly Q = 0 is defined as zero.
inline PotentialEval field_potential(const QTensor& t, double reg_delta = kRegDelta) {
    static const double g0 = std::sqrt(2.0 / 3.0);
    static const double p33 = -2.0 / std::sqrt(6.0);  // (B2)_33
    PotentialEval out;
    const double nrm = t.norm();
    const double m = std::max(nrm, reg_delta);
    const double q33 = q33_component(t);
    out.value = g0 - q33 / m;
    if (nrm == 0.0) return out;  // gradient 0 by convention
    const double inv_m = 1.0 / m;
    const double inv_m3 = inv_m * inv_m * inv_m;
    for (int i = 0; i < 5; ++i) out.gradient[i] = q33 * t[i] * inv_m3;
    out.gradient[1] -= p33 * inv_m;
    return out;
}

// Combined lambda^2 f + g evaluation used in the solver hot loops.
inline double potential_value_grad(const QTensor& t, double lambda2, double reg_delta,
                                   QTensor& grad) {
    const PotentialEval f = nematic_potential(t);
    const PotentialEval g = field_potential(t, reg_delta);
    for (int i = 0; i < 5; ++i) grad[i] = lambda2 * f.gradient[i] + g.gradient[i];
    return lambda2 * f.value + g.value;
}

// Conjugation by the rotation of angle phi about e3, oriented so that
// boundary_tensor(theta, phi) == rotate_z(boundary_tensor(theta, 0), phi).
inline QTensor rotate_z(const QTensor& t, double phi) {
    const double c2 = std::cos(2.0 * phi), s2 = std::sin(2.0 * phi);
    const double c1 = std::cos(phi), s1 = std::sin(phi);
    QTensor r;
    r[0] = c2 * t[0] - s2 * t[2];
    r[2] = s2 * t[0] + c2 * t[2];
    r[1] = t[1];
    r[3] = c1 * t[3] - s1 * t[4];
    r[4] = s1 * t[3] + c1 * t[4];
    return r;
}

// Conjugation by the equatorial mirror T = diag(1,1,-1).
inline QTensor reflect_z(const QTensor& t) {
    QTensor r = t;
    r[3] = -r[3];
    r[4] = -r[4];
    return r;
}

// Xi[Q] = |d/dphi of the rotated tensor|^2 = |[Q, L3]|^2; phi-independent.
inline double xi_form(const QTensor& t) {
    return 4.0 * t[0] * t[0] + 4.0 * t[2] * t[2] + t[3] * t[3] + t[4] * t[4];
}

inline void xi_form_gradient(const QTensor& t, QTensor& grad) {
    grad[0] = 8.0 * t[0];
    grad[1] = 0.0;
    grad[2] = 8.0 * t[2];
    grad[3] = 2.0 * t[3];
    grad[4] = 2.0 * t[4];
}

// beta = 1 - 6 tr(Q^3)^2 / |Q|^6 in [0,1]; zero exactly on uniaxial
// tensors. Norms below reg_delta count as defect core, reported as
// maximal biaxiality.
inline double biaxiality(const QTensor& t, double reg_delta = kRegDelta) {
    const double n2 = t.norm2();
    if (n2 < reg_delta * reg_delta) return 1.0;
    const double tc = trace_cube(t);
    return 1.0 - 6.0 * tc * tc / (n2 * n2 * n2);
}

inline bool is_core(const QTensor& t, double reg_delta = kRegDelta) {
    return t.norm() < reg_delta;
}

// min over samples of (f + h g)/|Q - Q_inf|^2; degenerate samples skipped.
inline double min_potential_ratio(double h, std::span<const QTensor> samples) {
    const QTensor qinf = q_infinity();
    double best = std::numeric_limits<double>::infinity();
    for (const QTensor& s : samples) {
        const double d2 = (s - qinf).norm2();
        if (d2 < 1e-20) continue;
        const double v = nematic_potential(s).value + h * field_potential(s).value;
        best = std::min(best, v / d2);
    }
    return best;
}

inline std::vector<QTensor> sample_ball_around(const QTensor& center, double radius,
                                               int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<QTensor> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        QTensor d;
        double n2 = 0.0;
        for (int i = 0; i < 5; ++i) {
            d[i] = gauss(rng);
            n2 += d[i] * d[i];
        }
        const double scale = radius * std::pow(unif(rng), 0.2) / std::sqrt(n2);
        out.push_back(center + scale * d);
    }
    return out;
}

// Statistical lower-bound estimate of the coercivity constant C(h) in
// f + h g >= C(h) |Q - Q_inf|^2, sampled inside |Q - Q_inf| <= radius.
inline double coercivity_ratio(double h, int sample_count, double radius,
                               std::uint64_t seed = 12345) {
    if (sample_count < 10000)
        throw std::invalid_argument("coercivity_ratio: need at least 1e4 samples");
    const auto samples = sample_ball_around(q_infinity(), radius, sample_count, seed);
    return min_potential_ratio(h, samples);
}

}  // namespace nematic
