#include "tb4/equilibria.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <exception>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <mutex>
#include <sstream>
#include <thread>

#include "tb4/errors.hpp"

namespace tb4 {

namespace {

void require_area(const Vec4& q) {
    const double w = q(0) * q(3) - q(1) * q(2);
    if (!(std::abs(w) > 1e-13 * q.squaredNorm())) throw ChartSingular("chart singular: oriented area A vanishes");
}

bool degenerate_momenta(double mu1, double mu2) {
    return std::abs(mu1 * mu1 - mu2 * mu2) <= 1e-14 * (mu1 * mu1 + mu2 * mu2);
}

}  // namespace

EffectivePotential effective_potential(const MassTriple& masses, const Vec4& q, double mu1, double mu2,
                                       const Potential& potential) {
    require_area(q);
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    const double m1sq = mu1 * mu1, m2sq = mu2 * mu2;
    const double W = q(0) * q(3) - q(1) * q(2);
    const double w2 = W * W;

    // Centrifugal part N / (2 W^2) with N = mu1^2 (q1^2/nu2 + q3^2/nu1) + mu2^2 (q2^2/nu2 + q4^2/nu1).
    const double inv1 = (q(0) * q(0) / nu2 + q(2) * q(2) / nu1) / w2;
    const double inv2 = (q(1) * q(1) / nu2 + q(3) * q(3) / nu1) / w2;
    const double N = m1sq * inv1 * w2 + m2sq * inv2 * w2;
    const Vec4 dN(2.0 * m1sq * q(0) / nu2, 2.0 * m2sq * q(1) / nu2, 2.0 * m1sq * q(2) / nu1, 2.0 * m2sq * q(3) / nu1);
    const Vec4 ddN(2.0 * m1sq / nu2, 2.0 * m2sq / nu2, 2.0 * m1sq / nu1, 2.0 * m2sq / nu1);
    const Vec4 dW(q(3), -q(2), -q(1), q(0));
    Mat4 ddW = Mat4::Zero();
    ddW(0, 3) = ddW(3, 0) = 1.0;
    ddW(1, 2) = ddW(2, 1) = -1.0;

    const ShapeJet v = shape_potential(potential, q);

    EffectivePotential out;
    const double centrifugal = N / (2.0 * w2);
    out.value = centrifugal + v.value;
    // Differentiating a_i q_i^2 / W^2 leaves W - q_i dW/dq_i, which is exactly
    // q1 q4 or -q2 q3; expanding N instead cancels large terms when q2 q3 << q1 q4.
    const Vec4 a = ddN / 4.0;
    const Vec4 sq = q.cwiseProduct(q);
    const Vec4 rest(-q(1) * q(2), q(0) * q(3), q(0) * q(3), -q(1) * q(2));
    for (int i = 0; i < 4; ++i) {
        double others = 0.0;
        for (int k = 0; k < 4; ++k) others += k == i ? 0.0 : a(k) * sq(k);
        out.centrifugal_gradient(i) = 2.0 * (a(i) * q(i) * rest(i) - others * dW(i)) / (w2 * W);
    }
    out.potential_gradient = v.grad;
    out.gradient = out.centrifugal_gradient + out.potential_gradient;
    out.hessian = Mat4(ddN.asDiagonal()) / (2.0 * w2) - (dN * dW.transpose() + dW * dN.transpose()) / (w2 * W) -
                  N / (w2 * W) * ddW + 3.0 * N / (w2 * w2) * dW * dW.transpose() + v.hess;

    out.split.v_eff = out.value;
    out.split.inertia1 = 1.0 / inv1;
    out.split.inertia2 = 1.0 / inv2;
    out.split.keff_coefficient = degenerate_momenta(mu1, mu2)
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : (-m1sq * inv1 + m2sq * inv2) / (2.0 * (m1sq - m2sq));
    return out;
}

EffectivePotential effective_potential(const MassTriple& masses, const Vec4& q, double mu1, double mu2) {
    return effective_potential(masses, q, mu1, mu2, newtonian(masses));
}

double kinetic_c2(double qi, double qj, double area, double mu1, double mu2) {
    if (degenerate_momenta(mu1, mu2)) throw DegenerateMomenta("kinetic expansion needs mu1 != mu2");
    const double m1sq = mu1 * mu1, m2sq = mu2 * mu2;
    return (-m1sq * qi * qi + m2sq * qj * qj) / (4.0 * area * area * (m1sq - m2sq));
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& matrix) {
    Eigen::MatrixXd a = 0.5 * (matrix + matrix.transpose());
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0 || std::abs(apq) <= DBL_EPSILON * std::sqrt(std::abs(a(p, p) * a(q, q)))) continue;
                Eigen::JacobiRotation<double> rot;
                rot.makeJacobi(a, p, q);
                a.applyOnTheLeft(p, q, rot.adjoint());
                a.applyOnTheRight(p, q, rot);
                a(p, q) = a(q, p) = 0.0;
                rotated = true;
            }
        }
        if (!rotated) break;
    }
    Eigen::VectorXd d = a.diagonal();
    std::sort(d.data(), d.data() + d.size());
    return d;
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::minimum: return "minimum";
        case Classification::saddle: return "saddle";
        case Classification::indefinite_k: return "indefinite-K";
    }
    return "unknown";
}

KeffCorrection keff_correction(const MassTriple& masses, const Vec4& q, double mu1, double mu2) {
    if (degenerate_momenta(mu1, mu2)) throw DegenerateMomenta("K_eff correction needs mu1 != mu2");
    require_area(q);
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    const double A = 0.5 * (q(0) * q(3) - q(1) * q(2));
    KeffCorrection out;
    out.coefficient = kinetic_c2(q(2), q(3), A, mu1, mu2) / (2.0 * nu1) + kinetic_c2(q(0), q(1), A, mu1, mu2) / (2.0 * nu2);
    out.sufficient = out.coefficient > 0.0;
    const Vec4 l(-q(1), q(0), -q(3), q(2));
    out.momentum_hessian = Vec4(1.0 / nu1, 1.0 / nu1, 1.0 / nu2, 1.0 / nu2).asDiagonal();
    out.momentum_hessian += 2.0 * out.coefficient * l * l.transpose();
    out.momentum_block_positive = symmetric_eigenvalues(out.momentum_hessian)(0) > 0.0;
    return out;
}

namespace {

double gradient_residual(const MassTriple& masses, const Vec4& q, double mu1, double mu2) {
    const EffectivePotential ep = effective_potential(masses, q, mu1, mu2);
    // Scale each component by the magnitude of the terms that make it up.
    const PotentialJet jet = newtonian_potential(
        masses, {q(0) * q(0) + q(1) * q(1), q(2) * q(2) + q(3) * q(3), q(0) * q(2) + q(1) * q(3)});
    const Vec4 a = q.cwiseAbs();
    const Eigen::Vector3d g = jet.grad.cwiseAbs();
    const Vec4 pot_scale(2.0 * a(0) * g(0) + a(2) * g(2), 2.0 * a(1) * g(0) + a(3) * g(2),
                         2.0 * a(2) * g(1) + a(0) * g(2), 2.0 * a(3) * g(1) + a(1) * g(2));
    const Vec4 scale = ep.centrifugal_gradient.cwiseAbs() + pot_scale;
    double r = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double s = scale(i) > 0.0 ? scale(i) : 1.0;
        r = std::max(r, std::abs(ep.gradient(i)) / s);
    }
    return r;
}

void fill_common(EquilibriumReport& rep) {
    const Frequencies f = frequencies(rep.masses, rep);
    rep.omega1 = f.omega1;
    rep.omega2 = f.omega2;
    rep.kepler1 = f.kepler1;
    rep.kepler2 = f.kepler2;
    const double s = rep.mu1 + rep.mu2;
    rep.h = s * s * rep.energy;
    rep.b = rep.mu1 * rep.mu2 / (s * s);
    rep.classification = rep.negative_q > 0   ? Classification::saddle
                         : rep.negative_p > 0 ? Classification::indefinite_k
                                              : Classification::minimum;
}

int count_nonpositive(const Eigen::VectorXd& v) {
    return static_cast<int>((v.array() <= 0.0).count());
}

}  // namespace

EquilibriumReport analyze_equilibrium(const MassTriple& masses, const Vec4& q, double mu1, double mu2) {
    EquilibriumReport rep;
    rep.masses = masses;
    rep.q = q;
    rep.mu1 = mu1;
    rep.mu2 = mu2;
    const EffectivePotential ep = effective_potential(masses, q, mu1, mu2);
    const KeffCorrection kc = keff_correction(masses, q, mu1, mu2);
    rep.hessian.topLeftCorner<4, 4>() = ep.hessian;
    rep.hessian.bottomRightCorner<4, 4>() = kc.momentum_hessian;
    const Eigen::VectorXd eq = symmetric_eigenvalues(ep.hessian);
    const Eigen::VectorXd ep_ = symmetric_eigenvalues(kc.momentum_hessian);
    rep.eigenvalues << eq, ep_;
    rep.negative_q = count_nonpositive(eq);
    rep.negative_p = count_nonpositive(ep_);
    rep.keff_coefficient = kc.coefficient;
    rep.energy = ep.value;
    rep.gradient_residual = gradient_residual(masses, q, mu1, mu2);
    fill_common(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Isosceles family, m2 = m3 = 1, m1 = n, q = (rho, 0, 0, 1)

namespace {

void check_isosceles_args(double n, double t) {
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("isosceles family needs n > 0");
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("isosceles family needs t in (0, 1)");
}

struct IsoGeometry {
    double n, q1, q4, nu1, nu2;
    double r3;  // (q1^2 + 4 q4^2)^{3/2}
    double r5;  // (q1^2 + 4 q4^2)^{5/2}
};

IsoGeometry iso_geometry(double n, double t) {
    IsoGeometry g;
    g.n = n;
    g.q1 = 4.0 * t / (1.0 - t * t);
    g.q4 = 1.0;
    g.nu1 = 0.5;
    g.nu2 = 2.0 * n / (2.0 + n);
    // sqrt(q1^2 + 4) = 2 (1 + t^2) / (1 - t^2) keeps everything rational in t.
    const double root = 2.0 * (1.0 + t * t) / (1.0 - t * t);
    g.r3 = root * root * root;
    g.r5 = g.r3 * root * root;
    return g;
}

}  // namespace

IsoscelesMomenta isosceles_momenta(double n, double t) {
    check_isosceles_args(n, t);
    const IsoGeometry g = iso_geometry(n, t);
    IsoscelesMomenta out;
    out.mu2_sq = g.nu1 * g.q1 * g.q1 * g.q1 * (1.0 / (g.q1 * g.q1) + 4.0 * n * g.q1 / g.r3);
    out.mu1_sq = g.nu2 * g.q4 * g.q4 * g.q4 * (16.0 * n * g.q4 / g.r3);
    if (!(out.mu1_sq > 0.0) || !(out.mu2_sq > 0.0)) {
        throw NoRealMomenta("isosceles conditions give non-positive mu^2");
    }
    return out;
}

std::array<double, 2> isosceles_condition_residual(double n, double t, double mu1, double mu2) {
    check_isosceles_args(n, t);
    const IsoGeometry g = iso_geometry(n, t);
    const double q1 = g.q1, q4 = g.q4;
    const double a1 = 1.0 / (q1 * q1), a2 = 4.0 * n * q1 / g.r3, a3 = mu2 * mu2 / (g.nu1 * q1 * q1 * q1);
    const double b1 = 16.0 * n * q4 / g.r3, b2 = mu1 * mu1 / (g.nu2 * q4 * q4 * q4);
    return {std::abs(a1 + a2 - a3) / (std::abs(a1) + std::abs(a2) + std::abs(a3)),
            std::abs(b1 - b2) / (std::abs(b1) + std::abs(b2))};
}

IsoscelesBlocks isosceles_hessian_blocks(double n, double t) {
    const IsoscelesMomenta mom = isosceles_momenta(n, t);
    const IsoGeometry g = iso_geometry(n, t);
    const double q1 = g.q1, q4 = g.q4, nu1 = g.nu1, nu2 = g.nu2, r5 = g.r5;
    const double mu1sq = mom.mu1_sq, mu2sq = mom.mu2_sq;
    const double q1sq = q1 * q1, q4sq = q4 * q4;

    IsoscelesBlocks b;
    const double c23 =
        mu1sq / (nu2 * q1 * q4sq * q4) + mu2sq / (nu1 * q1sq * q1 * q4) - 48.0 * n * q1 * q4 / r5;
    b.q23 << mu2sq / (nu2 * q1sq * q4sq) + 1.0 / (q1sq * q1) + 4.0 * n * (q1sq - 8.0 * q4sq) / r5, c23,
        c23, mu1sq / (nu1 * q1sq * q4sq) - 32.0 * n * (q1sq - 2.0 * q4sq) / r5;

    const double c14 = -48.0 * n * q1 * q4 / r5;
    b.q14 << 3.0 * mu2sq / (nu1 * q1sq * q1sq) - 2.0 / (q1sq * q1) - 8.0 * n * (q1sq - 2.0 * q4sq) / r5, c14, c14,
        3.0 * mu1sq / (nu2 * q4sq * q4sq) + 16.0 * n * (q1sq - 8.0 * q4sq) / r5;

    if (degenerate_momenta(std::sqrt(mu1sq), std::sqrt(mu2sq))) {
        throw DegenerateMomenta("isosceles momentum block is singular at mu1 == mu2");
    }
    const double pre = 1.0 / (mu1sq - mu2sq);
    const double p23 = mu1sq * q1 / (nu2 * q4) - mu2sq * q4 / (nu1 * q1);
    b.p23 << mu1sq * (1.0 / nu1 - q1sq / (nu2 * q4sq)), p23, p23, mu2sq * (q4sq / (nu1 * q1sq) - 1.0 / nu2);
    b.p23 *= pre;
    b.p1 = 1.0 / nu1;
    b.p4 = 1.0 / nu2;
    return b;
}

EquilibriumReport isosceles_equilibrium(double n, double t) {
    const IsoscelesMomenta mom = isosceles_momenta(n, t);
    const IsoscelesBlocks blocks = isosceles_hessian_blocks(n, t);

    EquilibriumReport rep;
    rep.masses = MassTriple(n, 1.0, 1.0);
    rep.q = Vec4(4.0 * t / (1.0 - t * t), 0.0, 0.0, 1.0);
    rep.mu1 = std::sqrt(mom.mu1_sq);
    rep.mu2 = std::sqrt(mom.mu2_sq);

    Mat8& H = rep.hessian;
    H(0, 0) = blocks.q14(0, 0);
    H(0, 3) = H(3, 0) = blocks.q14(0, 1);
    H(3, 3) = blocks.q14(1, 1);
    H(1, 1) = blocks.q23(0, 0);
    H(1, 2) = H(2, 1) = blocks.q23(0, 1);
    H(2, 2) = blocks.q23(1, 1);
    H(4, 4) = blocks.p1;
    H(5, 5) = blocks.p23(0, 0);
    H(5, 6) = H(6, 5) = blocks.p23(0, 1);
    H(6, 6) = blocks.p23(1, 1);
    H(7, 7) = blocks.p4;

    const Eigen::VectorXd eq = symmetric_eigenvalues(H.topLeftCorner<4, 4>());
    const Eigen::VectorXd ep = symmetric_eigenvalues(H.bottomRightCorner<4, 4>());
    rep.eigenvalues << eq, ep;
    rep.negative_q = count_nonpositive(eq);
    rep.negative_p = count_nonpositive(ep);

    const EffectivePotential eff = effective_potential(rep.masses, rep.q, rep.mu1, rep.mu2);
    rep.energy = eff.value;
    rep.keff_coefficient = eff.split.keff_coefficient;
    rep.gradient_residual = gradient_residual(rep.masses, rep.q, rep.mu1, rep.mu2);
    fill_common(rep);
    return rep;
}

StabilityPolynomials stability_polynomials(double n, double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2;
    const double s = t2 + 1.0;
    const double s2 = s * s, s3 = s2 * s, s5 = s3 * s2;
    StabilityPolynomials out;
    out.p1 = 32.0 * t3 * (3.0 * n * (t4 - 6.0 * t2 + 1.0) + 2.0 * (t4 - 10.0 * t2 + 1.0)) - s5;
    out.p2 = 2.0 * n * n * (t4 - 6.0 * t2 + 1.0) * s2 - n * t * (64.0 * t3 + s3) - 2.0 * t * s3;
    return out;
}

RegionInfo region_classification(double n, double t, double boundary_tolerance) {
    check_isosceles_args(n, t);
    const StabilityPolynomials p = stability_polynomials(n, t);
    const double side = t - equilateral_t;
    RegionInfo r;
    if (std::abs(p.p1) < boundary_tolerance || std::abs(p.p2) < boundary_tolerance ||
        std::abs(side) < boundary_tolerance) {
        r.id = 0;
        r.label = "boundary";
        r.boundary = true;
        return r;
    }
    // sign(P2) = sign(mu1^2 - mu2^2); the (q2,q3) block is definite iff P1 and
    // P2 have opposite signs, the (p2,p3) block iff (t_eq - t) and P2 agree.
    r.negative_q23 = p.p1 * p.p2 < 0.0 ? 0 : 1;
    r.negative_q14 = 0;
    r.negative_p23 = -side * p.p2 > 0.0 ? 0 : 1;

    const bool p1pos = p.p1 > 0.0, p2pos = p.p2 > 0.0, above = side > 0.0;
    struct Pattern {
        bool p1pos, p2pos, above;
        int id;
        const char* label;
    };
    static const Pattern patterns[] = {
        {false, true, false, 1, "R1:minimum"},
        {true, true, false, 2, "R2:q23-saddle"},
        {false, false, false, 3, "R3:q23-p23-saddle"},
        {true, true, true, 4, "R4:q23-p23-saddle"},
        {false, false, true, 5, "R5:q23-saddle"},
        {true, false, true, 6, "R6:minimum-mu1<mu2"},
    };
    r.id = -1;
    r.label = "unclassified";
    for (const Pattern& pat : patterns) {
        if (pat.p1pos == p1pos && pat.p2pos == p2pos && pat.above == above) {
            r.id = pat.id;
            r.label = pat.label;
        }
    }
    r.minimum = r.negative_q23 + r.negative_q14 + r.negative_p23 == 0;
    return r;
}

// ---------------------------------------------------------------------------
// General masses

double solvability_residual(const MassTriple& masses, const Vec4& q) {
    return q(0) * q(1) * masses.nu1() + q(2) * q(3) * masses.nu2();
}

Vec4 simplified_equilibrium_residual(const MassTriple& masses, const Vec4& q, double mu1, double mu2) {
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    const double A = 0.5 * (q(0) * q(3) - q(1) * q(2));
    const double I1 = nu2 * q(3) * q(3) + nu1 * q(1) * q(1);
    const double I2 = nu1 * q(0) * q(0) + nu2 * q(2) * q(2);
    const double den = 8.0 * A * A * A * nu1 * nu2;
    const PotentialJet jet = newtonian_potential(
        masses, {q(0) * q(0) + q(1) * q(1), q(2) * q(2) + q(3) * q(3), q(0) * q(2) + q(1) * q(3)});
    const double V1 = jet.grad(0), V2 = jet.grad(1), V3 = jet.grad(2);
    const double a = mu2 * mu2, b = mu1 * mu1;
    return {I1 * a * q(3) / den - (2.0 * q(0) * V1 + q(2) * V3), -I2 * b * q(2) / den - (2.0 * q(1) * V1 + q(3) * V3),
            -I1 * a * q(1) / den - (2.0 * q(2) * V2 + q(0) * V3), I2 * b * q(0) / den - (2.0 * q(3) * V2 + q(1) * V3)};
}

GeneralSeriesParams GeneralSeriesParams::from_u(const MassTriple& masses, double u) {
    const double m1 = masses.m1(), m2 = masses.m2(), m3 = masses.m3();
    GeneralSeriesParams out;
    out.kappa = masses.total() / (m1 * m1 * (m2 + m3) * (m2 + m3));
    out.u = u;
    out.mu_ratio = u * m2 * m3 * std::sqrt(out.kappa / (m2 + m3));
    return out;
}

GeneralSeriesParams GeneralSeriesParams::from_mu_ratio(const MassTriple& masses, double mu_ratio) {
    GeneralSeriesParams out = from_u(masses, 1.0);
    out.u = mu_ratio / out.mu_ratio;
    out.mu_ratio = mu_ratio;
    return out;
}

std::array<double, 2> general_momenta(const MassTriple& masses, double u) {
    const GeneralSeriesParams p = GeneralSeriesParams::from_u(masses, u);
    const double mu1 = 1.0 / std::sqrt(p.kappa);
    return {mu1, p.mu_ratio * mu1};
}

Vec4 general_series_equilibrium(const MassTriple& masses, double u) {
    const double m1 = masses.m1(), m2 = masses.m2(), m3 = masses.m3(), M = masses.total();
    const double s = m2 + m3, s2 = s * s;
    const double u2 = u * u, u4 = u2 * u2, u8 = u4 * u4;
    const double u10 = u8 * u2, u12 = u8 * u4;
    Vec4 q;
    q(0) = u2 - m1 / s * u8;
    q(1) = 3.0 * u10 * m1 * (m2 - m3) / (2.0 * s2) * (1.0 - u4 * (5.0 * m2 * m2 + 24.0 * m2 * m3 + 5.0 * m3 * m3) / (4.0 * s2));
    q(2) = -3.0 * u12 * M * m2 * m3 * (m2 - m3) / (2.0 * s2 * s2) *
           (1.0 - 5.0 * u4 * (m2 * m2 + 6.0 * m2 * m3 + m3 * m3) / (4.0 * s2));
    q(3) = 1.0 + 3.0 * u4 * m2 * m3 / (2.0 * s2);
    return q;
}

EquilibriumReport newton_equilibrium(const MassTriple& masses, double mu1, double mu2, const Vec4& seed,
                                     const NewtonOptions& options) {
    if (!(mu1 > 0.0) || !(mu2 >= 0.0)) throw std::invalid_argument("Newton solve needs mu1 > 0, mu2 >= 0");
    if (degenerate_momenta(mu1, mu2)) throw DegenerateMomenta("Newton solve needs mu1 != mu2");

    // Work in units where kappa mu1^2 = 1: q = scale Q, mu = sqrt(scale) mu'.
    const double kappa = GeneralSeriesParams::from_u(masses, 1.0).kappa;
    const double scale = kappa * mu1 * mu1;
    const double root = std::sqrt(scale);
    const double n1 = mu1 / root, n2 = mu2 / root;

    Vec4 Q = seed / scale;
    int it = 0;
    double resid = gradient_residual(masses, Q, n1, n2);
    // Keep going past the tolerance until the residual stops decreasing.
    for (; it < options.max_iterations && resid >= 1e-3 * options.tolerance; ++it) {
        const EffectivePotential ep = effective_potential(masses, Q, n1, n2);
        Vec4 d = ep.hessian.diagonal().cwiseAbs().cwiseSqrt();
        for (int i = 0; i < 4; ++i) d(i) = d(i) > 0.0 ? 1.0 / d(i) : 1.0;
        const Mat4 scaled = d.asDiagonal() * ep.hessian * d.asDiagonal();
        const Eigen::FullPivLU<Mat4> lu(scaled);
        if (lu.rank() < 4) throw DegenerateHessian("singular Hessian of V_eff in Newton iteration");
        const Vec4 step = d.asDiagonal() * lu.solve(-(d.asDiagonal() * ep.gradient));

        const double area_sign = Q(0) * Q(3) - Q(1) * Q(2);
        double alpha = 1.0;
        bool moved = false;
        for (int k = 0; k < 40; ++k, alpha *= 0.5) {
            const Vec4 trial = Q + alpha * step;
            const double w = trial(0) * trial(3) - trial(1) * trial(2);
            if (w * area_sign <= 0.0) continue;
            double r;
            try {
                r = gradient_residual(masses, trial, n1, n2);
            } catch (const DomainError&) {
                continue;
            }
            if (r < resid) {
                Q = trial;
                resid = r;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    if (!(resid < options.tolerance)) {
        std::ostringstream msg;
        msg << "Newton iteration stalled at scaled gradient residual " << std::setprecision(3) << resid;
        throw NoConvergence(msg.str());
    }

    EquilibriumReport rep = analyze_equilibrium(masses, scale * Q, mu1, mu2);
    rep.iterations = it;
    return rep;
}

std::array<double, 4> general_hessian_eigen_asymptotics(const MassTriple& masses, double u) {
    const double m1 = masses.m1(), m2 = masses.m2(), m3 = masses.m3(), M = masses.total();
    const double s = m2 + m3, s2 = s * s, p = m2 * m3;
    const double u2 = u * u, u4 = u2 * u2, u6 = u4 * u2;
    return {m1 * s / p, m1 * m1 * s * s2 / (p * p * M * u4) - 1.0 / u2,
            1.0 / u6 + (1.0 + 11.0 * p / (2.0 * s2) + p / (m1 * s)) / u2,
            1.0 / u6 + 9.0 * p / (2.0 * s2 * u2) + 7.0 * m1 / s};
}

Frequencies frequencies(const MassTriple& masses, const EquilibriumReport& report) {
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    const Vec4& q = report.q;
    Frequencies f;
    f.omega1 = report.mu1 / (nu2 * q(3) * q(3) + nu1 * q(1) * q(1));
    f.omega2 = report.mu2 / (nu1 * q(0) * q(0) + nu2 * q(2) * q(2));
    f.kepler1 = f.omega1 * f.omega1 * q(3) * q(3) * q(3) / masses.total();
    f.kepler2 = f.omega2 * f.omega2 * q(0) * q(0) * q(0) / (masses.m2() + masses.m3());
    return f;
}

MassTriple binary_pair_masses(const std::array<double, 3>& m, int i, int j) {
    if (i < 1 || i > 3 || j < 1 || j > 3 || i == j) throw std::invalid_argument("pair must name two distinct bodies 1..3");
    const int k = 6 - i - j;
    return MassTriple(m[k - 1], m[i - 1], m[j - 1]);
}

// ---------------------------------------------------------------------------
// Scans

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    unsigned n = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("grid must have at least one point");
    if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("log grid needs positive end points");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

namespace {

ScanRow row_from_report(double param, const EquilibriumReport& rep) {
    ScanRow row;
    row.param = param;
    row.mu1 = rep.mu1;
    row.mu2 = rep.mu2;
    row.h = rep.h;
    row.b = rep.b;
    row.neg_inv_h = -1.0 / rep.h;
    row.cls = to_string(rep.classification);
    for (int i = 0; i < 8; ++i) row.eig[static_cast<std::size_t>(i)] = rep.eigenvalues(i);
    return row;
}

ScanRow error_row(double param, const std::string& what) {
    ScanRow row;
    row.param = param;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.mu1 = row.mu2 = row.h = row.b = row.neg_inv_h = nan;
    row.eig.fill(nan);
    row.cls = "error:" + what;
    row.ok = false;
    return row;
}

template <class Solve>
std::vector<ScanRow> run_scan(const std::vector<double>& grid, int workers, Solve solve) {
    if (grid.empty()) throw std::invalid_argument("scan grid is empty");
    std::vector<ScanRow> rows(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        try {
            rows[i] = row_from_report(grid[i], solve(grid[i]));
        } catch (const NoRealMomenta&) {
            rows[i] = error_row(grid[i], "NoRealMomenta");
        } catch (const NoConvergence&) {
            rows[i] = error_row(grid[i], "NoConvergence");
        } catch (const DegenerateHessian&) {
            rows[i] = error_row(grid[i], "DegenerateHessian");
        } catch (const DegenerateMomenta&) {
            rows[i] = error_row(grid[i], "DegenerateMomenta");
        } catch (const DomainError&) {
            rows[i] = error_row(grid[i], "DomainError");
        }
    });
    return rows;
}

}  // namespace

std::vector<ScanRow> energy_momentum_scan_isosceles(double n, const std::vector<double>& t_grid, int workers) {
    return run_scan(t_grid, workers, [n](double t) { return isosceles_equilibrium(n, t); });
}

std::vector<ScanRow> energy_momentum_scan_general(const MassTriple& masses, const std::vector<double>& u_grid,
                                                  int workers) {
    return run_scan(u_grid, workers, [&masses](double u) {
        const auto mu = general_momenta(masses, u);
        return newton_equilibrium(masses, mu[0], mu[1], general_series_equilibrium(masses, u));
    });
}

std::vector<RegionRow> region_map(double n_max, int grid) {
    if (grid < 1) throw std::invalid_argument("region map grid must be positive");
    if (!(n_max > 0.0)) throw std::invalid_argument("region map needs n_max > 0");
    std::vector<RegionRow> rows;
    rows.reserve(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid));
    for (int i = 1; i <= grid; ++i) {
        for (int j = 1; j <= grid; ++j) {
            RegionRow r;
            r.n = n_max * i / grid;
            r.t = (j - 0.5) / grid;
            r.poly = stability_polynomials(r.n, r.t);
            r.region = region_classification(r.n, r.t);
            rows.push_back(r);
        }
    }
    return rows;
}

}  // namespace tb4
