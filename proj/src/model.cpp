#include "tb4/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tb4/errors.hpp"

namespace tb4 {

MassTriple::MassTriple(double m1, double m2, double m3) : m1_(m1), m2_(m2), m3_(m3) {
    for (double m : {m1, m2, m3}) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw std::invalid_argument("masses must be positive and finite, got " + std::to_string(m));
        }
    }
}

Eigen::Matrix<double, 16, 1> FullState::to_vector() const {
    Eigen::Matrix<double, 16, 1> v;
    v << x1, x2, y1, y2;
    return v;
}

FullState FullState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != 16) throw std::invalid_argument("FullState needs 16 components");
    FullState s;
    s.x1 = v.segment<4>(0);
    s.x2 = v.segment<4>(4);
    s.y1 = v.segment<4>(8);
    s.y2 = v.segment<4>(12);
    return s;
}

FullState FullState::rotated(const Mat4& g) const {
    return {g * x1, g * x2, g * y1, g * y2};
}

JacobiResult jacobi_from_positions(const MassTriple& masses, const std::array<Vec4, 3>& r,
                                   const std::array<Vec4, 3>& v) {
    const double m1 = masses.m1(), m2 = masses.m2(), m3 = masses.m3();
    const double m23 = m2 + m3;
    const double M = masses.total();

    JacobiResult out;
    out.state.x1 = r[1] - r[2];
    out.state.x2 = r[0] - (m2 * r[1] + m3 * r[2]) / m23;
    out.state.y1 = masses.nu1() * (v[1] - v[2]);
    out.state.y2 = masses.nu2() * (v[0] - (m2 * v[1] + m3 * v[2]) / m23);
    out.center_of_mass = (m1 * r[0] + m2 * r[1] + m3 * r[2]) / M;
    out.total_momentum = m1 * v[0] + m2 * v[1] + m3 * v[2];
    return out;
}

ScalarProducts scalar_products(const Vec4& x1, const Vec4& x2) {
    return {x1.squaredNorm(), x2.squaredNorm(), x1.dot(x2)};
}

std::array<double, 3> squared_distances(const MassTriple& masses, const ScalarProducts& s) {
    const double a2 = masses.a2(), a3 = masses.a3();
    return {s.s11, a2 * a2 * s.s11 + 2.0 * a2 * s.s12 + s.s22, a3 * a3 * s.s11 - 2.0 * a3 * s.s12 + s.s22};
}

PotentialJet newtonian_potential(const MassTriple& masses, const ScalarProducts& s) {
    const double m1 = masses.m1(), m2 = masses.m2(), m3 = masses.m3();
    const double a2 = masses.a2(), a3 = masses.a3();
    const auto d2 = squared_distances(masses, s);
    for (int k = 0; k < 3; ++k) {
        if (!(d2[k] > collision_tolerance)) {
            std::ostringstream msg;
            msg << "collision: squared distance " << k + 1 << " is " << std::setprecision(3) << d2[k];
            throw CollisionError(msg.str());
        }
    }

    // Each pair term is g_k(D) = -k / sqrt(D) with D a linear form in (s11, s22, s12).
    const std::array<double, 3> coupling = {m2 * m3, m3 * m1, m1 * m2};
    const std::array<Eigen::Vector3d, 3> dir = {Eigen::Vector3d(1.0, 0.0, 0.0),
                                                Eigen::Vector3d(a2 * a2, 1.0, 2.0 * a2),
                                                Eigen::Vector3d(a3 * a3, 1.0, -2.0 * a3)};
    PotentialJet jet;
    for (int k = 0; k < 3; ++k) {
        const double d = std::sqrt(d2[k]);
        const double g = -coupling[k] / d;
        const double g1 = coupling[k] / (2.0 * d2[k] * d);
        const double g2 = -0.75 * coupling[k] / (d2[k] * d2[k] * d);
        jet.value += g;
        jet.grad += g1 * dir[k];
        jet.hess += g2 * dir[k] * dir[k].transpose();
    }

    // dV/ds12 is a difference of two nearly equal terms when d2 ~ d3; rewrite it
    // as m1 m2 m3/(m2+m3) (1/d2^3 - 1/d3^3) with the difference taken exactly.
    const double r2 = std::sqrt(d2[1]), r3 = std::sqrt(d2[2]);
    const double diff_sq = (a3 - a2) * s.s11 - 2.0 * s.s12;  // d3^2 - d2^2
    const double diff_cube = diff_sq * (d2[2] + r2 * r3 + d2[1]) / (r2 + r3);
    jet.grad(2) = m1 * m2 * m3 / (m2 + m3) * diff_cube / (d2[1] * r2 * d2[2] * r3);
    return jet;
}

Potential newtonian(const MassTriple& masses) {
    return [masses](const ScalarProducts& s) { return newtonian_potential(masses, s); };
}

ShapeJet shape_potential(const Potential& potential, const Vec4& q) {
    const PotentialJet jet =
        potential({q(0) * q(0) + q(1) * q(1), q(2) * q(2) + q(3) * q(3), q(0) * q(2) + q(1) * q(3)});
    Eigen::Matrix<double, 3, 4> J;
    J << 2.0 * q(0), 2.0 * q(1), 0.0, 0.0,
         0.0, 0.0, 2.0 * q(2), 2.0 * q(3),
         q(2), q(3), q(0), q(1);
    ShapeJet out;
    out.value = jet.value;
    out.grad = J.transpose() * jet.grad;
    out.hess = J.transpose() * jet.hess * J;
    out.hess(0, 0) += 2.0 * jet.grad(0);
    out.hess(1, 1) += 2.0 * jet.grad(0);
    out.hess(2, 2) += 2.0 * jet.grad(1);
    out.hess(3, 3) += 2.0 * jet.grad(1);
    out.hess(0, 2) += jet.grad(2);
    out.hess(2, 0) += jet.grad(2);
    out.hess(1, 3) += jet.grad(2);
    out.hess(3, 1) += jet.grad(2);
    return out;
}

double hamiltonian_full(const MassTriple& masses, const FullState& state, const Potential& potential) {
    const double kinetic =
        state.y1.squaredNorm() / (2.0 * masses.nu1()) + state.y2.squaredNorm() / (2.0 * masses.nu2());
    return kinetic + potential(scalar_products(state.x1, state.x2)).value;
}

double hamiltonian_full(const MassTriple& masses, const FullState& state) {
    return hamiltonian_full(masses, state, newtonian(masses));
}

double pfaffian(const Mat4& L) {
    return L(0, 1) * L(2, 3) - L(0, 2) * L(1, 3) + L(0, 3) * L(1, 2);
}

AngularMomentum spectral_pair(const Mat4& L) {
    AngularMomentum out;
    out.L = L;
    out.pfaffian = pfaffian(L);
    out.trace_sq = (L * L).trace();
    // mu1^2 + mu2^2 = S and mu1 mu2 = Pf, so (mu1 +- mu2)^2 = S +- 2 Pf.
    const double S = -0.5 * out.trace_sq;
    const double plus = std::sqrt(std::max(0.0, S + 2.0 * out.pfaffian));
    const double minus = std::sqrt(std::max(0.0, S - 2.0 * out.pfaffian));
    out.mu1 = 0.5 * (plus + minus);
    out.mu2 = 0.5 * (plus - minus);
    return out;
}

AngularMomentum angular_momentum(const FullState& state) {
    const Mat4 L = state.x1 * state.y1.transpose() - state.y1 * state.x1.transpose() +
                   state.x2 * state.y2.transpose() - state.y2 * state.x2.transpose();
    return spectral_pair(L);
}

Mat4 plane_generator(int i, int j) {
    if (i < 1 || j > 4 || i >= j) throw std::invalid_argument("plane_generator needs 1 <= i < j <= 4");
    Mat4 B = Mat4::Zero();
    B(i - 1, j - 1) = 1.0;
    B(j - 1, i - 1) = -1.0;
    return B;
}

Mat4 plane_rotation(int i, int j, double angle) {
    if (i < 1 || j > 4 || i >= j) throw std::invalid_argument("plane_rotation needs 1 <= i < j <= 4");
    Mat4 R = Mat4::Identity();
    const double c = std::cos(angle), s = std::sin(angle);
    R(i - 1, i - 1) = c;
    R(j - 1, j - 1) = c;
    R(i - 1, j - 1) = s;
    R(j - 1, i - 1) = -s;
    return R;
}

}  // namespace tb4
