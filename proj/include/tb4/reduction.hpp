#pragma once

#include <optional>

#include "tb4/model.hpp"

namespace tb4 {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec16 = Eigen::Matrix<double, 16, 1>;

struct RotationAngles {
    double psi1 = 0.0;
    double psi2 = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;

    double sigma() const { return psi1 + psi2; }
    double delta() const { return psi1 - psi2; }
};

/// Point of the rotation chart: shape coordinates (q, p) plus the four
/// rotation angles and their conjugate momenta.
struct PartialState {
    Vec4 q = Vec4::Zero();
    Vec4 p = Vec4::Zero();
    RotationAngles angles;
    double p_psi1 = 0.0;
    double p_psi2 = 0.0;
    double p_theta1 = 0.0;
    double p_theta2 = 0.0;

    /// Oriented area (q1 q4 - q2 q3) / 2.
    double area() const { return 0.5 * (q(0) * q(3) - q(1) * q(2)); }
    double l3() const { return q(0) * p(1) - q(1) * p(0) + q(2) * p(3) - q(3) * p(2); }
    double big_sigma() const { return p_theta1 + p_theta2; }
    double big_delta() const { return p_theta1 - p_theta2; }

    /// Canonical ordering (q1..q4, psi1, psi2, theta1, theta2, p1..p4, p_psi1, p_psi2, p_theta1, p_theta2).
    Vec16 to_vector() const;
    static PartialState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
};

/// Fully reduced phase point; mu1, mu2 are the fixed angular-momentum values.
struct ReducedState {
    Vec4 q = Vec4::Zero();
    Vec4 p = Vec4::Zero();
    double mu1 = 0.0;
    double mu2 = 0.0;

    double area() const { return 0.5 * (q(0) * q(3) - q(1) * q(2)); }
    double l3() const { return q(0) * p(1) - q(1) * p(0) + q(2) * p(3) - q(3) * p(2); }
    Vec8 to_vector() const;
    static ReducedState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v, double mu1, double mu2);
};

Mat4 theta_rotation(double theta1, double theta2);
Mat4 psi_rotation(double psi1, double psi2);
/// M = exp(B12 theta1) exp(B34 theta2) exp(B13 psi1) exp(B24 psi2).
Mat4 rotation_matrix(const RotationAngles& angles);

/// True when the chart is usable at this point: A != 0 and cos 2psi1 != cos 2psi2.
bool chart_valid(const Vec4& q, const RotationAngles& angles);

/// Jacobian of the configuration map (q, psi, theta) -> (x1, x2) expressed in
/// the body frame, i.e. blockdiag(M^T, M^T) times the lab-frame Jacobian.
/// Columns are ordered q1..q4, psi1, psi2, theta1, theta2.
Mat8 body_jacobian(const Vec4& q, const RotationAngles& angles);

/// Lab-frame Jacobian of (q, psi, theta) -> (x1, x2).
Mat8 configuration_jacobian(const Vec4& q, const RotationAngles& angles);

/// Closed form of det body_jacobian: 2 A^2 (cos 2psi1 - cos 2psi2).
double configuration_jacobian_det(const Vec4& q, const RotationAngles& angles);

/// Cotangent lift of the configuration map.
FullState lift_to_full(const PartialState& partial);

/// Inverse chart. When `hint` is given, the chart branch closest to it in q
/// and the psi angles is returned; otherwise the branch with the smallest angles.
PartialState project_to_partial(const FullState& state, const std::optional<PartialState>& hint = std::nullopt);

double hamiltonian_partial(const MassTriple& masses, const PartialState& partial);
double hamiltonian_partial(const MassTriple& masses, const PartialState& partial, const Potential& potential);

/// Angular momentum seen from the theta frame, M_theta^T L M_theta.
AngularMomentum angular_momentum_partial(const PartialState& partial);

/// (c1, c2, c3, c4) = (p_psi1, p_psi2, Sigma cos(delta) + L3, Delta cos(sigma) + L3)
/// with the theta momenta replaced by (mu1, mu2).
Vec4 invariant_set_residual(const PartialState& partial, double mu1, double mu2);

struct BracketMatrix {
    Mat4 matrix = Mat4::Zero();
    double determinant = 0.0;
};

/// Poisson brackets {c_i, c_j} of the off-normal-form angular-momentum
/// components (K13, K24, K23, K14) in the theta frame. These vanish exactly on
/// the invariant set, where the matrix only has +-p_theta entries.
BracketMatrix restriction_matrix_A(const PartialState& partial);

/// Poisson brackets of the four functions returned by invariant_set_residual.
BracketMatrix invariant_constraint_brackets(const PartialState& partial);

/// Kinetic function of the reduced Hamiltonian. `area` is the oriented area A
/// of the configuration that supplies qi, qj.
double kinetic_f(double qi, double qj, double l3, double area, double mu1, double mu2);

double hamiltonian_reduced(const MassTriple& masses, const ReducedState& state);
double hamiltonian_reduced(const MassTriple& masses, const ReducedState& state, const Potential& potential);

/// Section of the invariant set over the reduced state; theta angles are free.
PartialState embed_reduced(const ReducedState& state, double theta1 = 0.0, double theta2 = 0.0);

}  // namespace tb4
