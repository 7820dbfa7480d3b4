#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

namespace tb4 {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Squared distances below this value are treated as a collision.
inline constexpr double collision_tolerance = 1e-24;

class MassTriple {
public:
    /// Throws std::invalid_argument unless all masses are positive and finite.
    MassTriple(double m1, double m2, double m3);

    double m1() const { return m1_; }
    double m2() const { return m2_; }
    double m3() const { return m3_; }
    double total() const { return m1_ + m2_ + m3_; }
    /// Reduced mass of the pair (2, 3).
    double nu1() const { return m2_ * m3_ / (m2_ + m3_); }
    /// Reduced mass of body 1 against the pair (2, 3).
    double nu2() const { return m1_ * (m2_ + m3_) / total(); }
    double a2() const { return m2_ / (m2_ + m3_); }
    double a3() const { return m3_ / (m2_ + m3_); }
    /// m1 / m2; the isosceles mass ratio when m2 == m3.
    double n() const { return m1_ / m2_; }

private:
    double m1_, m2_, m3_;
};

/// Translation-reduced phase point. x1 joins bodies 3 -> 2, x2 joins the
/// centre of mass of (2, 3) to body 1; y1, y2 are the conjugate momenta.
struct FullState {
    Vec4 x1 = Vec4::Zero();
    Vec4 x2 = Vec4::Zero();
    Vec4 y1 = Vec4::Zero();
    Vec4 y2 = Vec4::Zero();

    Eigen::Matrix<double, 16, 1> to_vector() const;
    static FullState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
    /// Applies g to every vector; g is expected to be in SO(4).
    FullState rotated(const Mat4& g) const;
};

struct JacobiResult {
    FullState state;
    Vec4 center_of_mass;
    Vec4 total_momentum;
};

JacobiResult jacobi_from_positions(const MassTriple& masses, const std::array<Vec4, 3>& r,
                                   const std::array<Vec4, 3>& v);

struct ScalarProducts {
    double s11 = 0.0;
    double s22 = 0.0;
    double s12 = 0.0;
};

ScalarProducts scalar_products(const Vec4& x1, const Vec4& x2);

/// Value, gradient and Hessian of a potential with respect to (s11, s22, s12).
struct PotentialJet {
    double value = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

/// Any potential that depends on the configuration only through the scalar
/// products. Implementations signal collisions by throwing CollisionError.
using Potential = std::function<PotentialJet(const ScalarProducts&)>;

PotentialJet newtonian_potential(const MassTriple& masses, const ScalarProducts& s);
Potential newtonian(const MassTriple& masses);

/// Squared mutual distances |r2-r3|^2, |r3-r1|^2, |r1-r2|^2.
std::array<double, 3> squared_distances(const MassTriple& masses, const ScalarProducts& s);

/// A potential pulled back to the planar shape coordinates q, where
/// s11 = q1^2 + q2^2, s22 = q3^2 + q4^2, s12 = q1 q3 + q2 q4.
struct ShapeJet {
    double value = 0.0;
    Vec4 grad = Vec4::Zero();
    Mat4 hess = Mat4::Zero();
};

ShapeJet shape_potential(const Potential& potential, const Vec4& q);

double hamiltonian_full(const MassTriple& masses, const FullState& state);
double hamiltonian_full(const MassTriple& masses, const FullState& state, const Potential& potential);

struct AngularMomentum {
    Mat4 L = Mat4::Zero();
    double mu1 = 0.0;
    double mu2 = 0.0;
    double pfaffian = 0.0;
    double trace_sq = 0.0;  // tr(L^2)
};

double pfaffian(const Mat4& L);

/// Spectral pair of an antisymmetric 4x4 matrix from tr(L^2) and Pf(L).
/// mu1 >= |mu2|; mu2 carries the sign of the Pfaffian so that mu1 mu2 = Pf.
AngularMomentum spectral_pair(const Mat4& L);

AngularMomentum angular_momentum(const FullState& state);

/// Generator of rotations in the (i, j) coordinate plane, 1-based, i < j:
/// B(i,j) = e_i e_j^T - e_j e_i^T.
Mat4 plane_generator(int i, int j);

/// exp(angle * B(i,j)).
Mat4 plane_rotation(int i, int j, double angle);

}  // namespace tb4
