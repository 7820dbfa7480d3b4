#include "tb4/reduction.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "tb4/errors.hpp"

namespace tb4 {

namespace {

constexpr double area_tolerance = 1e-13;
constexpr double angle_tolerance = 1e-12;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

bool area_valid(const Vec4& q) {
    const double w = q(0) * q(3) - q(1) * q(2);
    return std::abs(w) > area_tolerance * q.squaredNorm() && q.squaredNorm() > 0.0;
}

struct LiftCoefficients {
    double b = 0.0;
    double c = 0.0;
    Vec4 alpha = Vec4::Zero();
};

LiftCoefficients lift_coefficients(const PartialState& z) {
    LiftCoefficients out;
    const double A = z.area();
    const double s1 = std::sin(z.angles.psi1), c1 = std::cos(z.angles.psi1);
    const double s2 = std::sin(z.angles.psi2), c2 = std::cos(z.angles.psi2);
    const double den = 2.0 * A * (std::cos(2.0 * z.angles.psi1) - std::cos(2.0 * z.angles.psi2));
    const double l3 = z.l3();
    out.b = (l3 * std::sin(2.0 * z.angles.psi1) + 2.0 * (z.p_theta1 * s1 * c2 + z.p_theta2 * c1 * s2)) / den;
    out.c = (l3 * std::sin(2.0 * z.angles.psi2) + 2.0 * (z.p_theta1 * c1 * s2 + z.p_theta2 * s1 * c2)) / den;
    const double r1 = z.p_psi1 / (2.0 * A), r2 = z.p_psi2 / (2.0 * A);
    const Vec4& q = z.q;
    out.alpha << q(2) * out.b - q(3) * r1, -q(3) * out.c + q(2) * r2, -q(0) * out.b + q(1) * r1,
        q(1) * out.c - q(0) * r2;
    return out;
}

bool momenta_vanish(const PartialState& z) {
    return z.p.isZero(0.0) && z.p_psi1 == 0.0 && z.p_psi2 == 0.0 && z.p_theta1 == 0.0 && z.p_theta2 == 0.0;
}

void require_chart(const Vec4& q, const RotationAngles& angles) {
    if (!area_valid(q)) throw ChartSingular("chart singular: oriented area A vanishes");
    if (!chart_valid(q, angles)) throw ChartSingular("chart singular: cos 2psi1 == cos 2psi2");
}

void require_sines(const RotationAngles& angles) {
    if (std::abs(std::sin(angles.sigma())) < angle_tolerance || std::abs(std::sin(angles.delta())) < angle_tolerance) {
        throw ChartSingular("chart singular: sin(sigma) or sin(delta) vanishes");
    }
}

double partial_kinetic_term(double qi, double qj, double b, double c, double r1, double r2) {
    const double u = qi * b - qj * r1;
    const double v = -qj * c + qi * r2;
    return u * u + v * v;
}

// Angles of one chart branch from an orthonormal frame F = [M e1, M e2].
RotationAngles angles_from_frame(const Eigen::Matrix<double, 4, 2>& F, bool flip1, bool flip2) {
    const double tiny = 1e-12;
    RotationAngles a;
    // Top block is R(-theta1) diag(cos psi1, cos psi2).
    if (F.block<2, 1>(0, 0).norm() > tiny) {
        a.theta1 = std::atan2(-F(1, 0), F(0, 0));
    } else if (F.block<2, 1>(0, 1).norm() > tiny) {
        a.theta1 = std::atan2(F(0, 1), F(1, 1));
    }
    // Bottom block is R(-theta2) diag(-sin psi1, -sin psi2).
    if (F.block<2, 1>(2, 0).norm() > tiny) {
        a.theta2 = std::atan2(-F(3, 0), F(2, 0));
    } else if (F.block<2, 1>(2, 1).norm() > tiny) {
        a.theta2 = std::atan2(F(2, 1), F(3, 1));
    }
    if (flip1) a.theta1 += std::numbers::pi;
    if (flip2) a.theta2 += std::numbers::pi;
    const double ct1 = std::cos(a.theta1), st1 = std::sin(a.theta1);
    const double ct2 = std::cos(a.theta2), st2 = std::sin(a.theta2);
    const double cp1 = F(0, 0) * ct1 - F(1, 0) * st1;
    const double cp2 = F(0, 1) * st1 + F(1, 1) * ct1;
    const double sp1 = -(F(2, 0) * ct2 - F(3, 0) * st2);
    const double sp2 = -(F(2, 1) * st2 + F(3, 1) * ct2);
    a.psi1 = std::atan2(sp1, cp1);
    a.psi2 = std::atan2(sp2, cp2);
    a.theta1 = wrap_angle(a.theta1);
    a.theta2 = wrap_angle(a.theta2);
    return a;
}

}  // namespace

Vec16 PartialState::to_vector() const {
    Vec16 v;
    v << q, angles.psi1, angles.psi2, angles.theta1, angles.theta2, p, p_psi1, p_psi2, p_theta1, p_theta2;
    return v;
}

PartialState PartialState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != 16) throw std::invalid_argument("PartialState needs 16 components");
    PartialState z;
    z.q = v.segment<4>(0);
    z.angles = {v(4), v(5), v(6), v(7)};
    z.p = v.segment<4>(8);
    z.p_psi1 = v(12);
    z.p_psi2 = v(13);
    z.p_theta1 = v(14);
    z.p_theta2 = v(15);
    return z;
}

Vec8 ReducedState::to_vector() const {
    Vec8 v;
    v << q, p;
    return v;
}

ReducedState ReducedState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v, double mu1, double mu2) {
    if (v.size() != 8) throw std::invalid_argument("ReducedState needs 8 components");
    return {v.segment<4>(0), v.segment<4>(4), mu1, mu2};
}

Mat4 theta_rotation(double theta1, double theta2) {
    return plane_rotation(1, 2, theta1) * plane_rotation(3, 4, theta2);
}

Mat4 psi_rotation(double psi1, double psi2) {
    return plane_rotation(1, 3, psi1) * plane_rotation(2, 4, psi2);
}

Mat4 rotation_matrix(const RotationAngles& angles) {
    return theta_rotation(angles.theta1, angles.theta2) * psi_rotation(angles.psi1, angles.psi2);
}

bool chart_valid(const Vec4& q, const RotationAngles& angles) {
    return area_valid(q) &&
           std::abs(std::cos(2.0 * angles.psi1) - std::cos(2.0 * angles.psi2)) > angle_tolerance;
}

Mat8 body_jacobian(const Vec4& q, const RotationAngles& angles) {
    const Mat4 mpsi = psi_rotation(angles.psi1, angles.psi2);
    const std::array<Mat4, 4> generators = {
        Mat4(mpsi.transpose() * plane_generator(1, 3) * mpsi),  // psi1
        plane_generator(2, 4),                                  // psi2
        Mat4(mpsi.transpose() * plane_generator(1, 2) * mpsi),  // theta1
        Mat4(mpsi.transpose() * plane_generator(3, 4) * mpsi),  // theta2
    };
    const Vec4 z1(q(0), q(1), 0.0, 0.0);
    const Vec4 z2(q(2), q(3), 0.0, 0.0);

    Mat8 U = Mat8::Zero();
    U(0, 0) = 1.0;
    U(1, 1) = 1.0;
    U(4, 2) = 1.0;
    U(5, 3) = 1.0;
    for (int k = 0; k < 4; ++k) {
        U.block<4, 1>(0, 4 + k) = generators[k] * z1;
        U.block<4, 1>(4, 4 + k) = generators[k] * z2;
    }
    return U;
}

Mat8 configuration_jacobian(const Vec4& q, const RotationAngles& angles) {
    const Mat4 M = rotation_matrix(angles);
    Mat8 R = Mat8::Zero();
    R.block<4, 4>(0, 0) = M;
    R.block<4, 4>(4, 4) = M;
    return R * body_jacobian(q, angles);
}

double configuration_jacobian_det(const Vec4& q, const RotationAngles& angles) {
    const double A = 0.5 * (q(0) * q(3) - q(1) * q(2));
    return 2.0 * A * A * (std::cos(2.0 * angles.psi1) - std::cos(2.0 * angles.psi2));
}

FullState lift_to_full(const PartialState& z) {
    const Mat4 M = rotation_matrix(z.angles);
    FullState out;
    out.x1 = M * Vec4(z.q(0), z.q(1), 0.0, 0.0);
    out.x2 = M * Vec4(z.q(2), z.q(3), 0.0, 0.0);
    if (momenta_vanish(z)) return out;

    require_chart(z.q, z.angles);
    const LiftCoefficients k = lift_coefficients(z);
    out.y1 = M * Vec4(z.p(0), z.p(1), k.alpha(0), k.alpha(1));
    out.y2 = M * Vec4(z.p(2), z.p(3), k.alpha(2), k.alpha(3));
    return out;
}

PartialState project_to_partial(const FullState& state, const std::optional<PartialState>& hint) {
    Eigen::Matrix<double, 4, 2> X;
    X << state.x1, state.x2;
    const ScalarProducts s = scalar_products(state.x1, state.x2);
    const double gram = s.s11 * s.s22 - s.s12 * s.s12;
    if (!(gram > 1e-26 * (s.s11 * s.s22)) || s.s11 == 0.0 || s.s22 == 0.0) {
        throw DegeneratePlane("x1 and x2 do not span a plane");
    }

    // Orthonormal basis of the plane.
    Eigen::Matrix<double, 4, 2> G;
    G.col(0) = state.x1.normalized();
    G.col(1) = (state.x2 - G.col(0).dot(state.x2) * G.col(0)).normalized();

    // Frames [M e1, M e2] spanning the plane have an orthogonal top block,
    // which fixes the in-plane rotation up to signed permutations.
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(G.topRows<2>(), Eigen::ComputeFullV);
    const Eigen::Matrix2d V = svd.matrixV();

    const Vec4 q_hint = hint ? hint->q : Vec4::Zero();
    const RotationAngles a_hint = hint ? hint->angles : RotationAngles{};

    double best_score = std::numeric_limits<double>::infinity();
    RotationAngles best;
    for (int perm = 0; perm < 2; ++perm) {
        for (int signs = 0; signs < 4; ++signs) {
            Eigen::Matrix2d W;
            W.col(0) = (signs & 1 ? -1.0 : 1.0) * V.col(perm);
            W.col(1) = (signs & 2 ? -1.0 : 1.0) * V.col(1 - perm);
            const Eigen::Matrix<double, 4, 2> F = G * W;
            for (int branch = 0; branch < 4; ++branch) {
                const RotationAngles a = angles_from_frame(F, branch & 1, branch & 2);
                const Mat4 M = rotation_matrix(a);
                if ((M.leftCols<2>() - F).norm() > 1e-8) continue;
                double score;
                if (hint) {
                    const Eigen::Matrix2d body = M.leftCols<2>().transpose() * X;
                    const Vec4 q(body(0, 0), body(1, 0), body(0, 1), body(1, 1));
                    // theta is cyclic and can turn far between samples; it only breaks ties.
                    score = (q - q_hint).squaredNorm() + std::pow(wrap_angle(a.psi1 - a_hint.psi1), 2) +
                            std::pow(wrap_angle(a.psi2 - a_hint.psi2), 2) +
                            1e-6 * (std::pow(wrap_angle(a.theta1 - a_hint.theta1), 2) +
                                    std::pow(wrap_angle(a.theta2 - a_hint.theta2), 2));
                } else {
                    score = std::abs(a.psi1) + std::abs(a.psi2) + std::abs(a.theta1) + std::abs(a.theta2);
                }
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best = a;
                }
            }
        }
    }
    if (!std::isfinite(best_score)) throw ChartSingular("no chart frame found for the plane");

    PartialState z;
    z.angles = best;
    const Mat4 M = rotation_matrix(best);
    const Vec4 b1 = M.transpose() * state.x1;
    const Vec4 b2 = M.transpose() * state.x2;
    z.q << b1(0), b1(1), b2(0), b2(1);

    const bool moving = !(state.y1.isZero(0.0) && state.y2.isZero(0.0));
    if (moving && !chart_valid(z.q, z.angles)) {
        throw ChartSingular("chart singular: momenta cannot be represented at this configuration");
    }
    Vec8 body_momenta;
    body_momenta << M.transpose() * state.y1, M.transpose() * state.y2;
    const Vec8 P = body_jacobian(z.q, z.angles).transpose() * body_momenta;
    z.p = P.head<4>();
    z.p_psi1 = P(4);
    z.p_psi2 = P(5);
    z.p_theta1 = P(6);
    z.p_theta2 = P(7);
    return z;
}

double hamiltonian_partial(const MassTriple& masses, const PartialState& z, const Potential& potential) {
    const Vec4& q = z.q;
    const double V =
        potential({q(0) * q(0) + q(1) * q(1), q(2) * q(2) + q(3) * q(3), q(0) * q(2) + q(1) * q(3)}).value;
    if (momenta_vanish(z)) return V;

    require_chart(q, z.angles);
    const LiftCoefficients k = lift_coefficients(z);
    const double A = z.area();
    const double r1 = z.p_psi1 / (2.0 * A), r2 = z.p_psi2 / (2.0 * A);
    const double f34 = partial_kinetic_term(q(2), q(3), k.b, k.c, r1, r2);
    const double f12 = partial_kinetic_term(q(0), q(1), k.b, k.c, r1, r2);
    const Vec4& p = z.p;
    return (p(0) * p(0) + p(1) * p(1) + f34) / (2.0 * masses.nu1()) +
           (p(2) * p(2) + p(3) * p(3) + f12) / (2.0 * masses.nu2()) + V;
}

double hamiltonian_partial(const MassTriple& masses, const PartialState& partial) {
    return hamiltonian_partial(masses, partial, newtonian(masses));
}

AngularMomentum angular_momentum_partial(const PartialState& z) {
    require_sines(z.angles);
    const double sigma = z.angles.sigma(), delta = z.angles.delta();
    const double l3 = z.l3();
    const double F = (l3 + z.big_sigma() * std::cos(delta)) / (2.0 * std::sin(delta));
    const double G = (l3 + z.big_delta() * std::cos(sigma)) / (2.0 * std::sin(sigma));
    const Mat4 K = -z.p_theta1 * plane_generator(1, 2) - z.p_theta2 * plane_generator(3, 4) -
                   z.p_psi1 * plane_generator(1, 3) - z.p_psi2 * plane_generator(2, 4) +
                   (F + G) * plane_generator(2, 3) + (F - G) * plane_generator(1, 4);
    return spectral_pair(K);
}

Vec4 invariant_set_residual(const PartialState& z, double mu1, double mu2) {
    const double l3 = z.l3();
    return {z.p_psi1, z.p_psi2, (mu1 + mu2) * std::cos(z.angles.delta()) + l3,
            (mu1 - mu2) * std::cos(z.angles.sigma()) + l3};
}

namespace {

BracketMatrix from_upper(double a13, double a14, double a23, double a24) {
    BracketMatrix out;
    Mat4& m = out.matrix;
    m(0, 2) = a13;
    m(0, 3) = a14;
    m(1, 2) = a23;
    m(1, 3) = a24;
    m(2, 0) = -a13;
    m(3, 0) = -a14;
    m(2, 1) = -a23;
    m(3, 1) = -a24;
    const double pf = pfaffian(m);
    out.determinant = pf * pf;
    return out;
}

}  // namespace

BracketMatrix restriction_matrix_A(const PartialState& z) {
    require_chart(z.q, z.angles);
    const double sigma = z.angles.sigma(), delta = z.angles.delta();
    const double l3 = z.l3();
    const double sd = std::sin(delta), ss = std::sin(sigma);
    // Derivatives of F = (L3 + Sigma cos d)/(2 sin d) and G = (L3 + Delta cos s)/(2 sin s).
    const double F_d = -(z.big_sigma() + l3 * std::cos(delta)) / (2.0 * sd * sd);
    const double G_s = -(z.big_delta() + l3 * std::cos(sigma)) / (2.0 * ss * ss);
    return from_upper(F_d + G_s, F_d - G_s, -F_d + G_s, -F_d - G_s);
}

BracketMatrix invariant_constraint_brackets(const PartialState& z) {
    require_chart(z.q, z.angles);
    const double a = z.big_sigma() * std::sin(z.angles.delta());
    const double b = z.big_delta() * std::sin(z.angles.sigma());
    return from_upper(a, b, -a, b);
}

double kinetic_f(double qi, double qj, double l3, double area, double mu1, double mu2) {
    if (area == 0.0 || !std::isfinite(area)) throw ChartSingular("kinetic function needs a non-zero area");
    const double sigma = mu1 + mu2, delta = mu1 - mu2;
    const double l3sq = l3 * l3;
    const double slack = 1e-14 * (sigma * sigma + delta * delta);
    const double dd = delta * delta - l3sq, ds = sigma * sigma - l3sq;
    if (dd < -slack || ds < -slack) {
        throw KineticDomainError("kinetic function: L3^2 exceeds Delta^2 or Sigma^2");
    }
    const double ld = std::copysign(std::sqrt(std::max(dd, 0.0)), delta);
    const double ls = std::copysign(std::sqrt(std::max(ds, 0.0)), sigma);
    const double plus = ld + ls, minus = ld - ls;
    return (plus * plus * qi * qi + minus * minus * qj * qj) / (16.0 * area * area);
}

double hamiltonian_reduced(const MassTriple& masses, const ReducedState& z, const Potential& potential) {
    if (!area_valid(z.q)) throw ChartSingular("chart singular: oriented area A vanishes");
    const Vec4& q = z.q;
    const Vec4& p = z.p;
    const double A = z.area(), l3 = z.l3();
    const double f34 = kinetic_f(q(2), q(3), l3, A, z.mu1, z.mu2);
    const double f12 = kinetic_f(q(0), q(1), l3, A, z.mu1, z.mu2);
    const double V =
        potential({q(0) * q(0) + q(1) * q(1), q(2) * q(2) + q(3) * q(3), q(0) * q(2) + q(1) * q(3)}).value;
    return (p(0) * p(0) + p(1) * p(1) + f34) / (2.0 * masses.nu1()) +
           (p(2) * p(2) + p(3) * p(3) + f12) / (2.0 * masses.nu2()) + V;
}

double hamiltonian_reduced(const MassTriple& masses, const ReducedState& state) {
    return hamiltonian_reduced(masses, state, newtonian(masses));
}

PartialState embed_reduced(const ReducedState& state, double theta1, double theta2) {
    const double sigma = state.mu1 + state.mu2, delta = state.mu1 - state.mu2;
    if (delta == 0.0 || sigma == 0.0) throw DegenerateMomenta("embedding needs |mu1| != |mu2|");
    const double l3 = state.l3();
    const double cd = -l3 / sigma, cs = -l3 / delta;
    if (std::abs(cd) > 1.0 || std::abs(cs) > 1.0) {
        throw KineticDomainError("no real angles on the invariant set: |L3| exceeds |Sigma| or |Delta|");
    }
    const double d = std::acos(cd), s = std::acos(cs);
    PartialState z;
    z.q = state.q;
    z.p = state.p;
    z.angles = {0.5 * (s + d), 0.5 * (s - d), theta1, theta2};
    z.p_theta1 = state.mu1;
    z.p_theta2 = state.mu2;
    return z;
}

}  // namespace tb4
