#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tb4/errors.hpp"
#include "tb4/reduction.hpp"
#include "tb4/sampling.hpp"

using namespace tb4;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Poisson bracket {f, g} = df/dQ . dg/dP - df/dP . dg/dQ in the chart's canonical coordinates.
double bracket(const oracle::Scalar& f, const oracle::Scalar& g, const Eigen::VectorXd& z) {
    const Eigen::VectorXd df = oracle::fd_gradient(f, z, 1e-4);
    const Eigen::VectorXd dg = oracle::fd_gradient(g, z, 1e-4);
    return df.head<8>().dot(dg.tail<8>()) - df.tail<8>().dot(dg.head<8>());
}

}  // namespace

TEST_CASE("rotation chart is a product of plane exponentials") {
    Sampler rng(10);
    for (int i = 0; i < 10; ++i) {
        const PartialState z = random_chart_point(rng);
        const auto& a = z.angles;
        const Mat4 expected = oracle::expm(a.theta1 * plane_generator(1, 2)) * oracle::expm(a.theta2 * plane_generator(3, 4)) *
                              oracle::expm(a.psi1 * plane_generator(1, 3)) * oracle::expm(a.psi2 * plane_generator(2, 4));
        CHECK(max_abs(rotation_matrix(a) - expected) < 1e-14);
        CHECK(max_abs(rotation_matrix(a).transpose() * rotation_matrix(a) - Mat4::Identity()) < 1e-14);
    }
}

TEST_CASE("configuration Jacobian and its determinant") {
    Sampler rng(11);
    for (int i = 0; i < 20; ++i) {
        const PartialState z = random_chart_point(rng);
        const Eigen::VectorXd coords = z.to_vector().head<8>();
        const Eigen::MatrixXd fd = oracle::fd_jacobian(oracle::configuration_map, coords, 1e-3);
        const Mat8 analytic = configuration_jacobian(z.q, z.angles);
        CHECK(max_abs(analytic - fd) < 1e-10);
        const double c = std::cos(2.0 * z.angles.psi1) - std::cos(2.0 * z.angles.psi2);
        const double closed = 2.0 * z.area() * z.area() * c;
        CHECK(configuration_jacobian_det(z.q, z.angles) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(fd.determinant() == doctest::Approx(closed).epsilon(1e-8));
        CHECK(body_jacobian(z.q, z.angles).determinant() == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("chart validity") {
    RotationAngles a{0.3, -0.2, 0.0, 0.0};
    CHECK(chart_valid(Vec4(1.0, 0.0, 0.0, 1.0), a));
    CHECK_FALSE(chart_valid(Vec4(1.0, 2.0, 2.0, 4.0), a));
    CHECK_FALSE(chart_valid(Vec4(1.0, 0.0, 0.0, 1.0), RotationAngles{0.3, 0.3, 0.0, 0.0}));
}

TEST_CASE("lift agrees with a finite-difference cotangent lift") {
    Sampler rng(12);
    for (int i = 0; i < 20; ++i) {
        const PartialState z = random_chart_point(rng);
        const FullState a = lift_to_full(z);
        const FullState b = oracle::lift_oracle(z);
        CHECK((a.to_vector() - b.to_vector()).norm() < 1e-8 * (1.0 + b.to_vector().norm()));
    }
}

TEST_CASE("lift with zero momenta does not need a valid chart") {
    PartialState z;
    z.q = Vec4(1.0, 2.0, 2.0, 4.0);
    const FullState s = lift_to_full(z);
    CHECK(s.y1.norm() == 0.0);
    CHECK(s.y2.norm() == 0.0);
    z.p(0) = 1.0;
    CHECK_THROWS_AS(lift_to_full(z), ChartSingular);
}

TEST_CASE("projection inverts the lift") {
    Sampler rng(13);
    for (int i = 0; i < 50; ++i) {
        const PartialState z = random_chart_point(rng);
        const FullState s = lift_to_full(z);
        const PartialState back = project_to_partial(s, z);
        CHECK((back.to_vector() - z.to_vector()).norm() < 1e-9 * (1.0 + z.to_vector().norm()));

        // Without a hint some chart point still lifts to the same state.
        const PartialState any = project_to_partial(s);
        CHECK((lift_to_full(any).to_vector() - s.to_vector()).norm() < 1e-9 * (1.0 + s.to_vector().norm()));
    }
}

TEST_CASE("projection of a degenerate plane") {
    FullState s;
    s.x1 = Vec4(1.0, 0.0, 0.0, 0.0);
    s.x2 = Vec4(2.0, 0.0, 0.0, 0.0);
    CHECK_THROWS_AS(project_to_partial(s), DegeneratePlane);
}

TEST_CASE("partial hamiltonian") {
    Sampler rng(14);
    const MassTriple m(0.5, 1.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        PartialState z = random_chart_point(rng);
        const double h = hamiltonian_partial(m, z);
        CHECK(h == doctest::Approx(oracle::hamiltonian_direct(m, oracle::lift_oracle(z))).epsilon(1e-8));
        // theta1, theta2 are cyclic.
        z.angles.theta1 += 0.7;
        z.angles.theta2 -= 1.1;
        CHECK(hamiltonian_partial(m, z) == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("angular momentum in the theta frame") {
    Sampler rng(15);
    const MassTriple m(1.0, 1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const PartialState z = random_chart_point(rng);
        const Mat4 L = oracle::angular_momentum_direct(m, oracle::lift_oracle(z));
        const Mat4 th = oracle::expm(z.angles.theta1 * plane_generator(1, 2)) *
                        oracle::expm(z.angles.theta2 * plane_generator(3, 4));
        CHECK(max_abs(angular_momentum_partial(z).L - th.transpose() * L * th) < 1e-8);
    }
}

TEST_CASE("embedding lands on the invariant set with the normal form") {
    Sampler rng(16);
    for (int i = 0; i < 50; ++i) {
        const auto [mu1, mu2] = random_momenta(rng);
        const ReducedState s = random_reduced_state(rng, mu1, mu2);
        const PartialState z = embed_reduced(s, rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
        CHECK(invariant_set_residual(z, mu1, mu2).cwiseAbs().maxCoeff() < 1e-12);
        const Mat4 normal = -mu1 * plane_generator(1, 2) - mu2 * plane_generator(3, 4);
        CHECK(max_abs(angular_momentum_partial(z).L - normal) < 1e-12);
        const AngularMomentum am = angular_momentum(lift_to_full(z));
        CHECK(am.mu1 == doctest::Approx(mu1).epsilon(1e-11));
        CHECK(am.mu2 == doctest::Approx(mu2).epsilon(1e-11));
    }
}

TEST_CASE("embedding rejects equal momenta and out-of-domain L3") {
    ReducedState s;
    s.q = Vec4(1.0, 0.0, 0.0, 1.0);
    s.mu1 = s.mu2 = 1.0;
    CHECK_THROWS_AS(embed_reduced(s), DegenerateMomenta);
    s.mu1 = 1.5;
    s.mu2 = 0.5;
    s.p = Vec4(0.0, 5.0, 0.0, 0.0);  // L3 = 5 > mu1 - mu2
    CHECK_THROWS_AS(embed_reduced(s), KineticDomainError);
}

TEST_CASE("restriction matrix equals finite-difference Poisson brackets") {
    Sampler rng(17);
    for (int i = 0; i < 10; ++i) {
        const PartialState z = random_chart_point(rng);
        const Eigen::VectorXd v = z.to_vector();
        // Off-normal-form components of the theta-frame angular momentum.
        const int rows[4] = {0, 1, 1, 0}, cols[4] = {2, 3, 2, 3};
        std::array<oracle::Scalar, 4> f;
        for (int k = 0; k < 4; ++k) {
            f[static_cast<std::size_t>(k)] = [k, &rows, &cols](const Eigen::VectorXd& y) {
                return angular_momentum_partial(PartialState::from_vector(y)).L(rows[k], cols[k]);
            };
        }
        const BracketMatrix a = restriction_matrix_A(z);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                const double expected = bracket(f[static_cast<std::size_t>(r)], f[static_cast<std::size_t>(c)], v);
                CHECK(a.matrix(r, c) == doctest::Approx(expected).epsilon(1e-6).scale(1.0));
            }
        CHECK(a.determinant == doctest::Approx(a.matrix.determinant()).epsilon(1e-9));
    }
}

TEST_CASE("restriction matrix on the invariant set") {
    Sampler rng(18);
    for (int i = 0; i < 20; ++i) {
        const auto [mu1, mu2] = random_momenta(rng);
        const PartialState z = embed_reduced(random_reduced_state(rng, mu1, mu2));
        const BracketMatrix a = restriction_matrix_A(z);
        const double target = std::pow(mu1 * mu1 - mu2 * mu2, 2);
        CHECK(a.determinant == doctest::Approx(target).epsilon(1e-10));
        CHECK(std::abs(a.matrix(0, 1)) < 1e-12);
        CHECK(std::abs(a.matrix(2, 3)) < 1e-12);
        CHECK(std::abs(a.matrix(0, 2)) == doctest::Approx(mu1).epsilon(1e-12));
        CHECK(std::abs(a.matrix(1, 3)) == doctest::Approx(mu1).epsilon(1e-12));
        CHECK(std::abs(a.matrix(0, 3)) == doctest::Approx(mu2).epsilon(1e-12));
        CHECK(std::abs(a.matrix(1, 2)) == doctest::Approx(mu2).epsilon(1e-12));
    }
}

TEST_CASE("invariant constraint brackets equal finite-difference brackets") {
    Sampler rng(19);
    for (int i = 0; i < 10; ++i) {
        const PartialState z = random_chart_point(rng);
        const Eigen::VectorXd v = z.to_vector();
        std::array<oracle::Scalar, 4> c;
        for (int k = 0; k < 4; ++k) {
            c[static_cast<std::size_t>(k)] = [k](const Eigen::VectorXd& y) {
                const PartialState s = PartialState::from_vector(y);
                return invariant_set_residual(s, s.p_theta1, s.p_theta2)(k);
            };
        }
        const BracketMatrix b = invariant_constraint_brackets(z);
        for (int r = 0; r < 4; ++r)
            for (int col = 0; col < 4; ++col) {
                const double expected =
                    bracket(c[static_cast<std::size_t>(r)], c[static_cast<std::size_t>(col)], v);
                CHECK(b.matrix(r, col) == doctest::Approx(expected).epsilon(1e-6).scale(1.0));
            }
    }
}

TEST_CASE("kinetic function") {
    const double qi = 0.8, qj = -0.3, area = 0.45, mu1 = 1.7, mu2 = 0.6;
    CHECK(kinetic_f(qi, qj, 0.0, area, mu1, mu2) ==
          doctest::Approx((mu1 * mu1 * qi * qi + mu2 * mu2 * qj * qj) / (4.0 * area * area)));
    CHECK(kinetic_f(qi, qj, 0.3, area, mu1, mu2) == doctest::Approx(kinetic_f(qi, qj, -0.3, area, mu1, mu2)));
    CHECK_THROWS_AS(kinetic_f(qi, qj, 1.2, area, mu1, mu2), KineticDomainError);
    CHECK_THROWS_AS(kinetic_f(qi, qj, 0.0, 0.0, mu1, mu2), ChartSingular);
}

TEST_CASE("reduced hamiltonian at rest is the effective potential") {
    Sampler rng(20);
    const MassTriple m(1.0, 2.0, 3.0);
    for (int i = 0; i < 20; ++i) {
        const auto [mu1, mu2] = random_momenta(rng);
        ReducedState s = random_reduced_state(rng, mu1, mu2);
        s.p.setZero();
        CHECK(hamiltonian_reduced(m, s) == doctest::Approx(oracle::veff_direct(m, s.q, mu1, mu2)).epsilon(1e-12));
    }
}

TEST_CASE("reduced hamiltonian equals the partial one on the invariant set") {
    Sampler rng(21);
    const MassTriple m(0.5, 1.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const auto [mu1, mu2] = random_momenta(rng);
        const ReducedState s = random_reduced_state(rng, mu1, mu2);
        const double h = hamiltonian_reduced(m, s);
        CHECK(hamiltonian_partial(m, embed_reduced(s)) == doctest::Approx(h).epsilon(1e-12));
        CHECK(hamiltonian_full(m, lift_to_full(embed_reduced(s, 0.4, 2.0))) == doctest::Approx(h).epsilon(1e-11));
    }
}

TEST_CASE("state vector round trips") {
    Sampler rng(22);
    const PartialState z = random_chart_point(rng);
    CHECK((PartialState::from_vector(z.to_vector()).to_vector() - z.to_vector()).norm() == 0.0);
    const ReducedState s = random_reduced_state(rng, 1.5, 0.5);
    const ReducedState back = ReducedState::from_vector(s.to_vector(), 1.5, 0.5);
    CHECK((back.to_vector() - s.to_vector()).norm() == 0.0);
}
