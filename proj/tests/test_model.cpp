#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tb4/errors.hpp"
#include "tb4/model.hpp"
#include "tb4/sampling.hpp"

using namespace tb4;

namespace {

FullState random_full_state(Sampler& rng) {
    FullState s;
    for (int i = 0; i < 4; ++i) {
        s.x1(i) = rng.uniform(-1.0, 1.0);
        s.x2(i) = rng.uniform(-1.0, 1.0);
        s.y1(i) = rng.uniform(-1.0, 1.0);
        s.y2(i) = rng.uniform(-1.0, 1.0);
    }
    return s;
}

Mat4 random_rotation(Sampler& rng) {
    Mat4 a;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    return oracle::expm(a - a.transpose());
}

}  // namespace

TEST_CASE("mass triple rejects non-positive masses") {
    CHECK_THROWS_AS(MassTriple(0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MassTriple(1.0, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MassTriple(1.0, 1.0, NAN), std::invalid_argument);
    const MassTriple m(1.0, 2.0, 3.0);
    CHECK(m.nu1() == doctest::Approx(6.0 / 5.0));
    CHECK(m.nu2() == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("jacobi coordinates preserve kinetic energy and separate the centre of mass") {
    Sampler rng(1);
    const MassTriple m(0.7, 1.3, 2.1);
    std::array<Vec4, 3> r, v;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 4; ++i) {
            r[k](i) = rng.uniform(-1.0, 1.0);
            v[k](i) = rng.uniform(-1.0, 1.0);
        }
    const JacobiResult j = jacobi_from_positions(m, r, v);
    const double mass[3] = {m.m1(), m.m2(), m.m3()};
    double kinetic = 0.0;
    for (int k = 0; k < 3; ++k) kinetic += 0.5 * mass[k] * v[k].squaredNorm();
    const double reduced = j.state.y1.squaredNorm() / (2.0 * m.nu1()) + j.state.y2.squaredNorm() / (2.0 * m.nu2()) +
                           j.total_momentum.squaredNorm() / (2.0 * m.total());
    CHECK(reduced == doctest::Approx(kinetic).epsilon(1e-13));

    // Positions relative to the centre of mass come back from the inverse map.
    const auto back = oracle::bodies_from_jacobi(m, j.state.x1, j.state.x2);
    for (int k = 0; k < 3; ++k) CHECK((back[k] - (r[k] - j.center_of_mass)).norm() < 1e-14);
}

TEST_CASE("potential matches the pairwise sum and its derivatives") {
    Sampler rng(2);
    const MassTriple m(1.0, 2.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const FullState s = random_full_state(rng);
        const ScalarProducts sp = scalar_products(s.x1, s.x2);
        const PotentialJet jet = newtonian_potential(m, sp);
        CHECK(jet.value == doctest::Approx(oracle::potential_direct(m, s.x1, s.x2)).epsilon(1e-13));

        const Eigen::Vector3d x(sp.s11, sp.s22, sp.s12);
        auto value = [&](const Eigen::VectorXd& y) { return newtonian_potential(m, {y(0), y(1), y(2)}).value; };
        auto grad = [&](const Eigen::VectorXd& y) {
            return Eigen::VectorXd(newtonian_potential(m, {y(0), y(1), y(2)}).grad);
        };
        const Eigen::VectorXd g = oracle::fd_gradient(value, x, 1e-5);
        CHECK((jet.grad - g).norm() < 1e-7 * (1.0 + g.norm()));
        const Eigen::MatrixXd h = oracle::fd_hessian(grad, x, 1e-5);
        CHECK((jet.hess - h).norm() < 1e-6 * (1.0 + h.norm()));
    }
}

TEST_CASE("shape potential pulls back value, gradient and Hessian") {
    Sampler rng(3);
    const MassTriple m(1.0, 2.0, 3.0);
    const Potential pot = newtonian(m);
    for (int trial = 0; trial < 20; ++trial) {
        Vec4 q;
        for (int i = 0; i < 4; ++i) q(i) = rng.uniform(-1.5, 1.5);
        const ShapeJet jet = shape_potential(pot, q);
        auto value = [&](const Eigen::VectorXd& y) {
            return oracle::potential_direct(m, Vec4(y(0), y(1), 0, 0), Vec4(y(2), y(3), 0, 0));
        };
        auto grad = [&](const Eigen::VectorXd& y) { return Eigen::VectorXd(shape_potential(pot, Vec4(y)).grad); };
        CHECK(jet.value == doctest::Approx(value(q)).epsilon(1e-13));
        const Eigen::VectorXd g = oracle::fd_gradient(value, q, 1e-5);
        CHECK((jet.grad - g).norm() < 1e-7 * (1.0 + g.norm()));
        const Eigen::MatrixXd h = oracle::fd_hessian(grad, q, 1e-5);
        CHECK((jet.hess - h).norm() < 1e-6 * (1.0 + h.norm()));
    }
}

TEST_CASE("collision is reported") {
    const MassTriple m(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(newtonian_potential(m, {0.0, 1.0, 0.0}), CollisionError);
    // x2 = a3 x1 puts body 1 on body 2.
    const Vec4 x1(1.0, 0.0, 0.0, 0.0);
    CHECK_THROWS_AS(newtonian_potential(m, scalar_products(x1, 0.5 * x1)), CollisionError);
}

TEST_CASE("hamiltonian agrees with body-frame energy and scales as 1/s") {
    Sampler rng(4);
    const MassTriple m(0.5, 1.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const FullState s = random_full_state(rng);
        const double h = hamiltonian_full(m, s);
        CHECK(h == doctest::Approx(oracle::hamiltonian_direct(m, s)).epsilon(1e-12));
        CHECK(hamiltonian_full(m, oracle::scale_state(s, 2.5)) == doctest::Approx(h / 2.5).epsilon(1e-12));
    }
}

TEST_CASE("angular momentum and its spectral pair") {
    Sampler rng(5);
    const MassTriple m(0.5, 1.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const FullState s = random_full_state(rng);
        const AngularMomentum am = angular_momentum(s);
        CHECK((am.L - oracle::angular_momentum_direct(m, s)).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(am.pfaffian * am.pfaffian == doctest::Approx(am.L.determinant()).epsilon(1e-10));
        CHECK(am.mu1 * am.mu2 == doctest::Approx(am.pfaffian).epsilon(1e-12));
        CHECK(am.mu1 * am.mu1 + am.mu2 * am.mu2 == doctest::Approx(-0.5 * am.trace_sq).epsilon(1e-12));
        CHECK(am.mu1 >= std::abs(am.mu2));

        // Invariant under rotation of the whole system.
        const Mat4 g = random_rotation(rng);
        const AngularMomentum rot = angular_momentum(s.rotated(g));
        CHECK(rot.mu1 == doctest::Approx(am.mu1).epsilon(1e-12));
        CHECK(rot.mu2 == doctest::Approx(am.mu2).epsilon(1e-10));
        CHECK(hamiltonian_full(m, s.rotated(g)) == doctest::Approx(hamiltonian_full(m, s)).epsilon(1e-12));
    }
}

TEST_CASE("spectral pair of a normal form") {
    const Mat4 L = 2.0 * plane_generator(1, 2) - 0.5 * plane_generator(3, 4);
    const AngularMomentum am = spectral_pair(L);
    CHECK(am.mu1 == doctest::Approx(2.0));
    CHECK(am.mu2 == doctest::Approx(-0.5));
}

TEST_CASE("plane rotations are exponentials of the generators") {
    for (int i = 1; i <= 4; ++i)
        for (int j = i + 1; j <= 4; ++j) {
            const Mat4 r = plane_rotation(i, j, 0.37);
            CHECK((r - oracle::expm(0.37 * plane_generator(i, j))).cwiseAbs().maxCoeff() < 1e-14);
        }
    CHECK_THROWS_AS(plane_generator(2, 1), std::invalid_argument);
}

TEST_CASE("full state vector round trip") {
    Sampler rng(6);
    const FullState s = random_full_state(rng);
    const FullState back = FullState::from_vector(s.to_vector());
    CHECK((back.to_vector() - s.to_vector()).norm() == 0.0);
    CHECK_THROWS_AS(FullState::from_vector(Eigen::VectorXd::Zero(5)), std::invalid_argument);
}
