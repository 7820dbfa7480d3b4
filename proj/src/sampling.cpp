#include "tb4/sampling.hpp"

#include <cmath>

namespace tb4 {

namespace {

Vec4 random_shape(Sampler& rng) {
    for (;;) {
        Vec4 q;
        for (int i = 0; i < 4; ++i) q(i) = rng.uniform(-2.0, 2.0);
        if (std::abs(q(0) * q(3) - q(1) * q(2)) > 0.3 * q.squaredNorm() / 4.0 && q.norm() > 0.5) return q;
    }
}

}  // namespace

PartialState random_chart_point(Sampler& rng) {
    PartialState s;
    s.q = random_shape(rng);
    for (;;) {
        s.angles.psi1 = rng.uniform(-M_PI, M_PI);
        s.angles.psi2 = rng.uniform(-M_PI, M_PI);
        if (std::abs(std::cos(2.0 * s.angles.psi1) - std::cos(2.0 * s.angles.psi2)) > 0.2) break;
    }
    s.angles.theta1 = rng.uniform(-M_PI, M_PI);
    s.angles.theta2 = rng.uniform(-M_PI, M_PI);
    for (int i = 0; i < 4; ++i) s.p(i) = rng.uniform(-1.0, 1.0);
    s.p_psi1 = rng.uniform(-1.0, 1.0);
    s.p_psi2 = rng.uniform(-1.0, 1.0);
    s.p_theta1 = rng.uniform(-1.0, 1.0);
    s.p_theta2 = rng.uniform(-1.0, 1.0);
    return s;
}

ReducedState random_reduced_state(Sampler& rng, double mu1, double mu2, double fraction) {
    ReducedState s;
    s.mu1 = mu1;
    s.mu2 = mu2;
    s.q = random_shape(rng);
    for (int i = 0; i < 4; ++i) s.p(i) = rng.uniform(-1.0, 1.0);
    const double bound = fraction * std::min(std::abs(mu1 - mu2), std::abs(mu1 + mu2));
    const double l3 = s.l3();
    if (std::abs(l3) > bound) s.p *= bound / std::abs(l3) * rng.unit();
    return s;
}

std::pair<double, double> random_momenta(Sampler& rng) {
    const double mu2 = rng.uniform(0.1, 1.5);
    return {mu2 + rng.uniform(0.2, 1.5), mu2};
}

}  // namespace tb4
