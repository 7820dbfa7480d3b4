#pragma once

#include <cstdint>
#include <random>

#include "tb4/reduction.hpp"

namespace tb4 {

/// Seeded source of uniform doubles; the mapping from raw 64-bit output is
/// fixed so that a seed gives the same points on every platform.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

/// Random point of the rotation chart with |A| and |cos 2psi1 - cos 2psi2|
/// bounded away from zero.
PartialState random_chart_point(Sampler& rng);

/// Random reduced state with the given momenta whose L3 stays inside the
/// kinetic domain, |L3| <= fraction * min(|mu1 - mu2|, mu1 + mu2).
ReducedState random_reduced_state(Sampler& rng, double mu1, double mu2, double fraction = 0.8);

/// Random pair mu1 > mu2 > 0 with mu1 - mu2 bounded away from zero.
std::pair<double, double> random_momenta(Sampler& rng);

}  // namespace tb4
