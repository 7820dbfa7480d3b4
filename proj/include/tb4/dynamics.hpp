#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tb4/reduction.hpp"

namespace tb4 {

using Vector = Eigen::VectorXd;

/// Autonomous vector field with optional scalar monitors (energy, momenta,
/// constraint residuals) evaluated on sampled states.
struct VectorField {
    int dimension = 0;
    std::function<Vector(const Vector&)> evaluate;
    std::vector<std::string> state_names;
    std::vector<std::string> monitor_names;
    std::function<std::vector<double>(const Vector&)> monitors;
};

enum class Method { dormand_prince, implicit_midpoint };

struct IntegratorConfig {
    Method method = Method::dormand_prince;
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double max_step = 1.0;
    /// Initial step for the adaptive method, fixed step for implicit midpoint.
    double step = 1e-3;
    /// Record every k-th accepted step (ignored when sample_interval > 0).
    int monitor_every = 1;
    /// When positive, steps are clipped so that samples land exactly on
    /// multiples of this interval and only those are recorded.
    double sample_interval = 0.0;
    std::size_t max_steps = 10'000'000;
    /// Stop after this many accepted steps (0 = no limit); t_end still bounds the run.
    std::size_t step_limit = 0;

    void validate() const;
};

struct DomainExit {
    std::string reason;
    double time = 0.0;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<std::vector<double>> monitors;
    std::vector<std::string> state_names;
    std::vector<std::string> monitor_names;
    std::optional<DomainExit> exit;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

/// Integrates from t = 0 to t_end. A DomainError raised by the field is not
/// propagated: the step is halved until the minimum step, then the run stops
/// with `exit` set and the trajectory recorded so far.
TrajectoryRecord integrate(const VectorField& field, const Vector& start, double t_end, const IntegratorConfig& config);

/// Analytic gradient (dH/dq, dH/dp) of the reduced Hamiltonian.
Vec8 gradient_reduced(const MassTriple& masses, const ReducedState& state);
Vec8 gradient_reduced(const MassTriple& masses, const ReducedState& state, const Potential& potential);

/// Gradient of the partial Hamiltonian in the ordering of PartialState::to_vector.
Vec16 gradient_partial(const MassTriple& masses, const PartialState& state);
Vec16 gradient_partial(const MassTriple& masses, const PartialState& state, const Potential& potential);

/// Canonical vector field (dH/dp, -dH/dq) for a gradient laid out as (dH/dq, dH/dp).
Vector hamiltonian_vector(const Vector& gradient);

/// State (q, p); monitors H, L3.
VectorField reduced_field(const MassTriple& masses, double mu1, double mu2);
/// State (x1, x2, y1, y2); monitors H, mu1, mu2.
VectorField full_field(const MassTriple& masses);
/// State as PartialState::to_vector; monitors H, p_theta1, p_theta2, c1..c4
/// with the residuals taken at the initial theta momenta.
VectorField partial_field(const MassTriple& masses, double mu1, double mu2);

struct ComparisonReport {
    double max_q_deviation = 0.0;
    double max_p_deviation = 0.0;
    double max_invariant_residual = 0.0;
    double max_mu_drift = 0.0;
    double max_energy_drift = 0.0;
    std::size_t samples = 0;
    std::optional<DomainExit> exit;
    TrajectoryRecord full;
    TrajectoryRecord reduced;
};

/// Integrates the translation-reduced system from the embedded start and the
/// reduced system side by side, projecting the former back at each sample.
/// Requires config.sample_interval > 0.
ComparisonReport compare_full_vs_reduced(const MassTriple& masses, const ReducedState& start, double t_end,
                                         const IntegratorConfig& config);

}  // namespace tb4
