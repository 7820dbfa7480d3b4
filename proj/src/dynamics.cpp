#include "tb4/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tb4/errors.hpp"

namespace tb4 {

void IntegratorConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw std::invalid_argument("integrator tolerances must be positive");
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (monitor_every < 1) throw std::invalid_argument("monitor_every must be at least 1");
    if (sample_interval < 0.0) throw std::invalid_argument("sample_interval must be non-negative");
}

Vector hamiltonian_vector(const Vector& gradient) {
    const Eigen::Index n = gradient.size() / 2;
    Vector out(gradient.size());
    out.head(n) = gradient.tail(n);
    out.tail(n) = -gradient.head(n);
    return out;
}

// ---------------------------------------------------------------------------
// Gradients

Vec8 gradient_reduced(const MassTriple& masses, const ReducedState& z, const Potential& potential) {
    const Vec4& q = z.q;
    const Vec4& p = z.p;
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    const double W = q(0) * q(3) - q(1) * q(2);
    if (std::abs(W) <= 1e-13 * q.squaredNorm() || q.isZero(0.0)) {
        throw ChartSingular("chart singular: oriented area A vanishes");
    }

    const double sigma = z.mu1 + z.mu2, delta = z.mu1 - z.mu2;
    const double l3 = z.l3();
    const double slack = 1e-14 * (sigma * sigma + delta * delta);
    const double dd = delta * delta - l3 * l3, ds = sigma * sigma - l3 * l3;
    if (dd < -slack || ds < -slack) throw KineticDomainError("kinetic function: L3^2 exceeds Delta^2 or Sigma^2");
    const double ld = std::copysign(std::sqrt(std::max(dd, 0.0)), delta);
    const double ls = std::copysign(std::sqrt(std::max(ds, 0.0)), sigma);
    const double plus_sq = (ld + ls) * (ld + ls);
    const double minus_sq = (ld - ls) * (ld - ls);

    // Kinetic shape term (plus_sq a + minus_sq b) / (8 W^2).
    const double a = q(2) * q(2) / nu1 + q(0) * q(0) / nu2;
    const double b = q(3) * q(3) / nu1 + q(1) * q(1) / nu2;
    const double w2 = W * W;
    const double K = (plus_sq * a + minus_sq * b) / (8.0 * w2);

    double dplus = 0.0, dminus = 0.0;
    if (l3 != 0.0) {
        const double prod = ld * ls;
        if (prod == 0.0) throw KineticDomainError("kinetic function is not differentiable at |L3| = |Delta| or |Sigma|");
        dplus = -2.0 * l3 * plus_sq / prod;
        dminus = 2.0 * l3 * minus_sq / prod;
    }
    const double K_l3 = (dplus * a + dminus * b) / (8.0 * w2);

    const Vec4 grad_a(2.0 * q(0) / nu2, 0.0, 2.0 * q(2) / nu1, 0.0);
    const Vec4 grad_b(0.0, 2.0 * q(1) / nu2, 0.0, 2.0 * q(3) / nu1);
    const Vec4 grad_w(q(3), -q(2), -q(1), q(0));
    const Vec4 l3_q(p(1), -p(0), p(3), -p(2));
    const Vec4 l3_p(-q(1), q(0), -q(3), q(2));

    Vec8 g;
    g.head<4>() = (plus_sq * grad_a + minus_sq * grad_b) / (8.0 * w2) - 2.0 * K / W * grad_w + K_l3 * l3_q +
                  shape_potential(potential, q).grad;
    g.tail<4>() = Vec4(p(0) / nu1, p(1) / nu1, p(2) / nu2, p(3) / nu2) + K_l3 * l3_p;
    return g;
}

Vec8 gradient_reduced(const MassTriple& masses, const ReducedState& state) {
    return gradient_reduced(masses, state, newtonian(masses));
}

Vec16 gradient_partial(const MassTriple& masses, const PartialState& z, const Potential& potential) {
    Vec16 g = Vec16::Zero();
    g.head<4>() = shape_potential(potential, z.q).grad;

    Vec8 P;
    P << z.p, z.p_psi1, z.p_psi2, z.p_theta1, z.p_theta2;
    if (P.isZero(0.0)) return g;
    if (!chart_valid(z.q, z.angles)) throw ChartSingular("chart singular in the partial vector field");

    // Kinetic energy T = 1/2 y^T N y with body-frame momenta y = U^{-T} P.
    const Mat8 U = body_jacobian(z.q, z.angles);
    const Eigen::PartialPivLU<Mat8> lu(U);
    const Vec8 y = lu.transpose().solve(P);
    Vec8 Ny;
    Ny << y.head<4>() / masses.nu1(), y.tail<4>() / masses.nu2();
    const Vec8 v = lu.solve(Ny);
    g.tail<8>() = v;

    const Mat4 mpsi = psi_rotation(z.angles.psi1, z.angles.psi2);
    const Mat4 b13 = plane_generator(1, 3), b24 = plane_generator(2, 4);
    const std::array<Mat4, 3> base = {plane_generator(1, 3), plane_generator(1, 2), plane_generator(3, 4)};
    // Angle columns of U are G_k z with G_k = Mpsi^T X_k Mpsi (psi1, theta1, theta2) or B24 (psi2).
    std::array<Mat4, 4> G;
    G[0] = mpsi.transpose() * base[0] * mpsi;
    G[1] = b24;
    G[2] = mpsi.transpose() * base[1] * mpsi;
    G[3] = mpsi.transpose() * base[2] * mpsi;
    const std::array<int, 4> col = {4, 5, 6, 7};

    const Vec4 z1(z.q(0), z.q(1), 0.0, 0.0);
    const Vec4 z2(z.q(2), z.q(3), 0.0, 0.0);

    // dT/dQ_k = -y^T (dU/dQ_k) v.
    for (int k = 0; k < 4; ++k) {
        const Vec4 e = Vec4::Unit(k < 2 ? k : k - 2);
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
            const Vec4 d = G[j] * e;
            acc += (k < 2 ? y.head<4>().dot(d) : y.tail<4>().dot(d)) * v(col[j]);
        }
        g(k) -= acc;
    }
    std::array<Mat4, 4> dpsi1, dpsi2;
    for (int j = 0; j < 4; ++j) {
        if (j == 1) {
            dpsi1[j].setZero();
            dpsi2[j].setZero();
            continue;
        }
        const Mat4& X = j == 0 ? base[0] : base[j - 1];
        dpsi1[j] = mpsi.transpose() * (X * b13 - b13 * X) * mpsi;
        dpsi2[j] = G[j] * b24 - b24 * G[j];
    }
    for (int which = 0; which < 2; ++which) {
        const auto& dG = which == 0 ? dpsi1 : dpsi2;
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
            acc += (y.head<4>().dot(dG[j] * z1) + y.tail<4>().dot(dG[j] * z2)) * v(col[j]);
        }
        g(4 + which) -= acc;
    }
    return g;
}

Vec16 gradient_partial(const MassTriple& masses, const PartialState& state) {
    return gradient_partial(masses, state, newtonian(masses));
}

// ---------------------------------------------------------------------------
// Vector fields

VectorField reduced_field(const MassTriple& masses, double mu1, double mu2) {
    const Potential potential = newtonian(masses);
    VectorField f;
    f.dimension = 8;
    f.state_names = {"q1", "q2", "q3", "q4", "p1", "p2", "p3", "p4"};
    f.monitor_names = {"H", "L3"};
    f.evaluate = [=](const Vector& x) -> Vector {
        return hamiltonian_vector(gradient_reduced(masses, ReducedState::from_vector(x, mu1, mu2), potential));
    };
    f.monitors = [=](const Vector& x) {
        const ReducedState z = ReducedState::from_vector(x, mu1, mu2);
        return std::vector<double>{hamiltonian_reduced(masses, z, potential), z.l3()};
    };
    return f;
}

VectorField full_field(const MassTriple& masses) {
    const double nu1 = masses.nu1(), nu2 = masses.nu2();
    VectorField f;
    f.dimension = 16;
    f.state_names = {"x1_1", "x1_2", "x1_3", "x1_4", "x2_1", "x2_2", "x2_3", "x2_4",
                     "y1_1", "y1_2", "y1_3", "y1_4", "y2_1", "y2_2", "y2_3", "y2_4"};
    f.monitor_names = {"H", "mu1", "mu2"};
    f.evaluate = [=](const Vector& x) -> Vector {
        const FullState s = FullState::from_vector(x);
        const PotentialJet jet = newtonian_potential(masses, scalar_products(s.x1, s.x2));
        Vector out(16);
        out.segment<4>(0) = s.y1 / nu1;
        out.segment<4>(4) = s.y2 / nu2;
        out.segment<4>(8) = -(2.0 * jet.grad(0) * s.x1 + jet.grad(2) * s.x2);
        out.segment<4>(12) = -(2.0 * jet.grad(1) * s.x2 + jet.grad(2) * s.x1);
        return out;
    };
    f.monitors = [=](const Vector& x) {
        const FullState s = FullState::from_vector(x);
        const AngularMomentum L = angular_momentum(s);
        return std::vector<double>{hamiltonian_full(masses, s), L.mu1, L.mu2};
    };
    return f;
}

VectorField partial_field(const MassTriple& masses, double mu1, double mu2) {
    const Potential potential = newtonian(masses);
    VectorField f;
    f.dimension = 16;
    f.state_names = {"q1", "q2", "q3", "q4", "psi1", "psi2", "theta1", "theta2",
                     "p1", "p2", "p3", "p4", "p_psi1", "p_psi2", "p_theta1", "p_theta2"};
    f.monitor_names = {"H", "p_theta1", "p_theta2", "c1", "c2", "c3", "c4"};
    f.evaluate = [=](const Vector& x) -> Vector {
        return hamiltonian_vector(gradient_partial(masses, PartialState::from_vector(x), potential));
    };
    f.monitors = [=](const Vector& x) {
        const PartialState z = PartialState::from_vector(x);
        const Vec4 c = invariant_set_residual(z, mu1, mu2);
        return std::vector<double>{hamiltonian_partial(masses, z, potential), z.p_theta1, z.p_theta2,
                                   c(0), c(1), c(2), c(3)};
    };
    return f;
}

// ---------------------------------------------------------------------------
// Integrators

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

struct Recorder {
    const VectorField& field;
    TrajectoryRecord& record;

    void push(double t, const Vector& x) {
        record.times.push_back(t);
        record.states.push_back(x);
        if (field.monitors) {
            try {
                record.monitors.push_back(field.monitors(x));
            } catch (const DomainError&) {
                record.monitors.emplace_back(field.monitor_names.size(), std::numeric_limits<double>::quiet_NaN());
            }
        }
    }
};

struct StepResult {
    Vector x;
    Vector f_end;
    double error = 0.0;
};

StepResult dopri_step(const VectorField& field, const Vector& x, const Vector& k1, double h,
                      const IntegratorConfig& cfg) {
    const Vector k2 = field.evaluate(x + h * a21 * k1);
    const Vector k3 = field.evaluate(x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = field.evaluate(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = field.evaluate(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = field.evaluate(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    StepResult r;
    r.x = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    r.f_end = field.evaluate(r.x);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * r.f_end);
    const Vector scale =
        (cfg.abs_tol + cfg.rel_tol * x.cwiseAbs().cwiseMax(r.x.cwiseAbs()).array()).matrix();
    r.error = std::sqrt((err.cwiseQuotient(scale)).squaredNorm() / static_cast<double>(x.size()));
    return r;
}

Vector midpoint_step(const VectorField& field, const Vector& x, const Vector& f0, double h) {
    // Fixed-point iteration on the stage slope k = f(x + h k / 2).
    Vector k = f0;
    const double size = 1.0 + x.lpNorm<Eigen::Infinity>();
    const double floor = 1e-15 * size;
    double last = std::numeric_limits<double>::infinity();
    int growing = 0;
    for (int it = 0; it < 200; ++it) {
        const Vector next = field.evaluate(x + 0.5 * h * k);
        const double change = h * (next - k).lpNorm<Eigen::Infinity>();
        k = next;
        if (change <= floor) return x + h * k;
        if (it > 5 && change >= last) {
            // Stalled at the rounding level counts as converged; growth does not.
            if (change <= 1e-12 * size) return x + h * k;
            if (++growing > 3) break;
        }
        last = change;
    }
    throw NoConvergence("implicit midpoint iteration did not converge; reduce the step");
}

}  // namespace

TrajectoryRecord integrate(const VectorField& field, const Vector& start, double t_end,
                           const IntegratorConfig& config) {
    config.validate();
    if (start.size() != field.dimension) throw std::invalid_argument("start state has the wrong dimension");
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

    TrajectoryRecord record;
    record.state_names = field.state_names;
    record.monitor_names = field.monitor_names;
    Recorder rec{field, record};

    Vector x = start;
    double t = 0.0;
    rec.push(t, x);

    Vector fx;
    try {
        fx = field.evaluate(x);
    } catch (const DomainError& e) {
        record.exit = DomainExit{e.what(), 0.0};
        return record;
    }

    const bool sampled = config.sample_interval > 0.0;
    std::size_t sample_index = 1;
    auto next_stop = [&]() {
        if (!sampled) return t_end;
        return std::min(t_end, static_cast<double>(sample_index) * config.sample_interval);
    };

    double h = std::min(config.step, config.max_step);
    const double min_step = 1e-14 * std::max(1.0, t_end);
    std::size_t since_record = 0;
    bool last_recorded = true;

    while (t < t_end) {
        if (record.accepted_steps + record.rejected_steps >= config.max_steps) {
            record.exit = DomainExit{"maximum number of steps reached", t};
            break;
        }
        if (config.step_limit > 0 && record.accepted_steps >= config.step_limit) break;

        const double stop = next_stop();
        double h_try = std::min(h, config.max_step);
        bool hits_stop = false;
        if (t + h_try >= stop - 1e-14 * std::max(1.0, stop)) {
            h_try = stop - t;
            hits_stop = true;
        }

        Vector x_new, f_new;
        double factor = 1.0;
        bool accepted = false;
        try {
            if (config.method == Method::dormand_prince) {
                const StepResult r = dopri_step(field, x, fx, h_try, config);
                if (!std::isfinite(r.error)) throw DomainError("non-finite state in step");
                if (r.error <= 1.0) {
                    accepted = true;
                    x_new = r.x;
                    f_new = r.f_end;
                }
                factor = r.error == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(r.error, -0.2), 0.2, 5.0);
            } else {
                x_new = midpoint_step(field, x, fx, h_try);
                f_new = field.evaluate(x_new);
                accepted = true;
            }
        } catch (const DomainError& e) {
            ++record.rejected_steps;
            h = 0.5 * h_try;
            if (h < min_step) {
                record.exit = DomainExit{e.what(), t};
                break;
            }
            continue;
        }

        if (!accepted) {
            ++record.rejected_steps;
            h = h_try * factor;
            if (h < min_step) {
                record.exit = DomainExit{"step size underflow", t};
                break;
            }
            continue;
        }

        ++record.accepted_steps;
        t = hits_stop ? stop : t + h_try;
        x = x_new;
        fx = f_new;
        if (config.method == Method::dormand_prince) {
            // A step clipped to a sample time must not shrink the next one.
            h = hits_stop ? std::max(h, h_try * factor) : h_try * factor;
        } else {
            h = config.step;
        }

        last_recorded = false;
        if (sampled) {
            if (hits_stop && stop < t_end) {
                rec.push(t, x);
                ++sample_index;
                last_recorded = true;
            }
        } else if (++since_record >= static_cast<std::size_t>(config.monitor_every)) {
            rec.push(t, x);
            since_record = 0;
            last_recorded = true;
        }
    }
    if (!last_recorded) rec.push(t, x);
    return record;
}

// ---------------------------------------------------------------------------
// Full versus reduced

ComparisonReport compare_full_vs_reduced(const MassTriple& masses, const ReducedState& start, double t_end,
                                         const IntegratorConfig& config) {
    if (!(config.sample_interval > 0.0)) {
        throw std::invalid_argument("compare_full_vs_reduced needs a positive sample_interval");
    }
    const PartialState embedded = embed_reduced(start);
    const FullState full_start = lift_to_full(embedded);

    ComparisonReport report;
    report.full = integrate(full_field(masses), full_start.to_vector(), t_end, config);
    report.reduced = integrate(reduced_field(masses, start.mu1, start.mu2), start.to_vector(), t_end, config);
    report.exit = report.full.exit ? report.full.exit : report.reduced.exit;

    const double h0 = report.full.monitors.front()[0];
    std::optional<PartialState> hint = embedded;
    const std::size_t n = std::min(report.full.times.size(), report.reduced.times.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double t = report.full.times[i];
        if (std::abs(t - report.reduced.times[i]) > 1e-12 * std::max(1.0, t)) break;
        const FullState s = FullState::from_vector(report.full.states[i]);
        PartialState z;
        try {
            z = project_to_partial(s, hint);
        } catch (const DomainError& e) {
            if (!report.exit) report.exit = DomainExit{e.what(), t};
            break;
        }
        hint = z;
        const Vector& r = report.reduced.states[i];
        report.max_q_deviation = std::max(report.max_q_deviation, (z.q - r.head<4>()).lpNorm<Eigen::Infinity>());
        report.max_p_deviation = std::max(report.max_p_deviation, (z.p - r.tail<4>()).lpNorm<Eigen::Infinity>());
        report.max_invariant_residual =
            std::max(report.max_invariant_residual,
                     invariant_set_residual(z, start.mu1, start.mu2).lpNorm<Eigen::Infinity>());
        const auto& mon = report.full.monitors[i];
        report.max_mu_drift =
            std::max({report.max_mu_drift, std::abs(mon[1] - start.mu1), std::abs(mon[2] - start.mu2)});
        report.max_energy_drift = std::max(report.max_energy_drift, std::abs(mon[0] - h0));
        ++report.samples;
    }
    return report;
}

}  // namespace tb4
