#include "tb4/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "tb4/errors.hpp"
#include "tb4/io.hpp"
#include "tb4/sampling.hpp"

namespace tb4 {

namespace {

MassTriple triple(const std::array<double, 3>& m) { return MassTriple(m[0], m[1], m[2]); }

void check_momenta(double mu1, double mu2) {
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || mu2 < 0.0) {
        throw std::invalid_argument("momenta must be finite with mu2 >= 0");
    }
    if (std::abs(mu1 * mu1 - mu2 * mu2) <= 1e-14 * (mu1 * mu1 + mu2 * mu2)) {
        throw DegenerateMomenta("mu1 == mu2: the reduced symplectic form is degenerate");
    }
    if (mu1 < mu2) throw std::invalid_argument("momenta must satisfy mu1 > mu2");
}

// Derivative of the lift map by sixth-order central differences.
Eigen::Matrix<double, 16, 16> lift_jacobian(const PartialState& z, double h) {
    const Vec16 base = z.to_vector();
    Eigen::Matrix<double, 16, 16> D;
    for (int k = 0; k < 16; ++k) {
        auto at = [&](double s) {
            Vec16 v = base;
            v(k) += s;
            return Vec16(lift_to_full(PartialState::from_vector(v)).to_vector());
        };
        D.col(k) = (45.0 * (at(h) - at(-h)) - 9.0 * (at(2.0 * h) - at(-2.0 * h)) + (at(3.0 * h) - at(-3.0 * h))) /
                   (60.0 * h);
    }
    return D;
}

Eigen::Matrix<double, 16, 16> canonical_j() {
    Eigen::Matrix<double, 16, 16> J = Eigen::Matrix<double, 16, 16>::Zero();
    J.topRightCorner<8, 8>().setIdentity();
    J.bottomLeftCorner<8, 8>() = -Eigen::Matrix<double, 8, 8>::Identity();
    return J;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

CheckResult check_symplectic(const VerifyOptions& o, Sampler& rng) {
    CheckResult r{"symplectic", 0.0, o.tol.value_or(1e-9), o.points, false};
    const auto J = canonical_j();
    for (int i = 0; i < o.points; ++i) {
        const PartialState z = random_chart_point(rng);
        const auto D = lift_jacobian(z, 1e-3);
        r.max_error = std::max(r.max_error, (D.transpose() * J * D - J).cwiseAbs().maxCoeff());
    }
    return r;
}

std::pair<double, double> momenta_for(const VerifyOptions& o, Sampler& rng) {
    if (o.mu1 && o.mu2) return {*o.mu1, *o.mu2};
    return random_momenta(rng);
}

CheckResult check_composition(const VerifyOptions& o, Sampler& rng) {
    CheckResult r{"composition", 0.0, o.tol.value_or(1e-10), 2 * o.points, false};
    const MassTriple masses = triple(o.masses);
    for (int i = 0; i < o.points; ++i) {
        const PartialState z = random_chart_point(rng);
        r.max_error = std::max(r.max_error, relative(hamiltonian_full(masses, lift_to_full(z)), hamiltonian_partial(masses, z)));
    }
    for (int i = 0; i < o.points; ++i) {
        const auto [mu1, mu2] = momenta_for(o, rng);
        const ReducedState s = random_reduced_state(rng, mu1, mu2);
        r.max_error = std::max(r.max_error,
                               relative(hamiltonian_partial(masses, embed_reduced(s)), hamiltonian_reduced(masses, s)));
    }
    return r;
}

CheckResult check_invariant(const VerifyOptions& o, Sampler& rng) {
    CheckResult r{"invariant", 0.0, o.tol.value_or(1e-9), o.points, false};
    for (int i = 0; i < o.points; ++i) {
        const auto [mu1, mu2] = momenta_for(o, rng);
        const ReducedState s = random_reduced_state(rng, mu1, mu2);
        const PartialState z = embed_reduced(s, rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI));
        const double scale = std::max(1.0, mu1);
        double err = invariant_set_residual(z, mu1, mu2).cwiseAbs().maxCoeff();
        const Mat4 normal = -mu1 * plane_generator(1, 2) - mu2 * plane_generator(3, 4);
        err = std::max(err, (angular_momentum_partial(z).L - normal).cwiseAbs().maxCoeff());
        const AngularMomentum full = angular_momentum(lift_to_full(z));
        err = std::max({err, std::abs(full.mu1 - mu1), std::abs(full.mu2 - mu2)});
        r.max_error = std::max(r.max_error, err / scale);
    }
    return r;
}

CheckResult check_amatrix(const VerifyOptions& o, Sampler& rng) {
    CheckResult r{"amatrix", 0.0, o.tol.value_or(1e-9), o.points, false};
    for (int i = 0; i < o.points; ++i) {
        const auto [mu1, mu2] = momenta_for(o, rng);
        const ReducedState s = random_reduced_state(rng, mu1, mu2);
        const PartialState z = embed_reduced(s);
        const BracketMatrix a = restriction_matrix_A(z);
        const double target = std::pow(mu1 * mu1 - mu2 * mu2, 2);
        double err = std::abs(a.determinant - target) / target;
        Mat4 expected = Mat4::Zero();
        expected(0, 2) = -mu1;
        expected(0, 3) = -mu2;
        expected(1, 2) = mu2;
        expected(1, 3) = mu1;
        expected -= Mat4(expected.transpose());
        err = std::max(err, (a.matrix - expected).cwiseAbs().maxCoeff() / mu1);
        r.max_error = std::max(r.max_error, err);
    }
    return r;
}

const std::array<std::string, 4> suite_names{"symplectic", "composition", "invariant", "amatrix"};

class Output {
public:
    explicit Output(const OutputOptions& o) {
        if (!o.path.empty()) {
            file_.open(o.path);
            if (!file_) throw std::invalid_argument("cannot open output file " + o.path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

MassTriple equilibrium_masses(const EquilibriumOptions& o) {
    if (o.general) return binary_pair_masses(o.masses, o.pair[0], o.pair[1]);
    return MassTriple(o.n, 1.0, 1.0);
}

template <class F>
int guarded(std::ostream& log, F body) {
    try {
        return body();
    } catch (const SolverError& e) {
        log << "solver failure: " << e.what() << '\n';
        return exit_solver_failure;
    } catch (const DomainError& e) {
        log << "domain error: " << e.what() << '\n';
        return exit_solver_failure;
    } catch (const DegenerateMomenta& e) {
        log << "DegenerateMomenta: " << e.what() << '\n';
        return exit_invalid_config;
    } catch (const std::invalid_argument& e) {
        log << "invalid configuration: " << e.what() << '\n';
        return exit_invalid_config;
    }
}

}  // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& o) {
    if (o.points < 1) throw std::invalid_argument("verify needs at least one point");
    if (o.tol && !(*o.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (o.mu1.has_value() != o.mu2.has_value()) throw std::invalid_argument("give both mu1 and mu2 or neither");
    if (o.mu1) check_momenta(*o.mu1, *o.mu2);
    triple(o.masses);

    std::vector<CheckResult> results;
    for (const auto& name : o.checks) {
        // Each suite gets its own stream so that selecting a subset does not move the points.
        const auto suite = std::find(suite_names.begin(), suite_names.end(), name);
        if (suite == suite_names.end()) throw std::invalid_argument("unknown check " + name);
        Sampler rng(o.seed * 4 + static_cast<std::uint64_t>(suite - suite_names.begin()));
        if (name == "symplectic") {
            results.push_back(check_symplectic(o, rng));
        } else if (name == "composition") {
            results.push_back(check_composition(o, rng));
        } else if (name == "invariant") {
            results.push_back(check_invariant(o, rng));
        } else {
            results.push_back(check_amatrix(o, rng));
        }
        results.back().passed = results.back().max_error < results.back().tolerance;
    }
    return results;
}

int cmd_verify(const VerifyOptions& options, const OutputOptions& output, std::ostream& log) {
    return guarded(log, [&] {
        const auto results = run_verify(options);
        Output out(output);
        if (output.format == Format::json) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& r : results) {
                a.push_back({{"check", r.name},
                             {"max_error", r.max_error},
                             {"tolerance", r.tolerance},
                             {"points", r.points},
                             {"passed", r.passed}});
            }
            out.stream() << a.dump(2) << '\n';
        } else {
            out.stream() << "check,max_error,tolerance,points,passed\n";
            for (const auto& r : results) {
                out.stream() << r.name << ',' << format_double(r.max_error) << ',' << format_double(r.tolerance) << ','
                             << r.points << ',' << (r.passed ? "true" : "false") << '\n';
            }
        }
        for (const auto& r : results) {
            if (!r.passed) {
                log << "check failed: " << r.name << " max error " << format_double(r.max_error) << " >= "
                    << format_double(r.tolerance) << '\n';
                return static_cast<int>(exit_check_failed);
            }
        }
        return static_cast<int>(exit_ok);
    });
}

EquilibriumReport solve_equilibrium(const EquilibriumOptions& o) {
    if (!o.general) return isosceles_equilibrium(o.n, o.t);
    if (!(o.u > 0.0)) throw std::invalid_argument("u must be positive");
    if (!(o.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const MassTriple masses = equilibrium_masses(o);
    const auto mu = general_momenta(masses, o.u);
    NewtonOptions newton;
    newton.tolerance = o.tol;
    return newton_equilibrium(masses, mu[0], mu[1], general_series_equilibrium(masses, o.u), newton);
}

int cmd_equilibrium(const EquilibriumOptions& options, const OutputOptions& output, std::ostream& log) {
    return guarded(log, [&] {
        const EquilibriumReport rep = solve_equilibrium(options);
        Output out(output);
        if (output.format == Format::json) {
            out.stream() << report_json(rep).dump(2) << '\n';
        } else {
            write_report_csv(out.stream(), rep);
        }
        log << "classification " << to_string(rep.classification) << '\n';
        return static_cast<int>(exit_ok);
    });
}

int cmd_scan(const ScanOptions& o, const OutputOptions& output, std::ostream& log) {
    return guarded(log, [&] {
        if (o.mode == ScanOptions::Mode::regions) {
            const auto rows = region_map(o.n_max, o.grid);
            Output out(output);
            if (output.format == Format::json) {
                out.stream() << region_json(rows).dump(2) << '\n';
            } else {
                write_region_csv(out.stream(), rows);
            }
            return static_cast<int>(exit_ok);
        }
        std::vector<ScanRow> rows;
        if (o.mode == ScanOptions::Mode::isosceles) {
            rows = energy_momentum_scan_isosceles(o.n, log_grid(o.t_min, o.t_max, o.count), o.workers);
        } else {
            const MassTriple masses = binary_pair_masses(o.masses, o.pair[0], o.pair[1]);
            rows = energy_momentum_scan_general(masses, log_grid(o.u_min, o.u_max, o.count), o.workers);
        }
        for (const auto& r : rows) {
            if (!r.ok) log << "point " << format_double(r.param) << ": " << r.cls << '\n';
        }
        Output out(output);
        if (output.format == Format::json) {
            out.stream() << scan_json(rows).dump(2) << '\n';
        } else {
            write_scan_csv(out.stream(), rows);
        }
        return static_cast<int>(exit_ok);
    });
}

ReducedState integrate_start(const IntegrateOptions& o) {
    ReducedState s;
    if (o.q) {
        if (!o.mu1 || !o.mu2) throw std::invalid_argument("an explicit start needs mu1 and mu2");
        check_momenta(*o.mu1, *o.mu2);
        s.q = *o.q;
        s.p = o.p.value_or(Vec4::Zero());
        s.mu1 = *o.mu1;
        s.mu2 = *o.mu2;
    } else {
        const EquilibriumReport rep = solve_equilibrium(o.equilibrium);
        s.q = rep.q;
        s.mu1 = rep.mu1;
        s.mu2 = rep.mu2;
    }
    if (o.perturbation > 0.0) {
        Sampler rng(o.seed);
        const double scale = s.q.norm();
        for (int i = 0; i < 4; ++i) s.q(i) += o.perturbation * scale * rng.uniform(-1.0, 1.0);
        for (int i = 0; i < 4; ++i) s.p(i) += o.perturbation * rng.uniform(-1.0, 1.0);
    }
    return s;
}

int cmd_integrate(const IntegrateOptions& o, const OutputOptions& output, std::ostream& log) {
    return guarded(log, [&] {
        if (!(o.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
        const MassTriple masses = equilibrium_masses(o.equilibrium);
        const ReducedState start = integrate_start(o);

        IntegratorConfig config;
        config.method = o.method;
        config.abs_tol = config.rel_tol = o.tol;
        config.step = o.step;
        config.sample_interval = o.samples;
        config.validate();

        TrajectoryRecord record;
        switch (o.system) {
            case IntegrateOptions::System::reduced:
                record = integrate(reduced_field(masses, start.mu1, start.mu2), start.to_vector(), o.t_end, config);
                break;
            case IntegrateOptions::System::partial:
                record = integrate(partial_field(masses, start.mu1, start.mu2), embed_reduced(start).to_vector(),
                                   o.t_end, config);
                break;
            case IntegrateOptions::System::full:
                record = integrate(full_field(masses), lift_to_full(embed_reduced(start)).to_vector(), o.t_end, config);
                break;
        }
        if (record.exit) log << "domain exit at t = " << format_double(record.exit->time) << ": " << record.exit->reason << '\n';

        std::optional<ComparisonReport> comparison;
        if (o.compare) {
            IntegratorConfig cc = config;
            if (!(cc.sample_interval > 0.0)) cc.sample_interval = o.t_end / 100.0;
            comparison = compare_full_vs_reduced(masses, start, o.t_end, cc);
            log << "max deviation q " << format_double(comparison->max_q_deviation) << " p "
                << format_double(comparison->max_p_deviation) << '\n';
        }

        Output out(output);
        if (output.format == Format::json) {
            nlohmann::json j = trajectory_json(record);
            if (comparison) j["comparison"] = comparison_json(*comparison);
            out.stream() << j.dump() << '\n';
        } else {
            write_trajectory_csv(out.stream(), record);
            if (comparison) {
                for (const auto& [key, value] : comparison_json(*comparison).items()) {
                    out.stream() << "# " << key << ',' << (value.is_number_float() ? format_double(value.get<double>()) : value.dump()) << '\n';
                }
            }
        }
        return static_cast<int>(exit_ok);
    });
}

}  // namespace tb4
