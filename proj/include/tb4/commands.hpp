#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tb4/dynamics.hpp"
#include "tb4/equilibria.hpp"

namespace tb4 {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_invalid_config = 2, exit_solver_failure = 3 };

enum class Format { csv, json };

struct OutputOptions {
    /// Empty means standard output.
    std::string path;
    Format format = Format::csv;
};

struct VerifyOptions {
    /// Any of symplectic, composition, invariant, amatrix.
    std::vector<std::string> checks{"symplectic", "composition", "invariant", "amatrix"};
    std::array<double, 3> masses{1.0, 1.0, 1.0};
    std::optional<double> mu1;
    std::optional<double> mu2;
    int points = 100;
    std::uint64_t seed = 0;
    /// Overrides every per-check tolerance when set.
    std::optional<double> tol;
};

struct CheckResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    int points = 0;
    bool passed = false;
};

/// Runs the requested suites; throws std::invalid_argument or
/// DegenerateMomenta on a bad configuration.
std::vector<CheckResult> run_verify(const VerifyOptions& options);

struct EquilibriumOptions {
    bool general = false;
    double n = 1.0;
    double t = 0.1;
    std::array<double, 3> masses{1.0, 2.0, 3.0};
    double u = 1e-2;
    std::array<int, 2> pair{2, 3};
    double tol = 1e-12;
};

EquilibriumReport solve_equilibrium(const EquilibriumOptions& options);

struct ScanOptions {
    enum class Mode { isosceles, general, regions } mode = Mode::isosceles;
    double n = 1.0;
    double t_min = 1e-3;
    double t_max = 0.99;
    std::array<double, 3> masses{1.0, 2.0, 3.0};
    std::array<int, 2> pair{2, 3};
    double u_min = 1e-3;
    double u_max = 0.3;
    int count = 200;
    double n_max = 5.0;
    int grid = 50;
    int workers = 0;
};

struct IntegrateOptions {
    enum class System { reduced, full, partial } system = System::reduced;
    EquilibriumOptions equilibrium;
    /// Explicit reduced start; overrides the equilibrium start when both are set.
    std::optional<Vec4> q;
    std::optional<Vec4> p;
    std::optional<double> mu1;
    std::optional<double> mu2;
    /// Size of a seeded random perturbation of the start.
    double perturbation = 0.0;
    std::uint64_t seed = 0;
    double t_end = 1.0;
    Method method = Method::dormand_prince;
    double step = 1e-3;
    double tol = 1e-12;
    double samples = 0.0;
    bool compare = false;
};

/// Start state of an integrate run in reduced coordinates.
ReducedState integrate_start(const IntegrateOptions& options);

/// Each cmd_* writes its result to the output and diagnostics to `log`, and
/// returns an ExitCode.
int cmd_verify(const VerifyOptions& options, const OutputOptions& output, std::ostream& log);
int cmd_equilibrium(const EquilibriumOptions& options, const OutputOptions& output, std::ostream& log);
int cmd_scan(const ScanOptions& options, const OutputOptions& output, std::ostream& log);
int cmd_integrate(const IntegrateOptions& options, const OutputOptions& output, std::ostream& log);

}  // namespace tb4
