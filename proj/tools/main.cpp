#include <array>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tb4/commands.hpp"
#include "tb4/errors.hpp"

namespace {

std::array<double, 3> to_masses(const std::vector<double>& m) { return {m[0], m[1], m[2]}; }
std::array<int, 2> to_pair(const std::vector<int>& p) { return {p[0], p[1]}; }
tb4::Vec4 to_vec4(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relative equilibria and reduced dynamics of three bodies in four dimensions"};
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    tb4::OutputOptions output;
    std::string format = "csv";
    std::uint64_t seed = 0;
    double tol = 0.0;
    app.add_option("--out", output.path, "Output file (default: standard output)");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed, "Seed for random points and perturbations");
    app.add_option("--tol", tol, "Tolerance override")->check(CLI::PositiveNumber);

    // verify
    auto* verify = app.add_subcommand("verify", "Check the coordinate reduction at random points");
    std::vector<std::string> checks{"all"};
    std::vector<double> verify_masses{1.0, 1.0, 1.0};
    double verify_mu1 = 0.0, verify_mu2 = 0.0;
    int points = 100;
    verify->add_option("--checks", checks, "symplectic, composition, invariant, amatrix or all")
        ->delimiter(',')
        ->check(CLI::IsMember({"all", "symplectic", "composition", "invariant", "amatrix"}));
    verify->add_option("-m,--masses", verify_masses, "Masses m1,m2,m3")->delimiter(',')->expected(3);
    auto* vmu1 = verify->add_option("--mu1", verify_mu1, "Fixed mu1 (default: random per point)");
    auto* vmu2 = verify->add_option("--mu2", verify_mu2, "Fixed mu2 (default: random per point)");
    verify->add_option("--points", points, "Random points per check");

    // equilibrium
    auto* equilibrium = app.add_subcommand("equilibrium", "Solve and classify a relative equilibrium");
    tb4::EquilibriumOptions eq;
    std::vector<double> eq_masses{1.0, 2.0, 3.0};
    std::vector<int> eq_pair{2, 3};
    auto* eq_iso = equilibrium->add_flag("--isosceles", "Isosceles family with masses (n, 1, 1)");
    auto* eq_gen = equilibrium->add_flag("--general", eq.general, "General-mass family near the Kepler limit");
    eq_iso->excludes(eq_gen);
    equilibrium->add_option("-n", eq.n, "Mass ratio n, masses (n, 1, 1)");
    equilibrium->add_option("-t", eq.t, "Shape parameter in (0, 1)");
    equilibrium->add_option("-m,--masses", eq_masses, "Masses m1,m2,m3")->delimiter(',')->expected(3);
    equilibrium->add_option("-u", eq.u, "Series parameter u");
    equilibrium->add_option("--pair", eq_pair, "Binary pair i,j")->delimiter(',')->expected(2);

    // scan
    auto* scan = app.add_subcommand("scan", "Energy-momentum curves and the isosceles region map");
    tb4::ScanOptions sc;
    std::vector<double> sc_masses{1.0, 2.0, 3.0};
    std::vector<int> sc_pair{2, 3};
    auto* sc_iso = scan->add_flag("--isosceles", "Isosceles family over a t grid");
    auto* sc_gen = scan->add_flag("--general", "General family over a u grid");
    auto* sc_reg = scan->add_flag("--regions", "Region map over (n, t)");
    sc_iso->excludes(sc_gen)->excludes(sc_reg);
    sc_gen->excludes(sc_reg);
    scan->add_option("-n", sc.n, "Mass ratio n, masses (n, 1, 1)");
    scan->add_option("--t-min", sc.t_min);
    scan->add_option("--t-max", sc.t_max);
    scan->add_option("-m,--masses", sc_masses, "Masses m1,m2,m3")->delimiter(',')->expected(3);
    scan->add_option("--pair", sc_pair, "Binary pair i,j")->delimiter(',')->expected(2);
    scan->add_option("--u-min", sc.u_min);
    scan->add_option("--u-max", sc.u_max);
    scan->add_option("--count", sc.count, "Grid points (log-spaced)");
    scan->add_option("--n-max", sc.n_max);
    scan->add_option("--grid", sc.grid, "Cells per axis of the region map");
    scan->add_option("--workers", sc.workers, "Worker threads (0 = all cores)");

    // integrate
    auto* integ = app.add_subcommand("integrate", "Integrate the reduced, partial or full system");
    tb4::IntegrateOptions in;
    std::string system = "reduced", method = "dopri";
    std::vector<double> in_masses{1.0, 2.0, 3.0}, in_q, in_p;
    std::vector<int> in_pair{2, 3};
    double in_mu1 = 0.0, in_mu2 = 0.0;
    integ->add_option("--system", system)->check(CLI::IsMember({"reduced", "partial", "full"}));
    auto* in_gen = integ->add_flag("--general", in.equilibrium.general, "Start near a general-mass equilibrium");
    integ->add_flag("--isosceles", "Start near an isosceles equilibrium (default)")->excludes(in_gen);
    integ->add_option("-n", in.equilibrium.n);
    integ->add_option("-t", in.equilibrium.t);
    integ->add_option("-m,--masses", in_masses)->delimiter(',')->expected(3);
    integ->add_option("-u", in.equilibrium.u);
    integ->add_option("--pair", in_pair)->delimiter(',')->expected(2);
    auto* iq = integ->add_option("--q", in_q, "Explicit start shape q1,q2,q3,q4")->delimiter(',')->expected(4);
    auto* ip = integ->add_option("--p", in_p, "Explicit start momenta p1,p2,p3,p4")->delimiter(',')->expected(4);
    auto* imu1 = integ->add_option("--mu1", in_mu1);
    auto* imu2 = integ->add_option("--mu2", in_mu2);
    integ->add_option("--perturb", in.perturbation, "Size of a seeded random perturbation of the start");
    integ->add_option("--t-end", in.t_end);
    integ->add_option("--method", method)->check(CLI::IsMember({"dopri", "midpoint"}));
    integ->add_option("--step", in.step, "Initial (adaptive) or fixed (midpoint) step");
    integ->add_option("--samples", in.samples, "Sample interval (0 = every step)");
    integ->add_flag("--compare", in.compare, "Also run the full-vs-reduced comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return tb4::exit_invalid_config;
    }

    output.format = format == "json" ? tb4::Format::json : tb4::Format::csv;
    const bool has_tol = app.get_option("--tol")->count() > 0;

    try {
        if (*verify) {
            tb4::VerifyOptions o;
            if (!(checks.size() == 1 && checks[0] == "all")) o.checks = checks;
            o.masses = to_masses(verify_masses);
            if (vmu1->count() > 0) o.mu1 = verify_mu1;
            if (vmu2->count() > 0) o.mu2 = verify_mu2;
            o.points = points;
            o.seed = seed;
            if (has_tol) o.tol = tol;
            return tb4::cmd_verify(o, output, std::cerr);
        }
        if (*equilibrium) {
            eq.masses = to_masses(eq_masses);
            eq.pair = to_pair(eq_pair);
            if (has_tol) eq.tol = tol;
            return tb4::cmd_equilibrium(eq, output, std::cerr);
        }
        if (*scan) {
            sc.mode = *sc_gen ? tb4::ScanOptions::Mode::general
                      : *sc_reg ? tb4::ScanOptions::Mode::regions
                                : tb4::ScanOptions::Mode::isosceles;
            sc.masses = to_masses(sc_masses);
            sc.pair = to_pair(sc_pair);
            return tb4::cmd_scan(sc, output, std::cerr);
        }
        in.system = system == "full"      ? tb4::IntegrateOptions::System::full
                    : system == "partial" ? tb4::IntegrateOptions::System::partial
                                          : tb4::IntegrateOptions::System::reduced;
        in.method = method == "midpoint" ? tb4::Method::implicit_midpoint : tb4::Method::dormand_prince;
        in.equilibrium.masses = to_masses(in_masses);
        in.equilibrium.pair = to_pair(in_pair);
        if (iq->count() > 0) in.q = to_vec4(in_q);
        if (ip->count() > 0) in.p = to_vec4(in_p);
        if (imu1->count() > 0) in.mu1 = in_mu1;
        if (imu2->count() > 0) in.mu2 = in_mu2;
        in.seed = seed;
        if (has_tol) in.tol = tol;
        return tb4::cmd_integrate(in, output, std::cerr);
    } catch (const tb4::DegenerateMomenta& e) {
        std::cerr << "DegenerateMomenta: " << e.what() << '\n';
        return tb4::exit_invalid_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return tb4::exit_invalid_config;
    }
}
