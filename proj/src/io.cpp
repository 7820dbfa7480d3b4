#include "tb4/io.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace tb4 {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

namespace {

nlohmann::json number(double x) {
    // JSON has no NaN; null marks a missing value.
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::json numbers(const double* data, std::size_t n) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) a.push_back(number(data[i]));
    return a;
}

nlohmann::json exit_json(const std::optional<DomainExit>& exit) {
    if (!exit) return nullptr;
    return {{"reason", exit->reason}, {"time", number(exit->time)}};
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
    out << "t";
    for (const auto& n : record.state_names) out << ',' << n;
    for (const auto& n : record.monitor_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        out << format_double(record.times[i]);
        for (Eigen::Index k = 0; k < record.states[i].size(); ++k) out << ',' << format_double(record.states[i](k));
        if (i < record.monitors.size()) {
            for (double m : record.monitors[i]) out << ',' << format_double(m);
        }
        out << '\n';
    }
    if (record.exit) {
        out << "# domain_exit," << record.exit->reason << ',' << format_double(record.exit->time) << '\n';
    }
}

nlohmann::json trajectory_json(const TrajectoryRecord& record) {
    nlohmann::json j;
    j["state_names"] = record.state_names;
    j["monitor_names"] = record.monitor_names;
    j["t"] = numbers(record.times.data(), record.times.size());
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : record.states) states.push_back(numbers(s.data(), static_cast<std::size_t>(s.size())));
    j["states"] = states;
    nlohmann::json monitors = nlohmann::json::array();
    for (const auto& m : record.monitors) monitors.push_back(numbers(m.data(), m.size()));
    j["monitors"] = monitors;
    j["domain_exit"] = exit_json(record.exit);
    j["accepted_steps"] = record.accepted_steps;
    j["rejected_steps"] = record.rejected_steps;
    return j;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
    out << "param,mu1,mu2,h,b,neg_inv_h,class";
    for (int i = 1; i <= 8; ++i) out << ",eig" << i;
    out << '\n';
    for (const auto& r : rows) {
        out << format_double(r.param) << ',' << format_double(r.mu1) << ',' << format_double(r.mu2) << ','
            << format_double(r.h) << ',' << format_double(r.b) << ',' << format_double(r.neg_inv_h) << ',' << r.cls;
        for (double e : r.eig) out << ',' << format_double(e);
        out << '\n';
    }
}

nlohmann::json scan_json(const std::vector<ScanRow>& rows) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["param"] = number(r.param);
        j["mu1"] = number(r.mu1);
        j["mu2"] = number(r.mu2);
        j["h"] = number(r.h);
        j["b"] = number(r.b);
        j["neg_inv_h"] = number(r.neg_inv_h);
        j["class"] = r.cls;
        for (int i = 0; i < 8; ++i) j["eig" + std::to_string(i + 1)] = number(r.eig[static_cast<std::size_t>(i)]);
        a.push_back(j);
    }
    return a;
}

void write_region_csv(std::ostream& out, const std::vector<RegionRow>& rows) {
    out << "n,t,p1,p2,region,label\n";
    for (const auto& r : rows) {
        out << format_double(r.n) << ',' << format_double(r.t) << ',' << format_double(r.poly.p1) << ','
            << format_double(r.poly.p2) << ',' << r.region.id << ',' << r.region.label << '\n';
    }
}

nlohmann::json region_json(const std::vector<RegionRow>& rows) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows) {
        a.push_back({{"n", number(r.n)},
                     {"t", number(r.t)},
                     {"p1", number(r.poly.p1)},
                     {"p2", number(r.poly.p2)},
                     {"region", r.region.id},
                     {"label", r.region.label}});
    }
    return a;
}

nlohmann::json report_json(const EquilibriumReport& r) {
    nlohmann::json j;
    j["masses"] = {r.masses.m1(), r.masses.m2(), r.masses.m3()};
    j["q"] = numbers(r.q.data(), 4);
    j["mu1"] = number(r.mu1);
    j["mu2"] = number(r.mu2);
    j["eigenvalues"] = numbers(r.eigenvalues.data(), 8);
    j["negative_q"] = r.negative_q;
    j["negative_p"] = r.negative_p;
    j["classification"] = to_string(r.classification);
    j["keff_coefficient"] = number(r.keff_coefficient);
    j["omega1"] = number(r.omega1);
    j["omega2"] = number(r.omega2);
    j["kepler1"] = number(r.kepler1);
    j["kepler2"] = number(r.kepler2);
    j["energy"] = number(r.energy);
    j["h"] = number(r.h);
    j["b"] = number(r.b);
    j["gradient_residual"] = number(r.gradient_residual);
    j["iterations"] = r.iterations;
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 8; ++i) {
        const Vec8 row = r.hessian.row(i).transpose();
        rows.push_back(numbers(row.data(), 8));
    }
    j["hessian"] = rows;
    return j;
}

void write_report_csv(std::ostream& out, const EquilibriumReport& r) {
    out << "key,value\n";
    out << "m1," << format_double(r.masses.m1()) << "\nm2," << format_double(r.masses.m2()) << "\nm3,"
        << format_double(r.masses.m3()) << '\n';
    for (int i = 0; i < 4; ++i) out << 'q' << i + 1 << ',' << format_double(r.q(i)) << '\n';
    out << "mu1," << format_double(r.mu1) << "\nmu2," << format_double(r.mu2) << '\n';
    for (int i = 0; i < 8; ++i) out << "eig" << i + 1 << ',' << format_double(r.eigenvalues(i)) << '\n';
    out << "negative_q," << r.negative_q << "\nnegative_p," << r.negative_p << '\n';
    out << "classification," << to_string(r.classification) << '\n';
    out << "keff_coefficient," << format_double(r.keff_coefficient) << '\n';
    out << "omega1," << format_double(r.omega1) << "\nomega2," << format_double(r.omega2) << '\n';
    out << "kepler1," << format_double(r.kepler1) << "\nkepler2," << format_double(r.kepler2) << '\n';
    out << "energy," << format_double(r.energy) << "\nh," << format_double(r.h) << "\nb," << format_double(r.b) << '\n';
    out << "gradient_residual," << format_double(r.gradient_residual) << "\niterations," << r.iterations << '\n';
}

nlohmann::json comparison_json(const ComparisonReport& r) {
    return {{"max_q_deviation", number(r.max_q_deviation)},
            {"max_p_deviation", number(r.max_p_deviation)},
            {"max_invariant_residual", number(r.max_invariant_residual)},
            {"max_mu_drift", number(r.max_mu_drift)},
            {"max_energy_drift", number(r.max_energy_drift)},
            {"samples", r.samples},
            {"domain_exit", exit_json(r.exit)}};
}

}  // namespace tb4
