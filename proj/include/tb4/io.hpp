#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tb4/dynamics.hpp"
#include "tb4/equilibria.hpp"

namespace tb4 {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

/// Columns: t, state components, monitors.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);
nlohmann::json trajectory_json(const TrajectoryRecord& record);

/// Header: param,mu1,mu2,h,b,neg_inv_h,class,eig1..eig8
void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);
nlohmann::json scan_json(const std::vector<ScanRow>& rows);

/// Header: n,t,p1,p2,region,label
void write_region_csv(std::ostream& out, const std::vector<RegionRow>& rows);
nlohmann::json region_json(const std::vector<RegionRow>& rows);

nlohmann::json report_json(const EquilibriumReport& report);
/// One key,value pair per line.
void write_report_csv(std::ostream& out, const EquilibriumReport& report);

nlohmann::json comparison_json(const ComparisonReport& report);

}  // namespace tb4
