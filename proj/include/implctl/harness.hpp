#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "implctl/controllers.hpp"
#include "implctl/path.hpp"
#include "implctl/vehicle.hpp"

namespace implctl {

struct ControllerSpec {
    Method method = Method::Optimal;
    OptimalParams optimal;
    BaselineParams baseline;
    std::string preset;  ///< name of the table preset it came from, if any
};

struct NoiseConfig {
    bool enabled = false;
    double y_std = 0.01;       ///< m
    double theta_std = 0.005;  ///< rad
    double omega_std = 0.01;   ///< rad/s
};

struct RunConfig {
    double length = 0.0;  ///< travelled abscissa, m; <= 0 means "to the end of the path"
    double dt = 0.01;
    double control_period = 0.1;
    double initial_s = 0.0;
    /// Initial lateral deviation of O. When unset it is derived from initial_e_I.
    std::optional<double> initial_y;
    double initial_e_I = 0.5;
    double initial_theta = 0.0;
    double initial_steer = 0.0;
    std::uint64_t seed = 1;
    double convergence_window = 5.0;  ///< m excluded from the summary statistics
    double overshoot_margin = 3.0;    ///< junction window is ±(s_h + margin)
};

struct Scenario {
    std::string path_preset = "exp1";  ///< informational; `path` is authoritative
    PathSpec path = implctl::path_preset("exp1");
    VehicleConfig vehicle;
    ImplementConfig implement{-2.0, -0.5};
    ControllerSpec controller;
    RunConfig run;
    NoiseConfig noise;

    /// Checks every cross-field invariant; throws ConfigError naming the key.
    void validate() const;
    double initial_y() const;
    double run_length(const ReferencePath& path) const;
    Controller make_controller() const;
};

struct LogRecord {
    double t = 0.0;
    double s = 0.0;
    double y = 0.0;
    double theta_tilde = 0.0;
    double e_I_exact = 0.0;
    double e_I_measured = 0.0;
    double delta_cmd = 0.0;
    double delta_actual = 0.0;
    double theta_d = 0.0;
    std::string segment;
    std::string fault;  ///< empty, or a fault code without commas
};

struct FaultRecord {
    double t = 0.0;
    double s = 0.0;
    std::string code;
    std::string message;
};

struct RunLog {
    std::vector<LogRecord> records;
    std::vector<FaultRecord> faults;
    bool aborted = false;
    std::string method;
    bool reconstruction = false;
    double horizon = 0.0;
    std::vector<double> junctions;  ///< curvature discontinuities of the path
};

struct Stats {
    std::size_t count = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

struct SegmentStats {
    std::string label;
    Stats stats;
};

struct JunctionOvershoot {
    double s = 0.0;
    double half_width = 0.0;
    double overshoot = 0.0;
};

struct RunSummary {
    Stats abs_e_I;
    std::vector<SegmentStats> segments;
    std::vector<JunctionOvershoot> junctions;
    double max_overshoot = 0.0;
    std::size_t fault_count = 0;
    std::vector<FaultRecord> faults;
    bool aborted = false;
    std::string method;
    bool reconstruction = false;
};

struct SummaryOptions {
    double convergence_window = 5.0;
    /// Junction window half-width; unset means log.horizon + 3 m.
    std::optional<double> overshoot_half_width;
};

/// Linear interpolation between order statistics; `sorted` must be ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);
Stats compute_stats(std::vector<double> values);

RunLog run_scenario(const Scenario& scn);
RunSummary summarize(const RunLog& log, const SummaryOptions& opts = {});

// Named presets. The comparison set covers six (placement, method) pairs, the
// sweep set the seven horizons.
struct ControllerPreset {
    std::string name;
    std::string placement;  ///< "front" or "rear"
    ControllerSpec controller;
    ImplementConfig implement;
};
std::vector<ControllerPreset> table1_presets();
std::vector<ControllerPreset> table2_presets();
ControllerPreset controller_preset(const std::string& name);
std::vector<std::string> preset_names();

struct SweepPoint {
    OptimalParams params;
    RunSummary summary;
};

struct SweepResult {
    std::vector<SweepPoint> points;  ///< ordered by s_h
    double argmin_s_h = 0.0;
};

Scenario sweep_base_scenario();
SweepResult sweep_horizon(const Scenario& base, const std::vector<OptimalParams>& rows,
                          int jobs = 1);

struct ComparisonEntry {
    std::string preset;
    std::string placement;
    Method method = Method::Optimal;
    RunLog log;
    RunSummary summary;
};

struct PlacementRatios {
    std::string placement;
    double optimal_over_backstepping = 0.0;
    double optimal_over_lateral_servoing = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonEntry> entries;
    std::vector<PlacementRatios> ratios;
};

Scenario compare_base_scenario();
/// Runs every comparison preset whose placement and method are selected.
/// The overshoot window of each placement is that of its optimal preset.
ComparisonTable compare_methods(const Scenario& base, const std::vector<Method>& methods,
                                const std::vector<std::string>& placements, int jobs = 1);

// Serialization.
inline constexpr const char* kCsvHeader =
    "t_s,s_m,y_m,theta_tilde_rad,e_I_exact_m,e_I_measured_m,delta_cmd_rad,delta_actual_rad,"
    "theta_d_rad,segment,fault";

void write_csv(std::ostream& os, const RunLog& log);
/// Parses records written by write_csv. Throws ConfigError on a bad header or row.
RunLog read_csv(std::istream& is);

nlohmann::json to_json(const Stats& s);
nlohmann::json to_json(const RunSummary& s);
nlohmann::json to_json(const SweepResult& r);
nlohmann::json to_json(const ComparisonTable& t);
nlohmann::json to_json(const OptimalParams& p);

}  // namespace implctl
