#include "implctl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "implctl/errors.hpp"

namespace implctl {

// ---------------------------------------------------------------- scenario

void Scenario::validate() const {
    vehicle.validate();
    const ReferencePath p = build_path(path);
    if (!(std::abs(implement.I_y) < p.min_arc_radius())) {
        throw ConfigError("|I_y_m| must be smaller than the minimum arc radius", "I_y_m");
    }
    if (controller.method == Method::Optimal) {
        controller.optimal.validate();
    } else {
        controller.baseline.validate();
    }
    if (!(run.dt > 0.0)) throw ConfigError("dt_s must be > 0", "dt_s");
    if (!(run.control_period >= run.dt)) {
        throw ConfigError("control_period_s must be >= dt_s", "control_period_s");
    }
    const double ratio = run.control_period / run.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("control_period_s must be an integer multiple of dt_s",
                          "control_period_s");
    }
    if (!(run.initial_s >= 0.0 && run.initial_s < p.total_length())) {
        throw ConfigError("initial_s_m must lie in [0, total_length)", "initial_s_m");
    }
    if (run.length > 0.0 && run.initial_s + run.length > p.total_length() + 1e-9) {
        throw ConfigError("length_m exceeds the path length", "length_m");
    }
    if (!(std::abs(run.initial_theta) < std::numbers::pi / 2.0)) {
        throw ConfigError("initial_theta_rad must satisfy |theta| < pi/2", "initial_theta_rad");
    }
    if (!(run.convergence_window >= 0.0)) {
        throw ConfigError("convergence_window_m must be >= 0", "convergence_window_m");
    }
    if (!(run.overshoot_margin >= 0.0)) {
        throw ConfigError("overshoot_margin_m must be >= 0", "overshoot_margin_m");
    }
    if (noise.y_std < 0.0) throw ConfigError("y_std_m must be >= 0", "y_std_m");
    if (noise.theta_std < 0.0) throw ConfigError("theta_std_rad must be >= 0", "theta_std_rad");
    if (noise.omega_std < 0.0) throw ConfigError("omega_std_rad_s must be >= 0", "omega_std_rad_s");
}

double Scenario::initial_y() const {
    if (run.initial_y) {
        return *run.initial_y;
    }
    // Invert the measured-error formula at the initial heading.
    return run.initial_e_I - implement.I_s * std::sin(run.initial_theta) -
           implement.I_y * std::cos(run.initial_theta);
}

double Scenario::run_length(const ReferencePath& p) const {
    return run.length > 0.0 ? run.length : p.total_length() - run.initial_s;
}

Controller Scenario::make_controller() const {
    if (controller.method == Method::Optimal) {
        return Controller(controller.optimal, implement, vehicle);
    }
    return Controller(controller.method, controller.baseline, implement, vehicle);
}

// ---------------------------------------------------------------- simulation

namespace {

LogRecord make_record(double t, const FrenetState& f, const VehiclePose& pose,
                      const ImplementConfig& imp, const ReferencePath& path, double delta_cmd,
                      double theta_d) {
    LogRecord r;
    r.t = t;
    r.s = f.s;
    r.y = f.y;
    r.theta_tilde = f.theta_tilde;
    r.e_I_exact = implement_error_exact(pose, imp, path);
    r.e_I_measured = implement_error_measured(f, imp);
    r.delta_cmd = delta_cmd;
    r.delta_actual = pose.steer;
    r.theta_d = theta_d;
    r.segment = path.segment_label(path.segment_index(f.s));
    return r;
}

}  // namespace

RunLog run_scenario(const Scenario& scn) {
    scn.validate();
    const ReferencePath path = build_path(scn.path);
    Controller controller = scn.make_controller();

    RunLog log;
    log.method = to_string(controller.method());
    log.reconstruction = controller.is_reconstruction();
    log.horizon = controller.horizon();
    log.junctions = path.curvature_junctions();

    const VehicleConfig& cfg = scn.vehicle;
    const double s_end = scn.run.initial_s + scn.run_length(path);
    const auto steps_per_control =
        static_cast<long>(std::lround(scn.run.control_period / scn.run.dt));
    // Generous wall on simulated time so a controller that stalls still terminates.
    const double t_max = 3.0 * (s_end - scn.run.initial_s) / cfg.speed + 30.0;

    std::mt19937_64 rng(scn.run.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    FrenetState frenet{scn.run.initial_s, scn.initial_y(), scn.run.initial_theta};
    VehiclePose pose = pose_from_frenet(path, frenet, scn.run.initial_steer);
    double delta_cmd = scn.run.initial_steer;
    double theta_d = 0.0;

    auto fault = [&](double t, double s, std::string code, std::string message) {
        log.faults.push_back({t, s, std::move(code), std::move(message)});
    };

    const double alpha0 = 1.0 - path.curvature_at(frenet.s) * frenet.y;
    if (std::abs(alpha0) < kSingularityEps) {
        LogRecord r;
        r.t = 0.0;
        r.s = frenet.s;
        r.y = frenet.y;
        r.theta_tilde = frenet.theta_tilde;
        r.delta_cmd = delta_cmd;
        r.delta_actual = pose.steer;
        r.segment = path.segment_label(path.segment_index(frenet.s));
        r.fault = "plant_singularity";
        // Projection at the osculating-circle center is meaningless; report the nominal offset.
        r.e_I_measured = implement_error_measured(frenet, scn.implement);
        r.e_I_exact = r.e_I_measured;
        log.records.push_back(r);
        fault(0.0, frenet.s, "plant_singularity", "initial state at |1 - c*y| < 1e-6");
        log.aborted = true;
        return log;
    }

    double t = 0.0;
    for (long i = 0;; ++i) {
        std::string record_fault;
        if (i % steps_per_control == 0) {
            Measurements meas;
            FrenetState seen = frenet;
            double omega_noise = 0.0;
            if (scn.noise.enabled) {
                seen.y += scn.noise.y_std * gauss(rng);
                seen.theta_tilde = wrap_angle(seen.theta_tilde + scn.noise.theta_std * gauss(rng));
                omega_noise = scn.noise.omega_std * gauss(rng);
            }
            meas.frenet = seen;
            meas.steer = pose.steer;
            meas.speed = cfg.speed;
            meas.curvature_now = path.curvature_at(frenet.s);
            meas.curvature_at_horizon = path.curvature_clamped(frenet.s + controller.horizon());
            meas.e_I = implement_error_measured(seen, scn.implement);
            ControlCommand cmd;
            try {
                meas.omega_bar =
                    yaw_rate_from_steer(pose.steer, seen, meas.curvature_now, cfg) + omega_noise;
                cmd = controller.step(meas);
            } catch (const SingularityError& e) {
                cmd = controller.step(meas);  // the controller's own guard holds the last command
                if (!cmd.fault) cmd.fault = e.what();
            }
            if (cmd.fault) {
                record_fault = "controller_hold";
                fault(t, frenet.s, record_fault, *cmd.fault);
            }
            delta_cmd = cmd.delta_desired;
            theta_d = cmd.theta_desired;
        }
        LogRecord rec = make_record(t, frenet, pose, scn.implement, path, delta_cmd, theta_d);
        rec.fault = record_fault;
        log.records.push_back(std::move(rec));

        if (frenet.s >= s_end) {
            break;
        }
        if (t > t_max) {
            fault(t, frenet.s, "timeout", "run did not reach its end abscissa");
            log.records.back().fault = "timeout";
            log.aborted = true;
            break;
        }

        const StepResult next = step(pose, frenet, delta_cmd, scn.run.dt, path, cfg);
        t = static_cast<double>(i + 1) * scn.run.dt;
        pose = next.pose;
        frenet = next.frenet;
        if (next.fault) {
            LogRecord r;
            r.t = t;
            r.s = frenet.s;
            r.y = frenet.y;
            r.theta_tilde = frenet.theta_tilde;
            r.e_I_measured = implement_error_measured(frenet, scn.implement);
            r.e_I_exact = implement_error_exact(pose, scn.implement, path);
            r.delta_cmd = delta_cmd;
            r.delta_actual = pose.steer;
            r.theta_d = theta_d;
            r.segment = path.segment_label(path.segment_index(frenet.s));
            r.fault = "plant_singularity";
            log.records.push_back(r);
            fault(t, frenet.s, "plant_singularity", *next.fault);
            log.aborted = true;
            break;
        }
    }
    return log;
}

// ---------------------------------------------------------------- statistics

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Stats compute_stats(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    Stats s;
    s.count = values.size();
    s.q25 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q75 = quantile_sorted(values, 0.75);
    s.max = values.back();
    return s;
}

RunSummary summarize(const RunLog& log, const SummaryOptions& opts) {
    if (log.records.empty()) {
        throw DomainError("cannot summarize an empty log");
    }
    RunSummary out;
    out.method = log.method;
    out.reconstruction = log.reconstruction;
    out.aborted = log.aborted;
    out.faults = log.faults;
    out.fault_count = log.faults.size();

    const double s_start = log.records.front().s;
    std::vector<double> kept;
    std::vector<double> all;
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> by_segment;
    for (const auto& r : log.records) {
        const double a = std::abs(r.e_I_exact);
        all.push_back(a);
        if (r.s >= s_start + opts.convergence_window) {
            kept.push_back(a);
        }
        auto [it, inserted] = by_segment.try_emplace(r.segment);
        if (inserted) order.push_back(r.segment);
        it->second.push_back(a);
    }
    out.abs_e_I = compute_stats(kept.empty() ? all : kept);
    for (const auto& label : order) {
        out.segments.push_back({label, compute_stats(by_segment[label])});
    }

    const double half = opts.overshoot_half_width.value_or(log.horizon + 3.0);
    for (const double sj : log.junctions) {
        JunctionOvershoot j{sj, half, 0.0};
        for (const auto& r : log.records) {
            if (r.s >= sj - half && r.s <= sj + half) {
                j.overshoot = std::max(j.overshoot, std::abs(r.e_I_exact));
            }
        }
        out.max_overshoot = std::max(out.max_overshoot, j.overshoot);
        out.junctions.push_back(j);
    }
    return out;
}

// ---------------------------------------------------------------- presets

namespace {

ControllerPreset optimal_preset(std::string name, std::string placement, ImplementConfig imp,
                                OptimalParams p) {
    ControllerSpec c;
    c.method = Method::Optimal;
    c.optimal = p;
    c.preset = name;
    return {std::move(name), std::move(placement), c, imp};
}

ControllerPreset baseline_preset(std::string name, std::string placement, Method m,
                                 ImplementConfig imp, BaselineParams p) {
    ControllerSpec c;
    c.method = m;
    c.baseline = p;
    c.preset = name;
    return {std::move(name), std::move(placement), c, imp};
}

template <class T>
std::vector<T> run_parallel(std::vector<std::function<T()>> tasks, int jobs) {
    std::vector<T> out;
    out.reserve(tasks.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t begin = 0; begin < tasks.size(); begin += width) {
        std::vector<std::future<T>> batch;
        for (std::size_t i = begin; i < std::min(tasks.size(), begin + width); ++i) {
            batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                       tasks[i]));
        }
        for (auto& f : batch) out.push_back(f.get());
    }
    return out;
}

}  // namespace

std::vector<ControllerPreset> table1_presets() {
    const ImplementConfig rear{-2.0, -0.5};
    const ImplementConfig front{2.0, -0.5};
    // No separate lateral-servo gains exist; it reuses the backstepping gains
    // of the same placement.
    const BaselineParams rear_gains{0.2, 0.6};
    const BaselineParams front_gains{0.1, 0.5};
    return {
        baseline_preset("table1_rear_lateral_servoing", "rear", Method::LateralServoing, rear,
                        rear_gains),
        baseline_preset("table1_rear_backstepping", "rear", Method::Backstepping, rear, rear_gains),
        optimal_preset("table1_rear_optimal", "rear", rear, {0.1, 0.6, 2.0, 0.15}),
        baseline_preset("table1_front_lateral_servoing", "front", Method::LateralServoing, front,
                        front_gains),
        baseline_preset("table1_front_backstepping", "front", Method::Backstepping, front,
                        front_gains),
        optimal_preset("table1_front_optimal", "front", front, {0.25, 0.3, 1.5, 0.15}),
    };
}

std::vector<ControllerPreset> table2_presets() {
    const ImplementConfig rear{-2.0, -0.5};
    struct Row {
        const char* name;
        double s_h, lambda, k_theta;
    };
    constexpr Row rows[] = {
        {"table2_sh_0.5", 0.5, 0.15, 0.35},  {"table2_sh_1.0", 1.0, 0.15, 0.35},
        {"table2_sh_1.5", 1.5, 0.175, 0.35}, {"table2_sh_2.0", 2.0, 0.175, 0.4},
        {"table2_sh_2.5", 2.5, 0.2, 0.4},    {"table2_sh_3.0", 3.0, 0.2, 0.6},
        {"table2_sh_3.5", 3.5, 0.2, 0.6},
    };
    std::vector<ControllerPreset> out;
    for (const auto& r : rows) {
        out.push_back(optimal_preset(r.name, "rear", rear, {r.lambda, r.k_theta, r.s_h, 0.10}));
    }
    return out;
}

ControllerPreset controller_preset(const std::string& name) {
    for (auto&& list : {table1_presets(), table2_presets()}) {
        for (const auto& p : list) {
            if (p.name == name) return p;
        }
    }
    throw ConfigError("unknown controller preset '" + name + "'", "preset");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (auto&& list : {table1_presets(), table2_presets()}) {
        for (const auto& p : list) out.push_back(p.name);
    }
    return out;
}

// ---------------------------------------------------------------- experiments

Scenario sweep_base_scenario() {
    Scenario scn;
    scn.path_preset = "exp2";
    scn.path = path_preset("exp2");
    scn.implement = {-2.0, -0.5};
    const auto p = controller_preset("table2_sh_2.0");
    scn.controller = p.controller;
    return scn;
}

SweepResult sweep_horizon(const Scenario& base, const std::vector<OptimalParams>& rows, int jobs) {
    std::vector<std::function<SweepPoint()>> tasks;
    for (const auto& row : rows) {
        tasks.emplace_back([base, row] {
            Scenario scn = base;
            scn.controller.method = Method::Optimal;
            scn.controller.optimal = row;
            scn.controller.preset.clear();
            SweepPoint pt{row, {}};
            try {
                const RunLog log = run_scenario(scn);
                pt.summary = summarize(log, {scn.run.convergence_window,
                                             row.s_h + scn.run.overshoot_margin});
            } catch (const std::exception& e) {
                pt.summary.aborted = true;
                pt.summary.fault_count = 1;
                pt.summary.faults.push_back({0.0, 0.0, "row_error", e.what()});
                pt.summary.abs_e_I.median = std::numeric_limits<double>::infinity();
            }
            return pt;
        });
    }
    SweepResult out;
    out.points = run_parallel(std::move(tasks), jobs);
    std::stable_sort(out.points.begin(), out.points.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.params.s_h < b.params.s_h; });
    if (!out.points.empty()) {
        const auto best = std::min_element(out.points.begin(), out.points.end(),
                                           [](const SweepPoint& a, const SweepPoint& b) {
                                               return a.summary.abs_e_I.median <
                                                      b.summary.abs_e_I.median;
                                           });
        out.argmin_s_h = best->params.s_h;
    }
    return out;
}

Scenario compare_base_scenario() {
    Scenario scn;
    scn.path_preset = "exp1";
    scn.path = path_preset("exp1");
    return scn;
}

ComparisonTable compare_methods(const Scenario& base, const std::vector<Method>& methods,
                                const std::vector<std::string>& placements, int jobs) {
    std::vector<ControllerPreset> selected;
    std::map<std::string, double> window;
    for (const auto& p : table1_presets()) {
        if (p.controller.method == Method::Optimal) {
            window[p.placement] = p.controller.optimal.s_h + base.run.overshoot_margin;
        }
        const bool m = std::find(methods.begin(), methods.end(), p.controller.method) != methods.end();
        const bool pl = std::find(placements.begin(), placements.end(), p.placement) != placements.end();
        if (m && pl) selected.push_back(p);
    }

    std::vector<std::function<ComparisonEntry()>> tasks;
    for (const auto& p : selected) {
        const double half = window.at(p.placement);
        tasks.emplace_back([base, p, half] {
            Scenario scn = base;
            scn.controller = p.controller;
            scn.implement = p.implement;
            ComparisonEntry e;
            e.preset = p.name;
            e.placement = p.placement;
            e.method = p.controller.method;
            e.log = run_scenario(scn);
            e.summary = summarize(e.log, {scn.run.convergence_window, half});
            return e;
        });
    }

    ComparisonTable table;
    table.entries = run_parallel(std::move(tasks), jobs);
    for (const auto& placement : placements) {
        std::map<Method, double> peak;
        for (const auto& e : table.entries) {
            if (e.placement == placement) peak[e.method] = e.summary.max_overshoot;
        }
        if (!peak.contains(Method::Optimal)) continue;
        PlacementRatios r{placement, std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
        if (peak.contains(Method::Backstepping)) {
            r.optimal_over_backstepping = peak[Method::Optimal] / peak[Method::Backstepping];
        }
        if (peak.contains(Method::LateralServoing)) {
            r.optimal_over_lateral_servoing = peak[Method::Optimal] / peak[Method::LateralServoing];
        }
        table.ratios.push_back(r);
    }
    return table;
}

// ---------------------------------------------------------------- serialization

namespace {

void put_double(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

double parse_double(const std::string& field, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ConfigError("csv line " + std::to_string(line) + ": bad number '" + field + "'");
    }
    return v;
}

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void write_csv(std::ostream& os, const RunLog& log) {
    os << kCsvHeader << '\n';
    for (const auto& r : log.records) {
        for (const double v : {r.t, r.s, r.y, r.theta_tilde, r.e_I_exact, r.e_I_measured,
                               r.delta_cmd, r.delta_actual, r.theta_d}) {
            put_double(os, v);
            os << ',';
        }
        os << r.segment << ',' << r.fault << '\n';
    }
}

RunLog read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) {
        throw ConfigError("csv header does not match the run-log schema");
    }
    RunLog log;
    std::size_t n = 1;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 11) {
            throw ConfigError("csv line " + std::to_string(n) + ": expected 11 fields");
        }
        LogRecord r;
        double* targets[] = {&r.t, &r.s, &r.y, &r.theta_tilde, &r.e_I_exact, &r.e_I_measured,
                             &r.delta_cmd, &r.delta_actual, &r.theta_d};
        for (std::size_t i = 0; i < 9; ++i) {
            *targets[i] = parse_double(fields[i], n);
        }
        r.segment = fields[9];
        r.fault = fields[10];
        log.records.push_back(std::move(r));
    }
    return log;
}

nlohmann::json to_json(const Stats& s) {
    return {{"count", s.count},
            {"median_m", number_or_null(s.median)},
            {"q25_m", number_or_null(s.q25)},
            {"q75_m", number_or_null(s.q75)},
            {"max_m", number_or_null(s.max)}};
}

nlohmann::json to_json(const RunSummary& s) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& seg : s.segments) {
        auto j = to_json(seg.stats);
        j["label"] = seg.label;
        segments.push_back(j);
    }
    nlohmann::json junctions = nlohmann::json::array();
    for (const auto& j : s.junctions) {
        junctions.push_back(
            {{"s_m", j.s}, {"half_width_m", j.half_width}, {"overshoot_m", j.overshoot}});
    }
    nlohmann::json faults = nlohmann::json::array();
    for (const auto& f : s.faults) {
        faults.push_back({{"t_s", f.t}, {"s_m", f.s}, {"code", f.code}, {"message", f.message}});
    }
    return {{"method", s.method},
            {"reconstruction", s.reconstruction},
            {"abs_e_I", to_json(s.abs_e_I)},
            {"median_abs_e_I_m", number_or_null(s.abs_e_I.median)},
            {"segments", segments},
            {"junctions", junctions},
            {"max_overshoot_m", s.max_overshoot},
            {"fault_count", s.fault_count},
            {"faults", faults},
            {"aborted", s.aborted}};
}

nlohmann::json to_json(const OptimalParams& p) {
    return {{"lambda", p.lambda},
            {"k_theta", p.k_theta},
            {"s_h_m", p.s_h},
            {"s_t_m", p.s_t},
            {"n_h", p.n_h()}};
}

nlohmann::json to_json(const SweepResult& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
        points.push_back({{"params", to_json(p.params)}, {"summary", to_json(p.summary)}});
    }
    return {{"points", points}, {"argmin_s_h_m", r.argmin_s_h}};
}

nlohmann::json to_json(const ComparisonTable& t) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : t.entries) {
        entries.push_back({{"preset", e.preset},
                           {"placement", e.placement},
                           {"method", to_string(e.method)},
                           {"summary", to_json(e.summary)}});
    }
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& r : t.ratios) {
        ratios.push_back({{"placement", r.placement},
                          {"optimal_over_backstepping", number_or_null(r.optimal_over_backstepping)},
                          {"optimal_over_lateral_servoing",
                           number_or_null(r.optimal_over_lateral_servoing)}});
    }
    return {{"configurations", entries}, {"overshoot_ratios", ratios}};
}

}  // namespace implctl
