#include "implctl/scenario_file.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "implctl/errors.hpp"

namespace implctl {

namespace {

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& key, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + key + ": " + what, key);
}

double to_number(const Entry& e) {
    double v = 0.0;
    const auto* first = e.value.data();
    const auto* last = first + e.value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        fail(e.line, e.key, "expected a finite number, got '" + e.value + "'");
    }
    return v;
}

bool to_bool(const Entry& e) {
    if (e.value == "on" || e.value == "true") return true;
    if (e.value == "off" || e.value == "false") return false;
    fail(e.line, e.key, "expected on|off, got '" + e.value + "'");
}

std::uint64_t to_seed(const Entry& e) {
    std::uint64_t v = 0;
    const auto* first = e.value.data();
    const auto* last = first + e.value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        fail(e.line, e.key, "expected a non-negative integer, got '" + e.value + "'");
    }
    return v;
}

// "arc length_m=15.7 curvature_per_m=0.1 [x_m=.. y_m=.. heading_rad=..]"
SegmentDescriptor to_segment(const Entry& e) {
    std::istringstream in(e.value);
    std::string kind;
    in >> kind;
    SegmentDescriptor d;
    if (kind == "line") {
        d.kind = SegmentKind::Line;
    } else if (kind == "arc") {
        d.kind = SegmentKind::Arc;
    } else {
        fail(e.line, "segment", "kind must be line or arc, got '" + kind + "'");
    }
    std::map<std::string, double> fields;
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) fail(e.line, "segment", "expected name=value, got '" + tok + "'");
        const Entry sub{tok.substr(0, eq), tok.substr(eq + 1), e.line};
        static const std::set<std::string> known{"length_m", "curvature_per_m", "x_m", "y_m",
                                                 "heading_rad"};
        if (!known.contains(sub.key)) fail(e.line, sub.key, "unknown segment field");
        if (!fields.emplace(sub.key, to_number(sub)).second) fail(e.line, sub.key, "repeated");
    }
    if (!fields.contains("length_m")) fail(e.line, "length_m", "segment needs length_m");
    d.length_m = fields["length_m"];
    if (d.kind == SegmentKind::Arc) {
        if (!fields.contains("curvature_per_m")) {
            fail(e.line, "curvature_per_m", "arc segment needs curvature_per_m");
        }
        d.curvature_per_m = fields["curvature_per_m"];
    } else if (fields.contains("curvature_per_m")) {
        d.curvature_per_m = fields["curvature_per_m"];
    }
    const int pose_fields = static_cast<int>(fields.count("x_m") + fields.count("y_m") +
                                             fields.count("heading_rad"));
    if (pose_fields == 3) {
        d.has_start_pose = true;
        d.start_point = {fields["x_m"], fields["y_m"]};
        d.start_heading_rad = fields["heading_rad"];
    } else if (pose_fields != 0) {
        fail(e.line, "segment", "a start pose needs all of x_m, y_m, heading_rad");
    }
    return d;
}

using Block = std::vector<Entry>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"path", {"preset", "start_x_m", "start_y_m", "start_heading_rad", "segment"}},
        {"vehicle", {"wheelbase_m", "steer_limit_rad", "steer_rate_limit_rad_s", "speed_m_s"}},
        {"implement", {"I_s_m", "I_y_m"}},
        {"controller",
         {"preset", "method", "lambda_per_m", "k_theta_per_m", "k_y_per_m", "s_h_m", "s_t_m",
          "yaw_rate_term"}},
        {"run",
         {"length_m", "dt_s", "control_period_s", "initial_s_m", "initial_y_m", "initial_e_I_m",
          "initial_theta_rad", "initial_steer_rad", "seed", "convergence_window_m",
          "overshoot_margin_m"}},
        {"noise", {"enabled", "y_std_m", "theta_std_rad", "omega_std_rad_s"}},
    };
    return keys;
}

const Entry* find(const Block& b, const std::string& key) {
    for (const auto& e : b) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

void apply_path(const Block& b, Scenario& scn) {
    const Entry* preset = find(b, "preset");
    std::vector<SegmentDescriptor> segs;
    for (const auto& e : b) {
        if (e.key == "segment") segs.push_back(to_segment(e));
    }
    if (preset && !segs.empty()) {
        fail(preset->line, "preset", "give either a path preset or segments, not both");
    }
    if (preset) {
        scn.path = path_preset(preset->value);
        scn.path_preset = preset->value;
    } else if (!segs.empty()) {
        scn.path = PathSpec{};
        scn.path.segments = std::move(segs);
        scn.path_preset.clear();
    } else if (!b.empty()) {
        fail(b.front().line, "segment", "path block needs a preset or at least one segment");
    }
    if (const Entry* e = find(b, "start_x_m")) scn.path.start_point.x = to_number(*e);
    if (const Entry* e = find(b, "start_y_m")) scn.path.start_point.y = to_number(*e);
    if (const Entry* e = find(b, "start_heading_rad")) scn.path.start_heading_rad = to_number(*e);
}

void apply_controller(const Block& b, Scenario& scn, bool implement_given) {
    if (const Entry* e = find(b, "preset")) {
        ControllerPreset p;
        try {
            p = controller_preset(e->value);
        } catch (const ConfigError& err) {
            fail(e->line, "preset", err.what());
        }
        scn.controller = p.controller;
        if (!implement_given) scn.implement = p.implement;
    }
    if (const Entry* e = find(b, "method")) {
        Method m = Method::Optimal;
        try {
            m = method_from_string(e->value);
        } catch (const ConfigError& err) {
            fail(e->line, "method", err.what());
        }
        // A method other than the preset's makes the preset label meaningless.
        if (m != scn.controller.method || !find(b, "preset")) scn.controller.preset.clear();
        scn.controller.method = m;
    }
    const bool optimal = scn.controller.method == Method::Optimal;
    for (const auto& e : b) {
        if (e.key == "preset" || e.key == "method") continue;
        if (e.key == "yaw_rate_term") {
            if (scn.controller.method != Method::Backstepping) {
                fail(e.line, e.key, "only used by the backstepping method");
            }
            scn.controller.baseline.yaw_rate_term = to_bool(e);
            continue;
        }
        const double v = to_number(e);
        if (e.key == "k_theta_per_m") {
            (optimal ? scn.controller.optimal.k_theta : scn.controller.baseline.k_theta) = v;
        } else if (e.key == "k_y_per_m") {
            if (optimal) fail(e.line, e.key, "not used by the optimal method");
            scn.controller.baseline.k_y = v;
        } else {
            if (!optimal) fail(e.line, e.key, "only used by the optimal method");
            if (e.key == "lambda_per_m") scn.controller.optimal.lambda = v;
            if (e.key == "s_h_m") scn.controller.optimal.s_h = v;
            if (e.key == "s_t_m") scn.controller.optimal.s_t = v;
        }
    }
}

void apply_numbers(const Block& b, const std::map<std::string, double*>& targets) {
    for (const auto& e : b) {
        const auto it = targets.find(e.key);
        if (it != targets.end()) *it->second = to_number(e);
    }
}

}  // namespace

Scenario parse_scenario(std::istream& is) {
    std::map<std::string, Block> blocks;
    std::optional<Entry> version;
    std::string current;
    std::string raw;
    std::size_t n = 0;
    while (std::getline(is, raw)) {
        ++n;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(n, line, "malformed block header");
            current = trim(line.substr(1, line.size() - 2));
            if (!allowed_keys().contains(current)) fail(n, current, "unknown block");
            if (blocks.contains(current)) fail(n, current, "block appears twice");
            blocks[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(n, line, "expected key = value");
        Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
        if (e.value.empty()) fail(n, e.key, "missing value");
        if (current.empty()) {
            if (e.key != "format_version") fail(n, e.key, "unknown top-level key");
            if (version) fail(n, e.key, "repeated");
            version = e;
            continue;
        }
        if (!allowed_keys().at(current).contains(e.key)) {
            fail(n, e.key, "unknown key in [" + current + "]");
        }
        if (e.key != "segment" && find(blocks[current], e.key)) fail(n, e.key, "repeated");
        blocks[current].push_back(std::move(e));
    }
    if (!version) fail(n, "format_version", "missing");
    if (version->value != std::to_string(kScenarioFormatVersion)) {
        fail(version->line, "format_version",
             "unsupported version '" + version->value + "' (expected " +
                 std::to_string(kScenarioFormatVersion) + ")");
    }

    Scenario scn;
    apply_path(blocks["path"], scn);
    apply_numbers(blocks["vehicle"], {{"wheelbase_m", &scn.vehicle.wheelbase},
                                      {"steer_limit_rad", &scn.vehicle.steer_limit},
                                      {"steer_rate_limit_rad_s", &scn.vehicle.steer_rate_limit},
                                      {"speed_m_s", &scn.vehicle.speed}});
    apply_controller(blocks["controller"], scn, !blocks["implement"].empty());
    apply_numbers(blocks["implement"],
                  {{"I_s_m", &scn.implement.I_s}, {"I_y_m", &scn.implement.I_y}});

    const Block& run = blocks["run"];
    apply_numbers(run, {{"length_m", &scn.run.length},
                        {"dt_s", &scn.run.dt},
                        {"control_period_s", &scn.run.control_period},
                        {"initial_s_m", &scn.run.initial_s},
                        {"initial_e_I_m", &scn.run.initial_e_I},
                        {"initial_theta_rad", &scn.run.initial_theta},
                        {"initial_steer_rad", &scn.run.initial_steer},
                        {"convergence_window_m", &scn.run.convergence_window},
                        {"overshoot_margin_m", &scn.run.overshoot_margin}});
    if (const Entry* e = find(run, "initial_y_m")) {
        if (find(run, "initial_e_I_m")) {
            fail(e->line, e->key, "give either initial_y_m or initial_e_I_m, not both");
        }
        scn.run.initial_y = to_number(*e);
    }
    if (const Entry* e = find(run, "seed")) scn.run.seed = to_seed(*e);

    const Block& noise = blocks["noise"];
    if (const Entry* e = find(noise, "enabled")) scn.noise.enabled = to_bool(*e);
    apply_numbers(noise, {{"y_std_m", &scn.noise.y_std},
                          {"theta_std_rad", &scn.noise.theta_std},
                          {"omega_std_rad_s", &scn.noise.omega_std}});
    return scn;
}

Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path + "'", "scenario");
    }
    return parse_scenario(in);
}

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string format_scenario(const Scenario& scn) {
    std::ostringstream os;
    os << "format_version = " << kScenarioFormatVersion << "\n\n[path]\n";
    if (!scn.path_preset.empty()) {
        os << "preset = " << scn.path_preset << '\n';
    } else {
        for (const auto& d : scn.path.segments) {
            os << "segment = " << (d.kind == SegmentKind::Arc ? "arc" : "line")
               << " length_m=" << num(d.length_m);
            if (d.kind == SegmentKind::Arc || d.curvature_per_m != 0.0) {
                os << " curvature_per_m=" << num(d.curvature_per_m);
            }
            if (d.has_start_pose) {
                os << " x_m=" << num(d.start_point.x) << " y_m=" << num(d.start_point.y)
                   << " heading_rad=" << num(d.start_heading_rad);
            }
            os << '\n';
        }
    }
    os << "start_x_m = " << num(scn.path.start_point.x) << '\n'
       << "start_y_m = " << num(scn.path.start_point.y) << '\n'
       << "start_heading_rad = " << num(scn.path.start_heading_rad) << "\n\n";

    os << "[vehicle]\n"
       << "wheelbase_m = " << num(scn.vehicle.wheelbase) << '\n'
       << "steer_limit_rad = " << num(scn.vehicle.steer_limit) << '\n'
       << "steer_rate_limit_rad_s = " << num(scn.vehicle.steer_rate_limit) << '\n'
       << "speed_m_s = " << num(scn.vehicle.speed) << "\n\n";

    os << "[implement]\n"
       << "I_s_m = " << num(scn.implement.I_s) << '\n'
       << "I_y_m = " << num(scn.implement.I_y) << "\n\n";

    const auto& c = scn.controller;
    os << "[controller]\n";
    if (!c.preset.empty()) os << "# resolved from preset " << c.preset << '\n';
    os << "method = " << to_string(c.method) << '\n';
    if (c.method == Method::Optimal) {
        os << "lambda_per_m = " << num(c.optimal.lambda) << '\n'
           << "k_theta_per_m = " << num(c.optimal.k_theta) << '\n'
           << "s_h_m = " << num(c.optimal.s_h) << '\n'
           << "s_t_m = " << num(c.optimal.s_t) << '\n';
    } else {
        os << "k_y_per_m = " << num(c.baseline.k_y) << '\n'
           << "k_theta_per_m = " << num(c.baseline.k_theta) << '\n';
        if (c.method == Method::Backstepping) {
            os << "yaw_rate_term = " << (c.baseline.yaw_rate_term ? "on" : "off") << '\n';
        }
    }
    os << '\n';

    const auto& r = scn.run;
    os << "[run]\n"
       << "length_m = " << num(r.length) << '\n'
       << "dt_s = " << num(r.dt) << '\n'
       << "control_period_s = " << num(r.control_period) << '\n'
       << "initial_s_m = " << num(r.initial_s) << '\n';
    if (r.initial_y) {
        os << "initial_y_m = " << num(*r.initial_y) << '\n';
    } else {
        os << "initial_e_I_m = " << num(r.initial_e_I) << '\n';
    }
    os << "initial_theta_rad = " << num(r.initial_theta) << '\n'
       << "initial_steer_rad = " << num(r.initial_steer) << '\n'
       << "seed = " << r.seed << '\n'
       << "convergence_window_m = " << num(r.convergence_window) << '\n'
       << "overshoot_margin_m = " << num(r.overshoot_margin) << "\n\n";

    os << "[noise]\n"
       << "enabled = " << (scn.noise.enabled ? "on" : "off") << '\n'
       << "y_std_m = " << num(scn.noise.y_std) << '\n'
       << "theta_std_rad = " << num(scn.noise.theta_std) << '\n'
       << "omega_std_rad_s = " << num(scn.noise.omega_std) << '\n';
    return os.str();
}

}  // namespace implctl
