#include "implctl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "implctl/errors.hpp"
#include "implctl/harness.hpp"
#include "implctl/scenario_file.hpp"
#include "implctl/svg.hpp"

namespace implctl {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string out_dir;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::string noise;  // "", "on" or "off"
};

void apply_overrides(const Globals& g, Scenario& scn) {
    if (g.seed) scn.run.seed = *g.seed;
    if (g.noise == "on") scn.noise.enabled = true;
    if (g.noise == "off") scn.noise.enabled = false;
}

fs::path prepare_out_dir(const Globals& g) {
    fs::path dir = g.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("IMPLCTL_OUT_DIR");
        dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

void write_log(const fs::path& p, const RunLog& log) {
    std::ostringstream os;
    write_csv(os, log);
    write_file(p, os.str());
}

int report_faults(std::ostream& err, const std::string& what, const std::vector<FaultRecord>& faults) {
    if (faults.empty()) return kExitOk;
    err << what << ": " << faults.size() << " fault(s); first: " << faults.front().code << " at s = "
        << faults.front().s << " m: " << faults.front().message << '\n';
    return kExitFault;
}

int cmd_run(const Globals& g, const std::string& scenario_path, std::ostream& out,
            std::ostream& err) {
    Scenario scn = load_scenario_file(scenario_path);
    apply_overrides(g, scn);
    scn.validate();
    const RunLog log = run_scenario(scn);
    const RunSummary summary =
        summarize(log, {scn.run.convergence_window, log.horizon + scn.run.overshoot_margin});
    const fs::path dir = prepare_out_dir(g);
    write_log(dir / "run.csv", log);
    write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
    out << "median |e_I| " << summary.abs_e_I.median << " m, max overshoot "
        << summary.max_overshoot << " m -> " << dir.string() << '\n';
    return report_faults(err, "run", log.faults);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_compare(const Globals& g, const std::string& placement, const std::string& cmdline,
                std::ostream& out, std::ostream& err) {
    std::vector<std::string> placements;
    if (placement == "both") {
        placements = {"rear", "front"};
    } else {
        placements = {placement};
    }
    Scenario base = compare_base_scenario();
    apply_overrides(g, base);
    base.validate();
    const ComparisonTable table = compare_methods(
        base, {Method::LateralServoing, Method::Backstepping, Method::Optimal}, placements, g.jobs);

    const fs::path dir = prepare_out_dir(g);
    std::vector<FaultRecord> faults;
    for (const auto& e : table.entries) {
        write_log(dir / (e.preset + ".csv"), e.log);
        faults.insert(faults.end(), e.log.faults.begin(), e.log.faults.end());
    }
    write_file(dir / "comparison.json", to_json(table).dump(2) + "\n");
    write_file(dir / "figure4.svg", svg::figure4(table, cmdline));
    for (const auto& r : table.ratios) {
        out << r.placement << ": optimal/backstepping overshoot " << r.optimal_over_backstepping
            << ", optimal/lateral_servoing " << r.optimal_over_lateral_servoing << '\n';
    }
    return report_faults(err, "compare", faults);
}

int cmd_sweep(const Globals& g, const std::string& horizons, const std::string& cmdline,
              std::ostream& out, std::ostream& err) {
    std::vector<OptimalParams> rows;
    const auto table = table2_presets();
    if (horizons.empty()) {
        for (const auto& p : table) rows.push_back(p.controller.optimal);
    } else {
        for (const auto& item : split_csv(horizons)) {
            double s_h = 0.0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), s_h);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
                throw ConfigError("--horizons: bad number '" + item + "'", "horizons");
            }
            const auto it = std::find_if(table.begin(), table.end(), [&](const ControllerPreset& p) {
                return std::abs(p.controller.optimal.s_h - s_h) < 1e-9;
            });
            if (it == table.end()) {
                throw ConfigError("--horizons: no preset row with s_h_m = " + item, "horizons");
            }
            rows.push_back(it->controller.optimal);
        }
    }
    Scenario base = sweep_base_scenario();
    apply_overrides(g, base);
    base.validate();
    const SweepResult sweep = sweep_horizon(base, rows, g.jobs);

    const fs::path dir = prepare_out_dir(g);
    write_file(dir / "sweep.json", to_json(sweep).dump(2) + "\n");
    write_file(dir / "figure6.svg", svg::figure6(sweep, cmdline));
    std::vector<FaultRecord> faults;
    for (const auto& p : sweep.points) {
        out << "s_h " << p.params.s_h << " m: median |e_I| " << p.summary.abs_e_I.median << " m\n";
        faults.insert(faults.end(), p.summary.faults.begin(), p.summary.faults.end());
    }
    out << "argmin s_h = " << sweep.argmin_s_h << " m\n";
    return report_faults(err, "sweep", faults);
}

int cmd_validate(const std::string& scenario_path, const Globals& g, std::ostream& out) {
    Scenario scn = load_scenario_file(scenario_path);
    apply_overrides(g, scn);
    scn.validate();
    out << format_scenario(scn);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::string cmdline;
    for (int i = 0; i < argc; ++i) {
        if (i) cmdline += ' ';
        cmdline += argv[i];
    }

    CLI::App app{"Implement lateral-error controllers: simulation, comparison and horizon sweep",
                 "implctl"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--out-dir", g.out_dir, "output directory (default $IMPLCTL_OUT_DIR or .)");
    app.add_option("--jobs", g.jobs, "concurrent runs for compare/sweep")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "override the scenario seed");
    app.add_option("--noise", g.noise, "measurement noise override")
        ->check(CLI::IsMember({"on", "off"}));

    std::string scenario_path;
    auto* run = app.add_subcommand("run", "simulate one scenario file");
    run->add_option("scenario", scenario_path, "scenario file")->required();

    std::string placement = "both";
    auto* compare = app.add_subcommand("compare", "run the six placement x method presets on exp1");
    compare->add_option("--placement", placement, "rear|front|both")
        ->check(CLI::IsMember({"rear", "front", "both"}));

    std::string horizons;
    auto* sweep = app.add_subcommand("sweep", "run the horizon sweep on exp2");
    sweep->add_option("--horizons", horizons, "comma-separated subset of s_h values, e.g. 1.0,2.0");

    auto* validate = app.add_subcommand("validate", "check a scenario file and print it resolved");
    validate->add_option("scenario", scenario_path, "scenario file")->required();

    // Global flags are accepted after the subcommand too.
    for (auto* sub : {run, compare, sweep, validate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (run->parsed()) return cmd_run(g, scenario_path, out, err);
        if (compare->parsed()) return cmd_compare(g, placement, cmdline, out, err);
        if (sweep->parsed()) return cmd_sweep(g, horizons, cmdline, out, err);
        if (validate->parsed()) return cmd_validate(scenario_path, g, out);
    } catch (const ConfigError& e) {
        err << "invalid configuration";
        if (!e.key().empty()) err << " [" << e.key() << "]";
        err << ": " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUnexpected;
    } catch (...) {
        err << "error: unknown failure\n";
        return kExitUnexpected;
    }
    return kExitUnexpected;
}

}  // namespace implctl
