#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "implctl/cli.hpp"
#include "implctl/controllers.hpp"
#include "implctl/errors.hpp"
#include "implctl/harness.hpp"
#include "implctl/path.hpp"
#include "implctl/scenario_file.hpp"
#include "implctl/vehicle.hpp"

namespace py = pybind11;
using namespace implctl;

namespace {

py::object to_python(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return py::none();
        case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
        case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list out;
            for (const auto& v : j) out.append(to_python(v));
            return out;
        }
        case nlohmann::json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
            return out;
        }
        default: return py::none();
    }
}

// Column-oriented view of a run log; cheap to turn into a DataFrame.
py::dict log_columns(const RunLog& log) {
    std::vector<double> t, s, y, th, ex, em, dc, da, td;
    std::vector<std::string> seg, fault;
    for (const auto& r : log.records) {
        t.push_back(r.t);
        s.push_back(r.s);
        y.push_back(r.y);
        th.push_back(r.theta_tilde);
        ex.push_back(r.e_I_exact);
        em.push_back(r.e_I_measured);
        dc.push_back(r.delta_cmd);
        da.push_back(r.delta_actual);
        td.push_back(r.theta_d);
        seg.push_back(r.segment);
        fault.push_back(r.fault);
    }
    py::dict out;
    out["t_s"] = t;
    out["s_m"] = s;
    out["y_m"] = y;
    out["theta_tilde_rad"] = th;
    out["e_I_exact_m"] = ex;
    out["e_I_measured_m"] = em;
    out["delta_cmd_rad"] = dc;
    out["delta_actual_rad"] = da;
    out["theta_d_rad"] = td;
    out["segment"] = seg;
    out["fault"] = fault;
    return out;
}

PathSpec spec_from_tuples(const std::vector<std::tuple<std::string, double, double>>& segments,
                          std::tuple<double, double, double> start) {
    PathSpec spec;
    spec.start_point = {std::get<0>(start), std::get<1>(start)};
    spec.start_heading_rad = std::get<2>(start);
    for (const auto& [kind, length, curvature] : segments) {
        SegmentDescriptor d;
        if (kind == "line") {
            d.kind = SegmentKind::Line;
        } else if (kind == "arc") {
            d.kind = SegmentKind::Arc;
        } else {
            throw ConfigError("segment kind must be 'line' or 'arc'", "segment");
        }
        d.length_m = length;
        d.curvature_per_m = curvature;
        spec.segments.push_back(d);
    }
    return spec;
}

Measurements make_measurements(double s, double y, double theta, double steer, double omega_bar,
                               double e_I, double c_now, double c_horizon, double speed) {
    Measurements m;
    m.frenet = {s, y, theta};
    m.steer = steer;
    m.omega_bar = omega_bar;
    m.e_I = e_I;
    m.curvature_now = c_now;
    m.curvature_at_horizon = c_horizon;
    m.speed = speed;
    return m;
}

py::dict command_dict(const ControlCommand& cmd) {
    py::dict d;
    d["delta_desired"] = cmd.delta_desired;
    d["theta_desired"] = cmd.theta_desired;
    d["xi_desired"] = cmd.xi_desired;
    d["fault"] = cmd.fault ? py::object(py::str(*cmd.fault)) : py::object(py::none());
    py::dict diag;
    diag["e_I"] = cmd.diagnostics.e_I;
    diag["e_I_prime"] = cmd.diagnostics.e_I_prime;
    diag["e_I_second"] = cmd.diagnostics.e_I_second;
    diag["alpha"] = cmd.diagnostics.alpha;
    diag["gamma"] = cmd.diagnostics.gamma;
    diag["j_residual"] = cmd.diagnostics.j_residual;
    diag["n_h"] = cmd.diagnostics.n_h;
    diag["clamped"] = cmd.diagnostics.clamped;
    d["diagnostics"] = diag;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Implement lateral-error controllers and closed-loop simulation";

    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
    // Keep the offending key reachable from Python as `err.key`.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::object exc = py::reinterpret_borrow<py::object>(config_error)(e.what());
            exc.attr("key") = e.key();
            PyErr_SetObject(config_error.ptr(), exc.ptr());
        }
    });

    // ---------------------------------------------------------------- paths
    py::class_<ReferencePath>(m, "ReferencePath")
        .def_property_readonly("total_length", &ReferencePath::total_length)
        .def("point_at",
             [](const ReferencePath& p, double s) {
                 const auto pt = p.point_at(s);
                 return py::make_tuple(pt.position.x, pt.position.y, pt.heading, pt.curvature);
             },
             py::arg("s"), "(x, y, heading, curvature) at abscissa s")
        .def("curvature_at", &ReferencePath::curvature_at, py::arg("s"))
        .def("curvature_junctions", &ReferencePath::curvature_junctions)
        .def("segment_labels",
             [](const ReferencePath& p) {
                 std::vector<std::string> out;
                 for (std::size_t i = 0; i < p.segments().size(); ++i) out.push_back(p.segment_label(i));
                 return out;
             })
        .def("project",
             [](const ReferencePath& p, double x, double y, double heading) {
                 const auto pr = p.project({x, y}, heading);
                 py::dict d;
                 d["s"] = pr.frenet.s;
                 d["y"] = pr.frenet.y;
                 d["theta_tilde"] = pr.frenet.theta_tilde;
                 d["distance"] = pr.distance;
                 d["ambiguous"] = pr.ambiguous;
                 d["clamped"] = pr.clamped;
                 return d;
             },
             py::arg("x"), py::arg("y"), py::arg("heading") = 0.0);

    m.def("build_experiment_path", &build_experiment_path, py::arg("preset"),
          "Preset path: 'exp1' or 'exp2'");
    m.def("build_path",
          [](const std::vector<std::tuple<std::string, double, double>>& segments,
             std::tuple<double, double, double> start) {
              return build_path(spec_from_tuples(segments, start));
          },
          py::arg("segments"), py::arg("start") = std::make_tuple(0.0, 0.0, 0.0),
          "Path from (kind, length_m, curvature_per_m) tuples and a start (x, y, heading)");
    m.def("wrap_angle", &wrap_angle);

    // ------------------------------------------------------------ controllers
    m.def("alpha_gamma",
          [](double c, double y, double omega_bar, double v) {
              Measurements meas;
              meas.curvature_now = c;
              meas.frenet.y = y;
              meas.omega_bar = omega_bar;
              const auto ag = alpha_gamma(meas, v);
              return py::make_tuple(ag.alpha, ag.gamma);
          },
          py::arg("c"), py::arg("y"), py::arg("omega_bar"), py::arg("v") = 1.0);
    m.def("e_I_prime",
          [](double theta, double alpha, double gamma, double I_s, double I_y) {
              return e_I_prime(theta, alpha, gamma, {I_s, I_y});
          },
          py::arg("theta_tilde"), py::arg("alpha"), py::arg("gamma"), py::arg("I_s"), py::arg("I_y"));
    m.def("e_I_second", &e_I_second, py::arg("theta_tilde"), py::arg("alpha"), py::arg("delta"),
          py::arg("c"), py::arg("wheelbase") = 1.2);
    m.def("sigma_terms",
          [](double lambda, double s_h, double s_t) {
              const auto sig = sigma_terms({lambda, 0.6, s_h, s_t});
              return py::make_tuple(sig.sigma1, sig.sigma2, sig.sigma3, sig.sigma_e);
          },
          py::arg("lambda_"), py::arg("s_h"), py::arg("s_t"),
          "(sigma1, sigma2, sigma3, sigma_e) summed over k = 0..round(s_h/s_t)");
    m.def("xi_optimal",
          [](double e_I, double alpha, double gamma, double I_s, double e2, double lambda,
             double s_h, double s_t) {
              return xi_optimal(e_I, alpha, gamma, {I_s, 0.0}, e2,
                                sigma_terms({lambda, 0.6, s_h, s_t}));
          },
          py::arg("e_I"), py::arg("alpha"), py::arg("gamma"), py::arg("I_s"), py::arg("e_I_second"),
          py::arg("lambda_"), py::arg("s_h"), py::arg("s_t"));
    m.def("prediction_cost",
          [](double xi, double e_I, double alpha, double gamma, double I_s, double e2,
             double lambda, double s_h, double s_t) {
              return prediction_cost(xi, e_I, alpha, gamma, {I_s, 0.0}, e2, {lambda, 0.6, s_h, s_t});
          },
          py::arg("xi"), py::arg("e_I"), py::arg("alpha"), py::arg("gamma"), py::arg("I_s"),
          py::arg("e_I_second"), py::arg("lambda_"), py::arg("s_h"), py::arg("s_t"));
    m.def("desired_heading",
          [](double xi, double alpha, double gamma, double I_y) {
              return desired_heading(xi, alpha, gamma, {0.0, I_y});
          },
          py::arg("xi"), py::arg("alpha"), py::arg("gamma"), py::arg("I_y"));
    m.def("steering_command",
          [](double theta, double theta_d, double c, double y, double k_theta, double wheelbase,
             double steer_limit) {
              const auto r = steering_command(theta, theta_d, c, y, k_theta, wheelbase, steer_limit);
              return py::make_tuple(r.delta, r.clamped);
          },
          py::arg("theta_tilde"), py::arg("theta_desired"), py::arg("c"), py::arg("y"),
          py::arg("k_theta"), py::arg("wheelbase") = 1.2, py::arg("steer_limit") = 0.55);
    m.def("control_step",
          [](const std::string& preset, double s, double y, double theta, double steer,
             double omega_bar, double c_now, double c_horizon, double speed) {
              const auto p = controller_preset(preset);
              Scenario scn;
              scn.controller = p.controller;
              scn.implement = p.implement;
              Controller ctl = scn.make_controller();
              const double e_I = implement_error_measured({s, y, theta}, p.implement);
              return command_dict(ctl.step(
                  make_measurements(s, y, theta, steer, omega_bar, e_I, c_now, c_horizon, speed)));
          },
          py::arg("preset"), py::arg("s") = 0.0, py::arg("y") = 0.0, py::arg("theta_tilde") = 0.0,
          py::arg("steer") = 0.0, py::arg("omega_bar") = 0.0, py::arg("c_now") = 0.0,
          py::arg("c_horizon") = 0.0, py::arg("speed") = 1.0,
          "One control step of a named preset from a Frenet measurement");
    m.def("implement_error_measured",
          [](double y, double theta, double I_s, double I_y) {
              return implement_error_measured({0.0, y, theta}, {I_s, I_y});
          },
          py::arg("y"), py::arg("theta_tilde"), py::arg("I_s"), py::arg("I_y"));

    // --------------------------------------------------------------- presets
    m.def("preset_names", &preset_names);
    m.def("controller_preset", [](const std::string& name) {
        const auto p = controller_preset(name);
        py::dict d;
        d["name"] = p.name;
        d["placement"] = p.placement;
        d["method"] = to_string(p.controller.method);
        d["I_s_m"] = p.implement.I_s;
        d["I_y_m"] = p.implement.I_y;
        if (p.controller.method == Method::Optimal) {
            d["lambda_per_m"] = p.controller.optimal.lambda;
            d["k_theta_per_m"] = p.controller.optimal.k_theta;
            d["s_h_m"] = p.controller.optimal.s_h;
            d["s_t_m"] = p.controller.optimal.s_t;
        } else {
            d["k_y_per_m"] = p.controller.baseline.k_y;
            d["k_theta_per_m"] = p.controller.baseline.k_theta;
        }
        return d;
    });

    // ------------------------------------------------------------- scenarios
    m.def("validate_scenario",
          [](const std::string& text) {
              const Scenario scn = parse_scenario_text(text);
              scn.validate();
              return format_scenario(scn);
          },
          py::arg("text"), "Parse and check a scenario; returns the resolved text");
    m.def("run_scenario",
          [](const std::string& text) {
              const Scenario scn = parse_scenario_text(text);
              RunLog log;
              {
                  py::gil_scoped_release release;
                  log = run_scenario(scn);
              }
              const RunSummary sum = summarize(
                  log, {scn.run.convergence_window, log.horizon + scn.run.overshoot_margin});
              py::dict out;
              out["log"] = log_columns(log);
              out["summary"] = to_python(to_json(sum));
              return out;
          },
          py::arg("text"), "Run a scenario given as text; returns {'log': columns, 'summary': dict}");
    m.def("sweep",
          [](const std::vector<double>& horizons, int jobs) {
              std::vector<OptimalParams> rows;
              for (const auto& p : table2_presets()) {
                  const double s_h = p.controller.optimal.s_h;
                  if (horizons.empty() ||
                      std::any_of(horizons.begin(), horizons.end(),
                                  [&](double h) { return std::abs(h - s_h) < 1e-9; })) {
                      rows.push_back(p.controller.optimal);
                  }
              }
              SweepResult r;
              {
                  py::gil_scoped_release release;
                  r = sweep_horizon(sweep_base_scenario(), rows, jobs);
              }
              return to_python(to_json(r));
          },
          py::arg("horizons") = std::vector<double>{}, py::arg("jobs") = 1,
          "Horizon sweep on exp2 over the table rows (all rows when `horizons` is empty)");
    m.def("compare",
          [](const std::vector<std::string>& placements, int jobs) {
              ComparisonTable t;
              {
                  py::gil_scoped_release release;
                  t = compare_methods(compare_base_scenario(),
                                      {Method::LateralServoing, Method::Backstepping, Method::Optimal},
                                      placements, jobs);
              }
              return to_python(to_json(t));
          },
          py::arg("placements") = std::vector<std::string>{"rear", "front"}, py::arg("jobs") = 1);

    // ------------------------------------------------------------------- cli
    m.def("cli",
          [](const std::vector<std::string>& args) {
              std::vector<std::string> full{"implctl"};
              full.insert(full.end(), args.begin(), args.end());
              std::vector<const char*> argv;
              for (const auto& a : full) argv.push_back(a.c_str());
              std::ostringstream out, err;
              int code = 0;
              {
                  py::gil_scoped_release release;
                  code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr)");

    m.attr("CSV_HEADER") = kCsvHeader;
}
