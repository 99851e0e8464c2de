#pragma once

// Independent numerical oracles shared by the unit tests and the acceptance
// suite. Nothing here calls the library's controller math.

#include <cmath>
#include <vector>

#include "implctl/path.hpp"
#include "implctl/vehicle.hpp"

namespace implctl::oracle {

inline PathSpec single_segment(SegmentKind kind, double length, double curvature) {
    PathSpec spec;
    SegmentDescriptor d;
    d.kind = kind;
    d.length_m = length;
    d.curvature_per_m = curvature;
    spec.segments = {d};
    return spec;
}

/// Horizon cost Σ_{k=1..n} [prediction − exponential reference]², written out by hand.
inline double horizon_cost(double xi, double e, double a, double g, double i_s, double e2,
                           double lambda, double s_t, int n) {
    double j = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double d = k * s_t;
        const double pred = e + (xi + a * g * i_s) * d + e2 * d * d;
        const double r = pred - e * std::exp(-lambda * d);
        j += r * r;
    }
    return j;
}

template <class F>
double golden_section_argmin(F f, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > 1e-10) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5 * (lo + hi);
}

// Derivatives at the middle node of three unevenly spaced samples.
inline double first_derivative(const double s[3], const double v[3]) {
    const double h0 = s[1] - s[0];
    const double h1 = s[2] - s[1];
    return (-h1 / (h0 * (h0 + h1))) * v[0] + ((h1 - h0) / (h0 * h1)) * v[1] +
           (h0 / (h1 * (h0 + h1))) * v[2];
}

inline double second_derivative(const double s[3], const double v[3]) {
    const double h0 = s[1] - s[0];
    const double h1 = s[2] - s[1];
    return 2.0 * (v[0] / (h0 * (h0 + h1)) - v[1] / (h0 * h1) + v[2] / (h1 * (h0 + h1)));
}

struct Sampled {
    double s[3];
    double e[3];
};

/// Moves the vehicle by ±dt with its steering held and samples the measured
/// implement error at the re-projected Frenet states.
inline Sampled sample_along(const ReferencePath& path, const FrenetState& f, double delta,
                            const ImplementConfig& imp, const VehicleConfig& cfg, double dt) {
    const VehiclePose pose = pose_from_frenet(path, f, delta);
    VehicleConfig back = cfg;
    back.speed = -cfg.speed;  // reverse time along the same arc
    const VehiclePose poses[3] = {integrate_bicycle(pose, dt, back), pose,
                                  integrate_bicycle(pose, dt, cfg)};
    Sampled out{};
    for (int i = 0; i < 3; ++i) {
        const FrenetState p = path.project(poses[i].position, poses[i].heading).frenet;
        out.s[i] = p.s;
        out.e[i] = implement_error_measured(p, imp);
    }
    return out;
}

/// Curvilinear model integrated directly with RK4 at constant steering.
struct CurvilinearState {
    double s, y, theta;
};

inline CurvilinearState integrate_curvilinear(const ReferencePath& path, CurvilinearState q,
                                              double delta, const VehicleConfig& cfg,
                                              double t_end, long steps) {
    auto rhs = [&](const CurvilinearState& x) {
        const double c = path.curvature_clamped(x.s);
        const double sdot = cfg.speed * std::cos(x.theta) / (1.0 - c * x.y);
        return CurvilinearState{sdot, cfg.speed * std::sin(x.theta),
                                cfg.speed * std::tan(delta) / cfg.wheelbase - c * sdot};
    };
    const double h = t_end / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) {
        const auto k1 = rhs(q);
        const auto k2 = rhs({q.s + 0.5 * h * k1.s, q.y + 0.5 * h * k1.y, q.theta + 0.5 * h * k1.theta});
        const auto k3 = rhs({q.s + 0.5 * h * k2.s, q.y + 0.5 * h * k2.y, q.theta + 0.5 * h * k2.theta});
        const auto k4 = rhs({q.s + h * k3.s, q.y + h * k3.y, q.theta + h * k3.theta});
        q.s += h / 6.0 * (k1.s + 2 * k2.s + 2 * k3.s + k4.s);
        q.y += h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        q.theta += h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    }
    return q;
}

/// World-pose error of a piecewise-constant steering schedule against a 1e-6 s
/// reference, for each step size in `dts`.
template <class Range>
std::vector<double> integrator_errors(const VehicleConfig& cfg, const Range& dts) {
    const double schedule[] = {0.3, -0.2, 0.45, 0.1, -0.4, 0.25, 0.0, -0.1, 0.5, -0.3};
    const double hold = 0.4;
    auto simulate = [&](double dt) {
        VehiclePose pose{{0.0, 0.0}, 0.2, 0.0};
        const long per_hold = std::lround(hold / dt);
        for (const double d : schedule) {
            pose.steer = d;
            for (long k = 0; k < per_hold; ++k) pose = integrate_bicycle(pose, dt, cfg);
        }
        return pose;
    };
    const VehiclePose ref = simulate(1e-6);
    std::vector<double> errors;
    for (const double dt : dts) errors.push_back((simulate(dt).position - ref.position).norm());
    return errors;
}

}  // namespace implctl::oracle
