#include "implctl/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "implctl/errors.hpp"

namespace implctl {

void VehicleConfig::validate() const {
    if (!(wheelbase > 0.0)) {
        throw ConfigError("wheelbase_m must be > 0", "wheelbase_m");
    }
    if (!(steer_limit > 0.0 && steer_limit < std::numbers::pi / 2.0)) {
        throw ConfigError("steer_limit_rad must lie in (0, pi/2)", "steer_limit_rad");
    }
    if (!(steer_rate_limit > 0.0)) {
        throw ConfigError("steer_rate_limit_rad_s must be > 0", "steer_rate_limit_rad_s");
    }
    if (!(speed > 0.0)) {
        throw ConfigError("speed_m_s must be > 0", "speed_m_s");
    }
}

VehiclePose pose_from_frenet(const ReferencePath& path, const FrenetState& f, double steer) {
    const PathPoint pp = path.point_at(f.s);
    const Vec2 normal{-std::sin(pp.heading), std::cos(pp.heading)};
    return {pp.position + f.y * normal, wrap_angle(pp.heading + f.theta_tilde), steer};
}

double apply_steer_limits(double current, double delta_cmd, double dt, const VehicleConfig& cfg) {
    const double target = std::clamp(delta_cmd, -cfg.steer_limit, cfg.steer_limit);
    const double max_move = cfg.steer_rate_limit * dt;
    return current + std::clamp(target - current, -max_move, max_move);
}

VehiclePose integrate_bicycle(const VehiclePose& pose, double dt, const VehicleConfig& cfg) {
    const double v = cfg.speed;
    const double yaw_rate = v * std::tan(pose.steer) / cfg.wheelbase;
    // ψ̇ is constant over the step, so only the position stages depend on ψ.
    struct Deriv {
        double dx, dy, dpsi;
    };
    auto f = [&](double psi) { return Deriv{v * std::cos(psi), v * std::sin(psi), yaw_rate}; };
    const double psi0 = pose.heading;
    const Deriv k1 = f(psi0);
    const Deriv k2 = f(psi0 + 0.5 * dt * k1.dpsi);
    const Deriv k3 = f(psi0 + 0.5 * dt * k2.dpsi);
    const Deriv k4 = f(psi0 + dt * k3.dpsi);
    VehiclePose out = pose;
    out.position.x += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.position.y += dt / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    out.heading = wrap_angle(psi0 + dt / 6.0 * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi));
    return out;
}

StepResult step(const VehiclePose& pose, const FrenetState& /*frenet*/, double delta_cmd, double dt,
                const ReferencePath& path, const VehicleConfig& cfg) {
    if (!(dt > 0.0)) {
        throw DomainError("step: dt must be > 0");
    }
    VehiclePose next = pose;
    next.steer = apply_steer_limits(pose.steer, delta_cmd, dt, cfg);
    next = integrate_bicycle(next, dt, cfg);

    StepResult out;
    out.pose = next;
    out.projection = path.project(next.position, next.heading);
    out.frenet = out.projection.frenet;
    const double alpha = 1.0 - path.curvature_at(out.frenet.s) * out.frenet.y;
    if (std::abs(alpha) < kSingularityEps) {
        std::ostringstream msg;
        msg << "singularity: |1 - c*y| = " << std::abs(alpha) << " at s = " << out.frenet.s;
        out.fault = msg.str();
    }
    return out;
}

Vec2 implement_world_position(const VehiclePose& pose, const ImplementConfig& imp) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    return pose.position + Vec2{c * imp.I_s - s * imp.I_y, s * imp.I_s + c * imp.I_y};
}

Projection implement_projection(const VehiclePose& pose, const ImplementConfig& imp,
                                const ReferencePath& path) {
    return path.project(implement_world_position(pose, imp), pose.heading);
}

double implement_error_exact(const VehiclePose& pose, const ImplementConfig& imp,
                             const ReferencePath& path) {
    return implement_projection(pose, imp, path).frenet.y;
}

double implement_error_measured(const FrenetState& f, const ImplementConfig& imp) {
    return f.y + imp.I_s * std::sin(f.theta_tilde) + imp.I_y * std::cos(f.theta_tilde);
}

double yaw_rate_from_steer(double delta, const FrenetState& f, double c, const VehicleConfig& cfg) {
    const double alpha = 1.0 - c * f.y;
    if (std::abs(alpha) < kSingularityEps) {
        throw SingularityError("yaw rate: |1 - c*y| below guard");
    }
    return cfg.speed * (std::tan(delta) / cfg.wheelbase - c * std::cos(f.theta_tilde) / alpha);
}

double yaw_rate_from_steer(double delta, const FrenetState& f, const ReferencePath& path,
                           const VehicleConfig& cfg) {
    return yaw_rate_from_steer(delta, f, path.curvature_at(f.s), cfg);
}

}  // namespace implctl
