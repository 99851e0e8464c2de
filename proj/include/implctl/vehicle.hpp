#pragma once

#include <optional>
#include <string>

#include "implctl/path.hpp"

namespace implctl {

struct VehicleConfig {
    double wheelbase = 1.2;         ///< L, m
    double steer_limit = 0.55;      ///< rad, in (0, π/2)
    double steer_rate_limit = 0.8;  ///< rad/s
    double speed = 1.0;             ///< v, m/s, strictly positive

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Rigid offsets of the implement control point I in the robot frame at O.
struct ImplementConfig {
    double I_s = 0.0;  ///< longitudinal, m (negative = behind the rear axle)
    double I_y = 0.0;  ///< lateral, m (positive = left)
};

struct VehiclePose {
    Vec2 position;       ///< rear-axle center O
    double heading = 0;  ///< ψ, wrapped to (-π, π]
    double steer = 0;    ///< δ actually applied, rad
};

/// What a controller sees at one control instant.
struct Measurements {
    FrenetState frenet;
    double steer = 0.0;                 ///< measured δ, rad
    double omega_bar = 0.0;             ///< ω̄ from the kinematic model at the measured δ, rad/s
    double e_I = 0.0;                   ///< implement lateral error estimate, m
    double curvature_now = 0.0;         ///< c(s)
    double curvature_at_horizon = 0.0;  ///< c(s + s_h)
    double speed = 1.0;                 ///< v, m/s
};

struct StepResult {
    VehiclePose pose;
    FrenetState frenet;
    Projection projection;
    /// Set when |1 - c·y| fell below the guard; the caller must abort the run.
    std::optional<std::string> fault;
};

/// World pose of the rear-axle center for a given Frenet state.
VehiclePose pose_from_frenet(const ReferencePath& path, const FrenetState& f, double steer = 0.0);

/// Applies the clamp and slew limits, integrates the bicycle model over `dt`
/// with classical RK4, then re-projects to get the ground-truth Frenet state.
StepResult step(const VehiclePose& pose, const FrenetState& frenet, double delta_cmd, double dt,
                const ReferencePath& path, const VehicleConfig& cfg);

/// Steering actually applied after clamp and slew: the first half of `step`.
double apply_steer_limits(double current, double delta_cmd, double dt, const VehicleConfig& cfg);

/// One RK4 step of ẋ = v cos ψ, ẏ = v sin ψ, ψ̇ = v tan δ / L with δ held.
VehiclePose integrate_bicycle(const VehiclePose& pose, double dt, const VehicleConfig& cfg);

Vec2 implement_world_position(const VehiclePose& pose, const ImplementConfig& imp);

/// Signed lateral deviation of I from the path, by projection (ground truth).
Projection implement_projection(const VehiclePose& pose, const ImplementConfig& imp,
                                const ReferencePath& path);
double implement_error_exact(const VehiclePose& pose, const ImplementConfig& imp,
                             const ReferencePath& path);

/// Controller-side estimate from the robot's Frenet state: the lateral
/// coordinate of I along the local normal at the robot's abscissa,
/// y + I_s sin θ̃ + I_y cos θ̃.
double implement_error_measured(const FrenetState& frenet, const ImplementConfig& imp);

/// ω̄ = v (tan δ / L − c cos θ̃ / (1 − c y)). Throws SingularityError when
/// |1 − c y| < 1e-6.
double yaw_rate_from_steer(double delta, const FrenetState& frenet, double curvature,
                           const VehicleConfig& cfg);
double yaw_rate_from_steer(double delta, const FrenetState& frenet, const ReferencePath& path,
                           const VehicleConfig& cfg);

}  // namespace implctl
