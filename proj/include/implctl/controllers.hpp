#pragma once

#include <optional>
#include <string>
#include <variant>

#include "implctl/vehicle.hpp"

namespace implctl {

/// Parameters of the two-stage predictive controller.
struct OptimalParams {
    double lambda = 0.1;   ///< exponential convergence rate of the reference profile, 1/m
    double k_theta = 0.6;  ///< heading gain, 1/m
    double s_h = 2.0;      ///< prediction horizon, m
    double s_t = 0.15;     ///< sampling step, m

    /// round(s_h / s_t); the horizon is sampled at k·s_t for k = 0..n_h.
    int n_h() const;
    void validate() const;
};

/// Power sums over the sampled horizon, k = 0..n_h.
struct SigmaTerms {
    double sigma1 = 0.0;  ///< Σ k s_t
    double sigma2 = 0.0;  ///< Σ (k s_t)²
    double sigma3 = 0.0;  ///< Σ (k s_t)³
    double sigma_e = 0.0; ///< Σ k s_t e^{-λ k s_t}
};

/// Gains shared by both reconstructed baselines.
struct BaselineParams {
    double k_y = 0.2;
    double k_theta = 0.6;
    /// Backstepping only: keep the measured yaw-rate term γ in the heading
    /// stage. Turning it off removes the algebraic steer→γ→θ̃_d loop.
    bool yaw_rate_term = true;
    void validate() const;
};

struct ControlDiagnostics {
    double e_I = 0.0;
    double e_I_prime = 0.0;
    double e_I_second = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double j_residual = 0.0;  ///< prediction cost at the returned ξ (optimal only)
    int n_h = 0;
    bool clamped = false;
};

struct ControlCommand {
    double delta_desired = 0.0;  ///< δ^d after clamping, rad
    double theta_desired = 0.0;  ///< θ̃_d^h, rad
    double xi_desired = 0.0;     ///< ξ_d^h (optimal only)
    ControlDiagnostics diagnostics;
    /// Set when a guard tripped and the previous command was held.
    std::optional<std::string> fault;
};

// Stage building blocks. Each throws on its documented guard.

struct AlphaGamma {
    double alpha;
    double gamma;
};
AlphaGamma alpha_gamma(const Measurements& meas, double v);

/// Spatial derivative of the implement error, d e_I / ds.
double e_I_prime(double theta_tilde, double alpha, double gamma, const ImplementConfig& imp);

/// Second spatial derivative with yaw acceleration and ω̄² terms neglected.
/// `c` is the curvature at the end of the horizon.
double e_I_second(double theta_tilde, double alpha, double delta, double c, double wheelbase);

SigmaTerms sigma_terms(const OptimalParams& params);

/// Closed-form minimizer over ξ of the horizon cost.
double xi_optimal(double e_I, double alpha, double gamma, const ImplementConfig& imp,
                  double e_I_second, const SigmaTerms& sigma);

/// Horizon cost Σ_{k=1..n_h} [e_I + (ξ + αγI_s) k s_t + e''(k s_t)² − e_I e^{−λ k s_t}]².
double prediction_cost(double xi, double e_I, double alpha, double gamma, const ImplementConfig& imp,
                       double e_I_second, const OptimalParams& params);

/// Inverts ξ = α(1 − γ I_y) tan θ̃.
double desired_heading(double xi, double alpha, double gamma, const ImplementConfig& imp);

struct SteeringResult {
    double delta;
    bool clamped;
};
/// Heading-tracking steering law, clamped to ±steer_limit.
SteeringResult steering_command(double theta_tilde, double theta_desired, double c, double y,
                                double k_theta, double wheelbase, double steer_limit);

ControlCommand optimal_control_step(const Measurements& meas, const OptimalParams& params,
                                    const ImplementConfig& imp, const VehicleConfig& cfg);

/// Reconstructed non-predictive backstepping baseline: picks θ̃_d so that
/// e_I' = −k_y e_I, then applies the same steering law.
double backstepping_desired_heading(double e_I, double alpha, double gamma, double k_y,
                                    const ImplementConfig& imp);
ControlCommand backstepping_control_step(const Measurements& meas, const BaselineParams& params,
                                         const ImplementConfig& imp, const VehicleConfig& cfg);

/// Reconstructed lateral-servoing baseline: drives the rear-axle center toward
/// y_d = y − e_I with a chained-form curvature law.
double lateral_servo_reference(const Measurements& meas);
ControlCommand lateral_servoing_control_step(const Measurements& meas,
                                             const BaselineParams& params,
                                             const ImplementConfig& imp, const VehicleConfig& cfg);

enum class Method { Optimal, Backstepping, LateralServoing };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Value-type controller. The only state is the last valid command, held and
/// re-emitted (with `fault` set) when a guard trips.
class Controller {
public:
    Controller(OptimalParams params, ImplementConfig imp, VehicleConfig cfg);
    Controller(Method method, BaselineParams params, ImplementConfig imp, VehicleConfig cfg);

    Method method() const { return method_; }
    /// Look-ahead used for c(s + s_h); zero for the non-predictive baselines.
    double horizon() const;
    bool is_reconstruction() const { return method_ != Method::Optimal; }

    ControlCommand step(const Measurements& meas);

private:
    Method method_;
    std::variant<OptimalParams, BaselineParams> params_;
    ImplementConfig imp_;
    VehicleConfig cfg_;
    ControlCommand last_{};
};

}  // namespace implctl
