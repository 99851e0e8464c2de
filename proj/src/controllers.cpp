#include "implctl/controllers.hpp"

#include <cmath>
#include <numbers>

#include "implctl/errors.hpp"

namespace implctl {

int OptimalParams::n_h() const { return static_cast<int>(std::lround(s_h / s_t)); }

void OptimalParams::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda_per_m must be > 0", "lambda_per_m");
    if (!(k_theta > 0.0)) throw ConfigError("k_theta_per_m must be > 0", "k_theta_per_m");
    if (!(s_h > 0.0)) throw ConfigError("s_h_m must be > 0", "s_h_m");
    if (!(s_t > 0.0)) throw ConfigError("s_t_m must be > 0", "s_t_m");
    if (s_t > s_h) throw ConfigError("s_t_m must not exceed s_h_m", "s_t_m");
    if (n_h() < 1) throw ConfigError("s_h_m / s_t_m must round to at least 1", "s_t_m");
}

void BaselineParams::validate() const {
    if (!(k_y > 0.0)) throw ConfigError("k_y_per_m must be > 0", "k_y_per_m");
    if (!(k_theta > 0.0)) throw ConfigError("k_theta_per_m must be > 0", "k_theta_per_m");
}

AlphaGamma alpha_gamma(const Measurements& meas, double v) {
    if (!(v > 0.0)) {
        throw DomainError("speed must be strictly positive");
    }
    const double alpha = 1.0 - meas.curvature_now * meas.frenet.y;
    if (std::abs(alpha) < kSingularityEps) {
        throw SingularityError("|1 - c*y| below guard (osculating-circle center)");
    }
    return {alpha, meas.omega_bar / v};
}

namespace {

void check_heading(double theta_tilde) {
    if (!(std::abs(theta_tilde) < std::numbers::pi / 2.0)) {
        throw DomainError("|theta_tilde| must be < pi/2");
    }
}

}  // namespace

double e_I_prime(double theta_tilde, double alpha, double gamma, const ImplementConfig& imp) {
    check_heading(theta_tilde);
    const double t = std::tan(theta_tilde);
    return alpha * (t + gamma * (imp.I_s - imp.I_y * t));
}

double e_I_second(double theta_tilde, double alpha, double delta, double c, double wheelbase) {
    check_heading(theta_tilde);
    if (alpha == 0.0) {
        throw SingularityError("alpha is zero");
    }
    const double ct = std::cos(theta_tilde);
    return alpha * alpha / ct * (std::tan(delta) / wheelbase - c * ct / alpha);
}

SigmaTerms sigma_terms(const OptimalParams& params) {
    SigmaTerms out;
    const int n = params.n_h();
    for (int k = 0; k <= n; ++k) {
        const double d = k * params.s_t;
        out.sigma1 += d;
        out.sigma2 += d * d;
        out.sigma3 += d * d * d;
        out.sigma_e += d * std::exp(-params.lambda * d);
    }
    return out;
}

double xi_optimal(double e_I, double alpha, double gamma, const ImplementConfig& imp,
                  double e_I_second, const SigmaTerms& sigma) {
    if (!(sigma.sigma2 > 0.0)) {
        throw ConfigError("sigma2 must be > 0 (n_h >= 1)", "s_h_m");
    }
    return -(e_I * sigma.sigma1 + alpha * gamma * imp.I_s * sigma.sigma2 +
             e_I_second * sigma.sigma3 - e_I * sigma.sigma_e) /
           sigma.sigma2;
}

double prediction_cost(double xi, double e_I, double alpha, double gamma, const ImplementConfig& imp,
                       double e_I_second, const OptimalParams& params) {
    double j = 0.0;
    const int n = params.n_h();
    for (int k = 1; k <= n; ++k) {
        const double d = k * params.s_t;
        const double r = e_I + (xi + alpha * gamma * imp.I_s) * d + e_I_second * d * d -
                         e_I * std::exp(-params.lambda * d);
        j += r * r;
    }
    return j;
}

double desired_heading(double xi, double alpha, double gamma, const ImplementConfig& imp) {
    const double g = 1.0 - gamma * imp.I_y;
    if (std::abs(g) < kSingularityEps) {
        throw SingularityError("|1 - gamma*I_y| below guard");
    }
    if (std::abs(alpha) < kSingularityEps) {
        throw SingularityError("|1 - c*y| below guard (osculating-circle center)");
    }
    return std::atan(xi / (alpha * g));
}

SteeringResult steering_command(double theta_tilde, double theta_desired, double c, double y,
                                double k_theta, double wheelbase, double steer_limit) {
    const double alpha = 1.0 - c * y;
    if (std::abs(alpha) < kSingularityEps) {
        throw SingularityError("|1 - c*y| below guard (osculating-circle center)");
    }
    const double e_theta = theta_tilde - theta_desired;
    const double raw =
        std::atan(wheelbase * (-k_theta * e_theta + c) * std::cos(theta_tilde) / alpha);
    if (std::abs(raw) > steer_limit) {
        return {std::copysign(steer_limit, raw), true};
    }
    return {raw, false};
}

ControlCommand optimal_control_step(const Measurements& meas, const OptimalParams& params,
                                    const ImplementConfig& imp, const VehicleConfig& cfg) {
    const auto [alpha, gamma] = alpha_gamma(meas, meas.speed);
    const double theta = meas.frenet.theta_tilde;
    const double e2 =
        e_I_second(theta, alpha, meas.steer, meas.curvature_at_horizon, cfg.wheelbase);
    const SigmaTerms sigma = sigma_terms(params);
    const double xi = xi_optimal(meas.e_I, alpha, gamma, imp, e2, sigma);
    const double theta_d = desired_heading(xi, alpha, gamma, imp);
    const auto steer = steering_command(theta, theta_d, meas.curvature_now, meas.frenet.y,
                                        params.k_theta, cfg.wheelbase, cfg.steer_limit);

    ControlCommand cmd;
    cmd.delta_desired = steer.delta;
    cmd.theta_desired = theta_d;
    cmd.xi_desired = xi;
    cmd.diagnostics = {meas.e_I,
                       e_I_prime(theta, alpha, gamma, imp),
                       e2,
                       alpha,
                       gamma,
                       prediction_cost(xi, meas.e_I, alpha, gamma, imp, e2, params),
                       params.n_h(),
                       steer.clamped};
    return cmd;
}

double backstepping_desired_heading(double e_I, double alpha, double gamma, double k_y,
                                    const ImplementConfig& imp) {
    const double g = 1.0 - gamma * imp.I_y;
    if (std::abs(g) < kSingularityEps) {
        throw SingularityError("|1 - gamma*I_y| below guard");
    }
    return std::atan((-k_y * e_I / alpha - gamma * imp.I_s) / g);
}

ControlCommand backstepping_control_step(const Measurements& meas, const BaselineParams& params,
                                         const ImplementConfig& imp, const VehicleConfig& cfg) {
    const auto [alpha, gamma] = alpha_gamma(meas, meas.speed);
    const double theta = meas.frenet.theta_tilde;
    const double theta_d = backstepping_desired_heading(
        meas.e_I, alpha, params.yaw_rate_term ? gamma : 0.0, params.k_y, imp);
    const auto steer = steering_command(theta, theta_d, meas.curvature_now, meas.frenet.y,
                                        params.k_theta, cfg.wheelbase, cfg.steer_limit);
    ControlCommand cmd;
    cmd.delta_desired = steer.delta;
    cmd.theta_desired = theta_d;
    cmd.diagnostics.e_I = meas.e_I;
    cmd.diagnostics.e_I_prime = e_I_prime(theta, alpha, gamma, imp);
    cmd.diagnostics.alpha = alpha;
    cmd.diagnostics.gamma = gamma;
    cmd.diagnostics.clamped = steer.clamped;
    return cmd;
}

double lateral_servo_reference(const Measurements& meas) { return meas.frenet.y - meas.e_I; }

ControlCommand lateral_servoing_control_step(const Measurements& meas,
                                             const BaselineParams& params,
                                             const ImplementConfig& imp, const VehicleConfig& cfg) {
    const auto [alpha, gamma] = alpha_gamma(meas, meas.speed);
    const double theta = meas.frenet.theta_tilde;
    check_heading(theta);
    const double c = meas.curvature_now;
    const double ct = std::cos(theta);
    const double lateral = meas.frenet.y - lateral_servo_reference(meas);
    const double curvature_cmd =
        c * ct / alpha - params.k_theta * std::tan(theta) - params.k_y * lateral * ct;
    double delta = std::atan(cfg.wheelbase * curvature_cmd);
    const bool clamped = std::abs(delta) > cfg.steer_limit;
    if (clamped) {
        delta = std::copysign(cfg.steer_limit, delta);
    }
    ControlCommand cmd;
    cmd.delta_desired = delta;
    cmd.diagnostics.e_I = meas.e_I;
    cmd.diagnostics.e_I_prime = e_I_prime(theta, alpha, gamma, imp);
    cmd.diagnostics.alpha = alpha;
    cmd.diagnostics.gamma = gamma;
    cmd.diagnostics.clamped = clamped;
    return cmd;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Optimal: return "optimal";
        case Method::Backstepping: return "backstepping";
        case Method::LateralServoing: return "lateral_servoing";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    if (name == "optimal") return Method::Optimal;
    if (name == "backstepping") return Method::Backstepping;
    if (name == "lateral_servoing") return Method::LateralServoing;
    throw ConfigError("unknown controller method '" + name + "'", "method");
}

Controller::Controller(OptimalParams params, ImplementConfig imp, VehicleConfig cfg)
    : method_(Method::Optimal), params_(params), imp_(imp), cfg_(cfg) {
    params.validate();
}

Controller::Controller(Method method, BaselineParams params, ImplementConfig imp, VehicleConfig cfg)
    : method_(method), params_(params), imp_(imp), cfg_(cfg) {
    if (method == Method::Optimal) {
        throw ConfigError("optimal controller needs OptimalParams", "method");
    }
    params.validate();
}

double Controller::horizon() const {
    if (const auto* p = std::get_if<OptimalParams>(&params_)) {
        return p->s_h;
    }
    return 0.0;
}

ControlCommand Controller::step(const Measurements& meas) {
    ControlCommand cmd;
    try {
        switch (method_) {
            case Method::Optimal:
                cmd = optimal_control_step(meas, std::get<OptimalParams>(params_), imp_, cfg_);
                break;
            case Method::Backstepping:
                cmd = backstepping_control_step(meas, std::get<BaselineParams>(params_), imp_, cfg_);
                break;
            case Method::LateralServoing:
                cmd = lateral_servoing_control_step(meas, std::get<BaselineParams>(params_), imp_,
                                                    cfg_);
                break;
        }
        if (!std::isfinite(cmd.delta_desired) || !std::isfinite(cmd.theta_desired)) {
            throw SingularityError("non-finite command");
        }
    } catch (const SingularityError& e) {
        ControlCommand held = last_;
        held.fault = e.what();
        return held;
    } catch (const DomainError& e) {
        ControlCommand held = last_;
        held.fault = e.what();
        return held;
    }
    last_ = cmd;
    return cmd;
}

}  // namespace implctl
