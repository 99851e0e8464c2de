#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "implctl/controllers.hpp"
#include "implctl/errors.hpp"
#include "implctl/harness.hpp"
#include "oracles.hpp"

using namespace implctl;
using namespace implctl::oracle;

namespace {

Measurements at_rest() {
    Measurements m;
    m.speed = 1.0;
    return m;
}

}  // namespace

TEST(AlphaGamma, Examples) {
    Measurements m = at_rest();
    EXPECT_EQ(alpha_gamma(m, 1.0).alpha, 1.0);
    EXPECT_EQ(alpha_gamma(m, 1.0).gamma, 0.0);
    m.curvature_now = 0.1;
    m.frenet.y = 0.5;
    m.omega_bar = 0.09;
    const auto ag = alpha_gamma(m, 1.0);
    EXPECT_NEAR(ag.alpha, 0.95, 1e-15);
    EXPECT_NEAR(ag.gamma, 0.09, 1e-15);
    m.frenet.y = 10.0;
    EXPECT_THROW(alpha_gamma(m, 1.0), SingularityError);
    EXPECT_THROW(alpha_gamma(at_rest(), 0.0), DomainError);
}

TEST(ImplementErrorRate, Examples) {
    EXPECT_EQ(e_I_prime(0.0, 1.0, 0.0, {-2.0, -0.5}), 0.0);
    EXPECT_NEAR(e_I_prime(0.0, 1.0, 0.1, {-2.0, 0.0}), -0.2, 1e-15);
    EXPECT_THROW(e_I_prime(std::numbers::pi / 2.0, 1.0, 0.0, {}), DomainError);
}

TEST(ImplementErrorRate, MatchesFiniteDifferenceOfSimulatedError) {
    const VehicleConfig cfg;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const double c = 0.1 * u(rng);
        const auto path = build_path(single_segment(c == 0.0 ? SegmentKind::Line : SegmentKind::Arc, 40.0, c));
        const FrenetState f{20.0, 0.8 * u(rng), 0.3 * u(rng)};
        const double delta = 0.5 * u(rng);
        const ImplementConfig imp{2.0 * u(rng), 0.5 * u(rng)};
        const double omega = yaw_rate_from_steer(delta, f, c, cfg);
        const double alpha = 1.0 - c * f.y;
        const double analytic = e_I_prime(f.theta_tilde, alpha, omega / cfg.speed, imp);
        if (std::abs(analytic) < 0.02) continue;  // relative error is meaningless near zero
        const Sampled smp = sample_along(path, f, delta, imp, cfg, 1e-3);
        const double fd = first_derivative(smp.s, smp.e);
        EXPECT_LT(std::abs(fd - analytic) / std::abs(analytic), 1e-3)
            << "draw " << i << ": fd " << fd << " analytic " << analytic;
        ++checked;
    }
    EXPECT_GT(checked, 150);
}

TEST(ImplementErrorCurvature, Examples) {
    EXPECT_EQ(e_I_second(0.0, 1.0, 0.0, 0.0, 1.2), 0.0);
    EXPECT_NEAR(e_I_second(0.0, 1.0, std::atan(1.2 * 0.1), 0.1, 1.2), 0.0, 1e-15);
    EXPECT_THROW(e_I_second(2.0, 1.0, 0.0, 0.0, 1.2), DomainError);
}

// The second derivative drops the implement terms (yaw acceleration and the
// squared yaw rate), so the oracle uses a point at the robot center where the
// remaining neglected terms are second order in the heading error.
TEST(ImplementErrorCurvature, MatchesSecondFiniteDifference) {
    const VehicleConfig cfg;
    const double c = 0.05;
    const double theta = 0.05;
    const double delta = 0.1;
    const double y = (1.0 - 0.98) / c;  // alpha = 0.98
    const auto path = build_path(single_segment(SegmentKind::Arc, 40.0, c));
    const double analytic = e_I_second(theta, 0.98, delta, c, cfg.wheelbase);
    EXPECT_NEAR(analytic, 0.98 * 0.98 / std::cos(theta) *
                              (std::tan(delta) / 1.2 - c * std::cos(theta) / 0.98),
                1e-15);
    const Sampled smp = sample_along(path, {20.0, y, theta}, delta, {}, cfg, 1e-2);
    const double fd = second_derivative(smp.s, smp.e);
    EXPECT_LT(std::abs(fd - analytic) / std::abs(analytic), 5e-3) << fd << " vs " << analytic;
}

TEST(SigmaTerms, Examples) {
    auto sig = sigma_terms({0.0, 0.6, 2.0, 1.0});
    EXPECT_DOUBLE_EQ(sig.sigma1, 3.0);
    EXPECT_DOUBLE_EQ(sig.sigma2, 5.0);
    EXPECT_DOUBLE_EQ(sig.sigma3, 9.0);
    EXPECT_DOUBLE_EQ(sig.sigma_e, 3.0);
    sig = sigma_terms({0.0, 0.6, 0.5, 0.5});
    EXPECT_DOUBLE_EQ(sig.sigma1, 0.5);
    EXPECT_DOUBLE_EQ(sig.sigma2, 0.25);
    EXPECT_DOUBLE_EQ(sig.sigma3, 0.125);
    EXPECT_DOUBLE_EQ(sig.sigma_e, 0.5);
}

TEST(SigmaTerms, ThirteenStepHorizonMatchesPlainLoop) {
    const OptimalParams p{0.1, 0.6, 2.0, 0.15};
    ASSERT_EQ(p.n_h(), 13);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, se = 0.0;
    for (int k = 0; k <= 13; ++k) {
        const double d = k * 0.15;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
        se += d * std::exp(-0.1 * d);
    }
    const auto sig = sigma_terms(p);
    EXPECT_EQ(sig.sigma1, s1);
    EXPECT_EQ(sig.sigma2, s2);
    EXPECT_EQ(sig.sigma3, s3);
    EXPECT_EQ(sig.sigma_e, se);
    EXPECT_LT(sig.sigma_e, sig.sigma1);
}

TEST(SigmaTerms, ZeroIndexTermContributesNothing) {
    for (const auto& preset : table2_presets()) {
        const OptimalParams& p = preset.controller.optimal;
        const auto sig = sigma_terms(p);
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, se = 0.0;
        for (int k = 1; k <= p.n_h(); ++k) {
            const double d = k * p.s_t;
            s1 += d;
            s2 += d * d;
            s3 += d * d * d;
            se += d * std::exp(-p.lambda * d);
        }
        EXPECT_EQ(sig.sigma1, s1);
        EXPECT_EQ(sig.sigma2, s2);
        EXPECT_EQ(sig.sigma3, s3);
        EXPECT_EQ(sig.sigma_e, se);
    }
}

TEST(OptimalParams, HorizonStepCount) {
    EXPECT_EQ((OptimalParams{0.1, 0.6, 2.0, 0.15}.n_h()), 13);
    EXPECT_EQ((OptimalParams{0.1, 0.6, 3.5, 0.10}.n_h()), 35);
    OptimalParams bad{0.1, 0.6, -1.0, 0.15};
    try {
        bad.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "s_h_m");
    }
}

TEST(XiOptimal, Examples) {
    const auto sig = sigma_terms({0.1, 0.6, 2.0, 0.15});
    EXPECT_EQ(xi_optimal(0.0, 1.0, 0.0, {-2.0, -0.5}, 0.0, sig), 0.0);
    for (const double e : {0.5, -0.3}) {
        const double xi = xi_optimal(e, 1.0, 0.0, {-2.0, -0.5}, 0.0, sig);
        EXPECT_NEAR(xi, -e * (sig.sigma1 - sig.sigma_e) / sig.sigma2, 1e-15);
        EXPECT_LT(xi * e, 0.0);
    }
    EXPECT_THROW(xi_optimal(0.1, 1.0, 0.0, {}, 0.0, SigmaTerms{}), ConfigError);
}

TEST(XiOptimal, EqualsNumericArgminOfHorizonCost) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    const VehicleConfig cfg;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double e = in(-1.0, 1.0);
        const double theta = in(-0.3, 0.3);
        const double alpha = in(0.8, 1.2);
        const double gamma = in(-0.2, 0.2);
        const ImplementConfig imp{in(-2.0, 2.0), in(-0.5, 0.5)};
        const OptimalParams p{in(0.1, 0.25), in(0.3, 0.6), in(0.5, 3.5), in(0.1, 0.15)};
        if (p.n_h() < 1) continue;
        const double e2 = e_I_second(theta, alpha, in(-0.55, 0.55), in(-0.125, 0.125), cfg.wheelbase);
        const double xi = xi_optimal(e, alpha, gamma, imp, e2, sigma_terms(p));
        const double numeric = golden_section_argmin(
            [&](double x) { return horizon_cost(x, e, alpha, gamma, imp.I_s, e2, p.lambda, p.s_t, p.n_h()); },
            -10.0, 10.0);
        if (std::abs(xi) < 9.9) {
            worst = std::max(worst, std::abs(xi - numeric));
        }
        // The library's cost agrees with the hand-written one.
        EXPECT_NEAR(prediction_cost(xi, e, alpha, gamma, imp, e2, p),
                    horizon_cost(xi, e, alpha, gamma, imp.I_s, e2, p.lambda, p.s_t, p.n_h()), 1e-12);
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(XiOptimal, CostIsConvexInXi) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const OptimalParams p{0.1 + 0.1 * std::abs(u(rng)), 0.6, 0.5 + 3.0 * std::abs(u(rng)), 0.1};
        const ImplementConfig imp{2.0 * u(rng), 0.5 * u(rng)};
        const double e = u(rng), a = 1.0 + 0.2 * u(rng), g = 0.2 * u(rng), e2 = 0.1 * u(rng);
        const double h = 0.1;
        for (double x = -5.0; x <= 5.0; x += 0.5) {
            const double second = prediction_cost(x + h, e, a, g, imp, e2, p) -
                                  2.0 * prediction_cost(x, e, a, g, imp, e2, p) +
                                  prediction_cost(x - h, e, a, g, imp, e2, p);
            // The exact second difference of Σ(r_k)² is 2 h² σ₂.
            EXPECT_GT(second, 0.0);
            EXPECT_NEAR(second, 2.0 * h * h * sigma_terms(p).sigma2, 1e-9);
        }
    }
}

TEST(DesiredHeading, Examples) {
    EXPECT_EQ(desired_heading(0.0, 1.0, 0.0, {}), 0.0);
    const ImplementConfig imp{-2.0, -0.5};
    const double a = 0.95, g = 0.09;
    EXPECT_NEAR(desired_heading(a * (1.0 - g * imp.I_y) * std::tan(0.1), a, g, imp), 0.1, 1e-15);
    EXPECT_NEAR(desired_heading(0.2, a, g, imp), std::atan(0.2 / (0.95 * 1.045)), 1e-15);
    EXPECT_NEAR(desired_heading(0.2, a, g, imp), 0.198800, 5e-6);
    EXPECT_THROW(desired_heading(0.2, 1.0, -2.0, imp), SingularityError);
}

TEST(SteeringCommand, Examples) {
    EXPECT_EQ(steering_command(0.1, 0.1, 0.0, 0.0, 0.6, 1.2, 0.55).delta, 0.0);
    const auto arc = steering_command(0.0, 0.0, 0.1, 0.0, 0.6, 1.2, 0.55);
    EXPECT_NEAR(arc.delta, 0.11943, 5e-6);
    EXPECT_NEAR(arc.delta, std::atan(0.12), 1e-15);
    const auto back = steering_command(0.1, 0.0, 0.0, 0.0, 0.6, 1.2, 0.55);
    EXPECT_NEAR(back.delta, std::atan(1.2 * -0.06 * std::cos(0.1)), 1e-15);
    EXPECT_LT(back.delta, 0.0);
    const auto sat = steering_command(1.0, 0.0, 0.0, 0.0, 5.0, 1.2, 0.55);
    EXPECT_TRUE(sat.clamped);
    EXPECT_EQ(sat.delta, -0.55);
    EXPECT_THROW(steering_command(0.0, 0.0, 0.1, 10.0, 0.6, 1.2, 0.55), SingularityError);
}

TEST(Controllers, ZeroErrorFixedPoint) {
    const VehicleConfig cfg;
    const ImplementConfig imp{-2.0, 0.0};
    Measurements m = at_rest();
    Controller opt(OptimalParams{}, imp, cfg);
    Controller bs(Method::Backstepping, BaselineParams{}, imp, cfg);
    Controller ls(Method::LateralServoing, BaselineParams{}, imp, cfg);
    for (Controller* c : {&opt, &bs, &ls}) {
        const auto cmd = c->step(m);
        EXPECT_EQ(cmd.delta_desired, 0.0) << to_string(c->method());
        EXPECT_FALSE(cmd.fault);
    }
}

// Straight-line script of the whole chain, sharing nothing with the library.
TEST(OptimalStep, MatchesIndependentStraightLineScript) {
    const VehicleConfig cfg;
    const double I_s = -2.0, I_y = -0.5, lambda = 0.1, k_theta = 0.6, s_h = 2.0, s_t = 0.15;
    const double y = 0.31, theta = -0.07, delta = 0.12, v = 1.0, L = 1.2;

    const double omega = v * std::tan(delta) / L;
    const double gamma = omega / v;
    const double e = y + I_s * std::sin(theta) + I_y * std::cos(theta);
    const double e2 = std::tan(delta) / L / std::cos(theta);
    const int n = static_cast<int>(std::lround(s_h / s_t));
    double s1 = 0, s2 = 0, s3 = 0, se = 0;
    for (int k = 1; k <= n; ++k) {
        const double d = k * s_t;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
        se += d * std::exp(-lambda * d);
    }
    const double xi = -(e * s1 + gamma * I_s * s2 + e2 * s3 - e * se) / s2;
    const double theta_d = std::atan(xi / (1.0 - gamma * I_y));
    const double expected = std::atan(L * (-k_theta * (theta - theta_d)) * std::cos(theta));

    Measurements m;
    m.frenet = {3.0, y, theta};
    m.steer = delta;
    m.speed = v;
    m.omega_bar = yaw_rate_from_steer(delta, m.frenet, 0.0, cfg);
    m.e_I = implement_error_measured(m.frenet, {I_s, I_y});
    const auto cmd = optimal_control_step(m, {lambda, k_theta, s_h, s_t}, {I_s, I_y}, cfg);
    EXPECT_NEAR(cmd.xi_desired, xi, 1e-12);
    EXPECT_NEAR(cmd.theta_desired, theta_d, 1e-12);
    EXPECT_NEAR(cmd.delta_desired, expected, 1e-12);
    EXPECT_EQ(cmd.diagnostics.n_h, 13);
    EXPECT_NEAR(cmd.diagnostics.e_I_second, e2, 1e-12);
}

TEST(OptimalStep, SettlesOnConstantArc) {
    Scenario scn;
    scn.path = single_segment(SegmentKind::Arc, 120.0, 0.02);
    scn.controller.method = Method::Optimal;
    scn.controller.optimal = {0.1, 0.6, 2.0, 0.15};
    scn.implement = {-2.0, -0.5};
    scn.run.initial_e_I = 0.1;
    scn.run.initial_steer = std::atan(1.2 * 0.02);
    const RunLog log = run_scenario(scn);
    ASSERT_FALSE(log.aborted);
    const LogRecord& last = log.records.back();
    EXPECT_NEAR(last.theta_d, last.theta_tilde, 1e-3);
    EXPECT_NEAR(last.delta_cmd, std::atan(1.2 * 0.02), 1e-3);
    // Exact equilibrium steers the robot center on the offset circle.
    EXPECT_NEAR(last.delta_cmd, std::atan(1.2 * 0.02 / (1.0 - 0.02 * last.y)), 1e-4);
}

TEST(BacksteppingHeading, Examples) {
    EXPECT_EQ(backstepping_desired_heading(0.0, 1.0, 0.0, 0.2, {-2.0, -0.5}), 0.0);
    EXPECT_NEAR(std::tan(backstepping_desired_heading(0.5, 1.0, 0.0, 0.2, {-2.0, -0.5})), -0.1,
                1e-15);
    EXPECT_THROW(backstepping_desired_heading(0.5, 1.0, -2.0, 0.2, {-2.0, -0.5}), SingularityError);
}

namespace {

Scenario straight_scenario(const std::string& preset) {
    Scenario scn;
    scn.path = single_segment(SegmentKind::Line, 80.0, 0.0);
    const auto p = controller_preset(preset);
    scn.controller = p.controller;
    scn.implement = p.implement;
    scn.run.initial_e_I = 0.5;
    return scn;
}

// Largest |e_I| over consecutive windows of `width` metres.
std::vector<double> envelope(const RunLog& log, double width) {
    std::vector<double> out;
    for (const auto& r : log.records) {
        const auto bin = static_cast<std::size_t>(r.s / width);
        if (out.size() <= bin) out.resize(bin + 1, 0.0);
        out[bin] = std::max(out[bin], std::abs(r.e_I_exact));
    }
    return out;
}

}  // namespace

TEST(BacksteppingClosedLoop, FrontPlacementEnvelopeDecays) {
    const RunLog log = run_scenario(straight_scenario("table1_front_backstepping"));
    ASSERT_FALSE(log.aborted);
    const auto env = envelope(log, 10.0);
    ASSERT_GE(env.size(), 7u);
    for (std::size_t i = 2; i + 1 < env.size(); ++i) {
        EXPECT_LE(env[i], env[i - 1] + 1e-3) << "window " << i;
    }
    EXPECT_LT(env[env.size() - 2], 0.05);
}

// The specified heading stage feeds the measured yaw rate back through the
// rear offset with loop gain k_theta * |I_s| = 1.2, so the rear baseline does
// not settle even on a straight line. Pinned here so a change is noticed.
TEST(BacksteppingClosedLoop, RearPlacementLimitCycles) {
    Scenario scn = straight_scenario("table1_rear_backstepping");
    const auto env = envelope(run_scenario(scn), 10.0);
    EXPECT_GT(env[env.size() - 2], 0.3);

    scn.controller.baseline.yaw_rate_term = false;
    const auto calm = envelope(run_scenario(scn), 10.0);
    EXPECT_LT(calm[calm.size() - 2], 0.05);
}

TEST(LateralServo, Reference) {
    Measurements m = at_rest();
    m.e_I = implement_error_measured(m.frenet, {-2.0, -0.5});
    EXPECT_EQ(lateral_servo_reference(m), 0.5);
}

TEST(LateralServoClosedLoop, ConvergesOnStraightPath) {
    for (const char* name : {"table1_rear_lateral_servoing", "table1_front_lateral_servoing"}) {
        const RunLog log = run_scenario(straight_scenario(name));
        ASSERT_FALSE(log.aborted);
        EXPECT_LT(std::abs(log.records.back().e_I_exact), 0.02) << name;
    }
}

TEST(Controllers, CommandsNeverExceedSteerLimit) {
    const VehicleConfig cfg;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ImplementConfig imp{-2.0, -0.5};
    Controller opt(OptimalParams{0.25, 3.0, 1.0, 0.1}, imp, cfg);
    Controller bs(Method::Backstepping, BaselineParams{2.0, 3.0}, imp, cfg);
    Controller ls(Method::LateralServoing, BaselineParams{2.0, 3.0}, imp, cfg);
    for (int i = 0; i < 2000; ++i) {
        Measurements m;
        m.frenet = {0.0, 3.0 * u(rng), 1.4 * u(rng)};
        m.curvature_now = 0.125 * u(rng);
        m.curvature_at_horizon = 0.125 * u(rng);
        m.steer = 0.55 * u(rng);
        m.omega_bar = 0.5 * u(rng);
        m.e_I = implement_error_measured(m.frenet, imp);
        for (Controller* c : {&opt, &bs, &ls}) {
            const double d = c->step(m).delta_desired;
            ASSERT_TRUE(std::isfinite(d));
            ASSERT_LE(std::abs(d), cfg.steer_limit);
        }
    }
}

TEST(Controllers, HoldLastCommandOnSingularity) {
    const VehicleConfig cfg;
    const ImplementConfig imp{-2.0, -0.5};
    for (const Method method : {Method::Optimal, Method::Backstepping, Method::LateralServoing}) {
        Controller c = method == Method::Optimal ? Controller(OptimalParams{}, imp, cfg)
                                                 : Controller(method, BaselineParams{}, imp, cfg);
        Measurements m = at_rest();
        m.frenet.y = 0.3;
        m.e_I = implement_error_measured(m.frenet, imp);
        const auto good = c.step(m);
        ASSERT_FALSE(good.fault);

        Measurements centre = m;
        centre.curvature_now = 0.1;
        centre.frenet.y = 10.0;
        const auto held = c.step(centre);
        ASSERT_TRUE(held.fault) << to_string(method);
        EXPECT_EQ(held.delta_desired, good.delta_desired);

        Measurements lateral = m;
        lateral.omega_bar = -2.0;  // 1 - gamma * I_y = 0
        const auto held2 = c.step(lateral);
        if (method == Method::LateralServoing) {
            // The servo law never divides by 1 - gamma * I_y.
            EXPECT_FALSE(held2.fault);
            EXPECT_TRUE(std::isfinite(held2.delta_desired));
        } else {
            ASSERT_TRUE(held2.fault) << to_string(method);
            EXPECT_EQ(held2.delta_desired, good.delta_desired);
        }
    }
}
