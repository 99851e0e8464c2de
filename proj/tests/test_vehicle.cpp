#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "implctl/errors.hpp"
#include "implctl/vehicle.hpp"
#include "oracles.hpp"

using namespace implctl;

namespace {

constexpr double kPi = std::numbers::pi;

PathSpec one_segment(SegmentKind kind, double length, double curvature) {
    PathSpec spec;
    SegmentDescriptor d;
    d.kind = kind;
    d.length_m = length;
    d.curvature_per_m = curvature;
    spec.segments = {d};
    return spec;
}

ReferencePath straight(double length = 100.0) {
    return build_path(one_segment(SegmentKind::Line, length, 0.0));
}

}  // namespace

TEST(VehicleStep, StraightLineAdvancesOneMetre) {
    const auto path = straight();
    const VehicleConfig cfg;
    const FrenetState f{5.0, 0.3, 0.0};
    const auto out = step(pose_from_frenet(path, f), f, 0.0, 1.0, path, cfg);
    EXPECT_NEAR(out.frenet.s, 6.0, 1e-12);
    EXPECT_NEAR(out.frenet.y, 0.3, 1e-12);
    EXPECT_NEAR(out.frenet.theta_tilde, 0.0, 1e-12);
    EXPECT_FALSE(out.fault);
}

TEST(VehicleStep, ConstantSteerGivesBicycleYawRate) {
    const auto path = straight();
    VehicleConfig cfg;
    const double delta = 0.2;
    const FrenetState f{5.0, 0.0, 0.0};
    VehiclePose pose = pose_from_frenet(path, f, delta);
    const auto out = step(pose, f, delta, 0.5, path, cfg);
    EXPECT_NEAR(out.pose.heading, 0.5 * cfg.speed * std::tan(delta) / cfg.wheelbase, 1e-15);
    EXPECT_NEAR(out.frenet.theta_tilde, out.pose.heading, 1e-15);
}

TEST(VehicleStep, RejectsNonPositiveDt) {
    const auto path = straight();
    const FrenetState f{1.0, 0.0, 0.0};
    EXPECT_THROW(step(pose_from_frenet(path, f), f, 0.0, 0.0, path, VehicleConfig{}), DomainError);
}

TEST(VehicleSteer, ClampThenSlew) {
    VehicleConfig cfg;
    EXPECT_DOUBLE_EQ(apply_steer_limits(0.0, 0.004, 0.01, cfg), 0.004);
    EXPECT_DOUBLE_EQ(apply_steer_limits(0.0, 1.0, 0.01, cfg), 0.008);
    EXPECT_DOUBLE_EQ(apply_steer_limits(0.549, 1.0, 0.01, cfg), 0.55);
    EXPECT_DOUBLE_EQ(apply_steer_limits(0.0, -1.0, 1.0, cfg), -0.55);
}

// Frenet state by projection against direct integration of the curvilinear
// model with a fine step.
TEST(VehicleModelConsistency, ProjectionMatchesCurvilinearIntegration) {
    const auto path = build_experiment_path("exp1");
    const VehicleConfig cfg;
    const double delta = 0.1;
    FrenetState f{15.0, 0.3, 0.05};
    VehiclePose pose = pose_from_frenet(path, f, delta);
    const double t_end = 10.0;
    const double dt = 0.01;
    for (int i = 0; i < 1000; ++i) {
        const auto out = step(pose, f, delta, dt, path, cfg);
        pose = out.pose;
        f = out.frenet;
    }

    const auto q = oracle::integrate_curvilinear(path, {15.0, 0.3, 0.05}, delta, cfg, t_end, 1'000'000);
    EXPECT_GT(f.s - 15.0, 9.5);  // about 10 m of travel, across the line/arc junction
    EXPECT_LT(std::abs(f.y - q.y), 1e-5);
    EXPECT_LT(std::abs(f.s - q.s), 1e-5);
    EXPECT_LT(std::abs(wrap_angle(f.theta_tilde - q.theta)), 1e-5);
}

// Halving dt must shrink the error against a 1e-6 reference by at least
// 2^4 * 0.8. The command is piecewise constant with switches on a grid that
// every tested dt divides, so the only error left is the integrator's. The
// speed is high enough that the finest error stays well above the rounding
// noise of the four-million-step reference.
TEST(VehicleIntegrator, FourthOrderConvergence) {
    VehicleConfig cfg;
    cfg.speed = 6.0;
    const auto errors = oracle::integrator_errors(cfg, std::vector<double>{0.2, 0.1, 0.05, 0.025});
    ASSERT_GT(errors.back(), 1e-8);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        EXPECT_GE(errors[i - 1] / errors[i], 16.0 * 0.8)
            << "halving " << i << ": " << errors[i - 1] << " -> " << errors[i];
    }
}

TEST(VehicleProperties, CurvatureMatchedSteadyState) {
    const auto path = build_path(one_segment(SegmentKind::Arc, 30.0, 0.1));
    const VehicleConfig cfg;
    const double delta = std::atan(cfg.wheelbase * 0.1);
    FrenetState f{1.0, 0.0, 0.0};
    VehiclePose pose = pose_from_frenet(path, f, delta);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto out = step(pose, f, delta, 0.01, path, cfg);
        pose = out.pose;
        f = out.frenet;
        worst = std::max(worst, std::abs(f.y));
    }
    EXPECT_GT(f.s, 10.9);
    EXPECT_LT(worst, 1e-6);
}

TEST(ImplementPosition, Rotations) {
    const ImplementConfig rear{-2.0, -0.5};
    auto at = [&](double x, double y, double psi, ImplementConfig imp) {
        return implement_world_position({{x, y}, psi, 0.0}, imp);
    };
    Vec2 p = at(0, 0, 0, rear);
    EXPECT_NEAR(p.x, -2.0, 1e-15);
    EXPECT_NEAR(p.y, -0.5, 1e-15);
    p = at(0, 0, kPi / 2, rear);
    EXPECT_NEAR(p.x, 0.5, 1e-15);
    EXPECT_NEAR(p.y, -2.0, 1e-15);
    p = at(1, 1, kPi, {2.0, -0.5});
    EXPECT_NEAR(p.x, -1.0, 1e-15);
    EXPECT_NEAR(p.y, 1.5, 1e-15);
}

TEST(ImplementErrorExact, StraightPathCases) {
    const auto path = straight();
    const VehiclePose on_path = pose_from_frenet(path, {10.0, 0.0, 0.0});
    EXPECT_NEAR(implement_error_exact(on_path, {-2.0, 0.0}, path), 0.0, 1e-15);
    EXPECT_NEAR(implement_error_exact(on_path, {-2.0, -0.5}, path), -0.5, 1e-15);
}

TEST(ImplementErrorExact, ChordGeometryOnArc) {
    for (const double radius : {8.0, 10.0, 25.0}) {
        const auto path = build_path(one_segment(SegmentKind::Arc, 30.0, 1.0 / radius));
        const VehiclePose pose = pose_from_frenet(path, {12.0, 0.0, 0.0});
        const double expected = radius - std::sqrt(radius * radius + 4.0);
        EXPECT_NEAR(implement_error_exact(pose, {-2.0, 0.0}, path), expected, 1e-9) << radius;
        EXPECT_NEAR(implement_error_exact(pose, {2.0, 0.0}, path), expected, 1e-9) << radius;
    }
}

TEST(ImplementErrorMeasured, Examples) {
    EXPECT_DOUBLE_EQ(implement_error_measured({3.0, 0.0, 0.0}, {-2.0, -0.5}), -0.5);
    EXPECT_DOUBLE_EQ(implement_error_measured({3.0, 0.4, 0.0}, {-2.0, -0.5}), 0.4 - 0.5);
}

TEST(ImplementErrorMeasured, ExactAtZeroHeading) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double y = u(rng);
        const ImplementConfig imp{u(rng), 0.25 * u(rng)};
        EXPECT_EQ(implement_error_measured({0.0, y, 0.0}, imp), y + imp.I_y);
    }
}

TEST(ImplementErrorMeasured, CloseToExactForSmallAnglesOnStraightPath) {
    const auto path = straight();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uth(-0.1, 0.1);
    std::uniform_real_distribution<double> uy(-1.0, 1.0);
    std::uniform_real_distribution<double> us(-2.0, 2.0);
    std::uniform_real_distribution<double> ul(-0.5, 0.5);
    for (int i = 0; i < 500; ++i) {
        const FrenetState f{50.0, uy(rng), uth(rng)};
        const ImplementConfig imp{us(rng), ul(rng)};
        const double exact = implement_error_exact(pose_from_frenet(path, f), imp, path);
        EXPECT_LE(std::abs(implement_error_measured(f, imp) - exact), 5e-3);
    }
}

TEST(YawRate, Examples) {
    const VehicleConfig cfg;
    EXPECT_DOUBLE_EQ(yaw_rate_from_steer(0.0, {0, 0.3, 0.1}, 0.0, cfg), 0.0);
    EXPECT_NEAR(yaw_rate_from_steer(std::atan(cfg.wheelbase * 0.1), {0, 0, 0}, 0.1, cfg), 0.0,
                1e-15);
    // tan(0.2) / 1.2 = 0.168925...
    EXPECT_NEAR(yaw_rate_from_steer(0.2, {0, 0, 0}, 0.0, cfg), 0.1689250296, 1e-10);
    EXPECT_THROW(yaw_rate_from_steer(0.0, {0, 10.0, 0}, 0.1, cfg), SingularityError);
}

TEST(VehicleConfigValidation, NamesTheKey) {
    VehicleConfig cfg;
    cfg.steer_limit = 2.0;
    try {
        cfg.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "steer_limit_rad");
    }
    cfg = {};
    cfg.speed = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
