#include <gtest/gtest.h>

#include <vortex_ca/scenario_io.hpp>

#include "oracles.hpp"

using namespace vortex_ca;

namespace {

RobotState robot(int id, PlanarVector p, double heading, double speed, std::optional<PlanarVector> goal = std::nullopt,
                 Behavior b = Behavior::cooperative()) {
    RobotState r;
    r.id = id;
    r.position = p;
    r.heading = heading;
    r.speed = speed;
    r.goal = goal;
    r.behavior = b;
    return r;
}

void expect_same_log(const TrajectoryLog& a, const TrajectoryLog& b) {
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t n = 0; n < a.records.size(); ++n) {
        const auto& ra = a.records[n];
        const auto& rb = b.records[n];
        ASSERT_EQ(ra.t, rb.t);
        ASSERT_EQ(ra.robots.size(), rb.robots.size());
        for (std::size_t k = 0; k < ra.robots.size(); ++k) {
            const auto& x = ra.robots[k];
            const auto& y = rb.robots[k];
            ASSERT_EQ(x.id, y.id);
            for (auto [u, v] : {std::pair{x.x, y.x}, {x.y, y.y}, {x.phi, y.phi}, {x.omega, y.omega}, {x.fx, y.fx}, {x.fy, y.fy}})
                ASSERT_EQ(u, v) << "record " << n << " robot " << x.id;
        }
        for (std::size_t k = 0; k < ra.pairs.size(); ++k) {
            ASSERT_EQ(ra.pairs[k].r, rb.pairs[k].r);
            ASSERT_EQ(ra.pairs[k].vr, rb.pairs[k].vr);
            ASSERT_EQ(ra.pairs[k].vth, rb.pairs[k].vth);
        }
    }
    ASSERT_EQ(a.events.size(), b.events.size());
}

}  // namespace

TEST(Step, StraightTowardGoal) {
    const World w = {robot(1, {0, 0}, 0, 0.17, PlanarVector{5, 0})};
    const auto s = step(w, PFParams{}, 0.01);
    EXPECT_NEAR(s.world[0].position.x, 0.0017, 1e-15);
    EXPECT_EQ(s.world[0].position.y, 0.0);
    EXPECT_EQ(s.controls[0].omega, 0.0);
}

TEST(Step, HeadOnPairBothTurnRight) {
    const World w = {robot(1, {-1.5, 0}, 0, 0.17, PlanarVector{1.5, 0}), robot(2, {1.5, 0}, kPi, 0.17, PlanarVector{-1.5, 0})};
    const auto s = step(w, PFParams{}, 0.01);
    ASSERT_EQ(s.pairs.size(), 1u);
    EXPECT_TRUE(s.pairs[0].triggered);
    // attraction 10 along the line of sight, vortex 10 * 0.34^2 / (0.34 * 9) to the right
    const double k = 10 * 0.34 / 9.0;
    const double expect = 5.0 * std::atan2(-k, 10.0);
    EXPECT_NEAR(s.controls[0].omega, expect, 1e-12);
    EXPECT_NEAR(s.controls[1].omega, expect, 1e-12);
    EXPECT_LT(s.world[0].position.y, 0.0);
    EXPECT_GT(s.world[1].position.y, 0.0);
}

TEST(Step, StationaryRobotUnchanged) {
    const World w = {robot(1, {0, 0}, 0.3, 0.0, std::nullopt, Behavior::stationary()), robot(2, {1, 0}, kPi, 0.17, PlanarVector{-2, 0})};
    const auto s = step(w, PFParams{}, 0.01);
    EXPECT_EQ(s.world[0], w[0]);
}

TEST(Step, ForcesComeFromPreStepSnapshot) {
    const World w = {robot(1, {-1, 0.2}, 0.1, 0.17, PlanarVector{2, 0}), robot(2, {1, 0}, kPi, 0.17, PlanarVector{-2, 0}),
                     robot(3, {0, 1.2}, -kPi / 2, 0.17, PlanarVector{0, -2})};
    const auto s = step(w, PFParams{}, 0.05);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto f = total_force(w[k].id, w, PFParams{});
        EXPECT_EQ(s.forces[k].F, f.F);
        EXPECT_EQ(s.world[k], propagate(w[k], s.controls[k].omega, 0.05));
    }
}

TEST(Step, Deterministic) {
    const World w = {robot(1, {-1, 0.2}, 0.1, 0.17, PlanarVector{2, 0}), robot(2, {1, 0}, kPi, 0.17, PlanarVector{-2, 0})};
    const auto a = step(w, PFParams{}, 0.01), b = step(w, PFParams{}, 0.01);
    EXPECT_EQ(a.world, b.world);
}

TEST(Run, RepeatAndPermutationGiveIdenticalLogs) {
    Scenario s = preset("coop_triangle");
    const auto base = run(s);
    expect_same_log(base, run(s));
    std::reverse(s.robots.begin(), s.robots.end());
    expect_same_log(base, run(s));
    std::rotate(s.robots.begin(), s.robots.begin() + 1, s.robots.end());
    expect_same_log(base, run(s));
}

TEST(Run, TimesStrictlyIncreaseWithStride) {
    Scenario s = preset("coop_headon");
    s.record_stride = 10;
    const auto log = run(s);
    for (std::size_t n = 1; n < log.records.size(); ++n) EXPECT_GT(log.records[n].t, log.records[n - 1].t);
    for (std::size_t n = 0; n + 1 < log.records.size(); ++n) EXPECT_NEAR(log.records[n].t, 0.1 * n, 1e-9);
    EXPECT_NEAR(log.records.back().t, log.steps * s.dt, 1e-9);
}

TEST(Run, ConstantSpeedWhileActive) {
    const Scenario s = preset("coop_headon");
    const auto log = run(s);
    double worst = 0;
    for (std::size_t n = 0; n + 1 < log.records.size(); ++n) {
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& a = log.records[n].robots[k];
            const auto& b = log.records[n + 1].robots[k];
            if (!a.active || !b.active) continue;
            // chord of a constant-rate arc, converted back to arc length
            const double half = a.omega * s.dt / 2;
            const double chord = std::hypot(b.x - a.x, b.y - a.y);
            const double arc = half == 0 ? chord : chord * half / std::sin(half);
            worst = std::max(worst, std::abs(arc / s.dt - a.speed) / a.speed);
        }
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Run, GoalStopRule) {
    const auto log = run(preset("attractive_only"));
    const auto& last = log.records.back().robots[0];
    EXPECT_FALSE(last.active);
    EXPECT_EQ(last.speed, 0.0);
    EXPECT_LE(std::hypot(last.x - 1.5, last.y - 1.0), 0.2);
    ASSERT_EQ(log.events.size(), 2u);
    EXPECT_EQ(log.events[0].kind, EventKind::GoalReached);
    EXPECT_EQ(log.events[1].kind, EventKind::Stopped);
    // the previous record was still outside the tolerance
    const auto& prev = log.records[log.records.size() - 2].robots[0];
    EXPECT_GT(std::hypot(prev.x - 1.5, prev.y - 1.0), 0.2);
}

TEST(Run, AttractionAlignsHeadingWithLineOfSight) {
    const auto log = run(preset("attractive_only"));
    for (const auto& rec : log.records) {
        if (rec.t < 2.0 || !rec.robots[0].active) continue;
        const auto& r = rec.robots[0];
        const double los = std::atan2(1.0 - r.y, 1.5 - r.x);
        EXPECT_LT(std::abs(wrap_angle(r.phi - los)), 0.05) << "t=" << rec.t;
    }
}

TEST(Run, OverlapIsAnEventNotATermination) {
    const auto log = run(preset("nonvortex_headon"));
    ASSERT_TRUE(log.has_overlap());
    double t_overlap = 0;
    for (const auto& e : log.events)
        if (e.kind == EventKind::BodyOverlap) t_overlap = e.t;
    EXPECT_GT(log.records.back().t, t_overlap + 1.0);
}

TEST(Run, NonCooperativeRobotKeepsStraightLine) {
    const auto log = run(preset("noncoop_headon"));
    const PlanarVector start{1.5, 0}, dir = unit_from_angle(kPi);
    for (const auto& rec : log.records) {
        EXPECT_LT(std::abs((PlanarVector{rec.robots[1].x, rec.robots[1].y} - start).cross(dir)), 1e-15);
        EXPECT_EQ(rec.robots[1].omega, 0.0);
        EXPECT_EQ(rec.robots[1].phi, log.records[0].robots[1].phi);
    }
}

TEST(Run, DivergingRobotsKeepInitialSeparationAsMinimum) {
    Scenario s;
    s.t_max = 5;
    s.robots = {robot(1, {-0.5, 0}, kPi, 0.17), robot(2, {0.5, 0}, 0, 0.17)};
    const auto log = run(s);
    EXPECT_EQ(min_separation(log, 1, 2), 1.0);
    EXPECT_EQ(min_separation(log, 2, 1), 1.0);
    EXPECT_THROW(min_separation(log, 1, 7), DomainError);
}

TEST(Run, InactiveRobotStaysAsObstacle) {
    Scenario s;
    s.t_max = 30;
    s.robots = {robot(1, {0, 0}, 0, 0.17, PlanarVector{0.1, 0}), robot(2, {-2, 0.05}, 0, 0.17, PlanarVector{2, 0})};
    const auto log = run(s);
    bool interacted = false;
    for (const auto& rec : log.records) {
        if (!rec.robots[0].active) {
            EXPECT_EQ(rec.robots[0].x, log.records[1].robots[0].x);
            interacted |= rec.pairs[0].triggered && rec.robots[1].frep_x != 0.0;
        }
    }
    EXPECT_TRUE(interacted);
}

TEST(Run, PointMassRealizesForceAsAcceleration) {
    Scenario s;
    s.dynamics = Dynamics::PointMass;
    s.params.kappa = 0.5;
    s.t_max = 1.0;
    s.dt = 0.001;
    s.robots = {robot(1, {0, 0}, kPi / 2, 0.2, PlanarVector{1000, 0})};
    const auto log = run(s);
    const auto& r = log.records.back().robots[0];
    // constant acceleration 0.5 along +x (goal is far along the axis)
    EXPECT_NEAR(r.x, 0.25, 1e-3);
    EXPECT_NEAR(r.y, 0.2, 1e-3);
    EXPECT_NEAR(r.speed, std::hypot(0.5, 0.2), 1e-3);
}

TEST(Validate, ListsEveryProblem) {
    Scenario s;
    s.dt = 0;
    s.params.kappa = -1;
    s.robots = {robot(1, {0, 0}, 0, 0.17), robot(1, {1, 0}, 0, 0.17), robot(3, {2, 0}, 0, 0.1, std::nullopt, Behavior::stationary()),
                robot(4, {3, 0}, 0, 0.1, std::nullopt, Behavior::attacking(99))};
    const auto errs = validate(s);
    EXPECT_EQ(errs.size(), 5u);
    EXPECT_THROW(run(s), ConfigError);
}
