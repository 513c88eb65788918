#include <gtest/gtest.h>

#include <vortex_ca/fields.hpp>

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

PFParams params(double lambda = 10, double kappa = 10) {
    PFParams p;
    p.lambda = lambda;
    p.kappa = kappa;
    return p;
}

EngagementState head_on(double r = 2.0) {
    return engagement(robot(1, {0, 0}, 0, 0.17), robot(2, {r, 0}, kPi, 0.17));
}

/// Random closing engagement.
EngagementState random_triggered(oracle::Rng& rng) {
    for (;;) {
        const PlanarVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const PlanarVector v{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (x.norm() < 0.3 || v.norm() < 0.05) continue;
        const auto e = engagement_from_relative(x, v);
        if (e.triggered) return e;
    }
}

}  // namespace

TEST(Attractive, Examples) {
    auto f = attractive_force(robot(1, {0, 0}, 0, 0.17, PlanarVector{5, 0}), params());
    EXPECT_NEAR(f.F.x, 10, 1e-15);
    EXPECT_NEAR(f.F.y, 0, 1e-15);
    f = attractive_force(robot(1, {0, 0}, 0, 0.17, PlanarVector{0, 2}), params());
    EXPECT_NEAR(f.F.x, 0, 1e-14);
    EXPECT_NEAR(f.F.y, 10, 1e-15);
    f = attractive_force(robot(1, {1, 1}, 0, 0.17, PlanarVector{0, 0}), params(10, 1));
    EXPECT_NEAR(f.F.x, -std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(f.F.y, -std::sqrt(0.5), 1e-15);
    EXPECT_EQ(f.source, ForceSource::Attractive);
}

TEST(Attractive, AtGoalIsFlaggedZero) {
    const auto f = attractive_force(robot(1, {1, 1}, 0, 0.17, PlanarVector{1, 1}), params());
    EXPECT_TRUE(f.at_goal);
    EXPECT_EQ(f.F, (PlanarVector{0, 0}));
}

TEST(Attractive, ConstantMagnitude) {
    oracle::Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const PlanarVector g{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const auto f = attractive_force(robot(1, {rng.uniform(-5, 5), rng.uniform(-5, 5)}, 0, 0.17, g), params(10, 3.5));
        EXPECT_NEAR(f.F.norm(), 3.5, 1e-13);
    }
}

TEST(Vortex, HeadOnTurnsBothRobotsToTheirRight) {
    const auto f = vortex_repulsive_force(head_on(), params());
    EXPECT_NEAR(f.F.x, 0.0, 1e-15);
    EXPECT_NEAR(f.F.y, -0.85, 1e-12);
    const auto g = vortex_repulsive_force(engagement(robot(2, {2, 0}, kPi, 0.17), robot(1, {0, 0}, 0, 0.17)), params());
    EXPECT_NEAR(g.F.x, 0.0, 1e-15);
    EXPECT_NEAR(g.F.y, 0.85, 1e-12);
}

TEST(Vortex, ZeroWhenReceding) {
    const auto e = engagement(robot(1, {0, 0}, kPi, 0.17), robot(2, {2, 0}, 0, 0.17));
    ASSERT_GT(e.vr, 0);
    const auto f = vortex_repulsive_force(e, params());
    EXPECT_EQ(f.F, (PlanarVector{0, 0}));
    EXPECT_TRUE(f.triggered_pairs.empty());
}

TEST(Vortex, TriggerSoundness) {
    oracle::Rng rng(4);
    for (int k = 0; k < 500; ++k) {
        const PlanarVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const PlanarVector v{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto e = engagement_from_relative(x, v);
        if (e.vr >= 0.0 || e.vrel <= kDefaultEpsV) {
            EXPECT_EQ(vortex_repulsive_force(e, params()).F, (PlanarVector{0, 0}));
            EXPECT_EQ(nonvortex_repulsive_force(e, params()).F, (PlanarVector{0, 0}));
        }
    }
    const auto still = engagement_from_relative({1, 0}, {-1e-7, 0});
    EXPECT_EQ(vortex_repulsive_force(still, params()).F, (PlanarVector{0, 0}));
}

TEST(Vortex, IsRotatedFieldGradient) {
    // vortex force = (-dU/dy, dU/dx) of the closing-velocity field
    oracle::Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        const auto e = random_triggered(rng);
        const PlanarVector x = e.los * e.r;
        const PlanarVector v = e.los * e.vr + e.los.perp() * e.vth;
        auto U = [&](oracle::V2 p) { return oracle::closing_field(p, {v.x, v.y}, 10.0); };
        const auto g = oracle::fd_gradient(U, {x.x, x.y}, 1e-6);
        const auto f = vortex_repulsive_force(e, params());
        const double scale = std::hypot(g.x, g.y);
        EXPECT_NEAR(f.F.x, -g.y, 1e-6 * scale);
        EXPECT_NEAR(f.F.y, g.x, 1e-6 * scale);
    }
}

TEST(Vortex, MagnitudeLaw) {
    oracle::Rng rng(6);
    for (int k = 0; k < 200; ++k) {
        const auto e = random_triggered(rng);
        const auto f = vortex_repulsive_force(e, params());
        const double expect = 10.0 * std::abs(e.vr) * std::sqrt(4 * e.vth * e.vth + e.vr * e.vr) / (e.vrel * e.r * e.r);
        EXPECT_NEAR(f.F.norm(), expect, 1e-12 * expect);

        const auto far = engagement_from_relative(e.los * (2 * e.r), e.los * e.vr + e.los.perp() * e.vth);
        EXPECT_NEAR(vortex_repulsive_force(far, params()).F.norm(), f.F.norm() / 4, 1e-12 * f.F.norm());
    }
}

TEST(Vortex, ReciprocityIsExact) {
    oracle::Rng rng(8);
    for (int k = 0; k < 500; ++k) {
        const auto a = robot(1, {rng.uniform(-2, 2), rng.uniform(-2, 2)}, rng.uniform(-kPi, kPi), 0.17);
        const auto b = robot(2, {rng.uniform(-2, 2), rng.uniform(-2, 2)}, rng.uniform(-kPi, kPi), 0.17);
        const auto ab = engagement(a, b), ba = engagement(b, a);
        if (!ab.triggered) continue;
        const auto fa = vortex_repulsive_force(ab, params()).F, fb = vortex_repulsive_force(ba, params()).F;
        EXPECT_LE(std::abs(fa.x + fb.x), 1e-12);
        EXPECT_LE(std::abs(fa.y + fb.y), 1e-12);
    }
}

TEST(Vortex, ZeroSeparationThrows) {
    EngagementState e = head_on();
    e.r = 0;
    EXPECT_THROW(vortex_repulsive_force(e, params()), CollisionSingularity);
}

TEST(NonVortex, HeadOnIsPurelyAlongLineOfSight) {
    const auto f = nonvortex_repulsive_force(head_on(), params());
    EXPECT_NEAR(f.F.y, 0.0, 1e-15);
    // negative gradient with respect to the other robot's relative position: points at the other robot
    EXPECT_NEAR(f.F.x, 10 * 0.34 / 4.0, 1e-12);
}

TEST(NonVortex, PerpendicularCrossingTurns) {
    const auto e = engagement(robot(1, {0, 0}, 0, 0.17), robot(2, {2, -1.5}, kPi / 2, 0.17));
    ASSERT_TRUE(e.triggered);
    ASSERT_GT(std::abs(e.vth), 0.01);
    const auto f = nonvortex_repulsive_force(e, params());
    EXPECT_GT(std::abs(f.F.y), 1e-3);
}

TEST(NonVortex, IsNegativeFieldGradient) {
    oracle::Rng rng(9);
    for (int k = 0; k < 100; ++k) {
        const auto e = random_triggered(rng);
        const PlanarVector x = e.los * e.r;
        const PlanarVector v = e.los * e.vr + e.los.perp() * e.vth;
        auto U = [&](oracle::V2 p) { return oracle::closing_field(p, {v.x, v.y}, 10.0); };
        const auto g = oracle::fd_gradient(U, {x.x, x.y}, 1e-6);
        const auto f = nonvortex_repulsive_force(e, params());
        const double scale = std::hypot(g.x, g.y);
        EXPECT_NEAR(f.F.x, -g.x, 1e-6 * scale);
        EXPECT_NEAR(f.F.y, -g.y, 1e-6 * scale);
    }
}

TEST(Saturate, OutsideSwitchDistanceUnchanged) {
    PFParams p = params();
    p.f_lim = 0.05;
    p.r_star = 1.0;
    const auto e = head_on(2.0);
    const auto f = vortex_repulsive_force(e, p);
    const auto s = saturate(f, e, p);
    EXPECT_EQ(s.F, f.F);
    EXPECT_EQ(s.source, ForceSource::VortexRepulsive);
}

TEST(Saturate, HeadOnInsideSwitchDistance) {
    PFParams p = params();
    p.f_lim = 0.05;
    p.r_star = 4.0;
    const auto e = head_on(2.0);
    const auto s = saturate(vortex_repulsive_force(e, p), e, p);
    EXPECT_EQ(s.F.x, 0.0);
    EXPECT_EQ(s.F.y, -0.05);
    EXPECT_EQ(s.source, ForceSource::Saturated);
}

TEST(Saturate, UnboundedIsPassThrough) {
    PFParams p = params();
    const auto e = head_on(0.5);
    const auto f = vortex_repulsive_force(e, p);
    EXPECT_EQ(saturate(f, e, p).F, f.F);
}

TEST(Saturate, ComponentsAreBoundOrZeroWithForceSigns) {
    PFParams p = params();
    p.f_lim = 0.2;
    p.r_star = 10.0;
    oracle::Rng rng(10);
    for (int k = 0; k < 300; ++k) {
        const auto e = random_triggered(rng);
        for (auto kind : {RepulsionKind::Vortex, RepulsionKind::NonVortex}) {
            p.repulsion = kind;
            const auto f = kind == RepulsionKind::Vortex ? vortex_repulsive_force(e, p) : nonvortex_repulsive_force(e, p);
            const auto s = saturate(f, e, p);
            for (auto [sat, raw] : {std::pair{s.F.x, f.F.x}, std::pair{s.F.y, f.F.y}}) {
                EXPECT_TRUE(std::abs(sat) == 0.2 || sat == 0.0);
                if (std::abs(raw) > 1e-9 * f.F.norm()) {
                    EXPECT_EQ(sat > 0, raw > 0);
                }
            }
        }
    }
}

TEST(Saturate, UnresolvedSwitchDistanceIsAnError) {
    PFParams p = params();
    p.f_lim = 0.05;
    const auto e = head_on();
    EXPECT_THROW(saturate(vortex_repulsive_force(e, p), e, p), DomainError);
    EXPECT_NEAR(default_r_star(10, 0.17, 0.05), std::sqrt(68.0), 1e-12);
}

TEST(TotalForce, LoneCooperativeRobotIsAttractive) {
    const World w = {robot(1, {0, 0}, 0, 0.17, PlanarVector{3, 4})};
    const auto f = total_force(1, w, params());
    const auto a = attractive_force(w[0], params());
    EXPECT_EQ(f.F, a.F);
    EXPECT_TRUE(f.triggered_pairs.empty());
}

TEST(TotalForce, CooperativePairRepulsionIsEqualAndOpposite) {
    const World w = {robot(1, {-1.5, 0}, 0, 0.17, PlanarVector{1.5, 0}), robot(2, {1.5, 0.1}, kPi, 0.17, PlanarVector{-1.5, 0})};
    const auto f1 = total_force(1, w, params()), f2 = total_force(2, w, params());
    ASSERT_EQ(f1.triggered_pairs.size(), 1u);
    EXPECT_EQ(f1.triggered_pairs[0], (std::pair{1, 2}));
    EXPECT_EQ(f2.triggered_pairs[0], (std::pair{2, 1}));
    EXPECT_EQ(f1.repulsive.x, -f2.repulsive.x);
    EXPECT_EQ(f1.repulsive.y, -f2.repulsive.y);
    const auto a1 = attractive_force(w[0], params());
    EXPECT_NEAR(f1.F.x, a1.F.x + f1.repulsive.x, 1e-15);
    EXPECT_NEAR(f1.F.y, a1.F.y + f1.repulsive.y, 1e-15);
}

TEST(TotalForce, PassiveBehaviorsAreZero) {
    const World w = {robot(1, {0, 0}, 0, 0.17, PlanarVector{1, 0}, Behavior::noncooperative()),
                     robot(2, {1, 0}, kPi, 0.0, std::nullopt, Behavior::stationary()),
                     robot(3, {0.5, 0.5}, -kPi / 2, 0.17, PlanarVector{0, -2})};
    EXPECT_EQ(total_force(1, w, params()).F, (PlanarVector{0, 0}));
    EXPECT_EQ(total_force(2, w, params()).F, (PlanarVector{0, 0}));
}

TEST(TotalForce, AttackerPursuesTargetWithoutRepulsion) {
    const World w = {robot(1, {0, 0}, 0, 0.17, PlanarVector{3, 0}), robot(2, {3, 4}, kPi, 0.17, std::nullopt, Behavior::attacking(1))};
    const auto f = total_force(2, w, params(10, 2));
    EXPECT_NEAR(f.F.x, -2 * 0.6, 1e-15);
    EXPECT_NEAR(f.F.y, -2 * 0.8, 1e-15);
    EXPECT_TRUE(f.triggered_pairs.empty());
    const World dangling = {robot(2, {3, 4}, kPi, 0.17, std::nullopt, Behavior::attacking(9))};
    EXPECT_THROW(total_force(2, dangling, params()), DomainError);
}

TEST(TotalForce, InactiveRobotIsStillAnObstacle) {
    RobotState parked = robot(2, {1, 0}, 0, 0.0, PlanarVector{1, 0});
    parked.active = false;
    const World w = {robot(1, {0, 0}, 0, 0.17, PlanarVector{3, 0}), parked};
    const auto f = total_force(1, w, params());
    EXPECT_EQ(f.triggered_pairs.size(), 1u);
    EXPECT_EQ(total_force(2, w, params()).F, (PlanarVector{0, 0}));
}

TEST(Curl, ConstantFieldHasZeroCurl) {
    CurlGrid g;
    g.r_min = 0.1;
    const auto s = curl_diagnostic(g, [](const PlanarVector&) { return PlanarVector{2.0, -1.0}; });
    ASSERT_FALSE(s.empty());
    for (const auto& c : s) EXPECT_EQ(c.curl, 0.0);
}

TEST(Curl, VortexOnAnnulusIsFinite) {
    CurlGrid g;
    g.r_min = 1.0;
    g.r_max = 3.0;
    const auto s = field_curl_diagnostic(g, {-0.34, 0.0}, params());
    ASSERT_FALSE(s.empty());
    for (const auto& c : s) {
        const double r = std::hypot(c.x_rel, c.y_rel);
        EXPECT_GE(r, 1.0);
        EXPECT_LE(r, 3.0);
        EXPECT_TRUE(std::isfinite(c.curl));
    }
}

TEST(Curl, SecondOrderStencil) {
    // error against a much finer stencil drops about fourfold when the spacing halves
    const PlanarVector v{-0.34, 0.05};
    const PlanarVector p{1.2, 0.9};
    auto curl_at = [&](double h) {
        CurlGrid g;
        g.x_min = p.x;
        g.x_max = p.x + h;
        g.y_min = p.y;
        g.y_max = p.y + h;
        g.nx = g.ny = 2;
        g.r_min = 0.0;
        return field_curl_diagnostic(g, v, params()).front().curl;
    };
    const double ref = curl_at(1e-4);
    const double e1 = std::abs(curl_at(0.04) - ref), e2 = std::abs(curl_at(0.02) - ref);
    EXPECT_GT(e1 / e2, 3.5);
    EXPECT_LT(e1 / e2, 4.5);
}

TEST(Curl, GridThroughOriginIsAnError) {
    CurlGrid g;
    g.r_min = 0.0;
    EXPECT_THROW(field_curl_diagnostic(g, {-0.34, 0.0}, params()), std::exception);
}

TEST(Params, Validation) {
    PFParams p;
    EXPECT_TRUE(validate(p).empty());
    p.kappa = 0;
    p.lambda = -1;
    p.goal_tol = 0;
    EXPECT_EQ(validate(p).size(), 3u);
}
