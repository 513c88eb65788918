#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kinematics.hpp"

namespace vortex_ca {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RepulsionKind { Vortex, NonVortex };

struct PFParams {
    double kappa = 10.0;
    double lambda = 10.0;
    std::optional<double> r_star;  // unset: derived from lambda, speed and f_lim
    double f_lim = kInf;
    double kp = 5.0;
    double omega_max = kInf;
    double goal_tol = 0.2;
    double eps_v = kDefaultEpsV;
    RepulsionKind repulsion = RepulsionKind::Vortex;

    friend bool operator==(const PFParams&, const PFParams&) = default;

    bool saturation_enabled() const { return std::isfinite(f_lim); }
};

inline std::vector<std::string> validate(const PFParams& p, const std::string& prefix = "params.") {
    std::vector<std::string> errs;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0)) errs.push_back(prefix + name + ": must be > 0");
    };
    positive(p.kappa, "kappa");
    positive(p.lambda, "lambda");
    positive(p.f_lim, "f_lim");
    positive(p.kp, "kp");
    positive(p.omega_max, "omega_max");
    positive(p.goal_tol, "goal_tol");
    positive(p.eps_v, "eps_v");
    if (p.r_star && !(*p.r_star >= 0.0 && std::isfinite(*p.r_star))) errs.push_back(prefix + "r_star: must be finite and >= 0");
    return errs;
}

/// Switch distance at which the head-on vortex magnitude reaches f_lim.
inline double default_r_star(double lambda, double V, double f_lim) { return std::sqrt(2.0 * lambda * V / f_lim); }

enum class ForceSource { Attractive, VortexRepulsive, NonVortexRepulsive, Saturated, Sum };

inline const char* to_string(ForceSource s) {
    switch (s) {
        case ForceSource::Attractive: return "attractive";
        case ForceSource::VortexRepulsive: return "vortex";
        case ForceSource::NonVortexRepulsive: return "nonvortex";
        case ForceSource::Saturated: return "saturated";
        case ForceSource::Sum: return "sum";
    }
    return "?";
}

struct ForceCommand {
    PlanarVector F;
    ForceSource source = ForceSource::Sum;
    std::vector<std::pair<int, int>> triggered_pairs;
    PlanarVector repulsive;  // repulsive part of F
    bool at_goal = false;    // attraction undefined (zero distance)
};

inline ForceCommand attractive_toward(const PlanarVector& from, const PlanarVector& to, double kappa) {
    ForceCommand c;
    c.source = ForceSource::Attractive;
    const PlanarVector d = to - from;
    const double r = d.norm();
    if (!(r > 0.0)) {
        c.at_goal = true;
        return c;
    }
    c.F = d / r * kappa;
    return c;
}

inline ForceCommand attractive_force(const RobotState& robot, const PFParams& params) {
    if (!robot.goal) return ForceCommand{{}, ForceSource::Attractive, {}, {}, false};
    return attractive_toward(robot.position, *robot.goal, params.kappa);
}

inline void require_positive_r(const EngagementState& eng) {
    if (!(eng.r > 0.0)) {
        throw CollisionSingularity("robots " + std::to_string(eng.i) + " and " + std::to_string(eng.j) +
                                   " at zero separation");
    }
}

/// Gradient of the closing-velocity field lambda*Vrel*cos^2(gamma)/r with respect to the
/// relative position of j, velocities held fixed. Zero when untriggered.
inline PlanarVector repulsive_field_gradient(const EngagementState& eng, const PFParams& params) {
    require_positive_r(eng);
    if (!eng.triggered) return {};
    const double k = params.lambda / (eng.vrel * eng.r * eng.r);
    const PlanarVector er = eng.los;
    const PlanarVector et = eng.los.perp();
    return (er * (-eng.vr * eng.vr) + et * (2.0 * eng.vr * eng.vth)) * k;
}

inline ForceCommand vortex_repulsive_force(const EngagementState& eng, const PFParams& params) {
    require_positive_r(eng);
    ForceCommand c;
    c.source = ForceSource::VortexRepulsive;
    if (!eng.triggered) return c;
    const double k = params.lambda * eng.vr / (eng.vrel * eng.r * eng.r);
    const double cs = eng.los.x;
    const double sn = eng.los.y;
    c.F = {-k * (2.0 * eng.vth * cs - eng.vr * sn), -k * (2.0 * eng.vth * sn + eng.vr * cs)};
    c.repulsive = c.F;
    c.triggered_pairs.emplace_back(eng.i, eng.j);
    return c;
}

inline ForceCommand nonvortex_repulsive_force(const EngagementState& eng, const PFParams& params) {
    require_positive_r(eng);
    ForceCommand c;
    c.source = ForceSource::NonVortexRepulsive;
    if (!eng.triggered) return c;
    c.F = -repulsive_field_gradient(eng, params);
    c.repulsive = c.F;
    c.triggered_pairs.emplace_back(eng.i, eng.j);
    return c;
}

/// Sign with a relative dead band; floating-point residue of an exact zero maps to 0.
inline double banded_sign(double v, double scale) {
    if (std::abs(v) <= 1e-12 * scale) return 0.0;
    return v > 0.0 ? 1.0 : -1.0;
}

inline double effective_r_star(const PFParams& params) {
    if (!params.r_star) throw DomainError("saturate: r_star unresolved while f_lim is finite");
    return *params.r_star;
}

inline ForceCommand saturate(const ForceCommand& force, const EngagementState& eng, const PFParams& params) {
    if (!params.saturation_enabled()) return force;
    if (eng.r > effective_r_star(params)) return force;
    if (force.source != ForceSource::VortexRepulsive && force.source != ForceSource::NonVortexRepulsive) return force;
    if (!eng.triggered) return force;

    const PlanarVector er = eng.los;
    const PlanarVector et = eng.los.perp();
    const double a = 2.0 * eng.vr * eng.vth;
    const double b = eng.vr * eng.vr;
    // bracketed terms: force = -k * bracket
    const PlanarVector bracket = force.source == ForceSource::VortexRepulsive ? er * a + et * b : er * (-b) + et * a;
    const double scale = b + std::abs(a);

    ForceCommand c = force;
    c.source = ForceSource::Saturated;
    c.F = {-params.f_lim * banded_sign(bracket.x, scale), -params.f_lim * banded_sign(bracket.y, scale)};
    c.repulsive = c.F;
    return c;
}

inline ForceCommand repulsive_force(const EngagementState& eng, const PFParams& params) {
    ForceCommand c = params.repulsion == RepulsionKind::Vortex ? vortex_repulsive_force(eng, params)
                                                               : nonvortex_repulsive_force(eng, params);
    return saturate(c, eng, params);
}

inline const RobotState* find_robot(const std::vector<RobotState>& world, int id) {
    for (const auto& r : world)
        if (r.id == id) return &r;
    return nullptr;
}

/// Behavior-dispatched input for one robot. Others are visited in ascending id order.
inline ForceCommand total_force(int self_id, const std::vector<RobotState>& world, const PFParams& params) {
    const RobotState* self = find_robot(world, self_id);
    if (!self) throw DomainError("total_force: unknown robot id " + std::to_string(self_id));

    ForceCommand out;
    out.source = ForceSource::Sum;
    if (!self->active) return out;

    switch (self->behavior.kind) {
        case Behavior::Kind::NonCooperative:
        case Behavior::Kind::Stationary:
            return out;
        case Behavior::Kind::Attacking: {
            const RobotState* target = find_robot(world, self->behavior.target);
            if (!target) throw DomainError("total_force: attack target " + std::to_string(self->behavior.target) + " missing");
            return attractive_toward(self->position, target->position, params.kappa);
        }
        case Behavior::Kind::Cooperative:
            break;
    }

    const ForceCommand att = attractive_force(*self, params);
    out.F = att.F;
    out.at_goal = att.at_goal;

    std::vector<const RobotState*> others;
    for (const auto& r : world)
        if (r.id != self_id) others.push_back(&r);
    std::sort(others.begin(), others.end(), [](auto* a, auto* b) { return a->id < b->id; });

    for (const RobotState* other : others) {
        const EngagementState eng = engagement(*self, *other, params.eps_v);
        if (!eng.triggered) continue;
        const ForceCommand rep = repulsive_force(eng, params);
        out.repulsive += rep.F;
        out.triggered_pairs.emplace_back(eng.i, eng.j);
    }
    out.F += out.repulsive;
    if (out.triggered_pairs.empty() && self->goal) out.source = ForceSource::Attractive;
    return out;
}

struct CurlGrid {
    double x_min = -3.0, x_max = 3.0;
    double y_min = -3.0, y_max = 3.0;
    int nx = 61, ny = 61;
    double r_min = 0.5;        // points closer than this are omitted
    double r_max = kInf;       // points farther than this are omitted
};

struct CurlSample {
    double x_rel, y_rel, Fx, Fy, curl;
};

/// Central-difference curl of a planar field sampled over a grid; stencil spacing equals grid spacing.
template <class Field>
std::vector<CurlSample> curl_diagnostic(const CurlGrid& g, Field&& field) {
    if (g.nx < 2 || g.ny < 2 || !(g.x_max > g.x_min) || !(g.y_max > g.y_min)) {
        throw DomainError("curl grid needs nx, ny >= 2 and increasing bounds");
    }
    if (!(g.r_min >= 0.0)) throw DomainError("curl grid r_min must be >= 0");
    const double hx = (g.x_max - g.x_min) / (g.nx - 1);
    const double hy = (g.y_max - g.y_min) / (g.ny - 1);
    std::vector<CurlSample> out;
    for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const PlanarVector p{g.x_min + ix * hx, g.y_min + iy * hy};
            const double r = p.norm();
            if (r < g.r_min || r > g.r_max) continue;
            for (const PlanarVector& q : {p, p + PlanarVector{hx, 0}, p - PlanarVector{hx, 0}, p + PlanarVector{0, hy},
                                          p - PlanarVector{0, hy}}) {
                if (!(q.norm() > 0.0)) throw DomainError("curl grid stencil touches r = 0");
            }
            const PlanarVector F = field(p);
            const double dFy_dx = (field(p + PlanarVector{hx, 0}).y - field(p - PlanarVector{hx, 0}).y) / (2.0 * hx);
            const double dFx_dy = (field(p + PlanarVector{0, hy}).x - field(p - PlanarVector{0, hy}).x) / (2.0 * hy);
            out.push_back({p.x, p.y, F.x, F.y, dFy_dx - dFx_dy});
        }
    }
    return out;
}

/// Curl of the vortex force over relative-position space at a fixed relative velocity.
inline std::vector<CurlSample> field_curl_diagnostic(const CurlGrid& g, const PlanarVector& v_rel, const PFParams& params) {
    if (const auto errs = validate(params); !errs.empty()) throw DomainError("field_curl_diagnostic: " + errs.front());
    return curl_diagnostic(g, [&](const PlanarVector& x_rel) {
        return vortex_repulsive_force(engagement_from_relative(x_rel, v_rel, params.eps_v), params).F;
    });
}

}  // namespace vortex_ca
