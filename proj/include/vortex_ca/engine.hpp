#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "control.hpp"
#include "fields.hpp"
#include "kinematics.hpp"

namespace vortex_ca {


/// Unicycle: constant speed, heading steered by the P controller.
/// PointMass: the force is applied directly as acceleration; speed varies.
enum class Dynamics { Unicycle, PointMass };

inline const char* to_string(Dynamics d) { return d == Dynamics::Unicycle ? "unicycle" : "point_mass"; }

struct ConfigError : std::runtime_error {
    std::vector<std::string> problems;
    explicit ConfigError(std::vector<std::string> p)
        : std::runtime_error(join(p)), problems(std::move(p)) {}

  private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration:";
        for (const auto& e : p) s += "\n  " + e;
        return s;
    }
};

struct Scenario {
    std::string name;
    Dynamics dynamics = Dynamics::Unicycle;
    std::vector<RobotState> robots;
    PFParams params;
    double dt = 0.01;
    double t_max = 60.0;
    double d_wheel = 0.235;
    double r_wheel = 0.035;
    int record_stride = 1;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> errs;
    if (s.robots.empty()) errs.push_back("robots: at least one robot required");
    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) errs.push_back("dt: must be > 0");
    if (!(s.t_max > 0.0) || !std::isfinite(s.t_max)) errs.push_back("t_max: must be > 0");
    if (!(s.d_wheel > 0.0)) errs.push_back("d_wheel: must be > 0");
    if (!(s.r_wheel > 0.0)) errs.push_back("r_wheel: must be > 0");
    if (s.record_stride < 1) errs.push_back("record_stride: must be >= 1");
    for (auto& e : validate(s.params)) errs.push_back(e);

    std::set<int> ids;
    for (std::size_t k = 0; k < s.robots.size(); ++k) {
        const RobotState& r = s.robots[k];
        const std::string at = "robots[" + std::to_string(k) + "]";
        if (!ids.insert(r.id).second) errs.push_back(at + ".id: duplicate id " + std::to_string(r.id));
        if (!r.position.finite()) errs.push_back(at + ".position: must be finite");
        if (!std::isfinite(r.heading)) errs.push_back(at + ".heading: must be finite");
        if (!(r.speed >= 0.0) || !std::isfinite(r.speed)) errs.push_back(at + ".speed: must be finite and >= 0");
        if (!(r.body_radius >= 0.0) || !std::isfinite(r.body_radius)) errs.push_back(at + ".radius: must be finite and >= 0");
        if (r.goal && !r.goal->finite()) errs.push_back(at + ".goal: must be finite");
        if (r.behavior.is(Behavior::Kind::Stationary) && r.speed != 0.0) errs.push_back(at + ".speed: stationary robot must have speed 0");
    }
    for (std::size_t k = 0; k < s.robots.size(); ++k) {
        const RobotState& r = s.robots[k];
        if (!r.behavior.is(Behavior::Kind::Attacking)) continue;
        const std::string at = "robots[" + std::to_string(k) + "].target";
        if (r.behavior.target == r.id) errs.push_back(at + ": robot cannot attack itself");
        else if (!ids.count(r.behavior.target)) errs.push_back(at + ": no robot with id " + std::to_string(r.behavior.target));
    }
    for (std::size_t a = 0; a < s.robots.size(); ++a)
        for (std::size_t b = a + 1; b < s.robots.size(); ++b)
            if (s.robots[a].position == s.robots[b].position)
                errs.push_back("robots[" + std::to_string(a) + "], robots[" + std::to_string(b) + "]: identical positions");
    return errs;
}

/// Canonical form used by the engine: ids ascending, headings wrapped, r_star resolved.
inline Scenario prepare(const Scenario& in) {
    auto errs = validate(in);
    if (!errs.empty()) throw ConfigError(errs);
    Scenario s = in;
    std::sort(s.robots.begin(), s.robots.end(), [](const RobotState& a, const RobotState& b) { return a.id < b.id; });
    double vmax = 0.0;
    for (auto& r : s.robots) {
        r.heading = wrap_angle(r.heading);
        r.active = true;
        vmax = std::max(vmax, r.speed);
    }
    if (s.params.saturation_enabled() && !s.params.r_star) s.params.r_star = default_r_star(s.params.lambda, vmax, s.params.f_lim);
    return s;
}

struct StepConfig {
    Dynamics dynamics = Dynamics::Unicycle;
    double d_wheel = 0.235;
    double r_wheel = 0.035;
};

/// Forces, controls and engagements evaluated on one frozen world snapshot.
struct Snapshot {
    std::vector<ForceCommand> forces;
    std::vector<ControlOutput> controls;
    std::vector<EngagementState> pairs;  // (a, b) with a before b in world order
};

inline bool steers(const RobotState& r) {
    return r.active && (r.behavior.is(Behavior::Kind::Cooperative) || r.behavior.is(Behavior::Kind::Attacking));
}

/// held_phi_des carries the last valid heading command per robot; empty means "use current heading".
inline Snapshot evaluate(const World& world, const PFParams& params, const StepConfig& cfg,
                         std::vector<double>* held_phi_des = nullptr) {
    Snapshot snap;
    const std::size_t n = world.size();
    snap.forces.resize(n);
    snap.controls.resize(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) snap.pairs.push_back(engagement(world[a], world[b], params.eps_v));

    for (std::size_t k = 0; k < n; ++k) {
        const RobotState& r = world[k];
        ForceCommand f = steers(r) ? total_force(r.id, world, params) : ForceCommand{};
        double held = held_phi_des && held_phi_des->size() == n ? (*held_phi_des)[k] : r.heading;

        ControlOutput c;
        if (steers(r)) {
            if (auto des = desired_heading(f)) held = *des;
        }
        c.phi_des = held;
        if (cfg.dynamics == Dynamics::Unicycle) {
            c.omega = steers(r) ? heading_controller(r.heading, held, params) : 0.0;
        } else if (r.speed > 0.0) {
            c.omega = f.F.dot(unit_from_angle(r.heading).perp()) / r.speed;
        }
        const WheelSpeeds w = wheel_speeds(r.speed, c.omega, cfg.d_wheel, cfg.r_wheel);
        c.v_right = w.v_right;
        c.v_left = w.v_left;
        c.w_right = w.w_right;
        c.w_left = w.w_left;

        if (held_phi_des && held_phi_des->size() == n) (*held_phi_des)[k] = held;
        snap.forces[k] = std::move(f);
        snap.controls[k] = c;
    }
    return snap;
}

inline World advance_point_mass(const World& world, const PFParams& params, double dt) {
    const std::size_t n = world.size();
    std::vector<double> y(4 * n);
    for (std::size_t k = 0; k < n; ++k) {
        const PlanarVector v = world[k].velocity();
        y[4 * k] = world[k].position.x;
        y[4 * k + 1] = world[k].position.y;
        y[4 * k + 2] = v.x;
        y[4 * k + 3] = v.y;
    }
    auto unpack = [&world, n](const std::vector<double>& s) {
        World w = world;
        for (std::size_t k = 0; k < n; ++k) {
            if (!world[k].active) continue;
            w[k].position = {s[4 * k], s[4 * k + 1]};
            const double vx = s[4 * k + 2], vy = s[4 * k + 3];
            w[k].speed = std::hypot(vx, vy);
            if (w[k].speed > 1e-12) w[k].heading = std::atan2(vy, vx);
        }
        return w;
    };
    auto deriv = [&](const std::vector<double>& s) {
        const World w = unpack(s);
        std::vector<double> d(4 * n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (!w[k].active) continue;
            d[4 * k] = s[4 * k + 2];
            d[4 * k + 1] = s[4 * k + 3];
            if (steers(w[k])) {
                const PlanarVector F = total_force(w[k].id, w, params).F;
                d[4 * k + 2] = F.x;
                d[4 * k + 3] = F.y;
            }
        }
        return d;
    };
    World out = unpack(rk4_step(y, dt, deriv));
    for (const auto& r : out) require_finite(r, "point-mass step");
    return out;
}

inline World advance(const World& world, const Snapshot& snap, const PFParams& params, double dt, const StepConfig& cfg) {
    if (cfg.dynamics == Dynamics::PointMass) return advance_point_mass(world, params, dt);
    World out;
    out.reserve(world.size());
    for (std::size_t k = 0; k < world.size(); ++k) out.push_back(propagate(world[k], snap.controls[k].omega, dt));
    return out;
}

struct StepResult {
    World world;
    std::vector<ControlOutput> controls;
    std::vector<EngagementState> pairs;
    std::vector<ForceCommand> forces;
};

/// One simultaneous update: everything is evaluated on the pre-step snapshot, then all robots move.
inline StepResult step(const World& world, const PFParams& params, double dt, const StepConfig& cfg = {},
                       std::vector<double>* held_phi_des = nullptr) {
    Snapshot snap = evaluate(world, params, cfg, held_phi_des);
    World next = advance(world, snap, params, dt, cfg);
    return {std::move(next), std::move(snap.controls), std::move(snap.pairs), std::move(snap.forces)};
}

struct RobotRecord {
    int id = 0;
    double x = 0, y = 0, phi = 0, speed = 0, omega = 0, phi_des = 0;
    double fx = 0, fy = 0, frep_x = 0, frep_y = 0;
    bool active = true;
};

struct PairRecord {
    int i = 0, j = 0;
    double r = 0, theta = 0, vr = 0, vth = 0, vrel = 0;
    bool triggered = false;
};

struct Record {
    double t = 0;
    std::vector<RobotRecord> robots;
    std::vector<PairRecord> pairs;
};

enum class EventKind { GoalReached, BodyOverlap, Stopped };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::GoalReached: return "GoalReached";
        case EventKind::BodyOverlap: return "BodyOverlap";
        case EventKind::Stopped: return "Stopped";
    }
    return "?";
}

struct Event {
    double t = 0;
    EventKind kind = EventKind::GoalReached;
    std::vector<int> ids;
};

struct TrajectoryLog {
    Scenario scenario;  // prepared form
    std::vector<Record> records;
    std::vector<Event> events;
    long steps = 0;
    std::optional<std::string> abort_reason;

    std::size_t robot_index(int id) const {
        for (std::size_t k = 0; k < scenario.robots.size(); ++k)
            if (scenario.robots[k].id == id) return k;
        throw DomainError("unknown robot id " + std::to_string(id));
    }

    std::size_t pair_index(int i, int j) const {
        if (i > j) std::swap(i, j);
        std::size_t k = 0;
        const auto& rs = scenario.robots;
        for (std::size_t a = 0; a < rs.size(); ++a)
            for (std::size_t b = a + 1; b < rs.size(); ++b, ++k)
                if (rs[a].id == i && rs[b].id == j) return k;
        throw DomainError("unknown pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }

    bool has_overlap() const {
        return std::any_of(events.begin(), events.end(), [](const Event& e) { return e.kind == EventKind::BodyOverlap; });
    }
};

inline Record make_record(double t, const World& world, const Snapshot& snap) {
    Record rec;
    rec.t = t;
    for (std::size_t k = 0; k < world.size(); ++k) {
        const RobotState& r = world[k];
        const ForceCommand& f = snap.forces[k];
        rec.robots.push_back({r.id, r.position.x, r.position.y, r.heading, r.speed, snap.controls[k].omega,
                              snap.controls[k].phi_des, f.F.x, f.F.y, f.repulsive.x, f.repulsive.y, r.active});
    }
    for (const auto& e : snap.pairs) rec.pairs.push_back({e.i, e.j, e.r, e.theta, e.vr, e.vth, e.vrel, e.triggered});
    return rec;
}

namespace detail {

inline bool finished(const World& world) {
    bool any_driven = false, any_driven_active = false, any_active = false;
    for (const auto& r : world) {
        const bool driven = r.behavior.is(Behavior::Kind::Cooperative) || r.behavior.is(Behavior::Kind::Attacking);
        any_driven |= driven;
        any_driven_active |= driven && r.active;
        any_active |= r.active && r.speed > 0.0;
    }
    return any_driven ? !any_driven_active : !any_active;
}

inline void goal_check(World& world, double t, double goal_tol, std::vector<Event>& events) {
    for (auto& r : world) {
        if (!r.active || !r.goal) continue;
        if (r.behavior.is(Behavior::Kind::Attacking) || r.behavior.is(Behavior::Kind::Stationary)) continue;
        if ((r.position - *r.goal).norm() <= goal_tol) {
            r.active = false;
            r.speed = 0.0;
            events.push_back({t, EventKind::GoalReached, {r.id}});
            events.push_back({t, EventKind::Stopped, {r.id}});
        }
    }
}

inline TrajectoryLog run_impl(const Scenario& input, bool capture_abort) {
    TrajectoryLog log;
    log.scenario = prepare(input);
    const Scenario& s = log.scenario;
    const StepConfig cfg{s.dynamics, s.d_wheel, s.r_wheel};

    World world = s.robots;
    std::vector<double> held;
    for (const auto& r : world) held.push_back(r.heading);
    const long n_max = static_cast<long>(std::ceil(s.t_max / s.dt - 1e-9));
    std::map<std::pair<int, int>, bool> overlapping;

    goal_check(world, 0.0, s.params.goal_tol, log.events);
    long n = 0;
    try {
        for (;; ++n) {
            const double t = static_cast<double>(n) * s.dt;
            Snapshot snap = evaluate(world, s.params, cfg, &held);
            for (std::size_t k = 0; k < snap.pairs.size(); ++k) {
                const auto& e = snap.pairs[k];
                const double reach = s.robots[log.robot_index(e.i)].body_radius + s.robots[log.robot_index(e.j)].body_radius;
                bool& was = overlapping[{e.i, e.j}];
                const bool now = e.r < reach;
                if (now && !was) log.events.push_back({t, EventKind::BodyOverlap, {e.i, e.j}});
                was = now;
            }
            const bool last = n >= n_max || finished(world);
            if (n % s.record_stride == 0 || last) log.records.push_back(make_record(t, world, snap));
            if (last) break;
            world = advance(world, snap, s.params, s.dt, cfg);
            goal_check(world, static_cast<double>(n + 1) * s.dt, s.params.goal_tol, log.events);
        }
    } catch (const CollisionSingularity& e) {
        if (!capture_abort) throw;
        log.abort_reason = e.what();
    } catch (const NonFiniteState& e) {
        if (!capture_abort) throw;
        log.abort_reason = e.what();
    }
    log.steps = n;
    return log;
}

}  // namespace detail

inline TrajectoryLog run(const Scenario& scenario) { return detail::run_impl(scenario, false); }

/// As run(), but a numerical abort is reported in abort_reason with the partial log kept.
inline TrajectoryLog run_capturing(const Scenario& scenario) { return detail::run_impl(scenario, true); }

inline double min_separation(const TrajectoryLog& log, int i, int j) {
    const std::size_t p = log.pair_index(i, j);
    double m = kInf;
    for (const auto& rec : log.records) m = std::min(m, rec.pairs[p].r);
    return m;
}

}  // namespace vortex_ca
