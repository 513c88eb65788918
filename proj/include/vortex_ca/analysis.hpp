#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"

namespace vortex_ca {

struct RegimeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleGeometry : std::domain_error {
    using std::domain_error::domain_error;
};

struct Regime {
    enum class Kind { AttractiveOnly, CoopPair, CoopVsNonCoop, CoopVsAttacker, NonVortexPair, MultiRobot };
    Kind kind = Kind::CoopPair;
    int n_prime = 0;  // MultiRobot only

    friend bool operator==(const Regime&, const Regime&) = default;
};

inline const char* to_string(Regime::Kind k) {
    switch (k) {
        case Regime::Kind::AttractiveOnly: return "AttractiveOnly";
        case Regime::Kind::CoopPair: return "CoopPair";
        case Regime::Kind::CoopVsNonCoop: return "CoopVsNonCoop";
        case Regime::Kind::CoopVsAttacker: return "CoopVsAttacker";
        case Regime::Kind::NonVortexPair: return "NonVortexPair";
        case Regime::Kind::MultiRobot: return "MultiRobot";
    }
    return "?";
}

inline std::string to_string(const Regime& r) {
    if (r.kind == Regime::Kind::MultiRobot && r.n_prime > 0) return "MultiRobot(" + std::to_string(r.n_prime) + ")";
    return to_string(r.kind);
}

/// Accepts CamelCase or snake_case names, case-insensitive.
inline std::optional<Regime::Kind> parse_regime(std::string s) {
    std::string k;
    for (char c : s)
        if (c != '_' && c != '-') k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (k == "attractiveonly") return Regime::Kind::AttractiveOnly;
    if (k == "cooppair") return Regime::Kind::CoopPair;
    if (k == "coopvsnoncoop") return Regime::Kind::CoopVsNonCoop;
    if (k == "coopvsattacker") return Regime::Kind::CoopVsAttacker;
    if (k == "nonvortexpair") return Regime::Kind::NonVortexPair;
    if (k == "multirobot") return Regime::Kind::MultiRobot;
    return std::nullopt;
}

/// Relative state of a pair (or robot and goal) in polar form.
struct RelativeState {
    double r = 0, vr = 0, vth = 0, vrel = 0;
};

inline RelativeState relative_state(const EngagementState& e) { return {e.r, e.vr, e.vth, e.vrel}; }
inline RelativeState relative_state(const PairRecord& p) { return {p.r, p.vr, p.vth, p.vrel}; }

inline constexpr double kDefaultTolVth = 1e-3;

inline bool collision_course(const EngagementState& eng, double tol_vth = kDefaultTolVth) {
    return eng.vr < 0.0 && std::abs(eng.vth) <= tol_vth;
}

inline bool repulsive_regime(Regime::Kind k) { return k != Regime::Kind::AttractiveOnly; }

inline void check_domain(Regime::Kind k, const RelativeState& s, const char* who) {
    if (!(s.r > 0.0)) throw DomainError(std::string(who) + ": r must be > 0");
    if (repulsive_regime(k) && !(s.vrel > 0.0)) throw DomainError(std::string(who) + ": Vrel must be > 0");
}

/// Closed-loop (dVr/dt, dVth/dt) of the analytic model for the regime.
inline std::pair<double, double> closed_loop_rhs(const Regime& regime, const RelativeState& s, const PFParams& p) {
    check_domain(regime.kind, s, "closed_loop_rhs");
    const double base_r = s.vth * s.vth / s.r;
    const double base_t = -s.vr * s.vth / s.r;
    const double k = repulsive_regime(regime.kind) ? p.lambda / (s.vrel * s.r * s.r) : 0.0;
    switch (regime.kind) {
        case Regime::Kind::AttractiveOnly:
            return {base_r - p.kappa, base_t};
        case Regime::Kind::CoopPair:
            return {base_r + 4.0 * k * s.vr * s.vth, base_t + 2.0 * k * s.vr * s.vr};
        case Regime::Kind::CoopVsNonCoop:
            return {base_r + 2.0 * k * s.vr * s.vth, base_t + k * s.vr * s.vr};
        case Regime::Kind::CoopVsAttacker:
            return {base_r + 2.0 * k * s.vr * s.vth - p.kappa, base_t + k * s.vr * s.vr};
        case Regime::Kind::NonVortexPair:
            return {base_r - 2.0 * k * s.vr * s.vr, base_t + 4.0 * k * s.vr * s.vth};
        case Regime::Kind::MultiRobot:
            break;
    }
    throw DomainError("closed_loop_rhs: no pairwise closed form for MultiRobot");
}

struct LyapunovValue {
    double value = 0;
    double derivative = 0;
};

/// Regime Lyapunov function and its derivative along the analytic closed loop.
/// speed is the robot speed V (AttractiveOnly uses Vrel, which equals V against a fixed goal).
inline LyapunovValue lyapunov(const Regime& regime, const RelativeState& s, const PFParams& p, double speed = 0.0) {
    check_domain(regime.kind, s, "lyapunov");
    const double k = repulsive_regime(regime.kind) ? p.lambda / (s.vrel * s.r * s.r) : 0.0;
    const double half_vth2 = 0.5 * s.vth * s.vth;
    switch (regime.kind) {
        case Regime::Kind::AttractiveOnly: {
            const double V = s.vrel;
            return {p.kappa * s.r + half_vth2 + 0.5 * (s.vr + V) * (s.vr + V), -V * (p.kappa - s.vth * s.vth / s.r)};
        }
        case Regime::Kind::CoopPair:
            return {s.r + half_vth2 + 0.5 * s.vr * s.vr, s.vr * (1.0 + 6.0 * k * s.vr * s.vth)};
        case Regime::Kind::CoopVsNonCoop:
            return {s.r + half_vth2 + 0.5 * s.vr * s.vr, -std::abs(s.vr) * (1.0 + 3.0 * k * s.vr * s.vth)};
        case Regime::Kind::CoopVsAttacker:
            return {p.kappa * s.r + half_vth2 + 0.5 * s.vr * s.vr, 3.0 * k * s.vr * s.vr * s.vth};
        case Regime::Kind::NonVortexPair: {
            const double a = 2.0 * p.lambda / (s.vrel * s.r * s.r);
            const double shifted = s.vr + 2.0 * speed;
            const double value = s.r + half_vth2 + 0.5 * shifted * shifted;
            const double d = s.vr * (1.0 + a * (2.0 * s.vth * s.vth - s.vr * s.vr)) + 2.0 * speed * s.vth * s.vth / s.r -
                             2.0 * a * speed * s.vr * s.vr;
            return {value, d};
        }
        case Regime::Kind::MultiRobot:
            break;
    }
    throw DomainError("lyapunov: use multi_lyapunov for MultiRobot");
}

inline double turn_radius(double V, double f_lim) {
    if (!(f_lim > 0.0)) throw DomainError("turn_radius: f_lim must be > 0");
    return V * V / f_lim;
}

inline double grazing_separation(double r_turn, double l) {
    if (!(r_turn > 0.0) || !(l >= 0.0)) throw DomainError("grazing_separation: need R_turn > 0 and l >= 0");
    return std::hypot(r_turn, l) - r_turn;
}

/// Minimum acceleration bound for the saturated head-on maneuver to clear the bodies.
inline double required_accel(Regime::Kind kind, double r_rob, double V, double l) {
    double den = 0.0, num = 0.0;
    if (kind == Regime::Kind::CoopPair) {
        num = 2.0 * r_rob * V * V;
        den = l * l - r_rob * r_rob;
    } else if (kind == Regime::Kind::CoopVsNonCoop) {
        num = 4.0 * r_rob * V * V;
        den = l * l - 4.0 * r_rob * r_rob;
    } else {
        throw DomainError("required_accel: kind must be CoopPair or CoopVsNonCoop");
    }
    if (!(den > 0.0)) throw InfeasibleGeometry("required_accel: half-separation too small for the body radius");
    return num / den;
}

inline double attacker_standoff(double lambda, double V) {
    if (!(lambda > 0.0) || !(V > 0.0)) throw DomainError("attacker_standoff: lambda and V must be > 0");
    return std::sqrt(3.0 * lambda * V);
}

struct LyapunovReport {
    double t = 0;
    double value = 0;
    double derivative_analytic = 0;
    double derivative_numeric = std::numeric_limits<double>::quiet_NaN();
    Regime regime;
};

namespace detail {

inline bool uniform_spacing(const TrajectoryLog& log) {
    const auto& R = log.records;
    if (R.size() < 3) return false;
    const double h = R[1].t - R[0].t;
    for (std::size_t n = 1; n + 1 < R.size(); ++n)
        if (std::abs((R[n + 1].t - R[n].t) - h) > 1e-9 * std::max(1.0, h)) return false;
    return true;
}

inline bool is_coop(const RobotState& r) { return r.behavior.is(Behavior::Kind::Cooperative); }

/// Ordered (cooperative, other) robot indices for pair regimes; throws when the log does not fit.
inline std::pair<std::size_t, std::size_t> match_pair_regime(const TrajectoryLog& log, Regime::Kind kind) {
    const auto& rs = log.scenario.robots;
    if (rs.size() != 2) throw RegimeMismatch(std::string(to_string(kind)) + ": expected exactly two robots");
    const auto& p = log.scenario.params;
    auto kind_of = [](const RobotState& r) { return r.behavior.kind; };
    using K = Behavior::Kind;
    switch (kind) {
        case Regime::Kind::CoopPair:
        case Regime::Kind::NonVortexPair: {
            if (!is_coop(rs[0]) || !is_coop(rs[1])) throw RegimeMismatch(std::string(to_string(kind)) + ": both robots must be cooperative");
            const auto want = kind == Regime::Kind::CoopPair ? RepulsionKind::Vortex : RepulsionKind::NonVortex;
            if (p.repulsion != want) {
                throw RegimeMismatch(std::string(to_string(kind)) + ": scenario uses the " +
                                     (p.repulsion == RepulsionKind::Vortex ? "vortex" : "non-vortex") + " field");
            }
            return {0, 1};
        }
        case Regime::Kind::CoopVsNonCoop: {
            if (p.repulsion != RepulsionKind::Vortex) throw RegimeMismatch("CoopVsNonCoop: scenario uses the non-vortex field");
            for (std::size_t a = 0; a < 2; ++a) {
                const K o = kind_of(rs[1 - a]);
                if (is_coop(rs[a]) && (o == K::NonCooperative || o == K::Stationary)) return {a, 1 - a};
            }
            throw RegimeMismatch("CoopVsNonCoop: expected one cooperative and one non-cooperative or stationary robot");
        }
        case Regime::Kind::CoopVsAttacker: {
            if (p.repulsion != RepulsionKind::Vortex) throw RegimeMismatch("CoopVsAttacker: scenario uses the non-vortex field");
            for (std::size_t a = 0; a < 2; ++a) {
                const RobotState& o = rs[1 - a];
                if (is_coop(rs[a]) && o.behavior.is(K::Attacking) && o.behavior.target == rs[a].id) return {a, 1 - a};
            }
            throw RegimeMismatch("CoopVsAttacker: expected one cooperative robot and one robot attacking it");
        }
        default:
            break;
    }
    throw RegimeMismatch(std::string(to_string(kind)) + ": not a pair regime");
}

inline RelativeState goal_relative_state(const RobotRecord& rr, const PlanarVector& goal) {
    const PlanarVector x_rel = goal - PlanarVector{rr.x, rr.y};
    const PlanarVector v_rel = -(unit_from_angle(rr.phi) * rr.speed);
    const EngagementState e = engagement_from_relative(x_rel, v_rel);
    return relative_state(e);
}

}  // namespace detail

/// Robot (or robots) whose relative motion the regime describes, after checking the log fits it.
inline void match_regime(const TrajectoryLog& log, const Regime& regime) {
    const auto& rs = log.scenario.robots;
    if (regime.kind == Regime::Kind::AttractiveOnly) {
        if (rs.size() != 1 || !detail::is_coop(rs[0]) || !rs[0].goal)
            throw RegimeMismatch("AttractiveOnly: expected a single cooperative robot with a goal");
        return;
    }
    if (regime.kind == Regime::Kind::MultiRobot) {
        if (rs.size() < 2) throw RegimeMismatch("MultiRobot: expected at least two robots");
        if (std::none_of(rs.begin(), rs.end(), detail::is_coop)) throw RegimeMismatch("MultiRobot: no cooperative robot");
        return;
    }
    detail::match_pair_regime(log, regime.kind);
}

struct ClosedLoopReport {
    double max_rel_error = 0;
    double t_at_max = 0;
    std::size_t record_at_max = 0;
    std::size_t compared = 0;
    std::size_t skipped = 0;  // windows crossing a regime change or with negligible reference
};

/// True when the logged motion realizes the closed-loop model: forces act as accelerations and
/// no attraction enters the relative dynamics other than the regime's own.
inline bool closed_loop_applicable(const TrajectoryLog& log, const Regime& regime, std::string* why = nullptr) {
    auto no = [why](const std::string& s) {
        if (why) *why = s;
        return false;
    };
    if (log.scenario.dynamics != Dynamics::PointMass) return no("unicycle dynamics do not apply forces as accelerations");
    if (regime.kind == Regime::Kind::MultiRobot) return no("no pairwise closed form for several robots");
    if (regime.kind == Regime::Kind::AttractiveOnly) return true;
    for (const auto& r : log.scenario.robots)
        if (detail::is_coop(r) && r.goal) return no("cooperative robot " + std::to_string(r.id) + " has a goal");
    return true;
}

/// Central differences of logged (Vr, Vth) against the analytic closed loop.
inline ClosedLoopReport verify_closed_loop(const TrajectoryLog& log, const Regime& regime, const PFParams& params) {
    match_regime(log, regime);
    if (regime.kind == Regime::Kind::MultiRobot) throw RegimeMismatch("verify_closed_loop: MultiRobot has no pairwise closed form");
    std::string why;
    if (!closed_loop_applicable(log, regime, &why))
        throw RegimeMismatch("verify_closed_loop: " + why);
    if (!detail::uniform_spacing(log)) throw DomainError("verify_closed_loop: needs at least three evenly spaced records");

    const auto& R = log.records;
    const bool attractive = regime.kind == Regime::Kind::AttractiveOnly;
    const PlanarVector goal = attractive ? *log.scenario.robots[0].goal : PlanarVector{};

    std::vector<RelativeState> rel(R.size());
    std::vector<char> trig(R.size());
    std::vector<char> act(R.size());
    for (std::size_t n = 0; n < R.size(); ++n) {
        if (attractive) {
            rel[n] = detail::goal_relative_state(R[n].robots[0], goal);
            trig[n] = 1;
        } else {
            rel[n] = relative_state(R[n].pairs[0]);
            trig[n] = R[n].pairs[0].triggered;
        }
        char a = 0;
        for (std::size_t k = 0; k < R[n].robots.size(); ++k) a |= static_cast<char>(R[n].robots[k].active) << k;
        act[n] = a;
    }

    PFParams free_params = params;
    free_params.kappa = 0.0;
    ClosedLoopReport rep;
    for (std::size_t n = 1; n + 1 < R.size(); ++n) {
        if (trig[n - 1] != trig[n] || trig[n + 1] != trig[n] || act[n - 1] != act[n] || act[n + 1] != act[n]) {
            ++rep.skipped;
            continue;
        }
        if (attractive && !(R[n].robots[0].active)) {
            ++rep.skipped;
            continue;
        }
        const double h2 = R[n + 1].t - R[n - 1].t;
        const double dvr = (rel[n + 1].vr - rel[n - 1].vr) / h2;
        const double dvt = (rel[n + 1].vth - rel[n - 1].vth) / h2;

        std::pair<double, double> ana;
        if (trig[n]) {
            ana = closed_loop_rhs(regime, rel[n], params);
        } else if (regime.kind == Regime::Kind::CoopVsAttacker) {
            ana = closed_loop_rhs({Regime::Kind::AttractiveOnly, 0}, rel[n], params);
        } else {
            ana = closed_loop_rhs({Regime::Kind::AttractiveOnly, 0}, rel[n], free_params);
        }
        const double ref = std::hypot(ana.first, ana.second);
        if (ref < 1e-9) {
            ++rep.skipped;
            continue;
        }
        const double err = std::hypot(dvr - ana.first, dvt - ana.second) / ref;
        ++rep.compared;
        if (err > rep.max_rel_error) {
            rep.max_rel_error = err;
            rep.t_at_max = R[n].t;
            rep.record_at_max = n;
        }
    }
    return rep;
}

/// Per-record Lyapunov value and derivatives for a pair regime or AttractiveOnly.
inline std::vector<LyapunovReport> lyapunov_series(const TrajectoryLog& log, const Regime& regime, const PFParams& params) {
    match_regime(log, regime);
    if (regime.kind == Regime::Kind::MultiRobot) throw RegimeMismatch("lyapunov_series: use multi_lyapunov for MultiRobot");
    const auto& R = log.records;
    const bool attractive = regime.kind == Regime::Kind::AttractiveOnly;
    std::vector<LyapunovReport> out;
    std::vector<char> valid;
    for (const auto& rec : R) {
        LyapunovReport lr;
        lr.t = rec.t;
        lr.regime = regime;
        RelativeState s;
        bool ok = true;
        double speed = 0.0;
        if (attractive) {
            s = detail::goal_relative_state(rec.robots[0], *log.scenario.robots[0].goal);
            ok = rec.robots[0].active;
        } else {
            s = relative_state(rec.pairs[0]);
            ok = rec.pairs[0].triggered;
            for (const auto& rr : rec.robots) speed = std::max(speed, rr.speed);
        }
        if (ok && s.r > 0.0 && (attractive || s.vrel > 0.0)) {
            const LyapunovValue v = lyapunov(regime, s, params, speed);
            lr.value = v.value;
            lr.derivative_analytic = v.derivative;
        } else {
            ok = false;
            lr.value = lr.derivative_analytic = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(lr);
        valid.push_back(ok);
    }
    for (std::size_t n = 1; n + 1 < out.size(); ++n)
        if (valid[n - 1] && valid[n] && valid[n + 1])
            out[n].derivative_numeric = (out[n + 1].value - out[n - 1].value) / (out[n + 1].t - out[n - 1].t);
    return out;
}

/// Summed pair Lyapunov function over currently triggered pairs.
inline std::vector<LyapunovReport> multi_lyapunov(const TrajectoryLog& log, const PFParams& params) {
    if (log.scenario.robots.size() < 2) throw RegimeMismatch("multi_lyapunov: needs at least two robots");
    const auto& rs = log.scenario.robots;
    std::vector<LyapunovReport> out;
    std::vector<std::vector<std::size_t>> sets;
    for (const auto& rec : log.records) {
        std::vector<std::size_t> trig;
        std::set<int> avoiding;
        for (std::size_t k = 0; k < rec.pairs.size(); ++k) {
            const auto& p = rec.pairs[k];
            if (!p.triggered) continue;
            trig.push_back(k);
            for (int id : {p.i, p.j}) {
                const std::size_t idx = log.robot_index(id);
                if (detail::is_coop(rs[idx]) && rec.robots[idx].active) avoiding.insert(id);
            }
        }
        const int n_prime = static_cast<int>(avoiding.size());
        LyapunovReport lr;
        lr.t = rec.t;
        lr.regime = {Regime::Kind::MultiRobot, n_prime};
        for (std::size_t k : trig) {
            const auto& p = rec.pairs[k];
            const double kk = params.lambda / (p.vrel * p.r * p.r);
            lr.value += p.r + 0.5 * (p.vth * p.vth + p.vr * p.vr);
            lr.derivative_analytic += -std::abs(p.vr) * (1.0 + 3.0 * n_prime * kk * p.vr * p.vth);
        }
        out.push_back(lr);
        sets.push_back(std::move(trig));
    }
    for (std::size_t n = 1; n + 1 < out.size(); ++n)
        if (sets[n - 1] == sets[n] && sets[n + 1] == sets[n])
            out[n].derivative_numeric = (out[n + 1].value - out[n - 1].value) / (out[n + 1].t - out[n - 1].t);
    return out;
}

struct CircleFit {
    PlanarVector center;
    double radius = 0;
    double rms_residual = 0;
};

/// Algebraic least-squares circle through a point set.
inline CircleFit fit_circle(const std::vector<PlanarVector>& pts) {
    if (pts.size() < 3) throw DomainError("fit_circle: need at least three points");
    PlanarVector m;
    for (const auto& p : pts) m += p;
    m = m / static_cast<double>(pts.size());
    double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
    for (const auto& p : pts) {
        const double u = p.x - m.x, v = p.y - m.y;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    const double b1 = 0.5 * (suuu + suvv), b2 = 0.5 * (svvv + svuu);
    const double det = suu * svv - suv * suv;
    if (std::abs(det) < 1e-300) throw DomainError("fit_circle: points are collinear");
    const double uc = (b1 * svv - b2 * suv) / det;
    const double vc = (suu * b2 - suv * b1) / det;
    CircleFit f;
    f.center = {m.x + uc, m.y + vc};
    f.radius = std::sqrt(uc * uc + vc * vc + (suu + svv) / static_cast<double>(pts.size()));
    double ss = 0;
    for (const auto& p : pts) {
        const double d = (p - f.center).norm() - f.radius;
        ss += d * d;
    }
    f.rms_residual = std::sqrt(ss / static_cast<double>(pts.size()));
    return f;
}

}  // namespace vortex_ca
