#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"

namespace vortex_ca {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parse JSON text; errors carry source name, line and column.
inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < upto; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) msg = msg.substr(pos);
        throw ConfigError({source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg});
    }
}

namespace detail {

/// Collects field errors instead of stopping at the first one.
struct Reader {
    std::vector<std::string>& errs;

    bool number(const json& j, const std::string& path, double& out, bool allow_inf = false) {
        if (j.is_number()) {
            out = j.get<double>();
            return true;
        }
        if (allow_inf && j.is_string() && j.get<std::string>() == "inf") {
            out = kInf;
            return true;
        }
        errs.push_back(path + ": expected a number" + std::string(allow_inf ? " or \"inf\"" : ""));
        return false;
    }

    bool integer(const json& j, const std::string& path, int& out) {
        if (j.is_number_integer()) {
            out = j.get<int>();
            return true;
        }
        errs.push_back(path + ": expected an integer");
        return false;
    }

    bool vec(const json& j, const std::string& path, PlanarVector& out) {
        if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
            out = {j[0].get<double>(), j[1].get<double>()};
            return true;
        }
        errs.push_back(path + ": expected [x, y]");
        return false;
    }

    void unknown_keys(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* k : known) ok |= it.key() == k;
            if (!ok) errs.push_back(path + it.key() + ": unknown field");
        }
    }
};

inline json inf_or_number(double v) { return std::isinf(v) ? json("inf") : json(v); }

}  // namespace detail

inline ordered_json to_json(const Scenario& s) {
    ordered_json j;
    j["name"] = s.name;
    j["dynamics"] = to_string(s.dynamics);
    j["dt"] = s.dt;
    j["t_max"] = s.t_max;
    j["d_wheel"] = s.d_wheel;
    j["r_wheel"] = s.r_wheel;
    j["record_stride"] = s.record_stride;
    ordered_json p;
    p["kappa"] = s.params.kappa;
    p["lambda"] = s.params.lambda;
    p["r_star"] = s.params.r_star ? ordered_json(*s.params.r_star) : ordered_json(nullptr);
    p["f_lim"] = std::isinf(s.params.f_lim) ? ordered_json("inf") : ordered_json(s.params.f_lim);
    p["kp"] = s.params.kp;
    p["omega_max"] = std::isinf(s.params.omega_max) ? ordered_json("inf") : ordered_json(s.params.omega_max);
    p["goal_tol"] = s.params.goal_tol;
    p["eps_v"] = s.params.eps_v;
    p["repulsion"] = s.params.repulsion == RepulsionKind::Vortex ? "vortex" : "nonvortex";
    j["params"] = p;
    ordered_json robots = ordered_json::array();
    for (const auto& r : s.robots) {
        ordered_json o;
        o["id"] = r.id;
        o["behavior"] = to_string(r.behavior.kind);
        if (r.behavior.is(Behavior::Kind::Attacking)) o["target"] = r.behavior.target;
        o["position"] = {r.position.x, r.position.y};
        o["heading"] = r.heading;
        o["speed"] = r.speed;
        o["radius"] = r.body_radius;
        o["goal"] = r.goal ? ordered_json{r.goal->x, r.goal->y} : ordered_json(nullptr);
        robots.push_back(o);
    }
    j["robots"] = robots;
    return j;
}

inline std::string write_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

/// Build a validated Scenario from JSON; every problem found is reported.
inline Scenario scenario_from_json(const json& j) {
    std::vector<std::string> errs;
    detail::Reader rd{errs};
    Scenario s;
    if (!j.is_object()) throw ConfigError({"scenario: expected a JSON object"});
    rd.unknown_keys(j, "", {"name", "dynamics", "dt", "t_max", "d_wheel", "r_wheel", "record_stride", "params", "robots"});

    if (j.contains("name")) {
        if (j["name"].is_string()) s.name = j["name"].get<std::string>();
        else errs.push_back("name: expected a string");
    }
    if (j.contains("dynamics")) {
        const std::string d = j["dynamics"].is_string() ? j["dynamics"].get<std::string>() : "";
        if (d == "unicycle") s.dynamics = Dynamics::Unicycle;
        else if (d == "point_mass") s.dynamics = Dynamics::PointMass;
        else errs.push_back("dynamics: expected \"unicycle\" or \"point_mass\"");
    }
    if (j.contains("dt")) rd.number(j["dt"], "dt", s.dt);
    if (j.contains("t_max")) rd.number(j["t_max"], "t_max", s.t_max);
    if (j.contains("d_wheel")) rd.number(j["d_wheel"], "d_wheel", s.d_wheel);
    if (j.contains("r_wheel")) rd.number(j["r_wheel"], "r_wheel", s.r_wheel);
    if (j.contains("record_stride")) rd.integer(j["record_stride"], "record_stride", s.record_stride);

    if (j.contains("params")) {
        const json& p = j["params"];
        if (!p.is_object()) {
            errs.push_back("params: expected an object");
        } else {
            rd.unknown_keys(p, "params.", {"kappa", "lambda", "r_star", "f_lim", "kp", "omega_max", "goal_tol", "eps_v", "repulsion"});
            auto& q = s.params;
            if (p.contains("kappa")) rd.number(p["kappa"], "params.kappa", q.kappa);
            if (p.contains("lambda")) rd.number(p["lambda"], "params.lambda", q.lambda);
            if (p.contains("r_star") && !p["r_star"].is_null()) {
                double v = 0;
                if (rd.number(p["r_star"], "params.r_star", v)) q.r_star = v;
            }
            if (p.contains("f_lim")) rd.number(p["f_lim"], "params.f_lim", q.f_lim, true);
            if (p.contains("kp")) rd.number(p["kp"], "params.kp", q.kp);
            if (p.contains("omega_max")) rd.number(p["omega_max"], "params.omega_max", q.omega_max, true);
            if (p.contains("goal_tol")) rd.number(p["goal_tol"], "params.goal_tol", q.goal_tol);
            if (p.contains("eps_v")) rd.number(p["eps_v"], "params.eps_v", q.eps_v);
            if (p.contains("repulsion")) {
                const std::string r = p["repulsion"].is_string() ? p["repulsion"].get<std::string>() : "";
                if (r == "vortex") q.repulsion = RepulsionKind::Vortex;
                else if (r == "nonvortex") q.repulsion = RepulsionKind::NonVortex;
                else errs.push_back("params.repulsion: expected \"vortex\" or \"nonvortex\"");
            }
        }
    }

    if (!j.contains("robots") || !j["robots"].is_array()) {
        errs.push_back("robots: expected an array");
    } else {
        const json& arr = j["robots"];
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string at = "robots[" + std::to_string(k) + "]";
            const json& o = arr[k];
            if (!o.is_object()) {
                errs.push_back(at + ": expected an object");
                continue;
            }
            rd.unknown_keys(o, at + ".", {"id", "behavior", "target", "position", "heading", "speed", "radius", "goal"});
            RobotState r;
            if (o.contains("id")) rd.integer(o["id"], at + ".id", r.id);
            else errs.push_back(at + ".id: required");
            if (o.contains("position")) rd.vec(o["position"], at + ".position", r.position);
            else errs.push_back(at + ".position: required");
            if (o.contains("heading")) rd.number(o["heading"], at + ".heading", r.heading);
            if (o.contains("radius")) rd.number(o["radius"], at + ".radius", r.body_radius);
            if (o.contains("behavior")) {
                const std::string b = o["behavior"].is_string() ? o["behavior"].get<std::string>() : "";
                if (b == "cooperative") r.behavior = Behavior::cooperative();
                else if (b == "noncooperative") r.behavior = Behavior::noncooperative();
                else if (b == "stationary") r.behavior = Behavior::stationary();
                else if (b == "attacking") r.behavior.kind = Behavior::Kind::Attacking;
                else errs.push_back(at + ".behavior: expected cooperative, noncooperative, stationary or attacking");
            }
            if (r.behavior.is(Behavior::Kind::Attacking)) {
                if (o.contains("target")) rd.integer(o["target"], at + ".target", r.behavior.target);
                else errs.push_back(at + ".target: required for an attacking robot");
            } else if (o.contains("target")) {
                errs.push_back(at + ".target: only valid for an attacking robot");
            }
            if (o.contains("speed")) rd.number(o["speed"], at + ".speed", r.speed);
            else if (!r.behavior.is(Behavior::Kind::Stationary)) errs.push_back(at + ".speed: required");
            if (o.contains("goal") && !o["goal"].is_null()) {
                PlanarVector g;
                if (rd.vec(o["goal"], at + ".goal", g)) r.goal = g;
            }
            r.heading = wrap_angle(r.heading);
            s.robots.push_back(r);
        }
    }

    if (errs.empty()) errs = validate(s);
    if (!errs.empty()) throw ConfigError(errs);
    return s;
}

inline Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>") {
    return scenario_from_json(parse_json_text(text, source));
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path), path); }

// Bundled presets. Placements are reconstructions within a 3.5 m x 3.5 m workspace.

namespace presets {

inline constexpr double kSpeed = 0.17;
inline constexpr double kRadius = 0.175;

inline RobotState robot(int id, PlanarVector pos, double heading, std::optional<PlanarVector> goal,
                        Behavior b = Behavior::cooperative(), double speed = kSpeed) {
    RobotState r;
    r.id = id;
    r.position = pos;
    r.heading = wrap_angle(heading);
    r.speed = b.is(Behavior::Kind::Stationary) ? 0.0 : speed;
    r.body_radius = kRadius;
    r.behavior = b;
    r.goal = goal;
    return r;
}

inline Scenario base(const std::string& name) {
    Scenario s;
    s.name = name;
    s.params.kappa = 10.0;
    s.params.lambda = 10.0;
    s.t_max = 60.0;
    return s;
}

inline Scenario coop_headon() {
    Scenario s = base("coop_headon");
    s.robots = {robot(1, {-1.5, 0.0}, 0.0, PlanarVector{1.5, 0.0}), robot(2, {1.5, 0.0}, kPi, PlanarVector{-1.5, 0.0})};
    return s;
}

inline Scenario nonvortex_headon() {
    Scenario s = coop_headon();
    s.name = "nonvortex_headon";
    s.params.repulsion = RepulsionKind::NonVortex;
    return s;
}

inline Scenario coop_triangle() {
    Scenario s = base("coop_triangle");
    const double R = 1.5;
    for (int k = 0; k < 3; ++k) {
        const double a = kPi / 2.0 + k * 2.0 * kPi / 3.0;
        const PlanarVector p = unit_from_angle(a) * R;
        const PlanarVector g = unit_from_angle(a + kPi) * (R / 2.0);  // midpoint of the opposite side
        s.robots.push_back(robot(k + 1, p, a + kPi, g));
    }
    return s;
}

inline Scenario noncoop_headon() {
    Scenario s = base("noncoop_headon");
    s.robots = {robot(1, {-1.5, 0.0}, 0.0, PlanarVector{1.5, 0.0}),
                robot(2, {1.5, 0.0}, kPi, PlanarVector{-1.5, 0.0}, Behavior::noncooperative())};
    return s;
}

/// Initial separation is the attacker standoff distance rounded up to 1 cm.
inline Scenario attacker() {
    Scenario s = base("attacker");
    const double r0 = std::ceil(std::sqrt(3.0 * s.params.lambda * kSpeed) * 100.0 - 1e-9) / 100.0;
    s.robots = {robot(1, {-r0 / 2.0, 0.0}, 0.0, PlanarVector{r0 / 2.0, 0.0}),
                robot(2, {r0 / 2.0, 0.0}, kPi, std::nullopt, Behavior::attacking(1))};
    return s;
}

inline Scenario attractive_only() {
    Scenario s = base("attractive_only");
    s.robots = {robot(1, {-1.5, -1.0}, kPi / 2.0, PlanarVector{1.5, 1.0})};
    return s;
}

inline const std::map<std::string, Scenario (*)()>& registry() {
    static const std::map<std::string, Scenario (*)()> m = {
        {"attacker", &attacker},         {"attractive_only", &attractive_only}, {"coop_headon", &coop_headon},
        {"coop_triangle", &coop_triangle}, {"noncoop_headon", &noncoop_headon},   {"nonvortex_headon", &nonvortex_headon},
    };
    return m;
}

}  // namespace presets

inline std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : presets::registry()) out.push_back(k);
    return out;
}

inline Scenario preset(const std::string& name) {
    const auto& m = presets::registry();
    auto it = m.find(name);
    if (it == m.end()) throw ConfigError({"unknown preset \"" + name + "\""});
    return it->second();
}

/// "preset:<name>" selects a bundled preset; anything else is a file path.
inline Scenario resolve_scenario(const std::string& arg) {
    const std::string prefix = "preset:";
    if (arg.rfind(prefix, 0) == 0) return preset(arg.substr(prefix.size()));
    return load_scenario(arg);
}

}  // namespace vortex_ca
