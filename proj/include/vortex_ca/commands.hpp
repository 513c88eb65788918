#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include "analysis.hpp"
#include "log_io.hpp"

namespace vortex_ca {

enum ExitCode { kExitOk = 0, kExitError = 1, kExitOverlap = 2 };

inline int cmd_run(const std::string& scenario_arg, const fs::path& out_dir, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    try {
        const Scenario s = resolve_scenario(scenario_arg);
        const TrajectoryLog log = run_capturing(s);
        write_run_dir(log, out_dir);
        if (log.abort_reason) {
            err << "run aborted: " << *log.abort_reason << "\n";
            return kExitError;
        }
        const int code = run_exit_code(log);
        out << s.name << ": " << log.steps << " steps, t_end " << log.records.back().t
            << (code == kExitOverlap ? ", body overlap" : "") << "\n";
        return code;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
}

// ---- sweep ----

inline const std::vector<std::string>& all_metrics() {
    static const std::vector<std::string> m = {"min_separation", "time_to_goal", "body_overlap", "max_lyap_derivative"};
    return m;
}

struct SweepAxis {
    std::string parameter;  // dotted path into the scenario document, "*" matches every array element
    std::vector<json> values;
};

struct SweepSpec {
    std::string base_scenario;
    std::vector<SweepAxis> axes;
    std::vector<std::string> metrics;
};

namespace detail {

inline std::vector<std::string> split_path(const std::string& p) {
    std::vector<std::string> out;
    for (auto part : split(p, '.')) out.emplace_back(part);
    return out;
}

/// Visits every node addressed by a dotted path; returns false if any segment does not resolve.
template <class F>
bool visit_path(json& node, const std::vector<std::string>& parts, std::size_t k, F&& f) {
    if (k == parts.size()) {
        f(node);
        return true;
    }
    const std::string& seg = parts[k];
    if (node.is_object()) {
        if (!node.contains(seg)) return false;
        return visit_path(node[seg], parts, k + 1, f);
    }
    if (node.is_array()) {
        if (seg == "*") {
            if (node.empty()) return false;
            for (auto& child : node)
                if (!visit_path(child, parts, k + 1, f)) return false;
            return true;
        }
        std::size_t idx = 0;
        auto [p, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
        if (ec != std::errc() || p != seg.data() + seg.size() || idx >= node.size()) return false;
        return visit_path(node[idx], parts, k + 1, f);
    }
    return false;
}

}  // namespace detail

inline SweepSpec parse_sweep_spec(const json& j, const fs::path& spec_dir) {
    std::vector<std::string> errs;
    SweepSpec s;
    if (!j.is_object()) throw ConfigError({"sweep: expected a JSON object"});
    if (j.contains("base_scenario") && j["base_scenario"].is_string()) {
        s.base_scenario = j["base_scenario"].get<std::string>();
        if (s.base_scenario.rfind("preset:", 0) != 0 && fs::path(s.base_scenario).is_relative())
            s.base_scenario = (spec_dir / s.base_scenario).string();
    } else {
        errs.push_back("base_scenario: expected a path or preset:<name>");
    }
    if (!j.contains("axes") || !j["axes"].is_array() || j["axes"].empty()) {
        errs.push_back("axes: expected a non-empty array");
    } else {
        for (std::size_t k = 0; k < j["axes"].size(); ++k) {
            const json& a = j["axes"][k];
            const std::string at = "axes[" + std::to_string(k) + "]";
            SweepAxis ax;
            if (a.is_object() && a.contains("parameter") && a["parameter"].is_string()) ax.parameter = a["parameter"].get<std::string>();
            else errs.push_back(at + ".parameter: expected a string");
            if (a.is_object() && a.contains("values") && a["values"].is_array() && !a["values"].empty())
                for (const auto& v : a["values"]) ax.values.push_back(v);
            else errs.push_back(at + ".values: expected a non-empty array");
            s.axes.push_back(ax);
        }
    }
    if (j.contains("metrics")) {
        if (!j["metrics"].is_array()) {
            errs.push_back("metrics: expected an array");
        } else {
            for (const auto& m : j["metrics"]) {
                const std::string name = m.is_string() ? m.get<std::string>() : "";
                if (std::find(all_metrics().begin(), all_metrics().end(), name) == all_metrics().end())
                    errs.push_back("metrics: unknown metric '" + m.dump() + "'");
                else
                    s.metrics.push_back(name);
            }
        }
    } else {
        s.metrics = all_metrics();
    }
    if (!errs.empty()) throw ConfigError(errs);
    return s;
}

inline int sweep_threads() {
    if (const char* e = std::getenv("VORTEX_CA_THREADS")) {
        const int n = std::atoi(e);
        if (n >= 1) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct SweepCell {
    std::vector<json> values;
    std::map<std::string, double> metrics;
    int exit_code = 0;
    std::string error;
};

inline std::map<std::string, double> run_metrics(const TrajectoryLog& log) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, double> m;
    const auto& rs = log.scenario.robots;
    double msep = kInf;
    for (std::size_t a = 0; a < rs.size(); ++a)
        for (std::size_t b = a + 1; b < rs.size(); ++b) msep = std::min(msep, min_separation(log, rs[a].id, rs[b].id));
    m["min_separation"] = rs.size() >= 2 ? msep : nan;

    double tg = 0.0;
    bool any = false;
    for (const auto& r : rs) {
        if (!r.behavior.is(Behavior::Kind::Cooperative) || !r.goal) continue;
        any = true;
        double t = nan;
        for (const auto& e : log.events)
            if (e.kind == EventKind::GoalReached && e.ids == std::vector<int>{r.id}) t = e.t;
        tg = std::isnan(t) ? nan : std::max(tg, t);
        if (std::isnan(tg)) break;
    }
    m["time_to_goal"] = any ? tg : nan;
    m["body_overlap"] = log.has_overlap() ? 1.0 : 0.0;

    double ml = nan;
    if (rs.size() >= 2) {
        for (const auto& lr : multi_lyapunov(log, log.scenario.params))
            if (std::isnan(ml) || lr.derivative_analytic > ml) ml = lr.derivative_analytic;
    }
    m["max_lyap_derivative"] = ml;
    return m;
}

inline std::string csv_cell(const json& v) {
    if (v.is_number()) return fmt17(v.get<double>());
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    std::replace(s.begin(), s.end(), ',', ';');
    return s;
}

/// Cells run concurrently; rows are written in cartesian-product order regardless of completion order.
inline int cmd_sweep(const std::string& spec_path, const fs::path& out_dir, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    try {
        const json sj = parse_json_text(read_text_file(spec_path), spec_path);
        const SweepSpec spec = parse_sweep_spec(sj, fs::path(spec_path).parent_path());
        const Scenario base = resolve_scenario(spec.base_scenario);
        const json base_doc = json::parse(to_json(base).dump());

        std::vector<std::string> errs;
        std::vector<std::vector<std::string>> parts;
        for (const auto& ax : spec.axes) {
            parts.push_back(detail::split_path(ax.parameter));
            json probe = base_doc;
            if (!detail::visit_path(probe, parts.back(), 0, [](json&) {}))
                errs.push_back("axes: parameter '" + ax.parameter + "' does not resolve in the scenario");
        }
        if (!errs.empty()) throw ConfigError(errs);

        std::vector<SweepCell> cells(1);
        for (const auto& ax : spec.axes) {
            std::vector<SweepCell> next;
            for (const auto& c : cells)
                for (const auto& v : ax.values) {
                    SweepCell n = c;
                    n.values.push_back(v);
                    next.push_back(std::move(n));
                }
            cells = std::move(next);
        }

        std::error_code ec;
        fs::create_directories(out_dir / "cells", ec);
        if (ec) throw IoError("cannot create " + (out_dir / "cells").string() + ": " + ec.message());

        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) {
                SweepCell& cell = cells[k];
                try {
                    json doc = base_doc;
                    for (std::size_t a = 0; a < spec.axes.size(); ++a)
                        detail::visit_path(doc, parts[a], 0, [&](json& node) { node = cell.values[a]; });
                    const Scenario s = scenario_from_json(doc);
                    const TrajectoryLog log = run_capturing(s);
                    char name[32];
                    std::snprintf(name, sizeof name, "%04zu", k);
                    write_run_dir(log, out_dir / "cells" / name);
                    if (log.abort_reason) throw std::runtime_error(*log.abort_reason);
                    cell.metrics = run_metrics(log);
                    cell.exit_code = run_exit_code(log);
                } catch (const std::exception& e) {
                    cell.exit_code = kExitError;
                    cell.error = e.what();
                }
            }
        };
        const int nthreads = std::min<int>(sweep_threads(), static_cast<int>(cells.size()));
        std::vector<std::thread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        CsvWriter csv(out_dir / "results.csv");
        std::string header = "cell";
        for (const auto& ax : spec.axes) header += "," + ax.parameter;
        for (const auto& m : spec.metrics) header += "," + m;
        header += ",exit_code,error";
        csv.line(header);
        int failures = 0;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto& c = cells[k];
            std::string row = std::to_string(k);
            for (const auto& v : c.values) row += "," + csv_cell(v);
            for (const auto& m : spec.metrics) row += "," + (c.error.empty() ? fmt17(c.metrics.at(m)) : std::string("nan"));
            std::string e = c.error;
            std::replace(e.begin(), e.end(), ',', ';');
            std::replace(e.begin(), e.end(), '\n', ' ');
            row += "," + std::to_string(c.exit_code) + "," + e;
            csv.line(row);
            if (!c.error.empty()) ++failures;
        }
        csv.close();
        out << cells.size() << " cells, " << failures << " failed\n";
        return failures ? kExitError : kExitOk;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
}

// ---- analyze ----

enum class CheckStatus { Pass, Fail, Warn, Skip };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "PASS";
        case CheckStatus::Fail: return "FAIL";
        case CheckStatus::Warn: return "WARN";
        case CheckStatus::Skip: return "SKIP";
    }
    return "?";
}

struct Check {
    std::string name;
    CheckStatus status;
    std::string detail;
};

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace detail {

inline Check bound_check(const std::string& name, double value, double limit, const std::string& what) {
    return {name, value < limit ? CheckStatus::Pass : CheckStatus::Fail, what + " " + num(value) + " (limit " + num(limit) + ")"};
}

inline double max_circle_residual(const TrajectoryLog& log) {
    double m = 0.0;
    for (const auto& rec : log.records)
        for (const auto& p : rec.pairs) m = std::max(m, std::abs(p.vr * p.vr + p.vth * p.vth - p.vrel * p.vrel));
    return m;
}

inline bool all_finite(const TrajectoryLog& log) {
    for (const auto& rec : log.records) {
        for (const auto& r : rec.robots)
            for (double v : {r.x, r.y, r.phi, r.speed, r.omega, r.phi_des, r.fx, r.fy, r.frep_x, r.frep_y})
                if (!std::isfinite(v)) return false;
        for (const auto& p : rec.pairs)
            for (double v : {p.r, p.theta, p.vr, p.vth, p.vrel})
                if (!std::isfinite(v)) return false;
    }
    return true;
}

inline double global_min_separation(const TrajectoryLog& log) {
    double m = kInf;
    for (const auto& rec : log.records)
        for (const auto& p : rec.pairs) m = std::min(m, p.r);
    return m;
}

}  // namespace detail

/// Largest |F_rep(a) + F_rep(b)| over records where the single pair is triggered and both robots avoid.
inline double max_reciprocity_residual(const TrajectoryLog& log, std::size_t* compared = nullptr) {
    double m = 0.0;
    std::size_t n = 0;
    for (const auto& rec : log.records) {
        if (rec.pairs.size() != 1 || !rec.pairs[0].triggered) continue;
        const auto& a = rec.robots[0];
        const auto& b = rec.robots[1];
        if (!a.active || !b.active) continue;
        m = std::max({m, std::abs(a.frep_x + b.frep_x), std::abs(a.frep_y + b.frep_y)});
        ++n;
    }
    if (compared) *compared = n;
    return m;
}

inline std::vector<Check> analyze_log(const TrajectoryLog& log, const Regime& regime) {
    match_regime(log, regime);
    const auto& s = log.scenario;
    const auto& p = s.params;
    std::vector<Check> out;

    out.push_back({"finite_state", detail::all_finite(log) ? CheckStatus::Pass : CheckStatus::Fail, "all logged values finite"});
    if (log.abort_reason) out.push_back({"completed", CheckStatus::Fail, *log.abort_reason});

    if (regime.kind == Regime::Kind::AttractiveOnly) {
        const PlanarVector goal = *s.robots[0].goal;
        double circ = 0.0, excess = 0.0;
        for (const auto& rec : log.records) {
            const auto& rr = rec.robots[0];
            if (!rr.active) continue;
            const RelativeState st = detail::goal_relative_state(rr, goal);
            circ = std::max(circ, std::abs(st.vr * st.vr + st.vth * st.vth - rr.speed * rr.speed));
            excess = std::max(excess, std::abs(st.vr) - rr.speed);
        }
        out.push_back(detail::bound_check("circle_constraint", circ, 1e-9, "max |Vr^2 + Vth^2 - V^2|"));
        out.push_back({"radial_speed_bound", excess <= 1e-12 ? CheckStatus::Pass : CheckStatus::Fail,
                       "max |Vr| - V " + num(excess)});
    } else {
        out.push_back(detail::bound_check("circle_constraint", detail::max_circle_residual(log), 1e-9,
                                          "max |Vr^2 + Vth^2 - Vrel^2|"));
        const double ms = detail::global_min_separation(log);
        out.push_back({"min_separation_positive", ms > 0.0 ? CheckStatus::Pass : CheckStatus::Fail, "min separation " + num(ms) + " m"});
    }

    if (regime.kind == Regime::Kind::CoopPair || regime.kind == Regime::Kind::NonVortexPair) {
        std::size_t n = 0;
        const double res = max_reciprocity_residual(log, &n);
        if (n == 0) out.push_back({"reciprocity", CheckStatus::Skip, "no triggered records"});
        else out.push_back({"reciprocity", res <= 1e-12 ? CheckStatus::Pass : CheckStatus::Fail,
                            "max |F_rep(i) + F_rep(j)| " + num(res) + " over " + std::to_string(n) + " records"});
    }

    if (regime.kind == Regime::Kind::CoopPair) {
        bool found = false;
        double t1 = 0.0, r1 = 0.0;
        bool prev_ok = false;
        double prev_d = 0.0;
        for (const auto& rec : log.records) {
            const auto& pr = rec.pairs[0];
            if (!pr.triggered) {
                prev_ok = false;
                continue;
            }
            const double d = lyapunov(regime, relative_state(pr), p).derivative;
            if (prev_ok && prev_d < 0.0 && d > 0.0 && pr.r > 0.0) {
                found = true;
                t1 = rec.t;
                r1 = pr.r;
                break;
            }
            prev_ok = true;
            prev_d = d;
        }
        out.push_back({"instability_certificate", found ? CheckStatus::Pass : CheckStatus::Fail,
                       found ? "Lyapunov derivative turns positive at t=" + num(t1) + " s, r=" + num(r1) + " m"
                             : "Lyapunov derivative never changes sign from negative to positive"});

        bool released = false, retriggered = false;
        double t_re = 0.0;
        for (const auto& rec : log.records) {
            const auto& pr = rec.pairs[0];
            if (!released && !pr.triggered && pr.vr >= 0.0) released = true;
            else if (released && pr.triggered) {
                retriggered = true;
                t_re = rec.t;
                break;
            }
        }
        out.push_back({"no_retrigger", retriggered ? CheckStatus::Fail : CheckStatus::Pass,
                       retriggered ? "field re-triggered at t=" + num(t_re) + " s" : "no re-trigger after release"});
    }

    if (regime.kind == Regime::Kind::CoopVsNonCoop) {
        const auto [ci, oi] = detail::match_pair_regime(log, regime.kind);
        (void)ci;
        const RobotState& o = s.robots[oi];
        const PlanarVector dir = unit_from_angle(o.heading);
        double dev = 0.0;
        for (const auto& rec : log.records) {
            const auto& rr = rec.robots[oi];
            dev = std::max(dev, std::abs((PlanarVector{rr.x, rr.y} - o.position).cross(dir)));
        }
        out.push_back({"noncooperative_straight", dev < 1e-9 ? CheckStatus::Pass : CheckStatus::Fail,
                       "max lateral deviation " + num(dev) + " m"});
    }

    if (regime.kind == Regime::Kind::CoopVsAttacker) {
        const auto [ci, ai] = detail::match_pair_regime(log, regime.kind);
        double worst = kInf;
        std::size_t n = 0;
        double ratio = 0.0;
        for (const auto& rec : log.records) {
            const auto& pr = rec.pairs[0];
            if (!pr.triggered) continue;
            const double k = p.lambda / (pr.vrel * pr.r * pr.r);
            if (pr.vth >= 0.0) {
                worst = std::min(worst, lyapunov(regime, relative_state(pr), p).derivative);
                ++n;
            }
            if (pr.vr < 0.0 && pr.vth < 0.0) ratio = std::max(ratio, std::abs(3.0 * k * pr.vr * pr.vth));
        }
        out.push_back({"attacker_lyapunov_derivative", n == 0 || worst >= -1e-12 ? CheckStatus::Pass : CheckStatus::Fail,
                       "min derivative with Vth >= 0: " + (n ? num(worst) : std::string("n/a"))});

        const double r0 = (s.robots[ci].position - s.robots[ai].position).norm();
        const double bound = attacker_standoff(p.lambda, s.robots[ci].speed);
        const bool meets = r0 >= bound;
        const CheckStatus miss = meets ? CheckStatus::Fail : CheckStatus::Warn;
        out.push_back({"standoff_premise", meets ? CheckStatus::Pass : CheckStatus::Warn,
                       "r0 " + num(r0) + " m vs sqrt(3 lambda V) " + num(bound) + " m"});
        out.push_back({"ratio_bound", ratio < 1.0 ? CheckStatus::Pass : miss, "max |3k Vr Vth| with Vr, Vth < 0: " + num(ratio)});

        bool hit = false;
        double t_hit = 0.0;
        for (const auto& e : log.events) {
            if (e.kind != EventKind::BodyOverlap) continue;
            const std::size_t ri = static_cast<std::size_t>(
                std::lower_bound(log.records.begin(), log.records.end(), e.t, [](const Record& r, double t) { return r.t < t; }) -
                log.records.begin());
            if (ri < log.records.size() && log.records[ri].robots[ci].active) {
                hit = true;
                t_hit = e.t;
                break;
            }
        }
        out.push_back({"no_overlap_while_active", hit ? miss : CheckStatus::Pass,
                       hit ? "overlap at t=" + num(t_hit) + " s while the cooperative robot is active" : "none"});
    }

    if (regime.kind == Regime::Kind::NonVortexPair) {
        const auto& first = log.records.front().pairs[0];
        if (std::abs(first.vth) < 1e-12 && first.vr < 0.0) {
            double mv = 0.0;
            for (const auto& rec : log.records) mv = std::max(mv, std::abs(rec.pairs[0].vth));
            out.push_back(detail::bound_check("no_turning", mv, 1e-9, "max |Vth|"));
            double t_stop = log.records.back().t;
            for (const auto& e : log.events)
                if (e.kind == EventKind::BodyOverlap) {
                    t_stop = e.t;
                    break;
                }
            bool mono = true;
            for (std::size_t n = 1; n < log.records.size() && log.records[n].t <= t_stop; ++n)
                mono &= log.records[n].pairs[0].r < log.records[n - 1].pairs[0].r;
            out.push_back({"closing_until_overlap", mono ? CheckStatus::Pass : CheckStatus::Fail,
                           "separation strictly decreasing up to t=" + num(t_stop) + " s"});
        } else {
            out.push_back({"no_turning", CheckStatus::Skip, "run does not start on a head-on collision course"});
        }
    }

    if (regime.kind == Regime::Kind::MultiRobot) {
        const auto series = multi_lyapunov(log, p);
        double mn = 0.0;
        for (const auto& lr : series) mn = std::min(mn, lr.value);
        out.push_back({"lyapunov_nonnegative", mn >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail, "min value " + num(mn)});

        std::size_t mutual = 0;
        bool common = true;
        for (const auto& rec : log.records) {
            std::vector<char> engaged(rec.robots.size(), 0);
            for (const auto& pr : rec.pairs)
                if (pr.triggered) engaged[log.robot_index(pr.i)] = engaged[log.robot_index(pr.j)] = 1;
            bool all = true;
            int sign = 0;
            bool same = true;
            for (std::size_t k = 0; k < rec.robots.size(); ++k) {
                if (!s.robots[k].behavior.is(Behavior::Kind::Cooperative)) continue;
                if (!engaged[k] || !rec.robots[k].active) {
                    all = false;
                    break;
                }
                const int sg = (rec.robots[k].omega > 0) - (rec.robots[k].omega < 0);
                if (sg == 0) continue;
                if (sign == 0) sign = sg;
                else same &= sg == sign;
            }
            if (!all) continue;
            ++mutual;
            common &= same;
        }
        if (mutual == 0) out.push_back({"common_rotation", CheckStatus::Skip, "no record with every cooperative robot engaged"});
        else out.push_back({"common_rotation", common ? CheckStatus::Pass : CheckStatus::Fail,
                            std::to_string(mutual) + " records with all cooperative robots engaged"});
    }

    std::string why;
    if (closed_loop_applicable(log, regime, &why)) {
        const ClosedLoopReport rep = verify_closed_loop(log, regime, p);
        out.push_back({"closed_loop_oracle", rep.max_rel_error < 1e-3 ? CheckStatus::Pass : CheckStatus::Fail,
                       "max relative error " + num(rep.max_rel_error) + " at t=" + num(rep.t_at_max) + " s over " +
                           std::to_string(rep.compared) + " samples"});
    } else {
        out.push_back({"closed_loop_oracle", CheckStatus::Skip, why});
    }
    return out;
}

inline int cmd_analyze(const fs::path& dir, const std::string& regime_arg, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    try {
        const auto kind = parse_regime(regime_arg);
        if (!kind) throw ConfigError({"unknown regime '" + regime_arg + "'"});
        const TrajectoryLog log = read_run_dir(dir);
        Regime regime{*kind, 0};
        std::vector<LyapunovReport> series;
        if (regime.kind == Regime::Kind::MultiRobot) {
            match_regime(log, regime);
            series = multi_lyapunov(log, log.scenario.params);
        } else {
            series = lyapunov_series(log, regime, log.scenario.params);
        }
        const std::vector<Check> checks = analyze_log(log, regime);

        CsvWriter csv(dir / "lyapunov.csv");
        csv.line("t,value,d_analytic,d_numeric,regime");
        for (const auto& lr : series)
            csv.row({fmt17(lr.t), fmt17(lr.value), fmt17(lr.derivative_analytic), fmt17(lr.derivative_numeric), to_string(lr.regime)});
        csv.close();

        std::string text = "regime " + to_string(regime) + "\n";
        bool ok = true;
        for (const auto& c : checks) {
            text += std::string(to_string(c.status)) + " " + c.name + ": " + c.detail + "\n";
            ok &= c.status != CheckStatus::Fail;
        }
        text += ok ? "result: all checks passed\n" : "result: checks failed\n";
        write_text_file(dir / "verification.txt", text);
        out << text;
        return ok ? kExitOk : kExitError;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
}

// ---- plot data ----

inline int cmd_plotdata(const fs::path& dir, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        const TrajectoryLog log = read_run_dir(dir);
        if (log.records.empty()) throw IoError("trajectory.csv has no records");
        const double t0 = log.records.front().t, t1 = log.records.back().t;
        const double span = t1 > t0 ? t1 - t0 : 1.0;

        CsvWriter xy(dir / "xy_paths.csv");
        xy.line("t,id,x,y,shade");
        CsvWriter vv(dir / "vrvth.csv");
        vv.line("t,i,j,vr_norm,vth_norm,triggered");
        CsvWriter sp(dir / "separation.csv");
        sp.line("t,i,j,r");
        const auto& rs = log.scenario.robots;
        for (const auto& rec : log.records) {
            const std::string t = fmt17(rec.t);
            for (const auto& r : rec.robots) xy.row({t, std::to_string(r.id), fmt17(r.x), fmt17(r.y), fmt17((rec.t - t0) / span)});
            for (const auto& p : rec.pairs) {
                const double V = std::max(rs[log.robot_index(p.i)].speed, rs[log.robot_index(p.j)].speed);
                const double scale = V > 0.0 ? V : 1.0;
                vv.row({t, std::to_string(p.i), std::to_string(p.j), fmt17(p.vr / scale), fmt17(p.vth / scale), p.triggered ? "1" : "0"});
                sp.row({t, std::to_string(p.i), std::to_string(p.j), fmt17(p.r)});
            }
        }
        xy.close();
        vv.close();
        sp.close();
        out << "wrote xy_paths.csv, vrvth.csv, separation.csv to " << dir.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
}

// ---- curl diagnostic ----

inline void write_curl_csv(const std::vector<CurlSample>& samples, const fs::path& path) {
    CsvWriter csv(path);
    csv.line("x_rel,y_rel,Fx,Fy,curl");
    for (const auto& c : samples) csv.row({fmt17(c.x_rel), fmt17(c.y_rel), fmt17(c.Fx), fmt17(c.Fy), fmt17(c.curl)});
    csv.close();
}

inline int cmd_curl(const CurlGrid& grid, const PlanarVector& v_rel, const PFParams& params, const fs::path& out_dir,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        const auto samples = field_curl_diagnostic(grid, v_rel, params);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
        write_curl_csv(samples, out_dir / "curl.csv");
        double mx = 0.0;
        for (const auto& c : samples) mx = std::max(mx, std::abs(c.curl));
        out << samples.size() << " grid points, max |curl| " << num(mx) << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace vortex_ca
