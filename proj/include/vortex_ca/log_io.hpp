#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scenario_io.hpp"

namespace vortex_ca {

namespace fs = std::filesystem;

/// 17 significant digits: text round-trips every double exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kTrajectoryHeader = "t,id,x,y,phi,speed,omega_cmd,phi_des,fx,fy,frep_x,frep_y,active";
inline const char* kPairsHeader = "t,i,j,r,theta,vr,vth,vrel,triggered";
inline const char* kEventsHeader = "t,kind,ids";

class CsvWriter {
  public:
    explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot write " + path.string());
    }
    void line(const std::string& s) { out_ << s << '\n'; }
    void row(std::initializer_list<std::string> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }
    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

  private:
    fs::path path_;
    std::ofstream out_;
};

inline void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::string join_ids(const std::vector<int>& ids) {
    std::string s;
    for (std::size_t k = 0; k < ids.size(); ++k) s += (k ? ";" : "") + std::to_string(ids[k]);
    return s;
}

inline int run_exit_code(const TrajectoryLog& log) {
    if (log.abort_reason) return 1;
    return log.has_overlap() ? 2 : 0;
}

inline ordered_json summary_json(const TrajectoryLog& log) {
    ordered_json j;
    j["scenario"] = log.scenario.name;
    j["exit_code"] = run_exit_code(log);
    j["steps"] = log.steps;
    j["t_end"] = log.records.empty() ? 0.0 : log.records.back().t;
    j["aborted"] = log.abort_reason ? ordered_json(*log.abort_reason) : ordered_json(nullptr);
    ordered_json seps = ordered_json::array();
    const auto& rs = log.scenario.robots;
    for (std::size_t a = 0; a < rs.size(); ++a)
        for (std::size_t b = a + 1; b < rs.size(); ++b) {
            ordered_json e;
            e["i"] = rs[a].id;
            e["j"] = rs[b].id;
            e["min_separation"] = log.records.empty() ? 0.0 : min_separation(log, rs[a].id, rs[b].id);
            e["body_contact"] = rs[a].body_radius + rs[b].body_radius;
            seps.push_back(e);
        }
    j["min_separation"] = seps;
    ordered_json goals = ordered_json::array();
    for (const auto& r : rs) {
        ordered_json g;
        g["id"] = r.id;
        g["t"] = nullptr;
        for (const auto& e : log.events)
            if (e.kind == EventKind::GoalReached && e.ids == std::vector<int>{r.id}) {
                g["t"] = e.t;
                break;
            }
        goals.push_back(g);
    }
    j["goal_times"] = goals;
    j["body_overlap"] = log.has_overlap();
    ordered_json ov = ordered_json::array();
    for (const auto& e : log.events)
        if (e.kind == EventKind::BodyOverlap) ov.push_back({{"t", e.t}, {"i", e.ids.at(0)}, {"j", e.ids.at(1)}});
    j["overlaps"] = ov;
    return j;
}

/// Writes scenario.json, trajectory.csv, pairs.csv, events.csv and summary.json.
inline void write_run_dir(const TrajectoryLog& log, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_text_file(dir / "scenario.json", write_scenario(log.scenario));

    CsvWriter tr(dir / "trajectory.csv");
    tr.line(kTrajectoryHeader);
    CsvWriter pr(dir / "pairs.csv");
    pr.line(kPairsHeader);
    for (const auto& rec : log.records) {
        const std::string t = fmt17(rec.t);
        for (const auto& r : rec.robots)
            tr.row({t, std::to_string(r.id), fmt17(r.x), fmt17(r.y), fmt17(r.phi), fmt17(r.speed), fmt17(r.omega),
                    fmt17(r.phi_des), fmt17(r.fx), fmt17(r.fy), fmt17(r.frep_x), fmt17(r.frep_y), r.active ? "1" : "0"});
        for (const auto& p : rec.pairs)
            pr.row({t, std::to_string(p.i), std::to_string(p.j), fmt17(p.r), fmt17(p.theta), fmt17(p.vr), fmt17(p.vth),
                    fmt17(p.vrel), p.triggered ? "1" : "0"});
    }
    tr.close();
    pr.close();

    CsvWriter ev(dir / "events.csv");
    ev.line(kEventsHeader);
    for (const auto& e : log.events) ev.row({fmt17(e.t), to_string(e.kind), join_ids(e.ids)});
    ev.close();

    write_text_file(dir / "summary.json", summary_json(log).dump(2) + "\n");
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = line.find(sep, start);
        out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

inline double to_double(std::string_view s, const std::string& where) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        // from_chars rejects "inf"/"nan" spellings produced by printf on some platforms
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
        throw IoError(where + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

inline int to_int(std::string_view s, const std::string& where) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError(where + ": bad integer '" + std::string(s) + "'");
    return v;
}

struct CsvTable {
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const fs::path& path, const std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header) throw IoError(path.string() + ": unexpected header");
    CsvTable t;
    const std::size_t ncol = split(header).size();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != ncol) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncol) + " columns");
        std::vector<std::string> row(cells.begin(), cells.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace detail

/// Rebuild a TrajectoryLog from a run directory.
inline TrajectoryLog read_run_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    TrajectoryLog log;
    log.scenario = prepare(load_scenario((dir / "scenario.json").string()));
    const std::size_t nr = log.scenario.robots.size();
    const std::size_t np = nr * (nr - 1) / 2;

    const auto tr = detail::read_csv(dir / "trajectory.csv", kTrajectoryHeader);
    const auto pr = detail::read_csv(dir / "pairs.csv", kPairsHeader);
    if (tr.rows.size() % nr != 0) throw IoError("trajectory.csv: row count is not a multiple of the robot count");
    const std::size_t nrec = tr.rows.size() / nr;
    if (pr.rows.size() != nrec * np) throw IoError("pairs.csv: row count does not match trajectory.csv");

    const std::string tw = (dir / "trajectory.csv").string();
    const std::string pw = (dir / "pairs.csv").string();
    for (std::size_t n = 0; n < nrec; ++n) {
        Record rec;
        for (std::size_t k = 0; k < nr; ++k) {
            const auto& c = tr.rows[n * nr + k];
            RobotRecord r;
            rec.t = detail::to_double(c[0], tw);
            r.id = detail::to_int(c[1], tw);
            double* f[] = {&r.x, &r.y, &r.phi, &r.speed, &r.omega, &r.phi_des, &r.fx, &r.fy, &r.frep_x, &r.frep_y};
            for (std::size_t m = 0; m < 10; ++m) *f[m] = detail::to_double(c[2 + m], tw);
            r.active = c[12] == "1";
            if (r.id != log.scenario.robots[k].id) throw IoError(tw + ": robot rows out of order");
            rec.robots.push_back(r);
        }
        for (std::size_t k = 0; k < np; ++k) {
            const auto& c = pr.rows[n * np + k];
            PairRecord p;
            p.i = detail::to_int(c[1], pw);
            p.j = detail::to_int(c[2], pw);
            double* f[] = {&p.r, &p.theta, &p.vr, &p.vth, &p.vrel};
            for (std::size_t m = 0; m < 5; ++m) *f[m] = detail::to_double(c[3 + m], pw);
            p.triggered = c[8] == "1";
            rec.pairs.push_back(p);
        }
        log.records.push_back(std::move(rec));
    }

    const auto ev = detail::read_csv(dir / "events.csv", kEventsHeader);
    for (const auto& c : ev.rows) {
        Event e;
        e.t = detail::to_double(c[0], "events.csv");
        if (c[1] == "GoalReached") e.kind = EventKind::GoalReached;
        else if (c[1] == "BodyOverlap") e.kind = EventKind::BodyOverlap;
        else if (c[1] == "Stopped") e.kind = EventKind::Stopped;
        else throw IoError("events.csv: unknown event kind " + c[1]);
        for (auto id : detail::split(c[2], ';')) e.ids.push_back(detail::to_int(id, "events.csv"));
        log.events.push_back(e);
    }
    log.steps = static_cast<long>(nrec);
    if (fs::exists(dir / "summary.json")) {
        const json s = parse_json_text(read_text_file((dir / "summary.json").string()), "summary.json");
        if (s.contains("steps") && s["steps"].is_number_integer()) log.steps = s["steps"].get<long>();
        if (s.contains("aborted") && s["aborted"].is_string()) log.abort_reason = s["aborted"].get<std::string>();
    }
    return log;
}

}  // namespace vortex_ca
