// Experiment harness around the simulator library: baseline and MAC sweeps,
// CoAP transaction grids, trace export, frequency optimization, and the
// verification battery. Every subcommand writes its CSV and a JSON report
// into --out and echoes one of them on stdout, selected by --format.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "dvfsim/errors.hpp"
#include "dvfsim/experiments.hpp"
#include "dvfsim/freq_opt.hpp"
#include "dvfsim/self_test.hpp"
#include "dvfsim/sim_core.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dvfsim;

namespace {

struct GlobalOpts {
    CalibrationProfile profile;
    std::string out_dir = ".";
    std::string format = "csv";
    std::string levels;  // empty: per-command default
    std::optional<std::uint64_t> seed;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw IoError("cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out.good()) throw IoError("cannot write " + path.string());
}

std::string num(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::vector<ClockConfig> resolve_levels(const GlobalOpts& g, const std::string& fallback) {
    const std::string& list = g.levels.empty() ? fallback : g.levels;
    if (list == "all") return all_levels(g.profile);
    return parse_levels(g.profile, list);
}

// Reference cell of a sweep group: 80 MHz when present, otherwise the
// highest frequency, pll before direct at equal frequency.
std::size_t reference_index(const std::vector<std::size_t>& group,
                            const std::vector<RunReport>& runs) {
    std::size_t best = group.front();
    for (const std::size_t i : group) {
        const auto& a = runs[i].level;
        const auto& b = runs[best].level;
        if (a.core_mhz > b.core_mhz ||
            (a.core_mhz == b.core_mhz && a.source == ClockSource::Pll &&
             b.source == ClockSource::Pll)) {
            best = i;
        } else if (a.core_mhz == b.core_mhz && a.source == ClockSource::Pll &&
                   b.source == ClockSource::RcDirect) {
            best = i;
        }
    }
    return best;
}

json report_json(const RunReport& r) {
    json j{{"scenario", r.scenario_name},
           {"level", level_name(r.level)},
           {"mac", to_string(r.mac)},
           {"duration_s", static_cast<double>(r.duration) * 1e-9},
           {"mcu_j", r.total.mcu_j},
           {"radio_j", r.total.radio_j},
           {"total_j", r.total.total_j},
           {"edp_js", r.total.edp_js},
           {"average_current_ma", r.average_current_ma},
           {"radio_on_s", static_cast<double>(r.radio_on) * 1e-9},
           {"cache_hits", r.cache_hits},
           {"cache_misses", r.cache_misses},
           {"deadline_misses", r.deadline_misses.size()}};
    if (r.burst > 0) {
        j["burst"] = r.burst;
        j["payload_bytes"] = r.payload_bytes;
        j["method"] = r.method == CoapMethod::Get ? "get" : "post";
        j["secure"] = r.secure;
        j["tburst_s"] = static_cast<double>(r.burst_duration()) * 1e-9;
    }
    if (!r.per_request.empty()) {
        json pr = json::array();
        for (const auto& e : r.per_request) pr.push_back(e.total_j);
        j["per_request_j"] = pr;  // poll service windows when no app burst runs
    }
    if (!r.task_windows.empty()) {
        json tw = json::array();
        for (const auto& w : r.task_windows) {
            tw.push_back({{"label", w.label},
                          {"begin_s", static_cast<double>(w.begin) * 1e-9},
                          {"end_s", static_cast<double>(w.end) * 1e-9},
                          {"energy_j", w.energy.total_j}});
        }
        j["task_windows"] = tw;
    }
    return j;
}

void emit(const GlobalOpts& g, const std::string& csv, const json& report) {
    std::fputs(g.format == "json" ? (report.dump(2) + "\n").c_str() : csv.c_str(), stdout);
}

// baseline: idle platform grid. Sweeps the radio idle policy (off vs
// listening) against clock gating (deep sleep vs free running) over the
// level list, relative currents normalized inside each (radio, gating) pair.
int cmd_baseline(const GlobalOpts& g) {
    const auto levels = resolve_levels(g, "all");
    struct Meta {
        bool radio;
        bool gated;
    };
    std::vector<Scenario> cells;
    std::vector<Meta> meta;
    for (const bool radio : {false, true}) {
        for (const bool gated : {true, false}) {
            for (const auto& level : levels) {
                Scenario s = preset_scenario("sleep-baseline", g.profile);
                s.radio_listen_idle = radio;
                s.lpm = gated;
                if (g.seed) s.seed = *g.seed;
                apply_level(s, level);
                s.name = std::string("baseline-") + (radio ? "listen" : "radio_off") +
                         (gated ? "-sleep-" : "-nosleep-") + level_name(level);
                cells.push_back(s);
                meta.push_back({radio, gated});
            }
        }
    }
    const auto runs = run_cells(cells);

    std::map<std::pair<bool, bool>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        groups[{meta[i].radio, meta[i].gated}].push_back(i);
    }

    std::string csv =
        "radio_idle,clock_gating,level,mhz,source,avg_current_ma,mcu_mj,radio_mj,total_mj,"
        "rel_current\n";
    json rows = json::array();
    for (const auto& [key, idx] : groups) {
        const std::size_t ref = reference_index(idx, runs);
        for (const std::size_t i : idx) {
            const auto& r = runs[i];
            const double rel = r.average_current_ma / runs[ref].average_current_ma;
            csv += std::string(key.first ? "listen" : "off") + "," +
                   (key.second ? "sleep" : "none") + "," + level_name(r.level) + "," +
                   num(r.level.core_mhz, 0) + "," + to_string(r.level.source) + "," +
                   num(r.average_current_ma) + "," + num(r.total.mcu_j * 1e3) + "," +
                   num(r.total.radio_j * 1e3) + "," + num(r.total.total_j * 1e3) + "," +
                   num(rel, 4) + "\n";
            json row = report_json(r);
            row["radio_idle"] = key.first;
            row["clock_gating"] = key.second;
            row["rel_current"] = rel;
            rows.push_back(row);
        }
    }
    const json report{{"experiment", "baseline"}, {"rows", rows}};
    write_file(fs::path(g.out_dir) / "baseline.csv", csv);
    write_file(fs::path(g.out_dir) / "baseline_report.json", report.dump(2) + "\n");
    emit(g, csv, report);
    return 0;
}

// dsme: idle superframe cost against GTS allocation count and direction.
int cmd_dsme(const GlobalOpts& g, const std::string& gts_list, const std::string& direction) {
    const auto levels = resolve_levels(g, "24,32,48,80");
    std::vector<int> counts;
    {
        std::istringstream in(gts_list);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            if (tok.empty()) continue;
            const int n = std::atoi(tok.c_str());
            if (n < 0 || n > 7 || (n == 0 && tok != "0")) {
                throw ConfigError("dsme: gts count list entries must be integers in [0, 7]");
            }
            counts.push_back(n);
        }
        if (counts.empty()) throw ConfigError("dsme: empty gts count list");
    }
    std::vector<GtsDirection> dirs;
    if (direction == "up") {
        dirs = {GtsDirection::Uplink};
    } else if (direction == "down") {
        dirs = {GtsDirection::Downlink};
    } else if (direction == "both") {
        dirs = {GtsDirection::Uplink, GtsDirection::Downlink};
    } else {
        throw ConfigError("dsme: direction must be up, down, or both");
    }

    struct Meta {
        int count;
        std::string dir;
    };
    std::vector<Scenario> cells;
    std::vector<Meta> meta;
    for (const int count : counts) {
        const auto mk = [&](GtsDirection d, const std::string& tag) {
            for (const auto& level : levels) {
                Scenario s = preset_scenario("dsme-idle", g.profile);
                for (int k = 0; k < count; ++k) {
                    s.dsme.gts.push_back({d, k / 7, 9 + k % 7, 0});
                }
                if (g.seed) s.seed = *g.seed;
                apply_level(s, level);
                s.name = "dsme-gts" + std::to_string(count) + "-" + tag + "-" +
                         level_name(level);
                cells.push_back(s);
                meta.push_back({count, tag});
            }
        };
        if (count == 0) {
            mk(GtsDirection::Uplink, "none");  // no slots allocated either way
        } else {
            for (const GtsDirection d : dirs) {
                mk(d, d == GtsDirection::Uplink ? "up" : "down");
            }
        }
    }
    const auto runs = run_cells(cells);

    std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        groups[{meta[i].count, meta[i].dir}].push_back(i);
    }

    std::string abs_csv =
        "gts,direction,level,mhz,source,radio_on_ms,avg_current_ma,total_mj,deadline_misses\n";
    std::string rel_csv = "gts,direction,level,rel_current\n";
    json rows = json::array();
    for (const auto& [key, idx] : groups) {
        const std::size_t ref = reference_index(idx, runs);
        for (const std::size_t i : idx) {
            const auto& r = runs[i];
            const double rel = r.average_current_ma / runs[ref].average_current_ma;
            const std::string head =
                std::to_string(key.first) + "," + key.second + "," + level_name(r.level);
            abs_csv += head + "," + num(r.level.core_mhz, 0) + "," +
                       to_string(r.level.source) + "," +
                       num(static_cast<double>(r.radio_on) * 1e-6, 3) + "," +
                       num(r.average_current_ma) + "," + num(r.total.total_j * 1e3) + "," +
                       std::to_string(r.deadline_misses.size()) + "\n";
            rel_csv += head + "," + num(rel, 4) + "\n";
            json row = report_json(r);
            row["gts"] = key.first;
            row["direction"] = key.second;
            row["rel_current"] = rel;
            rows.push_back(row);
        }
    }
    const json report{{"experiment", "dsme"}, {"rows", rows}};
    write_file(fs::path(g.out_dir) / "dsme_abs.csv", abs_csv);
    write_file(fs::path(g.out_dir) / "dsme_rel.csv", rel_csv);
    write_file(fs::path(g.out_dir) / "dsme_report.json", report.dump(2) + "\n");
    emit(g, rel_csv, report);
    return 0;
}

// coap: per-request transaction energy over MAC x method x payload x
// security, plus burst completion timing per group.
int cmd_coap(const GlobalOpts& g, const std::string& mac_name, const std::string& method_name,
             const std::string& payload_list, int secure_mode, int burst, int repeat) {
    const auto levels = resolve_levels(g, "24,80");
    MacMode mac;
    if (mac_name == "idtx") {
        mac = MacMode::Idtx;
    } else if (mac_name == "dsme") {
        mac = MacMode::Dsme;
    } else if (mac_name == "always") {
        mac = MacMode::AlwaysOn;
    } else {
        throw ConfigError("coap: mac must be idtx, dsme, or always");
    }
    std::vector<CoapMethod> methods;
    if (method_name == "both") {
        methods = {CoapMethod::Get, CoapMethod::Post};
    } else {
        methods = {coap_method_from_string(method_name)};
    }
    std::vector<bool> secs = secure_mode == 0   ? std::vector<bool>{false}
                             : secure_mode == 1 ? std::vector<bool>{true}
                                                : std::vector<bool>{false, true};
    std::vector<int> payloads;
    {
        std::istringstream in(payload_list);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            if (!tok.empty()) payloads.push_back(std::atoi(tok.c_str()));
        }
        if (payloads.empty()) throw ConfigError("coap: empty payload list");
    }
    if (burst < 1) throw ConfigError("coap: burst must be at least 1");
    if (repeat < 1) throw ConfigError("coap: repeat must be at least 1");

    struct Key {
        int method;
        int payload;
        bool secure;
        bool operator<(const Key& o) const {
            return std::tie(method, payload, secure) < std::tie(o.method, o.payload, o.secure);
        }
    };
    struct Meta {
        Key key;
        std::size_t level_idx;
        int rep;
    };
    std::vector<Scenario> cells;
    std::vector<Meta> meta;
    for (const CoapMethod m : methods) {
        for (const int payload : payloads) {
            for (const bool sec : secs) {
                for (std::size_t li = 0; li < levels.size(); ++li) {
                    for (int rep = 0; rep < repeat; ++rep) {
                        Scenario s =
                            preset_scenario(mac == MacMode::Dsme ? "coap-dsme" : "coap-idtx",
                                            g.profile);
                        s.mac = mac;
                        s.app.method = m;
                        s.app.payload_bytes = payload;
                        s.app.secure = sec;
                        s.app.burst = burst;
                        if (mac != MacMode::Dsme) {
                            const auto plan =
                                plan_coap_exchange(m, payload, sec, s.app.overheads);
                            s.duration = burst * plan.blocks * s.idtx.poll_interval +
                                         seconds(2);
                        }
                        s.seed = (g.seed ? *g.seed : s.seed) + static_cast<std::uint64_t>(rep);
                        apply_level(s, levels[li]);
                        s.name = "coap-" + mac_name + "-" +
                                 (m == CoapMethod::Get ? "get" : "post") + "-" +
                                 std::to_string(payload) + (sec ? "b-coaps-" : "b-plain-") +
                                 level_name(levels[li]);
                        cells.push_back(s);
                        meta.push_back({{m == CoapMethod::Get ? 0 : 1, payload, sec}, li, rep});
                    }
                }
            }
        }
    }
    const auto runs = run_cells(cells);

    // Seed-averaged metrics per (group, level); repeat 0 carries the shape.
    struct CellStat {
        double request_j = 0.0;
        double total_j = 0.0;
        double current_ma = 0.0;
        double tburst_s = 0.0;
        std::size_t first_run = 0;
    };
    std::map<Key, std::map<std::size_t, CellStat>> grid;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        auto& stat = grid[meta[i].key][meta[i].level_idx];
        const auto& r = runs[i];
        double req = 0.0;
        for (const auto& e : r.per_request) req += e.total_j;
        if (!r.per_request.empty()) req /= static_cast<double>(r.per_request.size());
        stat.request_j += req / repeat;
        stat.total_j += r.total.total_j / repeat;
        stat.current_ma += r.average_current_ma / repeat;
        stat.tburst_s += static_cast<double>(r.burst_duration()) * 1e-9 / repeat;
        if (meta[i].rep == 0) stat.first_run = i;
    }

    std::string csv =
        "mac,method,payload,secure,level,mhz,source,mean_request_uj,tburst_ms,total_mj,"
        "rel_request\n";
    json rows = json::array();
    json timing = json::array();
    for (auto& [key, by_level] : grid) {
        std::vector<std::size_t> idx;
        std::vector<RunReport> group_runs;
        for (const auto& [li, stat] : by_level) {
            idx.push_back(stat.first_run);
            group_runs.push_back(runs[stat.first_run]);
        }
        const std::size_t ref_run = reference_index(idx, runs);
        const auto& ref_level = runs[ref_run].level;
        double ref_request = 0.0;
        for (const auto& [li, stat] : by_level) {
            if (levels[li] == ref_level) ref_request = stat.request_j;
        }
        const std::string method_str = key.method == 0 ? "get" : "post";
        for (const auto& [li, stat] : by_level) {
            const auto& r = runs[stat.first_run];
            const double rel = ref_request > 0.0 ? stat.request_j / ref_request : 1.0;
            csv += mac_name + "," + method_str + "," + std::to_string(key.payload) + "," +
                   (key.secure ? "coaps" : "plain") + "," + level_name(r.level) + "," +
                   num(r.level.core_mhz, 0) + "," + to_string(r.level.source) + "," +
                   num(stat.request_j * 1e6, 4) + "," + num(stat.tburst_s * 1e3, 3) + "," +
                   num(stat.total_j * 1e3) + "," + num(rel, 4) + "\n";
            json row = report_json(r);
            row["mean_request_uj"] = stat.request_j * 1e6;
            row["rel_request"] = rel;
            rows.push_back(row);
        }
        const BurstTiming t = burst_report(group_runs);
        timing.push_back({{"mac", mac_name},
                          {"method", method_str},
                          {"payload", key.payload},
                          {"secure", key.secure},
                          {"tburst_min_ms", t.tburst_min_s * 1e3},
                          {"max_delta_ms", t.max_delta_s * 1e3}});
    }
    const json report{{"experiment", "coap"}, {"rows", rows}, {"burst_timing", timing}};
    write_file(fs::path(g.out_dir) / "coap.csv", csv);
    write_file(fs::path(g.out_dir) / "coap_report.json", report.dump(2) + "\n");
    emit(g, csv, report);
    return 0;
}

// trace: one scenario, full interval export.
int cmd_trace(const GlobalOpts& g, const std::string& preset, const std::string& scenario_path) {
    Scenario s = scenario_path.empty()
                     ? preset_scenario(preset, g.profile)
                     : scenario_from_json(read_file(scenario_path), g.profile);
    if (!g.levels.empty()) {
        const auto levels = parse_levels(g.profile, g.levels);
        if (levels.size() != 1) throw ConfigError("trace: exactly one level");
        apply_level(s, levels.front());
    }
    if (g.seed) s.seed = *g.seed;
    const auto r = run_scenario(s);
    const std::string csv = trace_to_csv(r.trace);
    const json report = report_json(r.report);
    write_file(fs::path(g.out_dir) / ("trace_" + s.name + ".csv"), csv);
    write_file(fs::path(g.out_dir) / ("trace_" + s.name + "_report.json"),
               report.dump(2) + "\n");
    emit(g, csv, report);
    return 0;
}

// optimize: operating point sweep for one task profile.
int cmd_optimize(const GlobalOpts& g, const std::string& builtin, const std::string& task_path) {
    TaskProfile task;
    if (!task_path.empty()) {
        task = task_profile_from_json(read_file(task_path));
    } else if (builtin == "fft") {
        task = fft_task_profile();
    } else if (builtin == "poll") {
        task = idtx_request_profile(preset_scenario("poll-loop", g.profile).idtx, 0);
    } else {
        throw ConfigError("optimize: builtin task must be fft or poll");
    }
    const auto levels = resolve_levels(g, "all");
    const auto rows = sweep(task, levels, g.profile);
    const std::string csv = sweep_to_csv(rows);

    json choice;
    for (const Metric m : {Metric::Energy, Metric::Edp, Metric::Time}) {
        const auto best = select_optimal(rows, m);
        choice[to_string(m)] = level_name(best);
    }
    json jrows = json::array();
    for (const auto& r : rows) {
        jrows.push_back({{"level", level_name(r.config)},
                         {"time_s", r.time_s},
                         {"energy_j", r.energy_j},
                         {"edp_js", r.edp_js},
                         {"energy_rel", r.energy_rel},
                         {"edp_rel", r.edp_rel},
                         {"time_rel", r.time_rel}});
    }
    const json report{
        {"experiment", "optimize"}, {"task", task.label}, {"best", choice}, {"rows", jrows}};
    write_file(fs::path(g.out_dir) / ("optimize_" + task.label + ".csv"), csv);
    write_file(fs::path(g.out_dir) / ("optimize_" + task.label + "_report.json"),
               report.dump(2) + "\n");
    emit(g, csv, report);
    return 0;
}

int cmd_selftest(const GlobalOpts& g) {
    const auto results = run_self_test(g.profile);
    std::string csv = "id,name,pass,detail\n";
    for (const auto& c : results) {
        std::printf("[%s] %2d %-26s %s\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    c.detail.c_str());
        csv += std::to_string(c.id) + "," + c.name + "," + (c.pass ? "1" : "0") + ",\"" +
               c.detail + "\"\n";
    }
    write_file(fs::path(g.out_dir) / "selftest.csv", csv);
    write_file(fs::path(g.out_dir) / "selftest.json", self_test_to_json(results));
    const bool ok = all_passed(results);
    std::printf("%s\n", ok ? "all checks passed" : "checks failed");
    return ok ? 0 : 3;
}

int cmd_presets(const GlobalOpts& g, bool dump) {
    for (const auto& name : preset_names()) {
        std::printf("%s\n", name.c_str());
        if (dump) {
            write_file(fs::path(g.out_dir) / "presets" / (name + ".json"),
                       scenario_to_json(preset_scenario(name, g.profile)));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dvfsim experiment harness"};
    app.require_subcommand(1);

    GlobalOpts g;
    std::string profile_path;
    app.add_option("--profile", profile_path, "calibration profile JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--out", g.out_dir, "output directory (default .)");
    app.add_option("--format", g.format, "stdout echo format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--levels", g.levels,
                   "comma separated operating points, e.g. 8rc,24,80 (or: all)");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override the scenario seed");

    auto* baseline = app.add_subcommand("baseline", "idle platform sweep");

    auto* dsme = app.add_subcommand("dsme", "idle superframe sweep over GTS allocations");
    std::string gts_list = "0,1,2,3,5,7";
    std::string direction = "both";
    dsme->add_option("--gts", gts_list, "GTS counts, comma separated (0..7)");
    dsme->add_option("--direction", direction, "up, down, or both")
        ->check(CLI::IsMember({"up", "down", "both"}));

    auto* coap = app.add_subcommand("coap", "transaction energy grid");
    std::string mac_name = "idtx";
    std::string method_name = "both";
    std::string payload_list = "1,16,64,128,256";
    int burst = 4;
    int repeat = 1;
    coap->add_option("--mac", mac_name, "idtx, dsme, or always")
        ->check(CLI::IsMember({"idtx", "dsme", "always"}));
    coap->add_option("--method", method_name, "get, post, or both")
        ->check(CLI::IsMember({"get", "post", "both"}));
    coap->add_option("--payload", payload_list, "payload bytes, comma separated");
    bool flag_secure = false;
    bool flag_plain = false;
    coap->add_flag("--secure", flag_secure, "DTLS only");
    coap->add_flag("--plain", flag_plain, "plain CoAP only");
    coap->add_option("--burst", burst, "requests per run");
    coap->add_option("--repeat", repeat, "seed sweep width");

    auto* trace = app.add_subcommand("trace", "run one scenario and export its trace");
    std::string preset = "two-task-trace";
    std::string scenario_path;
    trace->add_option("--preset", preset, "preset name");
    trace->add_option("--scenario", scenario_path, "scenario JSON path")
        ->check(CLI::ExistingFile);

    auto* optimize = app.add_subcommand("optimize", "operating point sweep for a task");
    std::string builtin = "fft";
    std::string task_path;
    optimize->add_option("--builtin", builtin, "fft or poll")
        ->check(CLI::IsMember({"fft", "poll"}));
    optimize->add_option("--task", task_path, "task profile JSON path")
        ->check(CLI::ExistingFile);

    auto* selftest = app.add_subcommand("selftest", "verification battery");
    auto* presets = app.add_subcommand("presets", "list shipped scenario presets");
    bool dump = false;
    presets->add_flag("--dump", dump, "write preset JSONs under <out>/presets/");

    for (auto* sub : {baseline, dsme, coap, trace, optimize, selftest, presets}) {
        sub->fallthrough();  // global flags may follow the subcommand
    }

    try {
        app.parse(argc, argv);
        if (!profile_path.empty()) g.profile = profile_from_json(read_file(profile_path));
        if (seed_opt->count() > 0) g.seed = seed_val;

        if (baseline->parsed()) return cmd_baseline(g);
        if (dsme->parsed()) return cmd_dsme(g, gts_list, direction);
        if (coap->parsed()) {
            const int secure_mode = flag_secure && !flag_plain ? 1
                                    : flag_plain && !flag_secure ? 0
                                                                 : 2;
            return cmd_coap(g, mac_name, method_name, payload_list, secure_mode, burst,
                            repeat);
        }
        if (trace->parsed()) return cmd_trace(g, preset, scenario_path);
        if (optimize->parsed()) return cmd_optimize(g, builtin, task_path);
        if (selftest->parsed()) return cmd_selftest(g);
        if (presets->parsed()) return cmd_presets(g, dump);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
