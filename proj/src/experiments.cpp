#include "dvfsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <thread>

#include "dvfsim/errors.hpp"
#include "json.hpp"

namespace dvfsim {

namespace {

using nlohmann::json;

Nanos nanos_from_seconds(double s) { return static_cast<Nanos>(std::llround(s * 1e9)); }

// Reads a duration stored either as "<key>_s" (seconds) or "<key>_ns".
void read_duration(const json& j, const std::string& key, Nanos& out) {
    if (j.contains(key + "_ns")) {
        out = j.at(key + "_ns").get<Nanos>();
    } else if (j.contains(key + "_s")) {
        out = nanos_from_seconds(j.at(key + "_s").get<double>());
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json level_to_json(const ClockConfig& c) {
    return json{{"mhz", c.core_mhz}, {"source", to_string(c.source)}};
}

ClockConfig level_from_json(const CalibrationProfile& p, const json& j) {
    const double mhz = j.at("mhz").get<double>();
    const std::string src = j.value("source", "pll");
    if (src == "rc") return make_level(p, mhz, ClockSource::RcDirect);
    if (src == "pll") return make_level(p, mhz, ClockSource::Pll);
    throw ConfigError("unknown clock source: " + src);
}

json overheads_to_json(const StackOverheads& o) {
    return json{{"mac_header_bytes", o.mac_header_bytes},
                {"sixlowpan_iphc_udp_bytes", o.sixlowpan_iphc_udp_bytes},
                {"sixlowpan_frag1_bytes", o.sixlowpan_frag1_bytes},
                {"sixlowpan_fragn_bytes", o.sixlowpan_fragn_bytes},
                {"coap_base_bytes", o.coap_base_bytes},
                {"coap_block_option_bytes", o.coap_block_option_bytes},
                {"dtls_record_bytes", o.dtls_record_bytes},
                {"dtls_cycles_per_byte", o.dtls_cycles_per_byte},
                {"dtls_cycles_per_record", o.dtls_cycles_per_record},
                {"block_size_bytes", o.block_size_bytes}};
}

void overheads_from_json(const json& j, StackOverheads& o) {
    read(j, "mac_header_bytes", o.mac_header_bytes);
    read(j, "sixlowpan_iphc_udp_bytes", o.sixlowpan_iphc_udp_bytes);
    read(j, "sixlowpan_frag1_bytes", o.sixlowpan_frag1_bytes);
    read(j, "sixlowpan_fragn_bytes", o.sixlowpan_fragn_bytes);
    read(j, "coap_base_bytes", o.coap_base_bytes);
    read(j, "coap_block_option_bytes", o.coap_block_option_bytes);
    read(j, "dtls_record_bytes", o.dtls_record_bytes);
    read(j, "dtls_cycles_per_byte", o.dtls_cycles_per_byte);
    read(j, "dtls_cycles_per_record", o.dtls_cycles_per_record);
    read(j, "block_size_bytes", o.block_size_bytes);
}

std::string lower(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["mac"] = to_string(s.mac);
    const ClockConfig level = [&] {
        auto it = s.policy.task_targets.find("mac");
        if (it == s.policy.task_targets.end()) it = s.policy.task_targets.find("timer");
        return it != s.policy.task_targets.end() ? it->second : s.policy.default_config;
    }();
    j["level"] = level_to_json(level);
    json task_levels = json::object();
    for (const auto& [task, target] : s.policy.task_targets) {
        if (target != level) task_levels[task] = level_to_json(target);
    }
    if (!task_levels.empty()) j["task_levels"] = task_levels;
    j["lpm"] = s.lpm;
    j["radio_listen_idle"] = s.radio_listen_idle;
    j["warmup_s"] = to_seconds(s.warmup);
    j["duration_s"] = to_seconds(s.duration);
    j["seed"] = s.seed;

    j["timer"] = {{"period_s", to_seconds(s.timer.period)},
                  {"wakeup_cycles", s.timer.wakeup_cycles}};

    j["app"] = {{"method", lower(to_string(s.app.method))},
                {"payload_bytes", s.app.payload_bytes},
                {"secure", s.app.secure},
                {"burst", s.app.burst},
                {"first_issue_offset_s", to_seconds(s.app.first_issue_offset)},
                {"encode_cycles", s.app.encode_cycles},
                {"decode_cycles", s.app.decode_cycles},
                {"inline_response_latency_s", to_seconds(s.app.inline_response_latency)},
                {"overheads", overheads_to_json(s.app.overheads)}};

    j["idtx"] = {{"poll_interval_s", to_seconds(s.idtx.poll_interval)},
                 {"poll_cmd_psdu_bytes", s.idtx.poll_cmd_psdu_bytes},
                 {"ack_psdu_bytes", s.idtx.ack_psdu_bytes},
                 {"data_gap_s", to_seconds(s.idtx.data_gap)},
                 {"poll_handler_cycles", s.idtx.poll_handler_cycles},
                 {"response_margin_s", to_seconds(s.idtx.response_margin)},
                 {"response_preprocess_cycles", s.idtx.response_preprocess_cycles}};

    json gts = json::array();
    for (const auto& g : s.dsme.gts) {
        gts.push_back({{"direction", g.direction == GtsDirection::Uplink ? "up" : "down"},
                       {"superframe", g.superframe_index},
                       {"slot", g.slot_index},
                       {"channel", g.channel}});
    }
    j["dsme"] = {{"so", s.dsme.so},
                 {"mo", s.dsme.mo},
                 {"bo", s.dsme.bo},
                 {"cap_reduction", s.dsme.cap_reduction},
                 {"gts", gts},
                 {"guard_s", to_seconds(s.dsme.guard)},
                 {"wake_margin_s", to_seconds(s.dsme.wake_margin)},
                 {"gts_margin_s", to_seconds(s.dsme.gts_margin)},
                 {"preprocessing_cycles", s.dsme.preprocessing_cycles},
                 {"beacon_psdu_bytes", s.dsme.beacon_psdu_bytes}};

    json tasks = json::array();
    for (const auto& t : s.tasks) tasks.push_back({{"task", t.task_id}, {"cycles", t.cycles}});
    j["tasks"] = tasks;

    return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text, const CalibrationProfile& default_profile) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario json: ") + e.what());
    }
    try {
        Scenario s;
        s.profile = default_profile;
        if (j.contains("profile")) {
            s.profile = profile_from_json(j.at("profile").dump());
        }
        read(j, "name", s.name);
        if (j.contains("mac")) s.mac = mac_mode_from_string(j.at("mac").get<std::string>());

        ClockConfig level = make_level(s.profile, s.profile.core_levels_mhz.back(),
                                       ClockSource::Pll);
        if (j.contains("level")) level = level_from_json(s.profile, j.at("level"));
        s.policy = uniform_policy(s.profile, level);
        if (j.contains("task_levels")) {
            for (const auto& [task, tl] : j.at("task_levels").items()) {
                s.policy.task_targets[task] = level_from_json(s.profile, tl);
            }
        }

        read(j, "lpm", s.lpm);
        read(j, "radio_listen_idle", s.radio_listen_idle);
        read_duration(j, "warmup", s.warmup);
        read_duration(j, "duration", s.duration);
        read(j, "seed", s.seed);

        if (j.contains("timer")) {
            const json& t = j.at("timer");
            read_duration(t, "period", s.timer.period);
            read(t, "wakeup_cycles", s.timer.wakeup_cycles);
        }
        if (j.contains("app")) {
            const json& a = j.at("app");
            if (a.contains("method")) {
                s.app.method = coap_method_from_string(a.at("method").get<std::string>());
            }
            read(a, "payload_bytes", s.app.payload_bytes);
            read(a, "secure", s.app.secure);
            read(a, "burst", s.app.burst);
            read_duration(a, "first_issue_offset", s.app.first_issue_offset);
            read(a, "encode_cycles", s.app.encode_cycles);
            read(a, "decode_cycles", s.app.decode_cycles);
            read_duration(a, "inline_response_latency", s.app.inline_response_latency);
            if (a.contains("overheads")) overheads_from_json(a.at("overheads"), s.app.overheads);
        }
        if (j.contains("idtx")) {
            const json& c = j.at("idtx");
            read_duration(c, "poll_interval", s.idtx.poll_interval);
            read(c, "poll_cmd_psdu_bytes", s.idtx.poll_cmd_psdu_bytes);
            read(c, "ack_psdu_bytes", s.idtx.ack_psdu_bytes);
            read_duration(c, "data_gap", s.idtx.data_gap);
            read(c, "poll_handler_cycles", s.idtx.poll_handler_cycles);
            read_duration(c, "response_margin", s.idtx.response_margin);
            read(c, "response_preprocess_cycles", s.idtx.response_preprocess_cycles);
        }
        if (j.contains("dsme")) {
            const json& c = j.at("dsme");
            read(c, "so", s.dsme.so);
            read(c, "mo", s.dsme.mo);
            read(c, "bo", s.dsme.bo);
            read(c, "cap_reduction", s.dsme.cap_reduction);
            if (c.contains("gts")) {
                s.dsme.gts.clear();
                for (const auto& g : c.at("gts")) {
                    GtsSlot slot;
                    const std::string dir = g.value("direction", "up");
                    if (dir == "up") {
                        slot.direction = GtsDirection::Uplink;
                    } else if (dir == "down") {
                        slot.direction = GtsDirection::Downlink;
                    } else {
                        throw ConfigError("gts direction must be up or down");
                    }
                    read(g, "superframe", slot.superframe_index);
                    read(g, "slot", slot.slot_index);
                    read(g, "channel", slot.channel);
                    s.dsme.gts.push_back(slot);
                }
            }
            read_duration(c, "guard", s.dsme.guard);
            read_duration(c, "wake_margin", s.dsme.wake_margin);
            read_duration(c, "gts_margin", s.dsme.gts_margin);
            read(c, "preprocessing_cycles", s.dsme.preprocessing_cycles);
            read(c, "beacon_psdu_bytes", s.dsme.beacon_psdu_bytes);
        }
        if (j.contains("tasks")) {
            for (const auto& t : j.at("tasks")) {
                ComputeTask task;
                read(t, "task", task.task_id);
                read(t, "cycles", task.cycles);
                s.tasks.push_back(task);
                if (!s.policy.task_targets.count(task.task_id)) {
                    s.policy.task_targets[task.task_id] = level;
                }
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario json: ") + e.what());
    }
}

// ---- presets ------------------------------------------------------------------

namespace {

Scenario bare(const CalibrationProfile& p, const std::string& name) {
    Scenario s;
    s.name = name;
    s.profile = p;
    s.policy = uniform_policy(p, make_level(p, 80.0, ClockSource::Pll));
    s.warmup = seconds(1);
    s.duration = seconds(10);
    return s;
}

Scenario preset_sleep_baseline(const CalibrationProfile& p) {
    Scenario s = bare(p, "sleep-baseline");
    s.mac = MacMode::None;
    return s;
}

Scenario preset_idle_listen(const CalibrationProfile& p) {
    Scenario s = bare(p, "idle-listen");
    s.mac = MacMode::None;
    s.radio_listen_idle = true;
    return s;
}

Scenario preset_poll_loop(const CalibrationProfile& p) {
    Scenario s = bare(p, "poll-loop");
    s.mac = MacMode::Idtx;
    return s;
}

Scenario preset_dsme_idle(const CalibrationProfile& p) {
    Scenario s = bare(p, "dsme-idle");
    s.mac = MacMode::Dsme;
    s.warmup = dsme_superframe_duration(s.dsme.so);
    s.duration = dsme_multisuperframe_duration(s.dsme.mo);
    return s;
}

Scenario preset_coap_idtx(const CalibrationProfile& p) {
    Scenario s = bare(p, "coap-idtx");
    s.mac = MacMode::Idtx;
    s.app.burst = 4;
    s.duration = seconds(6);
    return s;
}

Scenario preset_coap_dsme(const CalibrationProfile& p) {
    Scenario s = bare(p, "coap-dsme");
    s.mac = MacMode::Dsme;
    // One uplink and one downlink slot every fourth superframe, interleaved
    // so a response slot always follows a request slot.
    for (int sf = 0; sf < 128; sf += 4) {
        s.dsme.gts.push_back({GtsDirection::Uplink, sf, 9, 0});
    }
    for (int sf = 2; sf < 128; sf += 4) {
        s.dsme.gts.push_back({GtsDirection::Downlink, sf, 11, 0});
    }
    s.app.burst = 4;
    // Issue when the contention period of the first measured superframe ends.
    s.app.first_issue_offset = 9 * dsme_slot_duration(s.dsme.so);
    s.warmup = dsme_multisuperframe_duration(s.dsme.mo);
    s.duration = dsme_multisuperframe_duration(s.dsme.mo);
    return s;
}

Scenario preset_two_task_trace(const CalibrationProfile& p) {
    Scenario s = bare(p, "two-task-trace");
    s.mac = MacMode::Idtx;
    s.tasks = {{"fft", 143030}};
    const auto low = make_level(p, 8.0, ClockSource::RcDirect);
    const auto top = make_level(p, 80.0, ClockSource::Pll);
    s.policy = uniform_policy(p, low);
    s.policy.task_targets["fft"] = top;
    s.warmup = seconds(2);
    s.duration = seconds(1);
    return s;
}

Scenario preset_two_task_static(const CalibrationProfile& p) {
    Scenario s = preset_two_task_trace(p);
    s.name = "two-task-static";
    const auto top = make_level(p, 80.0, ClockSource::Pll);
    s.policy = uniform_policy(p, top);
    s.policy.task_targets["fft"] = top;
    return s;
}

Scenario preset_empty(const CalibrationProfile& p) {
    Scenario s = bare(p, "empty");
    s.mac = MacMode::None;
    s.warmup = 0;
    s.duration = 0;
    return s;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"sleep-baseline", "idle-listen", "poll-loop",      "dsme-idle", "coap-idtx",
            "coap-dsme",      "two-task-trace", "two-task-static", "empty"};
}

Scenario preset_scenario(const std::string& name, const CalibrationProfile& p) {
    if (name == "sleep-baseline") return preset_sleep_baseline(p);
    if (name == "idle-listen") return preset_idle_listen(p);
    if (name == "poll-loop") return preset_poll_loop(p);
    if (name == "dsme-idle") return preset_dsme_idle(p);
    if (name == "coap-idtx") return preset_coap_idtx(p);
    if (name == "coap-dsme") return preset_coap_dsme(p);
    if (name == "two-task-trace") return preset_two_task_trace(p);
    if (name == "two-task-static") return preset_two_task_static(p);
    if (name == "empty") return preset_empty(p);
    throw ConfigError("unknown preset: " + name);
}

// ---- levels -------------------------------------------------------------------

ClockConfig parse_level(const CalibrationProfile& p, const std::string& token) {
    std::string t = lower(token);
    // Trim whitespace.
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
    bool force_rc = false, force_pll = false;
    if (t.size() > 2 && t.substr(t.size() - 3) == "pll") {
        force_pll = true;
        t.resize(t.size() - 3);
    } else if (t.size() > 1 && t.substr(t.size() - 2) == "rc") {
        force_rc = true;
        t.resize(t.size() - 2);
    }
    char* end = nullptr;
    const double mhz = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw ConfigError("bad level token: " + token);
    }
    if (force_rc) return make_level(p, mhz, ClockSource::RcDirect);
    if (force_pll) return make_level(p, mhz, ClockSource::Pll);
    const auto served = [&](const std::vector<double>& levels) {
        return std::find(levels.begin(), levels.end(), mhz) != levels.end();
    };
    if (served(p.core_levels_mhz)) return make_level(p, mhz, ClockSource::Pll);
    return make_level(p, mhz, ClockSource::RcDirect);
}

std::vector<ClockConfig> parse_levels(const CalibrationProfile& p, const std::string& list) {
    std::vector<ClockConfig> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = list.find(',', start);
        const std::string tok =
            list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(parse_level(p, tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty level list");
    return out;
}

std::string level_name(const ClockConfig& c) {
    char buf[32];
    if (c.core_mhz == static_cast<double>(static_cast<long long>(c.core_mhz))) {
        std::snprintf(buf, sizeof buf, "%lld%s", static_cast<long long>(c.core_mhz),
                      to_string(c.source));
    } else {
        std::snprintf(buf, sizeof buf, "%g%s", c.core_mhz, to_string(c.source));
    }
    return buf;
}

void apply_level(Scenario& s, const ClockConfig& level) {
    for (const char* id : {"timer", "mac", "app"}) s.policy.task_targets[id] = level;
}

// ---- sweep running ------------------------------------------------------------

std::vector<RunReport> run_cells(const std::vector<Scenario>& cells) {
    std::vector<RunReport> out(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};

    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), cells.size());
    const auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            try {
                out[i] = run_scenario(cells[i]).report;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

BurstTiming burst_report(const std::vector<RunReport>& runs) {
    if (runs.empty()) throw ShapeMismatchError("burst report needs at least one run");
    BurstTiming t;
    double lo = to_seconds(runs.front().burst_duration());
    double hi = lo;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        compare_runs(runs.front(), runs[i]);  // shape check
        const double d = to_seconds(runs[i].burst_duration());
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    t.tburst_min_s = lo;
    t.max_delta_s = hi - lo;
    return t;
}

}  // namespace dvfsim
