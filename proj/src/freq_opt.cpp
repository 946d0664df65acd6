#include "dvfsim/freq_opt.hpp"

#include <algorithm>
#include <cstdio>

#include "dvfsim/errors.hpp"
#include "json.hpp"

namespace dvfsim {

Nanos TaskProfile::wait_time() const {
    Nanos total = 0;
    for (const auto& w : waits) total += w.duration;
    return total;
}

void validate(const TaskProfile& p) {
    for (const auto& w : p.waits) {
        if (w.duration <= 0) throw ConfigError("task profile: wait segments need a duration");
    }
    if (p.compute_cycles == 0 && p.waits.empty()) {
        throw ConfigError("task profile: nothing to execute");
    }
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Energy: return "energy";
        case Metric::Edp: return "edp";
        case Metric::Time: return "time";
    }
    return "?";
}

Metric metric_from_string(const std::string& name) {
    if (name == "energy") return Metric::Energy;
    if (name == "edp") return Metric::Edp;
    if (name == "time") return Metric::Time;
    throw ConfigError("unknown metric '" + name + "'");
}

SweepRow evaluate(const TaskProfile& task, const ClockConfig& config,
                  const CalibrationProfile& p) {
    validate(task);
    make_level(p, config.core_mhz, config.source);  // rejects off-grid points

    const double hz = config.core_mhz * 1e6;
    const double wait_s = to_seconds(task.wait_time());
    const double time_s = (double)task.compute_cycles / hz + wait_s;
    const double mcu_mw = mcu_power_mw(p, McuState::active(config));

    double energy_j = mcu_mw * time_s * 1e-3;
    for (const auto& w : task.waits) {
        energy_j += radio_power_mw(p, w.radio) * to_seconds(w.duration) * 1e-3;
    }

    SweepRow row;
    row.config = config;
    row.time_s = time_s;
    row.energy_j = energy_j;
    row.edp_js = energy_j * time_s;
    row.cycles_consumed = (double)task.compute_cycles + wait_s * hz;
    return row;
}

std::vector<ClockConfig> all_levels(const CalibrationProfile& p) {
    std::vector<ClockConfig> levels;
    for (double f : p.rc_levels_mhz) levels.push_back(make_level(p, f, ClockSource::RcDirect));
    for (double f : p.core_levels_mhz) levels.push_back(make_level(p, f, ClockSource::Pll));
    std::sort(levels.begin(), levels.end(), [](const ClockConfig& a, const ClockConfig& b) {
        if (a.core_mhz != b.core_mhz) return a.core_mhz < b.core_mhz;
        return a.source == ClockSource::RcDirect && b.source == ClockSource::Pll;
    });
    return levels;
}

std::vector<SweepRow> sweep(const TaskProfile& task, const std::vector<ClockConfig>& levels,
                            const CalibrationProfile& p) {
    if (levels.empty()) throw ConfigError("sweep: no levels given");
    std::vector<SweepRow> rows;
    rows.reserve(levels.size());
    for (const auto& c : levels) rows.push_back(evaluate(task, c, p));

    // Reference row: highest frequency, PLL preferred on a frequency tie.
    std::size_t ref = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i].config;
        const auto& b = rows[ref].config;
        if (a.core_mhz > b.core_mhz ||
            (a.core_mhz == b.core_mhz && a.source == ClockSource::Pll)) {
            ref = i;
        }
    }
    const SweepRow base = rows[ref];
    for (auto& r : rows) {
        r.time_rel = r.time_s / base.time_s;
        r.energy_rel = r.energy_j / base.energy_j;
        r.edp_rel = r.edp_js / base.edp_js;
        r.cycles_rel = r.cycles_consumed / base.cycles_consumed;
    }
    return rows;
}

ClockConfig select_optimal(const std::vector<SweepRow>& rows, Metric metric) {
    if (rows.empty()) throw ConfigError("select_optimal: no rows");
    auto value = [metric](const SweepRow& r) {
        switch (metric) {
            case Metric::Energy: return r.energy_j;
            case Metric::Edp: return r.edp_js;
            case Metric::Time: return r.time_s;
        }
        return r.energy_j;
    };
    auto better = [&](const SweepRow& a, const SweepRow& b) {
        const double va = value(a), vb = value(b);
        if (va != vb) return va < vb;
        if (a.config.core_mhz != b.config.core_mhz) {
            return a.config.core_mhz < b.config.core_mhz;
        }
        return a.config.source == ClockSource::RcDirect &&
               b.config.source == ClockSource::Pll;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (better(rows[i], rows[best])) best = i;
    }
    return rows[best].config;
}

TaskProfile idtx_request_profile(const IdtxConfig& c, std::uint64_t coincident_cycles) {
    validate(c);
    TaskProfile p;
    p.label = "idtx-request";
    p.compute_cycles = c.poll_handler_cycles + coincident_cycles;
    p.waits = {
        {frame_airtime(c.poll_cmd_psdu_bytes), RadioState::Tx},
        {PhyTiming::kTurnaround, RadioState::RxListen},
        {frame_airtime(c.ack_psdu_bytes), RadioState::RxBusy},
    };
    return p;
}

TaskProfile fft_task_profile() {
    TaskProfile p;
    p.label = "fft";
    p.compute_cycles = 143030;
    return p;
}

TaskProfile task_profile_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("task profile json: ") + e.what());
    }
    TaskProfile p;
    for (const auto& [key, val] : j.items()) {
        if (key == "label") {
            p.label = val.get<std::string>();
        } else if (key == "compute_cycles") {
            p.compute_cycles = val.get<std::uint64_t>();
        } else if (key == "waits") {
            for (const auto& w : val) {
                WaitSegment seg;
                for (const auto& [wk, wv] : w.items()) {
                    if (wk == "duration_ns") {
                        seg.duration = wv.get<Nanos>();
                    } else if (wk == "radio") {
                        seg.radio = radio_state_from_string(wv.get<std::string>());
                    } else {
                        throw ConfigError("task profile json: unknown wait key '" + wk + "'");
                    }
                }
                p.waits.push_back(seg);
            }
        } else {
            throw ConfigError("task profile json: unknown key '" + key + "'");
        }
    }
    validate(p);
    return p;
}

std::string task_profile_to_json(const TaskProfile& p) {
    nlohmann::json j;
    j["label"] = p.label;
    j["compute_cycles"] = p.compute_cycles;
    j["waits"] = nlohmann::json::array();
    for (const auto& w : p.waits) {
        j["waits"].push_back({{"duration_ns", w.duration}, {"radio", to_string(w.radio)}});
    }
    return j.dump(2) + "\n";
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "source,core_mhz,voltage_v,time_s,energy_J,edp_Js,cycles,"
        "time_rel,energy_rel,edp_rel,cycles_rel\n";
    char line[320];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line,
                      "%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      to_string(r.config.source), r.config.core_mhz, r.config.core_voltage_v,
                      r.time_s, r.energy_j, r.edp_js, r.cycles_consumed, r.time_rel,
                      r.energy_rel, r.edp_rel, r.cycles_rel);
        out += line;
    }
    return out;
}

}  // namespace dvfsim
