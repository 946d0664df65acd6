#include "dvfsim/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dvfsim/errors.hpp"
#include "json.hpp"

namespace dvfsim {

namespace {

std::string format_mhz(double mhz) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", mhz);
    return buf;
}

}  // namespace

const char* to_string(ClockSource s) {
    return s == ClockSource::RcDirect ? "rc" : "pll";
}

std::string to_string(const ClockConfig& c) {
    return format_mhz(c.core_mhz) + "MHz/" + to_string(c.source);
}

const char* to_string(RadioState s) {
    switch (s) {
        case RadioState::Off: return "off";
        case RadioState::Sleep: return "sleep";
        case RadioState::RxListen: return "rx_listen";
        case RadioState::RxBusy: return "rx_busy";
        case RadioState::Tx: return "tx";
    }
    return "?";
}

RadioState radio_state_from_string(const std::string& name) {
    for (RadioState s : {RadioState::Off, RadioState::Sleep, RadioState::RxListen,
                         RadioState::RxBusy, RadioState::Tx}) {
        if (name == to_string(s)) return s;
    }
    throw ConfigError("unknown radio state '" + name + "'");
}

std::string to_string(const McuState& s) {
    switch (s.mode) {
        case McuMode::Sleep: return "sleep";
        case McuMode::Active: return "active(" + to_string(s.config) + ")";
        case McuMode::Transition: return "switch(" + to_string(s.config) + ")";
    }
    return "?";
}

void validate(const CalibrationProfile& p) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("profile: ") + what);
    };
    require(p.supply_v > 0.0, "supply_v must be positive");
    require(p.core_voltage_low_v > 0.0, "core_voltage_low_v must be positive");
    require(p.core_voltage_high_v >= p.core_voltage_low_v,
            "core_voltage_high_v below core_voltage_low_v");
    require(p.voltage_threshold_mhz > 0.0, "voltage_threshold_mhz must be positive");

    require(!p.core_levels_mhz.empty(), "core_levels_mhz is empty");
    for (size_t i = 0; i < p.core_levels_mhz.size(); ++i) {
        require(p.core_levels_mhz[i] > 0.0, "core level must be positive");
        if (i > 0) {
            require(p.core_levels_mhz[i] > p.core_levels_mhz[i - 1],
                    "core_levels_mhz must be strictly increasing");
        }
    }
    for (size_t i = 0; i < p.rc_levels_mhz.size(); ++i) {
        if (i > 0) {
            require(p.rc_levels_mhz[i] > p.rc_levels_mhz[i - 1],
                    "rc_levels_mhz must be strictly increasing");
        }
        const auto& lv = p.core_levels_mhz;
        require(std::find(lv.begin(), lv.end(), p.rc_levels_mhz[i]) != lv.end(),
                "rc_levels_mhz must be a subset of core_levels_mhz");
    }
    require(p.reset_mhz > 0.0, "reset_mhz must be positive");

    require(p.mcu_base_low_ma > 0.0, "mcu_base_low_ma must be positive");
    require(p.mcu_base_high_ma >= p.mcu_base_low_ma,
            "mcu_base_high_ma below mcu_base_low_ma");
    require(p.mcu_slope_rc_low_ma_per_mhz > 0.0, "rc low slope must be positive");
    require(p.mcu_slope_rc_high_ma_per_mhz > 0.0, "rc high slope must be positive");
    require(p.mcu_slope_pll_low_ma_per_mhz >= p.mcu_slope_rc_low_ma_per_mhz,
            "pll low slope below rc low slope");
    require(p.mcu_slope_pll_high_ma_per_mhz >= p.mcu_slope_rc_high_ma_per_mhz,
            "pll high slope below rc high slope");
    require(p.lpm_current_ma > 0.0 && p.lpm_current_ma < p.mcu_base_low_ma,
            "lpm_current_ma must sit below the smallest active current");

    require(p.radio_off_ma >= 0.0, "radio_off_ma must not be negative");
    require(p.radio_sleep_ma >= p.radio_off_ma, "radio_sleep_ma below radio_off_ma");
    require(p.radio_rx_listen_ma >= p.radio_sleep_ma,
            "radio_rx_listen_ma below radio_sleep_ma");
    require(p.radio_rx_busy_ma >= p.radio_rx_listen_ma,
            "radio_rx_busy_ma below radio_rx_listen_ma");
    require(p.radio_tx_ma >= p.radio_sleep_ma, "radio_tx_ma below radio_sleep_ma");

    require(p.transition_cached_ms > 0.0, "transition_cached_ms must be positive");
    require(p.transition_slow_ms >= p.transition_cached_ms,
            "transition_slow_ms below transition_cached_ms");
    require(p.transition_active_equivalent > 0.0,
            "transition_active_equivalent must be positive");
    require(p.transition_cache_capacity >= 1,
            "transition_cache_capacity must be at least 1");
}

double voltage_for_mhz(const CalibrationProfile& p, double mhz) {
    return mhz < p.voltage_threshold_mhz ? p.core_voltage_low_v
                                         : p.core_voltage_high_v;
}

ClockConfig make_level(const CalibrationProfile& p, double mhz, ClockSource source) {
    const auto& lv = p.core_levels_mhz;
    if (std::find(lv.begin(), lv.end(), mhz) == lv.end()) {
        throw UnknownLevelError("no such level: " + format_mhz(mhz) + " MHz");
    }
    if (source == ClockSource::RcDirect) {
        const auto& rc = p.rc_levels_mhz;
        if (std::find(rc.begin(), rc.end(), mhz) == rc.end()) {
            throw UnknownLevelError("level not reachable from RC: " +
                                    format_mhz(mhz) + " MHz");
        }
    }
    return ClockConfig{source, mhz, voltage_for_mhz(p, mhz)};
}

ClockConfig reset_config(const CalibrationProfile& p) {
    return ClockConfig{ClockSource::RcDirect, p.reset_mhz,
                       voltage_for_mhz(p, p.reset_mhz)};
}

double mcu_active_current_ma(const CalibrationProfile& p, const ClockConfig& c) {
    const bool low = c.core_voltage_v == p.core_voltage_low_v;
    if (!low && c.core_voltage_v != p.core_voltage_high_v) {
        throw ConfigError("clock config voltage matches neither rail");
    }
    const double base = low ? p.mcu_base_low_ma : p.mcu_base_high_ma;
    double slope;
    if (c.source == ClockSource::RcDirect) {
        slope = low ? p.mcu_slope_rc_low_ma_per_mhz : p.mcu_slope_rc_high_ma_per_mhz;
    } else {
        slope = low ? p.mcu_slope_pll_low_ma_per_mhz : p.mcu_slope_pll_high_ma_per_mhz;
    }
    return base + slope * c.core_mhz;
}

double mcu_power_mw(const CalibrationProfile& p, const McuState& s) {
    switch (s.mode) {
        case McuMode::Sleep:
            return p.supply_v * p.lpm_current_ma;
        case McuMode::Active:
            return p.supply_v * mcu_active_current_ma(p, s.config);
        case McuMode::Transition:
            return p.transition_active_equivalent * p.supply_v *
                   mcu_active_current_ma(p, s.config);
    }
    return 0.0;
}

double radio_power_mw(const CalibrationProfile& p, RadioState s) {
    switch (s) {
        case RadioState::Off: return p.supply_v * p.radio_off_ma;
        case RadioState::Sleep: return p.supply_v * p.radio_sleep_ma;
        case RadioState::RxListen: return p.supply_v * p.radio_rx_listen_ma;
        case RadioState::RxBusy: return p.supply_v * p.radio_rx_busy_ma;
        case RadioState::Tx: return p.supply_v * p.radio_tx_ma;
    }
    return 0.0;
}

double transition_power_mw(const CalibrationProfile& p, const ClockConfig& a,
                           const ClockConfig& b) {
    // The faster endpoint dominates the draw while the switch settles.
    const double pa = p.supply_v * mcu_active_current_ma(p, a);
    const double pb = p.supply_v * mcu_active_current_ma(p, b);
    return p.transition_active_equivalent * std::max(pa, pb);
}

Nanos transition_duration(const CalibrationProfile& p, bool cached) {
    return nanos_from_millis(cached ? p.transition_cached_ms : p.transition_slow_ms);
}

EnergyBreakdown make_breakdown(const EnergyAccumulator& mcu,
                               const EnergyAccumulator& radio, Nanos duration) {
    EnergyBreakdown b;
    b.mcu_j = mcu.joules();
    b.radio_j = radio.joules();
    b.total_j = b.mcu_j + b.radio_j;
    b.duration = duration;
    b.edp_js = b.total_j * to_seconds(duration);
    return b;
}

namespace {

using nlohmann::json;

void write_profile(json& j, const CalibrationProfile& p) {
    j["supply_v"] = p.supply_v;
    j["core_levels_mhz"] = p.core_levels_mhz;
    j["rc_levels_mhz"] = p.rc_levels_mhz;
    j["reset_mhz"] = p.reset_mhz;
    j["voltage_threshold_mhz"] = p.voltage_threshold_mhz;
    j["core_voltage_low_v"] = p.core_voltage_low_v;
    j["core_voltage_high_v"] = p.core_voltage_high_v;
    j["mcu_base_low_ma"] = p.mcu_base_low_ma;
    j["mcu_base_high_ma"] = p.mcu_base_high_ma;
    j["mcu_slope_rc_low_ma_per_mhz"] = p.mcu_slope_rc_low_ma_per_mhz;
    j["mcu_slope_rc_high_ma_per_mhz"] = p.mcu_slope_rc_high_ma_per_mhz;
    j["mcu_slope_pll_low_ma_per_mhz"] = p.mcu_slope_pll_low_ma_per_mhz;
    j["mcu_slope_pll_high_ma_per_mhz"] = p.mcu_slope_pll_high_ma_per_mhz;
    j["lpm_current_ma"] = p.lpm_current_ma;
    j["radio_off_ma"] = p.radio_off_ma;
    j["radio_sleep_ma"] = p.radio_sleep_ma;
    j["radio_rx_listen_ma"] = p.radio_rx_listen_ma;
    j["radio_rx_busy_ma"] = p.radio_rx_busy_ma;
    j["radio_tx_ma"] = p.radio_tx_ma;
    j["transition_slow_ms"] = p.transition_slow_ms;
    j["transition_cached_ms"] = p.transition_cached_ms;
    j["transition_active_equivalent"] = p.transition_active_equivalent;
    j["transition_cache_capacity"] = p.transition_cache_capacity;
}

// Overrides fields present in j, starting from the defaults already in p.
// Unknown keys are an error so that typos do not silently change nothing.
void read_profile(const json& j, CalibrationProfile& p) {
    if (!j.is_object()) throw ConfigError("profile JSON must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        try {
            if (k == "supply_v") p.supply_v = v.get<double>();
            else if (k == "core_levels_mhz") p.core_levels_mhz = v.get<std::vector<double>>();
            else if (k == "rc_levels_mhz") p.rc_levels_mhz = v.get<std::vector<double>>();
            else if (k == "reset_mhz") p.reset_mhz = v.get<double>();
            else if (k == "voltage_threshold_mhz") p.voltage_threshold_mhz = v.get<double>();
            else if (k == "core_voltage_low_v") p.core_voltage_low_v = v.get<double>();
            else if (k == "core_voltage_high_v") p.core_voltage_high_v = v.get<double>();
            else if (k == "mcu_base_low_ma") p.mcu_base_low_ma = v.get<double>();
            else if (k == "mcu_base_high_ma") p.mcu_base_high_ma = v.get<double>();
            else if (k == "mcu_slope_rc_low_ma_per_mhz") p.mcu_slope_rc_low_ma_per_mhz = v.get<double>();
            else if (k == "mcu_slope_rc_high_ma_per_mhz") p.mcu_slope_rc_high_ma_per_mhz = v.get<double>();
            else if (k == "mcu_slope_pll_low_ma_per_mhz") p.mcu_slope_pll_low_ma_per_mhz = v.get<double>();
            else if (k == "mcu_slope_pll_high_ma_per_mhz") p.mcu_slope_pll_high_ma_per_mhz = v.get<double>();
            else if (k == "lpm_current_ma") p.lpm_current_ma = v.get<double>();
            else if (k == "radio_off_ma") p.radio_off_ma = v.get<double>();
            else if (k == "radio_sleep_ma") p.radio_sleep_ma = v.get<double>();
            else if (k == "radio_rx_listen_ma") p.radio_rx_listen_ma = v.get<double>();
            else if (k == "radio_rx_busy_ma") p.radio_rx_busy_ma = v.get<double>();
            else if (k == "radio_tx_ma") p.radio_tx_ma = v.get<double>();
            else if (k == "transition_slow_ms") p.transition_slow_ms = v.get<double>();
            else if (k == "transition_cached_ms") p.transition_cached_ms = v.get<double>();
            else if (k == "transition_active_equivalent") p.transition_active_equivalent = v.get<double>();
            else if (k == "transition_cache_capacity") p.transition_cache_capacity = v.get<int>();
            else throw ConfigError("profile: unknown key '" + k + "'");
        } catch (const json::exception& e) {
            throw ConfigError("profile: bad value for '" + k + "': " + e.what());
        }
    }
}

}  // namespace

std::string profile_to_json(const CalibrationProfile& p) {
    json j = json::object();
    write_profile(j, p);
    return j.dump(2) + "\n";
}

CalibrationProfile profile_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("profile: parse failure: ") + e.what());
    }
    CalibrationProfile p;
    read_profile(j, p);
    validate(p);
    return p;
}

CalibrationProfile profile_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return profile_from_json(buf.str());
}

}  // namespace dvfsim
