#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dvfsim/sim_time.hpp"

namespace dvfsim {

// How the core clock is generated. Direct RC tops out below the PLL range
// but starts instantly after wakeup; the PLL covers the full range at the
// cost of lock time (captured by the transition model, not here).
enum class ClockSource { RcDirect, Pll };

const char* to_string(ClockSource s);

// One operating point of the core: generator, frequency and the core rail
// voltage the frequency requires.
struct ClockConfig {
    ClockSource source = ClockSource::RcDirect;
    double core_mhz = 0.0;
    double core_voltage_v = 0.0;

    bool operator==(const ClockConfig& o) const {
        return source == o.source && core_mhz == o.core_mhz &&
               core_voltage_v == o.core_voltage_v;
    }
    bool operator!=(const ClockConfig& o) const { return !(*this == o); }
};

std::string to_string(const ClockConfig& c);

enum class RadioState { Off, Sleep, RxListen, RxBusy, Tx };

const char* to_string(RadioState s);
RadioState radio_state_from_string(const std::string& name);  // throws ConfigError

enum class McuMode { Sleep, Active, Transition };

// MCU side of the component state. config is meaningful for Active (the
// operating point) and Transition (the faster endpoint of the switch, whose
// scaled active power is billed for the whole switch duration).
struct McuState {
    McuMode mode = McuMode::Sleep;
    ClockConfig config{};

    static McuState sleep() { return {McuMode::Sleep, {}}; }
    static McuState active(const ClockConfig& c) { return {McuMode::Active, c}; }
    static McuState transition(const ClockConfig& faster) {
        return {McuMode::Transition, faster};
    }
};

std::string to_string(const McuState& s);

// Electrical calibration of one device. The current of the active core is
// linear in frequency with per-source, per-voltage base and slope. Currents
// are in mA, frequencies in MHz. Transition times are plain ms because they
// are calibration inputs, not event timestamps.
struct CalibrationProfile {
    double supply_v = 3.3;

    // Selectable operating frequencies. rc_levels_mhz lists the subset that
    // the RC generator can also produce directly.
    std::vector<double> core_levels_mhz = {8.0, 16.0, 24.0, 32.0, 48.0, 80.0};
    std::vector<double> rc_levels_mhz = {8.0, 16.0, 24.0, 32.0, 48.0};

    // Frequency the core boots into after leaving sleep, always RC. Not a
    // selectable level; it only ever appears as the source of a transition.
    double reset_mhz = 4.0;

    // Core rail rule: below the threshold the low rail suffices.
    double voltage_threshold_mhz = 26.0;
    double core_voltage_low_v = 1.0;
    double core_voltage_high_v = 1.2;

    // I_active(f) = base(V) + slope(source, V) * f_mhz
    double mcu_base_low_ma = 0.482;
    double mcu_base_high_ma = 0.50;
    double mcu_slope_rc_low_ma_per_mhz = 0.0197;
    double mcu_slope_rc_high_ma_per_mhz = 0.048;
    double mcu_slope_pll_low_ma_per_mhz = 0.0405;
    double mcu_slope_pll_high_ma_per_mhz = 0.05625;

    // Deep sleep with RTC running.
    double lpm_current_ma = 0.0013;

    double radio_off_ma = 0.0;
    double radio_sleep_ma = 0.02;
    double radio_rx_listen_ma = 6.5;
    double radio_rx_busy_ma = 16.5;
    double radio_tx_ma = 16.5;

    // Clock reconfiguration cost. A switch to a configuration whose settings
    // were precomputed completes in transition_cached_ms, otherwise the full
    // calibration path runs. During a switch the core draws
    // transition_active_equivalent times the active power of the faster
    // endpoint.
    double transition_slow_ms = 25.0;
    double transition_cached_ms = 0.5;
    double transition_active_equivalent = 20.0 / 33.0;
    int transition_cache_capacity = 8;
};

// Throws ConfigError when the profile is not physically plausible or the
// level lists are inconsistent.
void validate(const CalibrationProfile& p);

// Core rail required for a frequency.
double voltage_for_mhz(const CalibrationProfile& p, double mhz);

// Builds a validated operating point. Throws UnknownLevelError when mhz is
// not a profile level, or not an RC level while source is RcDirect.
ClockConfig make_level(const CalibrationProfile& p, double mhz, ClockSource source);

// The post-wakeup configuration. Bypasses the level check on purpose.
ClockConfig reset_config(const CalibrationProfile& p);

double mcu_active_current_ma(const CalibrationProfile& p, const ClockConfig& c);
double mcu_power_mw(const CalibrationProfile& p, const McuState& s);
double radio_power_mw(const CalibrationProfile& p, RadioState s);

// Power drawn while switching between two operating points, either
// direction. Billed at the faster endpoint.
double transition_power_mw(const CalibrationProfile& p, const ClockConfig& a,
                           const ClockConfig& b);

Nanos transition_duration(const CalibrationProfile& p, bool cached);

// Energy bookkeeping. mW times ns is pJ; sums are kept in pJ and only
// converted to J at the end so that replaying the same spans in the same
// order reproduces bit-identical totals.
class EnergyAccumulator {
  public:
    void add(double power_mw, Nanos duration) {
        pj_ += power_mw * static_cast<double>(duration);
    }
    double picojoules() const { return pj_; }
    double joules() const { return pj_ * 1e-12; }

  private:
    double pj_ = 0.0;
};

struct EnergyBreakdown {
    double mcu_j = 0.0;
    double radio_j = 0.0;
    double total_j = 0.0;  // always mcu_j + radio_j, summed in that order
    Nanos duration = 0;
    double edp_js = 0.0;  // always total_j * duration in seconds
};

EnergyBreakdown make_breakdown(const EnergyAccumulator& mcu,
                               const EnergyAccumulator& radio, Nanos duration);

// JSON (de)serialization of profiles. Unknown keys are rejected so that a
// typo in an override does not silently fall back to a default.
std::string profile_to_json(const CalibrationProfile& p);
CalibrationProfile profile_from_json(const std::string& text);
CalibrationProfile profile_from_file(const std::string& path);

}  // namespace dvfsim
