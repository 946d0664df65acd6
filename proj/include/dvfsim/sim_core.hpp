#pragma once

#include <string>
#include <vector>

#include "dvfsim/clock_control.hpp"
#include "dvfsim/mac_802154.hpp"
#include "dvfsim/net_stack.hpp"
#include "dvfsim/power_model.hpp"
#include "dvfsim/rng.hpp"
#include "dvfsim/sim_time.hpp"

namespace dvfsim {

// Low-power timer maintenance: the overflow handler that must run
// periodically in every scenario, whatever the MAC is doing.
struct TimerConfig {
    Nanos period = seconds(1);
    std::uint64_t wakeup_cycles = 1200;
};

struct AppConfig {
    CoapMethod method = CoapMethod::Get;
    int payload_bytes = 16;
    bool secure = false;
    int burst = 0;  // requests per run; 0 disables application traffic
    // First issue instant relative to the end of the warmup. Later requests
    // follow the previous response (NSTART=1).
    Nanos first_issue_offset = millis(10);
    std::uint64_t encode_cycles = 15000;
    std::uint64_t decode_cycles = 30000;
    // Coordinator turnaround for the always-on MAC, where a response needs
    // no poll or slot to come down.
    Nanos inline_response_latency = millis(5);
    StackOverheads overheads;
};

// Compute job executed at the tail of every poll service wake. Sharing the
// wake is what lets a per-task policy switch up for the job and makes the
// static/dynamic comparison meaningful.
struct ComputeTask {
    std::string task_id = "fft";
    std::uint64_t cycles = 0;
};

struct Scenario {
    std::string name = "run";
    CalibrationProfile profile;
    DvfsPolicy policy;
    MacMode mac = MacMode::Idtx;
    IdtxConfig idtx;
    DsmeConfig dsme;
    TimerConfig timer;
    AppConfig app;
    std::vector<ComputeTask> tasks;  // idtx only, run after poll bookkeeping
    // Off: the core clock is set up once at boot and never gated; idle time
    // runs at the standing level's active current instead of the LPM floor.
    bool lpm = true;
    // Hold the receiver in listen through idle time instead of powering the
    // radio off (the idle-listening baseline).
    bool radio_listen_idle = false;
    // Lead-in executed but not measured: reaches steady state (transition
    // cache warm, schedule mid-pattern) before accounting starts.
    Nanos warmup = 0;
    Nanos duration = 0;  // measured span
    std::uint64_t seed = 1;
};

void validate(const Scenario& s);

// Times in the trace are relative to the start of the measured span.
struct TraceInterval {
    Nanos begin = 0;
    Nanos end = 0;
    std::string component;  // "mcu" | "radio"
    std::string state;
    double power_mw = 0.0;
    std::string label;
};

struct SimEvent {
    Nanos at = 0;
    std::string kind;
};

struct RequestWindow {
    Nanos begin = 0;
    Nanos end = 0;
    int request_id = 0;
};

struct SimTrace {
    Nanos duration = 0;
    std::vector<TraceInterval> intervals;  // sorted by (begin, component)
    std::vector<SimEvent> events;
    std::vector<RequestWindow> request_windows;
};

struct TaskWindowReport {
    std::string label;
    Nanos begin = 0;
    Nanos end = 0;
    EnergyBreakdown energy;
};

struct RunReport {
    std::string scenario_name;
    ClockConfig level;  // the policy's "mac" target, the sweep variable
    MacMode mac = MacMode::Idtx;
    CoapMethod method = CoapMethod::Get;
    int payload_bytes = 0;
    bool secure = false;
    int burst = 0;
    Nanos duration = 0;

    EnergyBreakdown total;
    double average_current_ma = 0.0;
    std::vector<EnergyBreakdown> per_request;  // aligned with request windows
    std::vector<TaskWindowReport> task_windows;
    std::vector<DeadlineMiss> deadline_misses;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
    Nanos radio_on = 0;

    bool burst_present = false;
    Nanos burst_start = 0;
    Nanos burst_end = 0;

    Nanos burst_duration() const { return burst_present ? burst_end - burst_start : 0; }
};

struct RunResult {
    SimTrace trace;
    RunReport report;
};

RunResult run_scenario(const Scenario& s);

// Same target for every task the engine can wake for, plus the given extras.
DvfsPolicy uniform_policy(const CalibrationProfile& p, const ClockConfig& level,
                          const std::vector<std::string>& extra_tasks = {});

std::string trace_to_csv(const SimTrace& t);
void export_trace(const SimTrace& t, const std::string& path);  // throws IoError

// Rebuilds the energy figures from exported CSV text alone. Row order and
// column text carry enough precision that the result matches the online
// accumulation bit for bit.
EnergyBreakdown integrate_trace_csv(const std::string& csv);

struct CompareReport {
    double energy_ratio = 1.0;
    double mcu_ratio = 1.0;
    double radio_ratio = 1.0;
    double edp_ratio = 1.0;
    double current_ratio = 1.0;
    double saving = 0.0;  // 1 - energy_ratio
    double mean_request_ratio = 1.0;
    double timing_delta_s = 0.0;  // burst duration difference
};

// Candidate and reference must be the same experiment at different clock
// policies; anything else throws ShapeMismatchError.
CompareReport compare_runs(const RunReport& reference, const RunReport& candidate);

std::string report_to_json(const RunReport& r);

}  // namespace dvfsim
