#pragma once

#include <string>
#include <vector>

#include "dvfsim/mac_802154.hpp"
#include "dvfsim/power_model.hpp"
#include "dvfsim/sim_time.hpp"

namespace dvfsim {

// One bottlenecked stretch of a task: the duration does not scale with the
// core clock, the core sits in active wait, and the radio holds this state.
struct WaitSegment {
    Nanos duration = 0;
    RadioState radio = RadioState::Off;
};

// Two-component task model: a frequency-scaled compute portion plus fixed
// wait segments. This is the minimal shape that separates compute-bound
// tasks (time shrinks with f) from transfer-bound tasks (time does not).
struct TaskProfile {
    std::uint64_t compute_cycles = 0;
    std::vector<WaitSegment> waits;
    std::string label;

    Nanos wait_time() const;
};

void validate(const TaskProfile& p);

struct SweepRow {
    ClockConfig config;
    double time_s = 0.0;
    double energy_j = 0.0;
    double edp_js = 0.0;
    double cycles_consumed = 0.0;  // compute + wait * f
    // Columns relative to the highest-frequency row of the sweep.
    double time_rel = 1.0;
    double energy_rel = 1.0;
    double edp_rel = 1.0;
    double cycles_rel = 1.0;
};

enum class Metric { Energy, Edp, Time };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& name);

// Steady-state task cost at one operating point. Transition overhead is a
// policy cost and intentionally not part of the row.
SweepRow evaluate(const TaskProfile& task, const ClockConfig& config,
                  const CalibrationProfile& p);

// Every feasible operating point, ascending frequency, RC before PLL at
// equal frequency.
std::vector<ClockConfig> all_levels(const CalibrationProfile& p);

std::vector<SweepRow> sweep(const TaskProfile& task, const std::vector<ClockConfig>& levels,
                            const CalibrationProfile& p);

// Argmin over the metric; ties break toward lower frequency, then toward
// the direct clock source.
ClockConfig select_optimal(const std::vector<SweepRow>& rows, Metric metric);

// The poll transaction as a task profile: chain segments as waits plus the
// service routine and any work that shares the wake.
TaskProfile idtx_request_profile(const IdtxConfig& c, std::uint64_t coincident_cycles);

// Compute-bound reference workload calibrated for the trace experiment.
TaskProfile fft_task_profile();

TaskProfile task_profile_from_json(const std::string& text);
std::string task_profile_to_json(const TaskProfile& p);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace dvfsim
