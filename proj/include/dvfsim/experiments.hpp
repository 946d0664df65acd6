#pragma once

#include <string>
#include <vector>

#include "dvfsim/sim_core.hpp"

namespace dvfsim {

// Shipped scenario presets. The builders here are the source of truth; the
// JSON files under data/presets/ are their serialized form and a test keeps
// the two in sync.
std::vector<std::string> preset_names();
Scenario preset_scenario(const std::string& name, const CalibrationProfile& p);

// Scenario (de)serialization. The reader falls back to the given profile and
// to field defaults for anything the document omits; the writer emits every
// field so the schema is visible in the shipped presets.
Scenario scenario_from_json(const std::string& text, const CalibrationProfile& default_profile);
std::string scenario_to_json(const Scenario& s);

// Level tokens: "80" picks the PLL when it serves the frequency, "24rc" and
// "24pll" force the source. Lists are comma-separated.
ClockConfig parse_level(const CalibrationProfile& p, const std::string& token);
std::vector<ClockConfig> parse_levels(const CalibrationProfile& p, const std::string& list);
std::string level_name(const ClockConfig& c);  // "80pll", "24rc"

// Pins the routine tasks (timer, mac, app) to one operating point. Compute
// tasks keep their own targets; that is the whole point of a per-task policy.
void apply_level(Scenario& s, const ClockConfig& level);

// Runs sweep cells concurrently; results come back in input order. The first
// failing cell's error is rethrown after all workers finish.
std::vector<RunReport> run_cells(const std::vector<Scenario>& cells);

// Burst completion timing across operating points of one experiment shape.
struct BurstTiming {
    double tburst_min_s = 0.0;
    double max_delta_s = 0.0;
};
BurstTiming burst_report(const std::vector<RunReport>& runs);  // throws ShapeMismatchError

}  // namespace dvfsim
