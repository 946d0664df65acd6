#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dvfsim/power_model.hpp"
#include "dvfsim/sim_time.hpp"

namespace dvfsim {

// One abstract reconfiguration step of a transition. Steps carry a share of
// the plan duration; the exact split is deterministic and sums to the total.
struct TransitionStep {
    std::string op;
    Nanos duration = 0;
};

enum class TransitionMode { SlowPath, CachedPath };

// The sequence of operations that takes the clock tree from one operating
// point to another. A cached plan replays precomputed settings and is much
// faster than recomputing them on the slow path.
struct TransitionPlan {
    ClockConfig from{};
    ClockConfig to{};
    std::vector<TransitionStep> ops;
    Nanos total_duration = 0;
    TransitionMode mode = TransitionMode::SlowPath;

    bool identity() const { return from == to; }
};

// Builds the full slow-path plan. Identity input yields the zero plan.
// Throws UnknownLevelError when either config is neither a profile level nor
// the reset configuration.
TransitionPlan plan_transition(const CalibrationProfile& p, const ClockConfig& from,
                               const ClockConfig& to);

struct TransitionResult {
    ClockConfig from{};
    ClockConfig to{};
    Nanos duration = 0;
    double power_mw = 0.0;
    double energy_j = 0.0;
    bool cache_hit = false;
    bool identity = false;
};

// Bounded store of precomputed transition plans, keyed by the exact ordered
// (from, to) pair. Least recently used entries fall out when full.
class TransitionCache {
  public:
    explicit TransitionCache(int capacity);

    // Returns the cached plan and refreshes its recency, or nothing.
    std::optional<TransitionPlan> lookup(const ClockConfig& from, const ClockConfig& to);

    // Inserts (or refreshes) a plan, evicting the least recently used entry
    // when the capacity would be exceeded.
    void insert(const TransitionPlan& plan);

    std::size_t size() const { return entries_.size(); }
    int capacity() const { return capacity_; }

  private:
    struct Entry {
        ClockConfig from;
        ClockConfig to;
        TransitionPlan plan;
    };
    // Recency order, least recently used first. Capacities are single digit
    // so linear scans beat any map here.
    std::vector<Entry> entries_;
    int capacity_;
};

// Static frequency assignment: which operating point each task runs at, and
// the configuration the hardware falls back to when it leaves sleep.
struct DvfsPolicy {
    std::map<std::string, ClockConfig> task_targets;
    ClockConfig default_config{};
};

DvfsPolicy make_policy(const CalibrationProfile& p);

// Owns the clock state of one simulated node: current operating point plus
// the transition cache. Each scenario run builds its own controller.
class ClockController {
  public:
    explicit ClockController(const CalibrationProfile& profile);

    const ClockConfig& current() const { return current_; }

    // Switches to the target operating point. A cache miss runs the slow
    // path and leaves a cached plan behind; a hit replays it. Identity
    // requests cost nothing and do not touch the cache.
    TransitionResult execute_transition(const ClockConfig& to);

    // Deep sleep resets the hardware clock tree to the default config. The
    // reset happens as part of sleep entry and costs no extra time here.
    void enter_sleep();

    // Wakes directly into the target of the next runnable task, skipping the
    // restore of any previously configured point. Exactly one transition.
    // Throws UnknownTaskError for ids outside the policy.
    TransitionResult on_wakeup(const DvfsPolicy& policy, const std::string& task_id);

    std::int64_t cache_hits() const { return hits_; }
    std::int64_t cache_misses() const { return misses_; }

  private:
    CalibrationProfile profile_;
    TransitionCache cache_;
    ClockConfig current_;
    std::int64_t hits_ = 0;
    std::int64_t misses_ = 0;
};

}  // namespace dvfsim
