#include "dvfsim/clock_control.hpp"

#include <algorithm>

#include "dvfsim/errors.hpp"

namespace dvfsim {

namespace {

bool is_reset_config(const CalibrationProfile& p, const ClockConfig& c) {
    return c == reset_config(p);
}

void check_config(const CalibrationProfile& p, const ClockConfig& c) {
    if (is_reset_config(p, c)) return;
    // make_level re-derives the voltage, so a tampered voltage fails too.
    const ClockConfig rebuilt = make_level(p, c.core_mhz, c.source);
    if (rebuilt != c) {
        throw UnknownLevelError("config voltage inconsistent for " + to_string(c));
    }
}

// Abstract reconfiguration steps with relative weights. The weights only
// shape the per-step durations; every consumer of a plan uses the total.
std::vector<std::pair<const char*, int>> step_weights(const ClockConfig& from,
                                                      const ClockConfig& to) {
    std::vector<std::pair<const char*, int>> w;
    if (to.core_voltage_v > from.core_voltage_v) w.push_back({"raise_vcore", 2});
    if (to.source == ClockSource::Pll) {
        w.push_back({"configure_pll", 3});
        w.push_back({"await_lock", 4});
    }
    w.push_back({"switch_mux", 1});
    if (from.source == ClockSource::Pll && to.source == ClockSource::RcDirect) {
        w.push_back({"disable_pll", 1});
    }
    if (to.core_voltage_v < from.core_voltage_v) w.push_back({"lower_vcore", 2});
    return w;
}

std::vector<TransitionStep> build_ops(const ClockConfig& from, const ClockConfig& to,
                                      Nanos total) {
    const auto weights = step_weights(from, to);
    int weight_sum = 0;
    for (const auto& [op, w] : weights) weight_sum += w;
    std::vector<TransitionStep> ops;
    Nanos used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        // Last step absorbs the rounding remainder so durations sum exactly.
        Nanos d = (i + 1 == weights.size())
                      ? total - used
                      : total * weights[i].second / weight_sum;
        ops.push_back({weights[i].first, d});
        used += d;
    }
    return ops;
}

TransitionPlan make_plan(const CalibrationProfile& p, const ClockConfig& from,
                         const ClockConfig& to, TransitionMode mode) {
    TransitionPlan plan;
    plan.from = from;
    plan.to = to;
    plan.mode = mode;
    if (from == to) return plan;  // zero ops, zero duration
    plan.total_duration = transition_duration(p, mode == TransitionMode::CachedPath);
    plan.ops = build_ops(from, to, plan.total_duration);
    return plan;
}

}  // namespace

TransitionPlan plan_transition(const CalibrationProfile& p, const ClockConfig& from,
                               const ClockConfig& to) {
    check_config(p, from);
    check_config(p, to);
    return make_plan(p, from, to, TransitionMode::SlowPath);
}

TransitionCache::TransitionCache(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("transition cache capacity must be at least 1");
}

std::optional<TransitionPlan> TransitionCache::lookup(const ClockConfig& from,
                                                      const ClockConfig& to) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->from == from && it->to == to) {
            Entry hit = *it;
            entries_.erase(it);
            entries_.push_back(hit);  // most recently used at the back
            return entries_.back().plan;
        }
    }
    return std::nullopt;
}

void TransitionCache::insert(const TransitionPlan& plan) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->from == plan.from && it->to == plan.to) {
            entries_.erase(it);
            break;
        }
    }
    if (entries_.size() >= static_cast<std::size_t>(capacity_)) {
        entries_.erase(entries_.begin());
    }
    entries_.push_back({plan.from, plan.to, plan});
}

DvfsPolicy make_policy(const CalibrationProfile& p) {
    DvfsPolicy policy;
    policy.default_config = reset_config(p);
    return policy;
}

ClockController::ClockController(const CalibrationProfile& profile)
    : profile_(profile),
      cache_(profile.transition_cache_capacity),
      current_(reset_config(profile)) {}

TransitionResult ClockController::execute_transition(const ClockConfig& to) {
    check_config(profile_, current_);
    check_config(profile_, to);

    TransitionResult r;
    r.from = current_;
    r.to = to;
    if (to == current_) {
        r.identity = true;
        return r;
    }

    if (auto cached = cache_.lookup(current_, to)) {
        r.cache_hit = true;
        r.duration = cached->total_duration;
        ++hits_;
    } else {
        const TransitionPlan slow = make_plan(profile_, current_, to, TransitionMode::SlowPath);
        r.duration = slow.total_duration;
        cache_.insert(make_plan(profile_, current_, to, TransitionMode::CachedPath));
        ++misses_;
    }
    r.power_mw = transition_power_mw(profile_, current_, to);
    r.energy_j = r.power_mw * static_cast<double>(r.duration) * 1e-12;
    current_ = to;
    return r;
}

void ClockController::enter_sleep() { current_ = reset_config(profile_); }

TransitionResult ClockController::on_wakeup(const DvfsPolicy& policy,
                                            const std::string& task_id) {
    const auto it = policy.task_targets.find(task_id);
    if (it == policy.task_targets.end()) {
        throw UnknownTaskError("no frequency target for task '" + task_id + "'");
    }
    // The wakeup path goes straight from the reset config to the target, it
    // never restores the pre-sleep configuration first.
    current_ = policy.default_config;
    return execute_transition(it->second);
}

}  // namespace dvfsim
