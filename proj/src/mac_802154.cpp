#include "dvfsim/mac_802154.hpp"

#include <algorithm>
#include <set>

#include "dvfsim/errors.hpp"

namespace dvfsim {

Nanos frame_airtime(int psdu_bytes) {
    if (psdu_bytes < 0 || psdu_bytes > PhyTiming::kMaxPsduBytes) {
        throw FrameTooLargeError("psdu of " + std::to_string(psdu_bytes) +
                                 " bytes exceeds the 127 byte limit");
    }
    return (psdu_bytes + PhyTiming::kPhyOverheadBytes) * PhyTiming::kByteAirtime;
}

void validate(const MacSchedule& s) {
    Nanos cursor = 0;
    for (const auto& iv : s.intervals) {
        if (iv.begin != cursor) {
            throw OverlapError("schedule gap or overlap at " + format_seconds(iv.begin) +
                               ", expected " + format_seconds(cursor));
        }
        if (iv.end <= iv.begin) {
            throw OverlapError("empty or inverted interval at " + format_seconds(iv.begin));
        }
        cursor = iv.end;
    }
    if (cursor != s.horizon) {
        throw OverlapError("schedule ends at " + format_seconds(cursor) +
                           ", horizon is " + format_seconds(s.horizon));
    }
}

std::vector<DeadlineMiss> check_deadlines(const MacSchedule& s, double core_hz) {
    std::vector<DeadlineMiss> misses;
    for (const auto& check : s.deadline_checks) {
        const Nanos needed = cycles_to_nanos(check.required_cycles, core_hz);
        if (needed > check.available_window) {
            misses.push_back({check.at, check.required_cycles, check.available_window,
                              needed, check.label});
        }
    }
    return misses;
}

// ---- Indirect Transmissions ------------------------------------------------

void validate(const IdtxConfig& c) {
    if (c.poll_interval <= 0) throw ConfigError("idtx: poll interval must be positive");
    if (c.data_gap < 0) throw ConfigError("idtx: data gap must not be negative");
    if (c.response_margin <= 0 || c.response_margin >= c.poll_interval) {
        throw ConfigError("idtx: response margin must fit between polls");
    }
    frame_airtime(c.poll_cmd_psdu_bytes);
    frame_airtime(c.ack_psdu_bytes);
}

namespace {

// Appends one interval continuing at the schedule tail. Zero durations are
// dropped so the tiling invariant (no empty intervals) holds.
void push(MacSchedule& s, Nanos duration, McuDemand mcu, RadioState radio,
          const std::string& label) {
    if (duration <= 0) return;
    const Nanos begin = s.horizon;
    s.intervals.push_back({begin, begin + duration, mcu, radio, label});
    s.horizon += duration;
}

}  // namespace

MacSchedule idtx_poll_transaction(const IdtxConfig& c, const std::vector<int>& pending_psdu) {
    validate(c);
    const Nanos poll_air = frame_airtime(c.poll_cmd_psdu_bytes);
    const Nanos ack_air = frame_airtime(c.ack_psdu_bytes);

    MacSchedule s;
    push(s, poll_air, McuDemand::Awake, RadioState::Tx, "poll");
    push(s, PhyTiming::kTurnaround, McuDemand::Awake, RadioState::RxListen, "turnaround");
    push(s, ack_air, McuDemand::Awake, RadioState::RxBusy, "poll-ack");
    for (std::size_t i = 0; i < pending_psdu.size(); ++i) {
        if (i > 0) {
            // Every queued frame after the first needs its own poll.
            push(s, PhyTiming::kTurnaround, McuDemand::Awake, RadioState::RxListen,
                 "turnaround");
            push(s, poll_air, McuDemand::Awake, RadioState::Tx, "poll");
            push(s, PhyTiming::kTurnaround, McuDemand::Awake, RadioState::RxListen,
                 "turnaround");
            push(s, ack_air, McuDemand::Awake, RadioState::RxBusy, "poll-ack");
        }
        push(s, c.data_gap, McuDemand::Awake, RadioState::RxListen, "pending-wait");
        push(s, frame_airtime(pending_psdu[i]), McuDemand::Awake, RadioState::RxBusy,
             "data");
        push(s, PhyTiming::kTurnaround, McuDemand::Awake, RadioState::RxListen,
             "turnaround");
        push(s, ack_air, McuDemand::Awake, RadioState::Tx, "ack");
    }
    return s;
}

// ---- CSMA/CA ----------------------------------------------------------------

Nanos csma_backoff(Rng& rng, int be) {
    if (be < 0 || be > 14) throw OutOfRangeError("backoff exponent out of range");
    const std::uint64_t slots = rng.below(std::uint64_t{1} << be);
    return static_cast<Nanos>(slots) * PhyTiming::kBackoffUnit;
}

std::optional<CsmaState> CsmaEngine::channel_busy() {
    ++state_.nb;
    state_.be = std::min(state_.be + 1, params_.max_be);
    if (state_.nb > params_.max_backoffs) return std::nullopt;
    return state_;
}

MacSchedule csma_uplink_transaction(Rng& rng, int psdu_bytes, int ack_psdu_bytes) {
    MacSchedule s;
    const Nanos backoff = csma_backoff(rng, CsmaParams{}.min_be);
    push(s, backoff, McuDemand::Awake, RadioState::Sleep, "backoff");
    push(s, PhyTiming::kCca, McuDemand::Awake, RadioState::RxListen, "cca");
    push(s, frame_airtime(psdu_bytes), McuDemand::Awake, RadioState::Tx, "data");
    push(s, PhyTiming::kTurnaround, McuDemand::Awake, RadioState::RxListen, "turnaround");
    push(s, frame_airtime(ack_psdu_bytes), McuDemand::Awake, RadioState::RxBusy, "ack");
    return s;
}

// ---- DSME -------------------------------------------------------------------

namespace {

void check_order(int value, const char* name) {
    if (value < 0 || value > 14) {
        throw OutOfRangeError(std::string(name) + " must be within [0, 14]");
    }
}

}  // namespace

Nanos dsme_slot_duration(int so) {
    check_order(so, "superframe order");
    return 60 * (Nanos{1} << so) * PhyTiming::kSymbol;
}

Nanos dsme_superframe_duration(int so) { return 16 * dsme_slot_duration(so); }

Nanos dsme_multisuperframe_duration(int mo) {
    check_order(mo, "multisuperframe order");
    return 960 * (Nanos{1} << mo) * PhyTiming::kSymbol;
}

int dsme_superframes_per_multisuperframe(const DsmeConfig& c) {
    return 1 << (c.mo - c.so);
}

bool dsme_beacon_in_superframe(const DsmeConfig& c, std::int64_t superframe_index) {
    const std::int64_t beacon_every = std::int64_t{1} << (c.bo - c.so);
    return superframe_index % beacon_every == 0;
}

bool dsme_is_cfp_slot(const DsmeConfig& c, int superframe_index, int slot_index) {
    if (slot_index < 1 || slot_index > 15) return false;
    const bool has_cap = !c.cap_reduction || superframe_index == 0;
    return has_cap ? slot_index >= 9 : true;
}

void validate(const DsmeConfig& c) {
    check_order(c.so, "superframe order");
    check_order(c.mo, "multisuperframe order");
    check_order(c.bo, "beacon order");
    if (!(c.so <= c.mo && c.mo <= c.bo)) {
        throw ConfigError("dsme: orders must satisfy so <= mo <= bo");
    }
    if (c.guard < 0 || c.guard >= dsme_slot_duration(c.so)) {
        throw ConfigError("dsme: guard must be shorter than a slot");
    }
    if (c.wake_margin <= 0) throw ConfigError("dsme: wake margin must be positive");
    if (c.gts_margin <= 0 || c.gts_margin >= dsme_slot_duration(c.so)) {
        throw ConfigError("dsme: gts margin must be shorter than a slot");
    }
    frame_airtime(c.beacon_psdu_bytes);

    const int per_msf = dsme_superframes_per_multisuperframe(c);
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& g : c.gts) {
        if (g.superframe_index < 0 || g.superframe_index >= per_msf) {
            throw ConfigError("dsme: gts superframe index out of range");
        }
        if (!dsme_is_cfp_slot(c, g.superframe_index, g.slot_index)) {
            throw ConfigError("dsme: gts slot " + std::to_string(g.slot_index) +
                              " is not a CFP slot of superframe " +
                              std::to_string(g.superframe_index));
        }
        if (!seen.insert({g.superframe_index, g.slot_index, g.channel}).second) {
            throw ConfigError("dsme: duplicate gts allocation");
        }
    }
}

namespace {

struct RadioSegment {
    Nanos begin;
    Nanos end;
    RadioState state;
    std::string label;
    int priority;  // higher wins where segments overlap
};

struct AwakeSpan {
    Nanos begin;
    Nanos end;
};

// Resolves possibly-overlapping radio segments and awake spans into the
// gap-free interval tiling the schedule requires.
MacSchedule assemble(Nanos horizon, const std::vector<RadioSegment>& radio,
                     const std::vector<AwakeSpan>& awake,
                     std::vector<DeadlineCheck> checks) {
    std::set<Nanos> cuts{0, horizon};
    for (const auto& seg : radio) {
        if (seg.begin < horizon) cuts.insert(std::max<Nanos>(0, seg.begin));
        if (seg.end <= horizon) cuts.insert(std::max<Nanos>(0, seg.end));
    }
    for (const auto& span : awake) {
        if (span.begin < horizon) cuts.insert(std::max<Nanos>(0, span.begin));
        if (span.end <= horizon) cuts.insert(std::max<Nanos>(0, span.end));
    }

    MacSchedule s;
    s.horizon = 0;
    auto it = cuts.begin();
    Nanos prev = *it;
    for (++it; it != cuts.end(); ++it) {
        const Nanos a = prev;
        const Nanos b = *it;
        prev = b;
        const RadioSegment* chosen = nullptr;
        for (const auto& seg : radio) {
            if (seg.begin <= a && seg.end >= b) {
                if (!chosen || seg.priority > chosen->priority) chosen = &seg;
            }
        }
        bool is_awake = false;
        for (const auto& span : awake) {
            if (span.begin <= a && span.end >= b) {
                is_awake = true;
                break;
            }
        }
        ScheduleInterval iv;
        iv.begin = a;
        iv.end = b;
        iv.mcu = is_awake ? McuDemand::Awake : McuDemand::Sleep;
        iv.radio = chosen ? chosen->state : RadioState::Off;
        iv.label = chosen ? chosen->label : (is_awake ? "mac-wake" : "");
        // Merge with the previous interval when nothing changed at the cut.
        if (!s.intervals.empty()) {
            auto& last = s.intervals.back();
            if (last.mcu == iv.mcu && last.radio == iv.radio && last.label == iv.label) {
                last.end = iv.end;
                s.horizon = iv.end;
                continue;
            }
        }
        s.intervals.push_back(iv);
        s.horizon = iv.end;
    }
    s.deadline_checks = std::move(checks);
    std::sort(s.deadline_checks.begin(), s.deadline_checks.end(),
              [](const DeadlineCheck& x, const DeadlineCheck& y) { return x.at < y.at; });
    return s;
}

}  // namespace

MacSchedule build_dsme_schedule(const DsmeConfig& c, Nanos horizon,
                                const DsmeTraffic& traffic) {
    validate(c);
    if (horizon < dsme_multisuperframe_duration(c.mo)) {
        throw ConfigError("dsme: horizon must cover at least one multisuperframe");
    }
    const Nanos slot = dsme_slot_duration(c.so);
    const Nanos sf = dsme_superframe_duration(c.so);
    const int per_msf = dsme_superframes_per_multisuperframe(c);
    const Nanos ack_air = frame_airtime(traffic.ack_psdu_bytes);

    std::vector<RadioSegment> radio;
    std::vector<AwakeSpan> awake;
    std::vector<DeadlineCheck> checks;

    for (std::int64_t s_idx = 0; s_idx * sf < horizon; ++s_idx) {
        const Nanos base = s_idx * sf;
        const int in_msf = static_cast<int>(s_idx % per_msf);
        const bool has_cap = !c.cap_reduction || in_msf == 0;

        // Boundary maintenance wake. The run starts at a boundary, so the
        // first superframe needs no pre-wake.
        if (s_idx > 0) {
            awake.push_back({base - c.wake_margin, base});
            checks.push_back({base - c.wake_margin, c.preprocessing_cycles,
                              c.wake_margin, "superframe-boundary"});
        }
        if (dsme_beacon_in_superframe(c, s_idx)) {
            radio.push_back({base, base + c.guard + frame_airtime(c.beacon_psdu_bytes),
                             RadioState::RxBusy, "beacon", 1});
        }
        if (has_cap) {
            // The node serves the contention period awake, sleeping at its end.
            radio.push_back({base + slot, base + 9 * slot, RadioState::RxListen, "cap", 1});
            awake.push_back({base, base + 9 * slot});
        }

        for (const auto& g : c.gts) {
            if (g.superframe_index != in_msf) continue;
            const Nanos s_begin = base + g.slot_index * slot;
            const Nanos s_end = s_begin + slot;
            const auto key = std::make_pair(s_idx, g.slot_index);

            if (g.direction == GtsDirection::Downlink) {
                awake.push_back({s_begin - c.gts_margin, s_end});
                checks.push_back({s_begin - c.gts_margin, c.preprocessing_cycles,
                                  c.gts_margin, "gts-rx-wake"});
                radio.push_back({s_begin - c.guard, s_end, RadioState::RxListen,
                                 "gts-rx", 2});
                auto it = traffic.downlink.find(key);
                if (it != traffic.downlink.end()) {
                    Nanos t = s_begin;
                    for (int psdu : it->second) {
                        const Nanos air = frame_airtime(psdu);
                        radio.push_back({t, t + air, RadioState::RxBusy, "gts-rx-data", 3});
                        t += air + PhyTiming::kTurnaround;
                        radio.push_back({t, t + ack_air, RadioState::Tx, "gts-rx-ack", 3});
                        t += ack_air + PhyTiming::kTurnaround;
                    }
                    if (t - PhyTiming::kTurnaround > s_end) {
                        throw CapacityError("dsme: downlink exchange exceeds its slot");
                    }
                }
            } else {
                auto it = traffic.uplink.find(key);
                if (it == traffic.uplink.end() || it->second.empty()) {
                    continue;  // nothing pending: stay asleep, radio off
                }
                awake.push_back({s_begin - c.gts_margin, s_end});
                checks.push_back({s_begin - c.gts_margin, c.preprocessing_cycles,
                                  c.gts_margin, "gts-tx-wake"});
                Nanos t = s_begin;
                for (int psdu : it->second) {
                    const Nanos air = frame_airtime(psdu);
                    radio.push_back({t, t + air, RadioState::Tx, "gts-tx-data", 2});
                    t += air;
                    radio.push_back({t, t + PhyTiming::kTurnaround, RadioState::RxListen,
                                     "turnaround", 2});
                    t += PhyTiming::kTurnaround;
                    radio.push_back({t, t + ack_air, RadioState::RxBusy, "gts-tx-ack", 2});
                    t += ack_air + PhyTiming::kTurnaround;
                }
                if (t - PhyTiming::kTurnaround > s_end) {
                    throw CapacityError("dsme: uplink exchange exceeds its slot");
                }
            }
        }
    }

    return assemble(horizon, radio, awake, std::move(checks));
}

Nanos radio_on_time(const MacSchedule& s) {
    Nanos total = 0;
    for (const auto& iv : s.intervals) {
        if (iv.radio == RadioState::RxListen || iv.radio == RadioState::RxBusy ||
            iv.radio == RadioState::Tx) {
            total += iv.end - iv.begin;
        }
    }
    return total;
}

}  // namespace dvfsim
