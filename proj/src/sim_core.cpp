#include "dvfsim/sim_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dvfsim/errors.hpp"

namespace dvfsim {

namespace {

const ClockConfig& target_of(const DvfsPolicy& policy, const std::string& task) {
    auto it = policy.task_targets.find(task);
    if (it == policy.task_targets.end()) {
        throw UnknownTaskError("no frequency target for task '" + task + "'");
    }
    return it->second;
}

double target_hz(const DvfsPolicy& policy, const std::string& task) {
    return target_of(policy, task).core_mhz * 1e6;
}

// MCU awake demand. Fixed spans are anchored to radio activity and never
// move; shiftable spans are serial work that slides back when a mid-wake
// frequency switch delays it.
struct Span {
    Nanos begin = 0;
    Nanos end = 0;
    std::string task;
    std::string label;
    bool shiftable = false;
    std::string window_tag;  // nonempty: report an energy window for this work
    int seq = 0;
};

struct RadioDemand {
    Nanos begin = 0;
    Nanos end = 0;
    RadioState state = RadioState::Off;
    int prio = 0;
    int seq = 0;
    std::string label;
};

// Everything the scenario asks of the hardware, in absolute time over
// [0, warmup + duration]. Purely a function of the scenario: no controller
// state is consulted while building demand.
struct Demand {
    std::vector<Span> spans;
    std::vector<RadioDemand> radio;
    std::vector<DeadlineCheck> checks;
    std::vector<SimEvent> events;                         // absolute
    std::vector<RequestWindow> requests;                  // absolute
    std::vector<std::pair<Nanos, Nanos>> request_blind;   // zones excluded from request energy
    std::set<Nanos> consumed_timer_anchors;
    int seq = 0;

    void awake(Nanos b, Nanos e, std::string task, std::string label, bool shiftable,
               std::string window_tag = "") {
        if (e <= b) return;
        spans.push_back({b, e, std::move(task), std::move(label), shiftable,
                         std::move(window_tag), seq++});
    }

    void rseg(Nanos b, Nanos e, RadioState st, int prio, std::string label) {
        if (e <= b) return;
        radio.push_back({b, e, st, prio, seq++, std::move(label)});
    }

    // Places a relative schedule fragment at an absolute anchor: one awake
    // span covering the whole fragment plus its radio activity.
    void place_fragment(const MacSchedule& frag, Nanos at, const std::string& task,
                        const std::string& label, int prio, bool radio_stays_listening) {
        awake(at, at + frag.horizon, task, label, false);
        for (const auto& iv : frag.intervals) {
            RadioState st = iv.radio;
            if (radio_stays_listening && st == RadioState::Sleep) st = RadioState::RxListen;
            if (st == RadioState::Off) continue;
            rseg(at + iv.begin, at + iv.end, st, prio, iv.label);
        }
        for (const auto& c : frag.deadline_checks) {
            checks.push_back({at + c.at, c.required_cycles, c.available_window, c.label});
        }
    }
};

// ---- demand builders --------------------------------------------------------

void build_timer(Demand& d, const Scenario& s, Nanos horizon, double hz) {
    for (Nanos t = s.timer.period; t <= horizon; t += s.timer.period) {
        if (d.consumed_timer_anchors.count(t)) continue;
        d.awake(t, t + cycles_to_nanos(s.timer.wakeup_cycles, hz), "timer", "timer", false);
    }
}

// Datagram identity of a frame label: fragments of one datagram share the
// label up to the trailing "-fN".
std::string datagram_of(const std::string& label) {
    const auto pos = label.rfind("-f");
    if (pos == std::string::npos) return label;
    for (std::size_t i = pos + 2; i < label.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(label[i]))) return label;
    }
    return label.substr(0, pos);
}

void build_idtx(Demand& d, const Scenario& s, Rng& rng, Nanos horizon) {
    const double hz_mac = target_hz(s.policy, "mac");
    const IdtxConfig& c = s.idtx;

    // Fetch bound to a poll anchor: queued downlink frames plus the decode
    // work that closes the enclosing request once the last frame is in.
    struct Fetch {
        std::vector<int> psdus;
        std::uint64_t decode_cycles = 0;
    };
    std::map<Nanos, Fetch> fetches;

    const auto next_anchor_after = [&](Nanos t) {
        const Nanos k = t / c.poll_interval + 1;
        return k * c.poll_interval;
    };

    if (s.app.burst > 0) {
        const double hz_app = target_hz(s.policy, "app");
        const auto plan =
            plan_coap_exchange(s.app.method, s.app.payload_bytes, s.app.secure, s.app.overheads);
        const auto actions = bind_to_mac(plan, MacMode::Idtx);

        Nanos issue = s.warmup + s.app.first_issue_offset;
        for (int r = 0; r < s.app.burst; ++r) {
            d.events.push_back({issue, "issue:" + std::to_string(r)});
            Nanos cursor = issue;
            std::string prev_datagram;
            for (const auto& a : actions) {
                if (a.kind == MacAction::Kind::CsmaUplink) {
                    const std::string dg = datagram_of(a.label);
                    std::uint64_t cyc = static_cast<std::uint64_t>(a.cpu_cycles);
                    if (dg != prev_datagram) cyc += s.app.encode_cycles;
                    prev_datagram = dg;
                    const Nanos enc = cycles_to_nanos(cyc, hz_app);
                    d.awake(cursor, cursor + enc, "app", "encode", true);
                    cursor += enc;
                    const auto frag =
                        csma_uplink_transaction(rng, a.psdu_list.front(), c.ack_psdu_bytes);
                    d.place_fragment(frag, cursor, "app", a.label, 5, false);
                    cursor += frag.horizon;
                } else {  // PollDownlink
                    const Nanos anchor = next_anchor_after(cursor);
                    if (anchor > horizon) {
                        throw ConfigError("burst does not fit the run: response poll at " +
                                          format_seconds(anchor) + " is past the end");
                    }
                    Fetch& f = fetches[anchor];
                    f.psdus = a.psdu_list;
                    f.decode_cycles =
                        s.app.decode_cycles + static_cast<std::uint64_t>(a.cpu_cycles);
                    // The poll chain and decode finish strictly before the
                    // next grid point, so later actions land on later polls.
                    const auto chain = idtx_poll_transaction(c, f.psdus);
                    cursor = anchor + chain.horizon +
                             cycles_to_nanos(f.decode_cycles, hz_app);
                    prev_datagram.clear();
                }
            }
            if (cursor > horizon) {
                throw ConfigError("burst does not fit the run");
            }
            d.requests.push_back({issue, cursor, r});
            d.events.push_back({cursor, "delivered:" + std::to_string(r)});
            issue = cursor;
        }
    }

    // Poll grid. The anchor at the horizon still matters: its wake
    // transition lands inside the run, the chain itself is clipped away.
    for (Nanos anchor = c.poll_interval; anchor <= horizon; anchor += c.poll_interval) {
        const auto it = fetches.find(anchor);
        const bool has_data = it != fetches.end();
        const auto chain =
            idtx_poll_transaction(c, has_data ? it->second.psdus : std::vector<int>{});
        d.place_fragment(chain, anchor, "mac", "poll", 3, false);
        Nanos cursor = anchor + chain.horizon;

        if (has_data) {
            // Staging wake ahead of an expected response; the preprocessing
            // must finish before the poll goes out.
            d.awake(anchor - c.response_margin, anchor, "mac", "response-wait", false);
            d.checks.push_back({anchor - c.response_margin, c.response_preprocess_cycles,
                                c.response_margin, "response-preprocess"});
            const double hz_app = target_hz(s.policy, "app");
            const Nanos dec = cycles_to_nanos(it->second.decode_cycles, hz_app);
            d.awake(cursor, cursor + dec, "app", "decode", true);
            cursor += dec;
        }

        std::uint64_t book = c.poll_handler_cycles;
        if (anchor % s.timer.period == 0) {
            book += s.timer.wakeup_cycles;
            d.consumed_timer_anchors.insert(anchor);
        }
        const Nanos book_end = cursor + cycles_to_nanos(book, hz_mac);
        d.awake(cursor, book_end, "mac", "poll-housekeeping", true);
        cursor = book_end;

        for (const auto& task : s.tasks) {
            const Nanos len = cycles_to_nanos(task.cycles, target_hz(s.policy, task.task_id));
            d.awake(cursor, cursor + len, task.task_id, task.task_id, true, task.task_id);
            cursor += len;
        }

        // Without application traffic each poll transaction is itself the
        // request being accounted: chain plus housekeeping, transitions at
        // the wake excluded.
        if (s.app.burst == 0 && anchor >= s.warmup && book_end <= horizon) {
            d.requests.push_back({anchor, book_end,
                                  static_cast<int>(d.requests.size())});
        }
    }
}

void build_always_on(Demand& d, const Scenario& s, Rng& rng, Nanos horizon) {
    d.awake(0, horizon, "mac", "listen", false);
    d.rseg(0, horizon, RadioState::RxListen, 0, "listen");

    if (s.app.burst == 0) return;
    const double hz_app = target_hz(s.policy, "app");
    const auto plan =
        plan_coap_exchange(s.app.method, s.app.payload_bytes, s.app.secure, s.app.overheads);
    const auto actions = bind_to_mac(plan, MacMode::AlwaysOn);

    Nanos issue = s.warmup + s.app.first_issue_offset;
    for (int r = 0; r < s.app.burst; ++r) {
        d.events.push_back({issue, "issue:" + std::to_string(r)});
        Nanos cursor = issue;
        std::string prev_datagram;
        for (const auto& a : actions) {
            if (a.kind == MacAction::Kind::InlineUplink) {
                const std::string dg = datagram_of(a.label);
                std::uint64_t cyc = static_cast<std::uint64_t>(a.cpu_cycles);
                if (dg != prev_datagram) cyc += s.app.encode_cycles;
                prev_datagram = dg;
                cursor += cycles_to_nanos(cyc, hz_app);
                const auto frag =
                    csma_uplink_transaction(rng, a.psdu_list.front(), s.idtx.ack_psdu_bytes);
                d.place_fragment(frag, cursor, "mac", a.label, 5, true);
                cursor += frag.horizon;
            } else {  // InlineDownlink
                cursor += s.app.inline_response_latency;
                const Nanos air = frame_airtime(a.psdu_list.front());
                const Nanos ack = frame_airtime(s.idtx.ack_psdu_bytes);
                d.rseg(cursor, cursor + air, RadioState::RxBusy, 5, a.label);
                d.rseg(cursor + air, cursor + air + PhyTiming::kTurnaround,
                       RadioState::RxListen, 5, "turnaround");
                d.rseg(cursor + air + PhyTiming::kTurnaround,
                       cursor + air + PhyTiming::kTurnaround + ack, RadioState::Tx, 5, "ack");
                cursor += air + PhyTiming::kTurnaround + ack;
                const std::uint64_t cyc =
                    s.app.decode_cycles + static_cast<std::uint64_t>(a.cpu_cycles);
                cursor += cycles_to_nanos(cyc, hz_app);
                if (&a == &actions.back()) {
                    d.requests.push_back({issue, cursor, r});
                    d.events.push_back({cursor, "delivered:" + std::to_string(r)});
                }
            }
        }
        if (cursor > horizon) throw ConfigError("burst does not fit the run");
        issue = cursor;
    }
}

void build_dsme(Demand& d, const Scenario& s, Nanos horizon) {
    const DsmeConfig& c = s.dsme;
    const Nanos slot = dsme_slot_duration(c.so);
    const Nanos sf = dsme_superframe_duration(c.so);
    const int per_msf = dsme_superframes_per_multisuperframe(c);

    DsmeTraffic traffic;
    traffic.ack_psdu_bytes = s.idtx.ack_psdu_bytes;
    const Nanos ack_air = frame_airtime(traffic.ack_psdu_bytes);

    // Absolute begin of the next owned slot of a direction at or after t.
    const auto next_slot = [&](GtsDirection dir, Nanos t) {
        for (std::int64_t s_idx = std::max<std::int64_t>(t / sf - 1, 0);
             s_idx * sf <= horizon; ++s_idx) {
            const int in_msf = static_cast<int>(s_idx % per_msf);
            Nanos best = -1;
            for (const auto& g : c.gts) {
                if (g.direction != dir || g.superframe_index != in_msf) continue;
                const Nanos begin = s_idx * sf + g.slot_index * slot;
                if (begin >= t && (best < 0 || begin < best)) best = begin;
            }
            if (best >= 0) return best;
        }
        throw ConfigError("request does not fit the run: no owned slot left");
    };

    if (s.app.burst > 0) {
        const double hz_app = target_hz(s.policy, "app");
        const auto plan =
            plan_coap_exchange(s.app.method, s.app.payload_bytes, s.app.secure, s.app.overheads);
        const auto actions = bind_to_mac(plan, MacMode::Dsme);

        Nanos issue = s.warmup + s.app.first_issue_offset;
        for (int r = 0; r < s.app.burst; ++r) {
            d.events.push_back({issue, "issue:" + std::to_string(r)});
            Nanos cursor = issue;
            std::size_t i = 0;
            while (i < actions.size()) {
                // All fragments of one datagram ride the same slot.
                const std::string dg = datagram_of(actions[i].label);
                std::size_t j = i;
                std::vector<int> psdus;
                std::uint64_t crypto = 0;
                while (j < actions.size() && actions[j].kind == actions[i].kind &&
                       datagram_of(actions[j].label) == dg) {
                    psdus.push_back(actions[j].psdu_list.front());
                    crypto += static_cast<std::uint64_t>(actions[j].cpu_cycles);
                    ++j;
                }
                Nanos chain = 0;
                for (int psdu : psdus) {
                    chain += frame_airtime(psdu) + PhyTiming::kTurnaround + ack_air +
                             PhyTiming::kTurnaround;
                }
                chain -= PhyTiming::kTurnaround;
                if (chain > slot) {
                    throw CapacityError("datagram exchange does not fit one slot");
                }

                if (actions[i].kind == MacAction::Kind::GtsUplink) {
                    const Nanos enc = cycles_to_nanos(s.app.encode_cycles + crypto, hz_app);
                    d.awake(cursor, cursor + enc, "app", "encode", true);
                    cursor += enc;
                    const Nanos begin = next_slot(GtsDirection::Uplink, cursor);
                    const auto key = std::make_pair(begin / sf,
                                                    static_cast<int>((begin % sf) / slot));
                    auto& q = traffic.uplink[key];
                    q.insert(q.end(), psdus.begin(), psdus.end());
                    cursor = begin + slot;  // response can enter a later slot only
                } else {
                    const Nanos begin = next_slot(GtsDirection::Downlink, cursor);
                    const auto key = std::make_pair(begin / sf,
                                                    static_cast<int>((begin % sf) / slot));
                    auto& q = traffic.downlink[key];
                    q.insert(q.end(), psdus.begin(), psdus.end());
                    const Nanos radio_done = begin + chain;
                    const Nanos dec =
                        cycles_to_nanos(s.app.decode_cycles + crypto, hz_app);
                    d.awake(radio_done, radio_done + dec, "app", "decode", true);
                    cursor = radio_done + dec;
                    if (j == actions.size()) {
                        d.requests.push_back({issue, cursor, r});
                        d.events.push_back({cursor, "delivered:" + std::to_string(r)});
                    }
                }
                i = j;
            }
            if (cursor > horizon) throw ConfigError("burst does not fit the run");
            issue = cursor;
        }
    }

    const auto schedule = build_dsme_schedule(c, horizon, traffic);
    for (const auto& iv : schedule.intervals) {
        if (iv.mcu == McuDemand::Awake) d.awake(iv.begin, iv.end, "mac", iv.label, false);
        if (iv.radio != RadioState::Off) d.rseg(iv.begin, iv.end, iv.radio, 2, iv.label);
    }
    for (const auto& chk : schedule.deadline_checks) d.checks.push_back(chk);

    // Request accounting is blind to the shared structure the node would pay
    // for anyway: beacon reception and CAP listening (with their boundary
    // wake), which belong to the period, not to any one request.
    for (std::int64_t s_idx = 0; s_idx * sf <= horizon; ++s_idx) {
        const bool has_cap = !c.cap_reduction || (s_idx % per_msf) == 0;
        if (!has_cap) continue;
        const Nanos base = s_idx * sf;
        d.request_blind.push_back(
            {s_idx > 0 ? base - c.wake_margin : base, base + 9 * slot});
    }
}

// ---- realization ------------------------------------------------------------

struct McuPiece {
    Nanos begin = 0;
    Nanos end = 0;
    McuState state;
    std::string label;
};

struct TaskWindowAbs {
    std::string label;
    Nanos begin = 0;
    Nanos end = 0;
};

struct Realized {
    std::vector<McuPiece> mcu;  // tiles [0, horizon]
    std::vector<TaskWindowAbs> task_windows;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
};

const ClockConfig& faster_endpoint(const CalibrationProfile& p, const TransitionResult& r) {
    const double pf = mcu_power_mw(p, McuState::active(r.from));
    const double pt = mcu_power_mw(p, McuState::active(r.to));
    return pt >= pf ? r.to : r.from;
}

// The operating point a run is summarized under: the mac target when one
// exists, else the timer's, else the policy default.
ClockConfig run_level(const Scenario& s) {
    auto it = s.policy.task_targets.find("mac");
    if (it == s.policy.task_targets.end()) it = s.policy.task_targets.find("timer");
    return it != s.policy.task_targets.end() ? it->second : s.policy.default_config;
}

Realized realize_mcu(const Scenario& s, std::vector<Span> spans, Nanos horizon) {
    Realized out;
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return a.seq < b.seq;
    });

    // Maximal unions of overlapping or adjacent spans: one hardware wake each.
    struct Episode {
        Nanos begin = 0;
        Nanos end = 0;
        std::vector<const Span*> spans;
    };
    std::vector<Episode> episodes;
    for (const auto& sp : spans) {
        if (!episodes.empty() && sp.begin <= episodes.back().end) {
            episodes.back().end = std::max(episodes.back().end, sp.end);
            episodes.back().spans.push_back(&sp);
        } else {
            episodes.push_back({sp.begin, sp.end, {&sp}});
        }
    }

    ClockController ctl(s.profile);
    std::vector<McuPiece>& pieces = out.mcu;
    Nanos prev_end = 0;

    // Without LPM the clock is brought up once and left running; wakes are
    // free and idle time burns the standing level's active current.
    ClockConfig standing = reset_config(s.profile);
    if (!s.lpm) {
        const auto boot = ctl.execute_transition(run_level(s));
        if (boot.duration > 0) {
            pieces.push_back({0, boot.duration,
                              McuState::transition(faster_endpoint(s.profile, boot)),
                              "clock-setup"});
        }
        standing = boot.to;
        prev_end = boot.duration;
    }

    for (const auto& ep : episodes) {
        const Span* first = ep.spans.front();

        Nanos tend;
        ClockConfig cur;
        if (s.lpm) {
            const auto wake = ctl.on_wakeup(s.policy, first->task);
            const Nanos tstart = std::max(prev_end, ep.begin - wake.duration);
            tend = tstart + wake.duration;
            if (wake.duration > 0) {
                pieces.push_back(
                    {tstart, tend, McuState::transition(faster_endpoint(s.profile, wake)),
                     "wake"});
            }
            cur = wake.to;
        } else {
            if (ep.begin > prev_end) {
                pieces.push_back({prev_end, ep.begin, McuState::active(standing), "idle"});
            }
            tend = std::max(prev_end, ep.begin);
            cur = standing;
        }
        const Nanos active_start = std::max(ep.begin, tend);
        const ClockConfig entry_cfg = cur;

        // Label step function painted in span order; later work overrides.
        std::map<Nanos, std::string> lab;
        const auto label_at = [&](Nanos t) -> std::string {
            auto it = lab.upper_bound(t);
            if (it == lab.begin()) return "";
            return std::prev(it)->second;
        };
        const auto paint = [&](Nanos b, Nanos e, const std::string& L) {
            if (b >= e) return;
            const std::string tail = label_at(e);
            auto it = lab.lower_bound(b);
            while (it != lab.end() && it->first < e) it = lab.erase(it);
            lab[b] = L;
            lab[e] = tail;
        };

        struct Switch {
            Nanos begin = 0;
            Nanos end = 0;
            ClockConfig after;
            ClockConfig shown;
        };
        std::vector<Switch> switches;
        Nanos shift = 0;
        Nanos work_end = ep.end;

        for (const Span* sp : ep.spans) {
            Nanos b = sp->begin + (sp->shiftable ? shift : 0);
            const Nanos len = sp->end - sp->begin;
            const ClockConfig& tgt = target_of(s.policy, sp->task);
            Nanos window_begin = b;
            if (tgt != cur) {
                const auto r = ctl.execute_transition(tgt);
                switches.push_back({b, b + r.duration, tgt, faster_endpoint(s.profile, r)});
                shift += r.duration;
                b += r.duration;
                cur = tgt;
            }
            const Nanos e = b + len;
            paint(b, e, sp->label);
            if (!sp->window_tag.empty()) {
                out.task_windows.push_back({sp->window_tag, window_begin, e});
            }
            work_end = std::max(work_end, e);
        }

        // Emit the episode: active stretches cut at switches and at label
        // changes.
        const auto emit_active = [&](Nanos x, Nanos y, const ClockConfig& cfg) {
            Nanos t = x;
            while (t < y) {
                auto nx = lab.upper_bound(t);
                const Nanos seg_end = (nx != lab.end() && nx->first < y) ? nx->first : y;
                pieces.push_back({t, seg_end, McuState::active(cfg), label_at(t)});
                t = seg_end;
            }
        };
        Nanos cursor = active_start;
        ClockConfig cfg = entry_cfg;
        for (const auto& sw : switches) {
            emit_active(cursor, sw.begin, cfg);
            pieces.push_back({sw.begin, sw.end, McuState::transition(sw.shown), "dvfs-switch"});
            cursor = sw.end;
            cfg = sw.after;
        }
        emit_active(cursor, work_end, cfg);

        if (s.lpm) {
            ctl.enter_sleep();
        } else {
            standing = cfg;
        }
        prev_end = std::max(work_end, tend);
    }
    if (!s.lpm && prev_end < horizon) {
        pieces.push_back({prev_end, horizon, McuState::active(standing), "idle"});
    }

    // Clip to the run and fill the gaps with sleep. The clamp to the cursor
    // keeps the lane tiled even if a degenerate scenario makes wakes collide.
    std::vector<McuPiece> tiled;
    Nanos cursor = 0;
    for (auto& p : pieces) {
        p.begin = std::max(p.begin, cursor);
        p.end = std::min(p.end, horizon);
        if (p.end <= p.begin) continue;
        if (p.begin > cursor) tiled.push_back({cursor, p.begin, McuState::sleep(), ""});
        tiled.push_back(p);
        cursor = p.end;
    }
    if (cursor < horizon) tiled.push_back({cursor, horizon, McuState::sleep(), ""});
    out.mcu = std::move(tiled);

    out.cache_hits = ctl.cache_hits();
    out.cache_misses = ctl.cache_misses();
    return out;
}

// Resolves overlapping radio demands into a tiling of [0, horizon]; gaps are
// radio-off time.
std::vector<RadioDemand> tile_radio(const std::vector<RadioDemand>& segs, Nanos horizon) {
    std::set<Nanos> cuts{0, horizon};
    for (const auto& seg : segs) {
        if (seg.begin > 0 && seg.begin < horizon) cuts.insert(seg.begin);
        if (seg.end > 0 && seg.end < horizon) cuts.insert(seg.end);
    }
    std::vector<RadioDemand> out;
    auto it = cuts.begin();
    Nanos prev = *it;
    for (++it; it != cuts.end(); ++it) {
        const Nanos a = prev;
        const Nanos b = *it;
        prev = b;
        const RadioDemand* chosen = nullptr;
        for (const auto& seg : segs) {
            if (seg.begin <= a && seg.end >= b) {
                if (!chosen || seg.prio > chosen->prio ||
                    (seg.prio == chosen->prio && seg.seq > chosen->seq)) {
                    chosen = &seg;
                }
            }
        }
        RadioDemand r;
        r.begin = a;
        r.end = b;
        r.state = chosen ? chosen->state : RadioState::Off;
        r.label = chosen ? chosen->label : "";
        if (!out.empty() && out.back().state == r.state && out.back().label == r.label &&
            out.back().end == r.begin) {
            out.back().end = r.end;
        } else {
            out.push_back(r);
        }
    }
    return out;
}

// ---- windows ----------------------------------------------------------------

// Energy inside [wb, we), with the blind zones removed, integrated over the
// final trace rows (relative coordinates throughout).
EnergyBreakdown window_energy(const std::vector<TraceInterval>& rows, Nanos wb, Nanos we,
                              const std::vector<std::pair<Nanos, Nanos>>& blind) {
    EnergyAccumulator mcu, radio;
    for (const auto& row : rows) {
        Nanos b = std::max(row.begin, wb);
        Nanos e = std::min(row.end, we);
        if (e <= b) continue;
        Nanos covered = 0;
        for (const auto& z : blind) {
            const Nanos zb = std::max(b, z.first);
            const Nanos ze = std::min(e, z.second);
            if (ze > zb) covered += ze - zb;
        }
        const Nanos dur = (e - b) - covered;
        if (dur <= 0) continue;
        (row.component == "mcu" ? mcu : radio).add(row.power_mw, dur);
    }
    return make_breakdown(mcu, radio, we - wb);
}

}  // namespace

// ---- scenario ----------------------------------------------------------------

void validate(const Scenario& s) {
    validate(s.profile);
    if (s.duration < 0 || s.warmup < 0) throw ConfigError("durations must not be negative");
    if (s.timer.period <= 0) throw ConfigError("timer period must be positive");

    const auto check_target = [&](const std::string& task) {
        // Resolves the task and verifies its target is reachable.
        plan_transition(s.profile, reset_config(s.profile), target_of(s.policy, task));
    };
    check_target("timer");
    if (s.mac != MacMode::None) check_target("mac");
    if (s.app.burst > 0) check_target("app");
    for (const auto& t : s.tasks) {
        if (t.cycles == 0) throw ConfigError("compute task must cost cycles");
        check_target(t.task_id);
    }

    if (!s.tasks.empty() && s.mac != MacMode::Idtx) {
        throw ConfigError("compute tasks ride poll wakes and need the polling mac");
    }
    if (s.app.burst > 0) {
        if (s.mac == MacMode::None) throw ConfigError("traffic needs a mac");
        if (s.duration <= 0) throw ConfigError("traffic needs a measured span");
        if (s.app.first_issue_offset < 0) throw ConfigError("issue offset must not be negative");
        // Throws on unserviceable payload/method combinations.
        plan_coap_exchange(s.app.method, s.app.payload_bytes, s.app.secure, s.app.overheads);
    }
    if (s.mac == MacMode::Idtx) validate(s.idtx);
    if (s.mac == MacMode::Dsme) {
        validate(s.dsme);
        if (s.warmup + s.duration < dsme_multisuperframe_duration(s.dsme.mo)) {
            throw ConfigError("dsme runs must cover at least one multisuperframe");
        }
    }
}

DvfsPolicy uniform_policy(const CalibrationProfile& p, const ClockConfig& level,
                          const std::vector<std::string>& extra_tasks) {
    DvfsPolicy pol = make_policy(p);
    for (const char* id : {"timer", "mac", "app"}) pol.task_targets[id] = level;
    for (const auto& id : extra_tasks) pol.task_targets[id] = level;
    return pol;
}

RunResult run_scenario(const Scenario& s) {
    validate(s);
    const Nanos horizon = s.warmup + s.duration;

    Demand d;
    Rng rng(s.seed);
    switch (s.mac) {
        case MacMode::None:
            break;
        case MacMode::AlwaysOn:
            build_always_on(d, s, rng, horizon);
            break;
        case MacMode::Idtx:
            build_idtx(d, s, rng, horizon);
            break;
        case MacMode::Dsme:
            build_dsme(d, s, horizon);
            break;
    }
    build_timer(d, s, horizon, target_hz(s.policy, "timer"));
    if (s.radio_listen_idle) d.rseg(0, horizon, RadioState::RxListen, -1, "listen");

    const auto realized = realize_mcu(s, d.spans, horizon);
    const auto radio = tile_radio(d.radio, horizon);

    // Assemble the trace: clip to the measured span, shift to its start,
    // merge-sort the two component lanes.
    RunResult result;
    SimTrace& trace = result.trace;
    trace.duration = s.duration;

    std::vector<TraceInterval> mcu_rows, radio_rows;
    for (const auto& p : realized.mcu) {
        const Nanos b = std::max(p.begin, s.warmup);
        const Nanos e = std::min(p.end, horizon);
        if (e <= b) continue;
        mcu_rows.push_back({b - s.warmup, e - s.warmup, "mcu", to_string(p.state),
                            mcu_power_mw(s.profile, p.state), p.label});
    }
    for (const auto& r : radio) {
        const Nanos b = std::max(r.begin, s.warmup);
        const Nanos e = std::min(r.end, horizon);
        if (e <= b) continue;
        radio_rows.push_back({b - s.warmup, e - s.warmup, "radio", to_string(r.state),
                              radio_power_mw(s.profile, r.state), r.label});
    }
    trace.intervals.reserve(mcu_rows.size() + radio_rows.size());
    std::merge(mcu_rows.begin(), mcu_rows.end(), radio_rows.begin(), radio_rows.end(),
               std::back_inserter(trace.intervals),
               [](const TraceInterval& a, const TraceInterval& b) {
                   if (a.begin != b.begin) return a.begin < b.begin;
                   return a.component < b.component;
               });

    for (const auto& ev : d.events) {
        if (ev.at < s.warmup || ev.at > horizon) continue;
        trace.events.push_back({ev.at - s.warmup, ev.kind});
    }
    for (const auto& w : d.requests) {
        if (w.begin < s.warmup || w.end > horizon) continue;
        trace.request_windows.push_back({w.begin - s.warmup, w.end - s.warmup,
                                         static_cast<int>(trace.request_windows.size())});
    }

    // Totals accumulate in row order; the exported CSV replays the identical
    // sequence, which is what makes re-integration exact.
    EnergyAccumulator mcu_acc, radio_acc;
    Nanos radio_on = 0;
    for (const auto& row : trace.intervals) {
        if (row.component == "mcu") {
            mcu_acc.add(row.power_mw, row.end - row.begin);
        } else {
            radio_acc.add(row.power_mw, row.end - row.begin);
            if (row.state != to_string(RadioState::Off) &&
                row.state != to_string(RadioState::Sleep)) {
                radio_on += row.end - row.begin;
            }
        }
    }

    RunReport& rep = result.report;
    rep.scenario_name = s.name;
    rep.level = run_level(s);
    rep.mac = s.mac;
    rep.method = s.app.method;
    rep.payload_bytes = s.app.payload_bytes;
    rep.secure = s.app.secure;
    rep.burst = s.app.burst;
    rep.duration = s.duration;
    rep.total = make_breakdown(mcu_acc, radio_acc, s.duration);
    rep.average_current_ma =
        s.duration > 0
            ? rep.total.total_j / (s.profile.supply_v * to_seconds(s.duration)) * 1e3
            : 0.0;
    rep.radio_on = radio_on;
    rep.cache_hits = realized.cache_hits;
    rep.cache_misses = realized.cache_misses;

    std::vector<std::pair<Nanos, Nanos>> blind;
    for (const auto& z : d.request_blind) {
        const Nanos b = std::max(z.first - s.warmup, Nanos{0});
        const Nanos e = std::min(z.second - s.warmup, s.duration);
        if (e > b) blind.push_back({b, e});
    }
    for (const auto& w : trace.request_windows) {
        rep.per_request.push_back(window_energy(trace.intervals, w.begin, w.end, blind));
    }
    for (const auto& tw : realized.task_windows) {
        if (tw.begin < s.warmup || tw.end > horizon) continue;
        const Nanos b = tw.begin - s.warmup;
        const Nanos e = tw.end - s.warmup;
        rep.task_windows.push_back(
            {tw.label, b, e, window_energy(trace.intervals, b, e, {})});
    }

    const double hz_mac =
        s.mac != MacMode::None ? target_hz(s.policy, "mac") : target_hz(s.policy, "timer");
    for (const auto& chk : d.checks) {
        const Nanos needed = cycles_to_nanos(chk.required_cycles, hz_mac);
        if (needed > chk.available_window) {
            rep.deadline_misses.push_back({chk.at - s.warmup, chk.required_cycles,
                                           chk.available_window, needed, chk.label});
        }
    }

    if (s.app.burst > 0 && !trace.request_windows.empty()) {
        rep.burst_present = true;
        rep.burst_start = trace.request_windows.front().begin;
        rep.burst_end = trace.request_windows.back().end;
    }
    return result;
}

// ---- trace I/O ----------------------------------------------------------------

std::string trace_to_csv(const SimTrace& t) {
    std::string out = "t_start_s,t_end_s,component,state,power_mW,label\n";
    char num[64];
    for (const auto& row : t.intervals) {
        out += format_seconds(row.begin);
        out += ',';
        out += format_seconds(row.end);
        out += ',';
        out += row.component;
        out += ',';
        out += row.state;
        out += ',';
        std::snprintf(num, sizeof num, "%.17g", row.power_mw);
        out += num;
        out += ',';
        out += row.label;
        out += '\n';
    }
    return out;
}

void export_trace(const SimTrace& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    const std::string csv = trace_to_csv(t);
    f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!f) throw IoError("short write to " + path);
}

EnergyBreakdown integrate_trace_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t_start_s,t_end_s,component", 0) != 0) {
        throw IoError("not a trace: header missing");
    }
    EnergyAccumulator mcu, radio;
    Nanos end = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> col;
        std::size_t start = 0;
        // The label column is last and never contains commas.
        for (int k = 0; k < 5; ++k) {
            const auto pos = line.find(',', start);
            if (pos == std::string::npos) throw IoError("malformed trace row: " + line);
            col.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        const Nanos b = parse_seconds(col[0]);
        const Nanos e = parse_seconds(col[1]);
        const double power = std::strtod(col[4].c_str(), nullptr);
        if (col[2] == "mcu") {
            mcu.add(power, e - b);
        } else if (col[2] == "radio") {
            radio.add(power, e - b);
        } else {
            throw IoError("unknown component: " + col[2]);
        }
        end = std::max(end, e);
    }
    return make_breakdown(mcu, radio, end);
}

// ---- comparison ----------------------------------------------------------------

CompareReport compare_runs(const RunReport& reference, const RunReport& candidate) {
    const auto mismatch = [](const std::string& what) {
        throw ShapeMismatchError("runs are not the same experiment: " + what + " differs");
    };
    if (reference.mac != candidate.mac) mismatch("mac mode");
    if (reference.method != candidate.method) mismatch("method");
    if (reference.payload_bytes != candidate.payload_bytes) mismatch("payload");
    if (reference.secure != candidate.secure) mismatch("security");
    if (reference.burst != candidate.burst) mismatch("burst");
    if (reference.duration != candidate.duration) mismatch("duration");
    if (reference.per_request.size() != candidate.per_request.size()) {
        mismatch("request count");
    }

    const auto ratio = [](double c, double r) { return r != 0.0 ? c / r : 0.0; };
    CompareReport cr;
    cr.energy_ratio = ratio(candidate.total.total_j, reference.total.total_j);
    cr.mcu_ratio = ratio(candidate.total.mcu_j, reference.total.mcu_j);
    cr.radio_ratio = ratio(candidate.total.radio_j, reference.total.radio_j);
    cr.edp_ratio = ratio(candidate.total.edp_js, reference.total.edp_js);
    cr.current_ratio = ratio(candidate.average_current_ma, reference.average_current_ma);
    cr.saving = 1.0 - cr.energy_ratio;
    if (!reference.per_request.empty()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < reference.per_request.size(); ++i) {
            sum += ratio(candidate.per_request[i].total_j, reference.per_request[i].total_j);
        }
        cr.mean_request_ratio = sum / static_cast<double>(reference.per_request.size());
    }
    cr.timing_delta_s =
        std::abs(to_seconds(candidate.burst_duration()) - to_seconds(reference.burst_duration()));
    return cr;
}

std::string report_to_json(const RunReport& r) {
    nlohmann::json j;
    j["scenario"] = r.scenario_name;
    j["level"] = {{"source", to_string(r.level.source)},
                  {"core_mhz", r.level.core_mhz},
                  {"core_voltage_v", r.level.core_voltage_v}};
    j["mac"] = to_string(r.mac);
    j["method"] = to_string(r.method);
    j["payload_bytes"] = r.payload_bytes;
    j["secure"] = r.secure;
    j["burst"] = r.burst;
    j["duration_s"] = to_seconds(r.duration);
    j["energy"] = {{"mcu_j", r.total.mcu_j},
                   {"radio_j", r.total.radio_j},
                   {"total_j", r.total.total_j},
                   {"edp_js", r.total.edp_js}};
    j["average_current_ma"] = r.average_current_ma;
    j["radio_on_s"] = to_seconds(r.radio_on);
    j["cache"] = {{"hits", r.cache_hits}, {"misses", r.cache_misses}};
    j["deadline_misses"] = nlohmann::json::array();
    for (const auto& m : r.deadline_misses) {
        j["deadline_misses"].push_back({{"at_s", to_seconds(m.at)},
                                        {"label", m.label},
                                        {"needed_s", to_seconds(m.needed)},
                                        {"window_s", to_seconds(m.available_window)}});
    }
    j["requests"] = nlohmann::json::array();
    for (const auto& e : r.per_request) {
        j["requests"].push_back({{"mcu_j", e.mcu_j},
                                 {"radio_j", e.radio_j},
                                 {"total_j", e.total_j},
                                 {"duration_s", to_seconds(e.duration)}});
    }
    j["task_windows"] = nlohmann::json::array();
    for (const auto& w : r.task_windows) {
        j["task_windows"].push_back({{"label", w.label},
                                     {"begin_s", to_seconds(w.begin)},
                                     {"end_s", to_seconds(w.end)},
                                     {"total_j", w.energy.total_j}});
    }
    if (r.burst_present) {
        j["burst_window"] = {{"start_s", to_seconds(r.burst_start)},
                             {"end_s", to_seconds(r.burst_end)},
                             {"duration_s", to_seconds(r.burst_duration())}};
    }
    return j.dump(2);
}

}  // namespace dvfsim
