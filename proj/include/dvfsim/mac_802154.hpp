#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvfsim/power_model.hpp"
#include "dvfsim/rng.hpp"
#include "dvfsim/sim_time.hpp"

namespace dvfsim {

// 2.4 GHz O-QPSK PHY timing. 62.5 ksymbol/s, 2 symbols per byte.
struct PhyTiming {
    static constexpr Nanos kSymbol = micros(16);
    static constexpr Nanos kByteAirtime = micros(32);
    static constexpr int kPhyOverheadBytes = 6;  // preamble 4 + SFD 1 + PHR 1
    static constexpr Nanos kTurnaround = micros(192);     // 12 symbols
    static constexpr Nanos kCca = micros(128);            // 8 symbols
    static constexpr Nanos kBackoffUnit = micros(320);    // 20 symbols
    static constexpr int kMaxPsduBytes = 127;
};

// On-air duration of one frame including PHY overhead.
// Throws FrameTooLargeError above 127 B PSDU.
Nanos frame_airtime(int psdu_bytes);

// What the MAC requires of the MCU during an interval. The engine later
// substitutes the concrete operating point and carves out wake transitions;
// radio states are already final here.
enum class McuDemand { Sleep, Awake };

struct ScheduleInterval {
    Nanos begin = 0;
    Nanos end = 0;
    McuDemand mcu = McuDemand::Sleep;
    RadioState radio = RadioState::Off;
    std::string label;
};

struct DeadlineCheck {
    Nanos at = 0;
    std::uint64_t required_cycles = 0;
    Nanos available_window = 0;
    std::string label;
};

// Timed MAC behaviour over one horizon (or one transaction fragment, with
// times relative to the fragment start).
struct MacSchedule {
    Nanos horizon = 0;
    std::vector<ScheduleInterval> intervals;
    std::vector<DeadlineCheck> deadline_checks;
};

// Checks the tiling invariant: time-sorted, non-overlapping, gap-free over
// [0, horizon]. Throws OverlapError.
void validate(const MacSchedule& s);

struct DeadlineMiss {
    Nanos at = 0;
    std::uint64_t required_cycles = 0;
    Nanos available_window = 0;
    Nanos needed = 0;
    std::string label;
};

// Evaluates the schedule's deadline checks at a core frequency. Misses are
// data, not faults.
std::vector<DeadlineMiss> check_deadlines(const MacSchedule& s, double core_hz);

// ---- Indirect Transmissions ------------------------------------------------

struct IdtxConfig {
    Nanos poll_interval = seconds(1);
    int poll_cmd_psdu_bytes = 12;
    int ack_psdu_bytes = 5;
    // Receiver-on wait between the poll ack and the first queued frame: the
    // coordinator needs time to dequeue and start transmitting.
    Nanos data_gap = micros(3800);
    // Bookkeeping the poll service routine runs after the radio chain ends:
    // queue maintenance, neighbor state, retransmission timers.
    std::uint64_t poll_handler_cycles = 29280;
    // When a fetch is expected to return data the node wakes this much ahead
    // of the poll anchor to stage buffers; the preprocessing below must fit.
    Nanos response_margin = micros(3500);
    std::uint64_t response_preprocess_cycles = 15000;
};

void validate(const IdtxConfig& c);

// One poll transaction as a schedule fragment starting at t = 0.
// Empty pending: Tx(poll), turnaround, RxBusy(ack), done (case P1).
// Each pending frame: receiver-on gap, RxBusy(frame), turnaround, Tx(ack);
// every frame after the first is fetched by its own repeated poll (P3).
// Poll commands skip CSMA; their chain is deterministic.
MacSchedule idtx_poll_transaction(const IdtxConfig& c, const std::vector<int>& pending_psdu);

// ---- CSMA/CA ----------------------------------------------------------------

struct CsmaParams {
    int min_be = 3;
    int max_be = 5;
    int max_backoffs = 4;
};

struct CsmaState {
    int be = 3;
    int nb = 0;
};

// One backoff draw: U[0, 2^BE - 1] backoff periods. Advances the generator
// exactly once.
Nanos csma_backoff(Rng& rng, int be);

// Runs one CSMA attempt round: returns the backoff delay to apply before the
// CCA. On a busy channel the caller reports back via channel_busy() which
// escalates BE/NB; nullopt from it means ChannelAccessFailure (frame drop).
class CsmaEngine {
  public:
    CsmaEngine(const CsmaParams& params, Rng& rng)
        : params_(params), state_{params.min_be, 0}, rng_(rng) {}

    Nanos attempt_delay() { return csma_backoff(rng_, state_.be); }

    std::optional<CsmaState> channel_busy();

    const CsmaState& state() const { return state_; }

  private:
    CsmaParams params_;
    CsmaState state_;
    Rng& rng_;
};

// Unslotted uplink transmission as a fragment starting at t = 0 on an idle
// channel: backoff (radio idle), CCA listen, Tx(frame), turnaround,
// RxBusy(ack). Consumes one backoff draw from the generator.
MacSchedule csma_uplink_transaction(Rng& rng, int psdu_bytes, int ack_psdu_bytes);

// ---- DSME -------------------------------------------------------------------

enum class GtsDirection { Uplink, Downlink };

struct GtsSlot {
    GtsDirection direction = GtsDirection::Uplink;
    int superframe_index = 0;
    int slot_index = 0;
    int channel = 0;
};

struct DsmeConfig {
    int so = 3;
    int mo = 10;
    int bo = 10;
    bool cap_reduction = true;  // one CAP per multisuperframe
    std::vector<GtsSlot> gts;
    Nanos guard = micros(400);
    // Boundary wakes run this long; slot bookkeeping must finish inside.
    Nanos wake_margin = millis(1);
    // GTS service wakes are longer: frame staging on top of bookkeeping.
    Nanos gts_margin = micros(1500);
    std::uint64_t preprocessing_cycles = 20000;
    int beacon_psdu_bytes = 36;
};

Nanos dsme_slot_duration(int so);             // 60 symbols * 2^so
Nanos dsme_superframe_duration(int so);       // 16 slots
Nanos dsme_multisuperframe_duration(int mo);  // 960 symbols * 2^mo
int dsme_superframes_per_multisuperframe(const DsmeConfig& c);  // 2^(mo-so)
bool dsme_beacon_in_superframe(const DsmeConfig& c, std::int64_t superframe_index);

// True when the slot lies in the CFP of its superframe under this config.
bool dsme_is_cfp_slot(const DsmeConfig& c, int superframe_index, int slot_index);

void validate(const DsmeConfig& c);

// Frames already bound to concrete slots: (superframe index within the
// horizon, slot index) -> PSDU lengths, transmitted in order.
struct DsmeTraffic {
    std::map<std::pair<std::int64_t, int>, std::vector<int>> uplink;
    std::map<std::pair<std::int64_t, int>, std::vector<int>> downlink;
    int ack_psdu_bytes = 5;
};

// Builds the node-side schedule over the horizon: beacon slots, CAP listen,
// owned GTS activity, margin wakes before every superframe boundary and
// owned slot, and the corresponding deadline checks.
MacSchedule build_dsme_schedule(const DsmeConfig& c, Nanos horizon,
                                const DsmeTraffic& traffic);

// Total radio-on time of a schedule (anything except Off and Sleep).
Nanos radio_on_time(const MacSchedule& s);

}  // namespace dvfsim
