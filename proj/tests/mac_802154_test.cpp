#include "dvfsim/mac_802154.hpp"

#include <set>

#include "doctest.h"
#include "dvfsim/errors.hpp"

using namespace dvfsim;

TEST_CASE("frame airtime follows the O-QPSK byte clock") {
    CHECK(frame_airtime(127) == nanos_from_millis(4.256));
    CHECK(frame_airtime(12) == micros(576));
    CHECK(frame_airtime(5) == micros(352));
    CHECK(frame_airtime(0) == micros(192));
    CHECK_THROWS_AS(frame_airtime(128), FrameTooLargeError);
    CHECK_THROWS_AS(frame_airtime(-1), FrameTooLargeError);
}

TEST_CASE("dsme durations scale as powers of two") {
    CHECK(dsme_slot_duration(3) == nanos_from_millis(7.68));
    CHECK(dsme_slot_duration(0) == micros(960));
    CHECK(dsme_slot_duration(1) == nanos_from_millis(1.92));
    CHECK(dsme_superframe_duration(3) == nanos_from_millis(122.88));
    CHECK(dsme_multisuperframe_duration(10) == nanos_from_micros(15728640.0));
    CHECK(dsme_multisuperframe_duration(0) == nanos_from_millis(15.36));
    CHECK_THROWS_AS(dsme_slot_duration(15), OutOfRangeError);
    CHECK_THROWS_AS(dsme_slot_duration(-1), OutOfRangeError);

    DsmeConfig c;
    CHECK(dsme_superframes_per_multisuperframe(c) == 128);
    CHECK(dsme_beacon_in_superframe(c, 0));
    CHECK_FALSE(dsme_beacon_in_superframe(c, 1));
    CHECK_FALSE(dsme_beacon_in_superframe(c, 127));
    CHECK(dsme_beacon_in_superframe(c, 128));
}

TEST_CASE("empty poll transaction is the deterministic 1.12 ms chain") {
    IdtxConfig c;
    const MacSchedule s = idtx_poll_transaction(c, {});
    validate(s);
    CHECK(s.horizon == micros(576 + 192 + 352));
    CHECK(s.intervals.size() == 3);
    CHECK(s.intervals[0].radio == RadioState::Tx);
    CHECK(s.intervals[1].radio == RadioState::RxListen);
    CHECK(s.intervals[2].radio == RadioState::RxBusy);
    CHECK(radio_on_time(s) == s.horizon);
    for (const auto& iv : s.intervals) CHECK(iv.mcu == McuDemand::Awake);
}

TEST_CASE("one pending frame extends the poll by gap, frame, and ack") {
    IdtxConfig c;
    const MacSchedule s = idtx_poll_transaction(c, {127});
    validate(s);
    const Nanos p1 = micros(1120);
    CHECK(s.horizon == p1 + c.data_gap + nanos_from_millis(4.256) + micros(192 + 352));
    // One RxBusy interval of full-frame airtime must be present.
    bool found = false;
    for (const auto& iv : s.intervals) {
        if (iv.radio == RadioState::RxBusy && iv.end - iv.begin == nanos_from_millis(4.256)) {
            found = true;
        }
    }
    CHECK(found);
    CHECK(s.intervals.back().radio == RadioState::Tx);  // our ack
}

TEST_CASE("every additional pending frame costs its own poll") {
    IdtxConfig c;
    const MacSchedule one = idtx_poll_transaction(c, {50});
    const MacSchedule two = idtx_poll_transaction(c, {50, 50});
    int polls_one = 0, polls_two = 0;
    for (const auto& iv : one.intervals) polls_one += iv.label == "poll";
    for (const auto& iv : two.intervals) polls_two += iv.label == "poll";
    CHECK(polls_one == 1);
    CHECK(polls_two == 2);
}

TEST_CASE("backoff delays enumerate the full window and repeat under a seed") {
    std::set<Nanos> seen;
    Rng rng(7);
    for (int i = 0; i < 400; ++i) {
        const Nanos d = csma_backoff(rng, 3);
        CHECK(d % micros(320) == 0);
        CHECK(d >= 0);
        CHECK(d <= 7 * micros(320));
        seen.insert(d);
    }
    CHECK(seen.size() == 8);

    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(csma_backoff(a, 3) == csma_backoff(b, 3));
}

TEST_CASE("csma engine escalates and eventually reports access failure") {
    Rng rng(1);
    CsmaEngine eng(CsmaParams{}, rng);
    CHECK(eng.state().be == 3);
    auto s1 = eng.channel_busy();
    REQUIRE(s1.has_value());
    CHECK(s1->be == 4);
    auto s2 = eng.channel_busy();
    REQUIRE(s2.has_value());
    CHECK(s2->be == 5);
    auto s3 = eng.channel_busy();
    REQUIRE(s3.has_value());
    CHECK(s3->be == 5);  // capped at maxBE
    CHECK(eng.channel_busy().has_value());
    CHECK_FALSE(eng.channel_busy().has_value());  // NB exceeded: drop
}

TEST_CASE("uplink transaction is backoff, cca, frame, turnaround, ack") {
    Rng rng(3);
    const MacSchedule s = csma_uplink_transaction(rng, 50, 5);
    validate(s);
    REQUIRE(s.intervals.size() >= 4);
    std::size_t i = 0;
    if (s.intervals[0].label == "backoff") {
        CHECK(s.intervals[0].radio == RadioState::Sleep);
        i = 1;
    }
    CHECK(s.intervals[i].label == "cca");
    CHECK(s.intervals[i].end - s.intervals[i].begin == micros(128));
    CHECK(s.intervals[i + 1].radio == RadioState::Tx);
    CHECK(s.intervals[i + 1].end - s.intervals[i + 1].begin == frame_airtime(50));
    CHECK(s.intervals[i + 3].radio == RadioState::RxBusy);
}

namespace {

DsmeConfig default_dsme() { return DsmeConfig{}; }

}  // namespace

TEST_CASE("idle multisuperframe has one beacon and one cap region") {
    const DsmeConfig c = default_dsme();
    const Nanos msf = dsme_multisuperframe_duration(c.mo);
    const MacSchedule s = build_dsme_schedule(c, msf, DsmeTraffic{});
    validate(s);

    int beacons = 0, caps = 0;
    for (const auto& iv : s.intervals) {
        if (iv.label == "beacon") ++beacons;
        if (iv.label == "cap") ++caps;
    }
    CHECK(beacons == 1);
    CHECK(caps == 1);
    // Radio on time: beacon guard + airtime plus eight listening CAP slots.
    const Nanos expected =
        c.guard + frame_airtime(c.beacon_psdu_bytes) + 8 * dsme_slot_duration(c.so);
    CHECK(radio_on_time(s) == expected);
    // One boundary deadline check per superframe except the first.
    CHECK(s.deadline_checks.size() == 127);
}

TEST_CASE("unused downlink slots cost strictly more radio time than uplink") {
    DsmeConfig base = default_dsme();
    const Nanos msf = dsme_multisuperframe_duration(base.mo);

    DsmeConfig dl = base;
    dl.gts.push_back({GtsDirection::Downlink, 2, 11, 0});
    DsmeConfig ul = base;
    ul.gts.push_back({GtsDirection::Uplink, 2, 11, 0});

    const Nanos base_on = radio_on_time(build_dsme_schedule(base, msf, DsmeTraffic{}));
    const Nanos dl_on = radio_on_time(build_dsme_schedule(dl, msf, DsmeTraffic{}));
    const Nanos ul_on = radio_on_time(build_dsme_schedule(ul, msf, DsmeTraffic{}));

    CHECK(dl_on == base_on + base.guard + dsme_slot_duration(base.so));
    CHECK(ul_on == base_on);
    CHECK(dl_on > ul_on);
}

TEST_CASE("pending uplink frame transmits then leaves the radio off") {
    DsmeConfig c = default_dsme();
    c.gts.push_back({GtsDirection::Uplink, 2, 11, 0});
    const Nanos msf = dsme_multisuperframe_duration(c.mo);
    DsmeTraffic t;
    t.uplink[{2, 11}] = {127};
    const MacSchedule s = build_dsme_schedule(c, msf, t);
    validate(s);

    const Nanos slot_begin = 2 * dsme_superframe_duration(c.so) + 11 * dsme_slot_duration(c.so);
    bool tx_found = false;
    for (const auto& iv : s.intervals) {
        if (iv.label == "gts-tx-data") {
            tx_found = true;
            CHECK(iv.begin == slot_begin);
            CHECK(iv.end - iv.begin == nanos_from_millis(4.256));
        }
        // After the ack the slot remainder is radio off.
        if (iv.label == "gts-tx-ack") {
            CHECK(iv.end < slot_begin + dsme_slot_duration(c.so));
        }
    }
    CHECK(tx_found);
}

TEST_CASE("downlink reception keeps listening for the whole slot") {
    DsmeConfig c = default_dsme();
    c.gts.push_back({GtsDirection::Downlink, 2, 11, 0});
    const Nanos msf = dsme_multisuperframe_duration(c.mo);
    DsmeTraffic t;
    t.downlink[{2, 11}] = {50};
    const MacSchedule s = build_dsme_schedule(c, msf, t);
    validate(s);

    const Nanos slot_begin = 2 * dsme_superframe_duration(c.so) + 11 * dsme_slot_duration(c.so);
    const Nanos slot_end = slot_begin + dsme_slot_duration(c.so);
    Nanos on = 0;
    for (const auto& iv : s.intervals) {
        if (iv.begin >= slot_begin - c.guard && iv.end <= slot_end &&
            iv.radio != RadioState::Off) {
            on += iv.end - iv.begin;
        }
    }
    CHECK(on == c.guard + dsme_slot_duration(c.so));
}

TEST_CASE("gts wakes use the longer service margin") {
    DsmeConfig c = default_dsme();
    c.gts.push_back({GtsDirection::Downlink, 2, 11, 0});
    const MacSchedule s =
        build_dsme_schedule(c, dsme_multisuperframe_duration(c.mo), DsmeTraffic{});
    bool found = false;
    for (const auto& d : s.deadline_checks) {
        if (d.label == "gts-rx-wake") {
            found = true;
            CHECK(d.available_window == c.gts_margin);
        } else {
            CHECK(d.available_window == c.wake_margin);
        }
    }
    CHECK(found);
}

TEST_CASE("deadline checks miss at 8 MHz and pass at 24 MHz") {
    const DsmeConfig c = default_dsme();
    const MacSchedule s =
        build_dsme_schedule(c, dsme_multisuperframe_duration(c.mo), DsmeTraffic{});
    CHECK(check_deadlines(s, 8e6).size() >= 1);
    CHECK(check_deadlines(s, 16e6).size() >= 1);
    CHECK(check_deadlines(s, 24e6).empty());
    CHECK(check_deadlines(s, 80e6).empty());

    MacSchedule none = s;
    for (auto& d : none.deadline_checks) d.required_cycles = 0;
    CHECK(check_deadlines(none, 1e6).empty());
}

TEST_CASE("gts validation enforces cfp membership and uniqueness") {
    DsmeConfig c = default_dsme();
    c.gts.push_back({GtsDirection::Uplink, 0, 5, 0});  // CAP slot of superframe 0
    CHECK_THROWS_AS(validate(c), ConfigError);

    c.gts.clear();
    c.gts.push_back({GtsDirection::Uplink, 1, 5, 0});  // CFP under cap reduction
    CHECK_NOTHROW(validate(c));

    c.gts.push_back({GtsDirection::Downlink, 1, 5, 0});
    CHECK_THROWS_AS(validate(c), ConfigError);  // duplicate (superframe, slot, channel)

    c.gts.clear();
    c.gts.push_back({GtsDirection::Uplink, 200, 9, 0});
    CHECK_THROWS_AS(validate(c), ConfigError);

    DsmeConfig bad = default_dsme();
    bad.so = 11;
    CHECK_THROWS_AS(validate(bad), ConfigError);  // so > mo
}

TEST_CASE("overfilled slots raise capacity errors") {
    DsmeConfig c = default_dsme();
    c.gts.push_back({GtsDirection::Uplink, 2, 11, 0});
    DsmeTraffic t;
    t.uplink[{2, 11}] = {127, 127};  // 2 x ~4.8 ms exceeds 7.68 ms
    CHECK_THROWS_AS(
        build_dsme_schedule(c, dsme_multisuperframe_duration(c.mo), t),
        CapacityError);
}

TEST_CASE("schedule tiling validator catches gaps and overlap") {
    MacSchedule s;
    s.horizon = 100;
    s.intervals.push_back({0, 60, McuDemand::Sleep, RadioState::Off, ""});
    s.intervals.push_back({70, 100, McuDemand::Sleep, RadioState::Off, ""});
    CHECK_THROWS_AS(validate(s), OverlapError);
    s.intervals[1].begin = 60;
    CHECK_NOTHROW(validate(s));
    s.intervals[1].end = 90;
    CHECK_THROWS_AS(validate(s), OverlapError);
}
