#include "dvfsim/sim_core.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "dvfsim/errors.hpp"

using namespace dvfsim;

namespace {

CalibrationProfile prof() { return CalibrationProfile{}; }

Scenario base_scenario(double mhz, ClockSource src) {
    Scenario s;
    s.profile = prof();
    s.policy = uniform_policy(s.profile, make_level(s.profile, mhz, src));
    s.mac = MacMode::None;
    s.warmup = seconds(1);
    s.duration = seconds(10);
    return s;
}

Scenario poll_scenario(double mhz, ClockSource src) {
    Scenario s = base_scenario(mhz, src);
    s.mac = MacMode::Idtx;
    return s;
}

// Each component lane must cover [0, duration] without gaps or overlaps.
void check_tiling(const SimTrace& t) {
    for (const char* comp : {"mcu", "radio"}) {
        Nanos cursor = 0;
        for (const auto& row : t.intervals) {
            if (row.component != comp) continue;
            REQUIRE(row.begin == cursor);
            REQUIRE(row.end > row.begin);
            cursor = row.end;
        }
        REQUIRE(cursor == t.duration);
    }
}

double mcu_mw(double ma) { return ma * 3.3; }

}  // namespace

TEST_CASE("zero-duration scenario yields an empty trace and zero energy") {
    Scenario s = base_scenario(80.0, ClockSource::Pll);
    s.warmup = 0;
    s.duration = 0;
    const auto r = run_scenario(s);
    CHECK(r.trace.intervals.empty());
    CHECK(r.report.total.total_j == 0.0);
    CHECK(r.report.average_current_ma == 0.0);
    const std::string csv = trace_to_csv(r.trace);
    CHECK(csv == "t_start_s,t_end_s,component,state,power_mW,label\n");
    const auto back = integrate_trace_csv(csv);
    CHECK(back.total_j == 0.0);
}

TEST_CASE("sleep baseline: periodic timer wakes pay one cached switch each") {
    // Hand model, 10 measured periods: the wake at the right edge contributes
    // its switch (it starts inside), the one at the left edge does not.
    const double lpm_mw = mcu_mw(0.0013);

    const auto expect_uA = [&](double active_ma, std::uint64_t cyc, double mhz) {
        const double active_mw = mcu_mw(active_ma);
        const double switch_mw = active_mw * 20.0 / 33.0;
        const double active_s = static_cast<double>(cyc) / (mhz * 1e6);
        const double sleep_s = 10.0 - 10.0 * (0.0005 + active_s);
        const double uj = 10.0 * (switch_mw * 0.5 + active_mw * active_s * 1e3) +
                          sleep_s * lpm_mw * 1e3;
        return uj / 3.3 / 10.0;  // microamps
    };

    const auto fast = run_scenario(base_scenario(80.0, ClockSource::Pll)).report;
    const auto slow = run_scenario(base_scenario(8.0, ClockSource::RcDirect)).report;

    CHECK(fast.average_current_ma * 1e3 ==
          doctest::Approx(expect_uA(5.0, 1200, 80.0)).epsilon(1e-9));
    CHECK(slow.average_current_ma * 1e3 ==
          doctest::Approx(expect_uA(0.6396, 1200, 8.0)).epsilon(1e-9));
    CHECK(fast.average_current_ma * 1e3 == doctest::Approx(2.88948).epsilon(1e-4));
    CHECK(slow.average_current_ma * 1e3 == doctest::Approx(1.58891).epsilon(1e-4));

    const auto cmp = compare_runs(fast, slow);
    CHECK(cmp.saving == doctest::Approx(0.45010).epsilon(1e-3));
    CHECK(fast.radio_on == 0);
    CHECK(slow.radio_on == 0);
}

TEST_CASE("data-request polling: average currents at the three key levels") {
    const auto at = [&](double mhz, ClockSource src) {
        return run_scenario(poll_scenario(mhz, src)).report;
    };
    const auto fast = at(80.0, ClockSource::Pll);
    const auto pll24 = at(24.0, ClockSource::Pll);
    const auto rc24 = at(24.0, ClockSource::RcDirect);

    CHECK(fast.average_current_ma * 1e3 == doctest::Approx(26.8776).epsilon(2e-4));
    CHECK(pll24.average_current_ma * 1e3 == doctest::Approx(21.7719).epsilon(2e-4));
    CHECK(rc24.average_current_ma * 1e3 == doctest::Approx(20.4275).epsilon(2e-4));

    // Slowing the PLL saves roughly a fifth; bypassing it is worth a further
    // twentieth of the fast baseline.
    const double s1 = 1.0 - pll24.average_current_ma / fast.average_current_ma;
    const double s2 =
        (pll24.average_current_ma - rc24.average_current_ma) / fast.average_current_ma;
    CHECK(s1 == doctest::Approx(0.190).epsilon(0.02));
    CHECK(s2 == doctest::Approx(0.050).epsilon(0.02));
}

TEST_CASE("poll transactions are accounted as requests, switches excluded") {
    const auto fast = run_scenario(poll_scenario(80.0, ClockSource::Pll)).report;
    const auto slow = run_scenario(poll_scenario(24.0, ClockSource::Pll)).report;

    REQUIRE(fast.per_request.size() == 10);
    REQUIRE(slow.per_request.size() == 10);
    for (const auto& e : fast.per_request) {
        CHECK(e.total_j == doctest::Approx(79.4145e-6).epsilon(1e-6));
    }
    for (const auto& e : slow.per_request) {
        CHECK(e.total_j == doctest::Approx(66.1157e-6).epsilon(1e-6));
    }
    const auto cmp = compare_runs(fast, slow);
    CHECK(cmp.mean_request_ratio == doctest::Approx(0.83254).epsilon(1e-4));
}

TEST_CASE("identical scenario and seed reproduce the trace byte for byte") {
    Scenario s = poll_scenario(24.0, ClockSource::Pll);
    s.app.burst = 3;
    s.app.payload_bytes = 64;
    s.app.secure = true;
    s.duration = seconds(6);
    const auto a = run_scenario(s);
    const auto b = run_scenario(s);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));

    Scenario other = s;
    other.seed = 99;
    const auto c = run_scenario(other);
    CHECK(trace_to_csv(a.trace) != trace_to_csv(c.trace));
}

TEST_CASE("re-integrating the exported csv reproduces the totals exactly") {
    std::vector<Scenario> runs;
    runs.push_back(poll_scenario(80.0, ClockSource::Pll));
    {
        Scenario s = poll_scenario(16.0, ClockSource::RcDirect);
        s.app.burst = 2;
        s.app.payload_bytes = 128;
        s.duration = seconds(5);
        runs.push_back(s);
    }
    {
        Scenario s = base_scenario(48.0, ClockSource::Pll);
        s.mac = MacMode::Dsme;
        s.dsme.gts = {{GtsDirection::Uplink, 0, 9, 0}, {GtsDirection::Downlink, 2, 11, 0}};
        s.warmup = 0;
        s.duration = dsme_multisuperframe_duration(s.dsme.mo);
        runs.push_back(s);
    }
    {
        Scenario s = base_scenario(80.0, ClockSource::Pll);
        s.mac = MacMode::AlwaysOn;
        s.app.burst = 2;
        s.warmup = millis(100);
        s.duration = seconds(1);
        runs.push_back(s);
    }
    for (const auto& s : runs) {
        const auto r = run_scenario(s);
        check_tiling(r.trace);
        const auto back = integrate_trace_csv(trace_to_csv(r.trace));
        CHECK(back.mcu_j == r.report.total.mcu_j);
        CHECK(back.radio_j == r.report.total.radio_j);
        CHECK(back.total_j == r.report.total.total_j);
        CHECK(back.edp_js == r.report.total.edp_js);
        CHECK(back.duration == r.report.total.duration);
    }
}

TEST_CASE("radio activity does not depend on the core frequency") {
    const auto radio_rows = [](const SimTrace& t) {
        std::vector<std::tuple<Nanos, Nanos, std::string>> rows;
        for (const auto& r : t.intervals) {
            if (r.component == "radio") rows.emplace_back(r.begin, r.end, r.state);
        }
        return rows;
    };

    SUBCASE("polling mac") {
        const auto a = run_scenario(poll_scenario(80.0, ClockSource::Pll));
        const auto b = run_scenario(poll_scenario(8.0, ClockSource::RcDirect));
        CHECK(radio_rows(a.trace) == radio_rows(b.trace));
        CHECK(a.report.radio_on == b.report.radio_on);
    }
    SUBCASE("dsme idle multisuperframe") {
        auto make = [&](double mhz, ClockSource src) {
            Scenario s = base_scenario(mhz, src);
            s.mac = MacMode::Dsme;
            s.warmup = dsme_superframe_duration(s.dsme.so);
            s.duration = dsme_multisuperframe_duration(s.dsme.mo);
            return run_scenario(s);
        };
        const auto a = make(80.0, ClockSource::Pll);
        const auto b = make(24.0, ClockSource::Pll);
        CHECK(radio_rows(a.trace) == radio_rows(b.trace));
        CHECK(a.report.radio_on == b.report.radio_on);
    }
}

TEST_CASE("coap over the polling mac: windows land on the poll grid") {
    Scenario s = poll_scenario(80.0, ClockSource::Pll);
    s.app.burst = 10;
    s.app.payload_bytes = 16;
    s.duration = seconds(12);
    const auto fast = run_scenario(s);

    REQUIRE(fast.report.per_request.size() == 10);
    REQUIRE(fast.report.burst_present);
    // Ten one-per-second round trips: the burst spans just under ten seconds.
    const double dur_s = to_seconds(fast.report.burst_duration());
    CHECK(dur_s > 9.957);
    CHECK(dur_s < 10.057);

    // The same burst at the slowest level finishes almost simultaneously:
    // only the response decodes run longer, the radio schedule is fixed.
    Scenario slow_s = s;
    slow_s.policy = uniform_policy(s.profile, make_level(s.profile, 8.0, ClockSource::RcDirect));
    const auto slow = run_scenario(slow_s);
    const auto cmp = compare_runs(fast.report, slow.report);
    CHECK(cmp.timing_delta_s * 1e3 == doctest::Approx(3.375).epsilon(1e-6));
    CHECK(cmp.timing_delta_s < 0.005);

    // Requests cost visibly less at a lower point, like the bare polls do.
    Scenario mid_s = s;
    mid_s.policy = uniform_policy(s.profile, make_level(s.profile, 24.0, ClockSource::Pll));
    const auto mid = run_scenario(mid_s);
    const auto cmp24 = compare_runs(fast.report, mid.report);
    CHECK(cmp24.mean_request_ratio < 0.9);
    CHECK(cmp24.mean_request_ratio > 0.5);

    // Windows are disjoint, so their energy stays below the run total.
    double sum = 0.0;
    for (const auto& e : fast.report.per_request) sum += e.total_j;
    CHECK(sum < fast.report.total.total_j);
}

TEST_CASE("coap over dsme rides the owned slots") {
    Scenario s = base_scenario(80.0, ClockSource::Pll);
    s.mac = MacMode::Dsme;
    s.dsme.gts.clear();
    for (int sf = 0; sf < 128; sf += 4) {
        s.dsme.gts.push_back({GtsDirection::Uplink, sf, 9, 0});
    }
    for (int sf = 2; sf < 128; sf += 4) {
        s.dsme.gts.push_back({GtsDirection::Downlink, sf, 11, 0});
    }
    s.app.burst = 4;
    s.app.payload_bytes = 16;
    // Issue at the end of the contention period of the first measured
    // superframe; the first owned uplink slot is already too close.
    s.app.first_issue_offset = 9 * dsme_slot_duration(s.dsme.so);
    s.warmup = dsme_multisuperframe_duration(s.dsme.mo);
    s.duration = dsme_multisuperframe_duration(s.dsme.mo);
    const auto fast = run_scenario(s);

    REQUIRE(fast.report.per_request.size() == 4);
    // First round trip: uplink four superframes after issue, response two
    // further on, decoded right in the reception slot.
    const auto& w0 = fast.report.per_request[0];
    CHECK(to_seconds(w0.duration) * 1e3 == doctest::Approx(755.351).epsilon(1e-3));
    const double burst_ms = to_seconds(fast.report.burst_duration()) * 1e3;
    CHECK(burst_ms == doctest::Approx(2229.9).epsilon(1e-2));

    Scenario mid_s = s;
    mid_s.policy = uniform_policy(s.profile, make_level(s.profile, 24.0, ClockSource::Pll));
    const auto mid = run_scenario(mid_s);
    const auto cmp = compare_runs(fast.report, mid.report);
    CHECK(cmp.timing_delta_s * 1e3 == doctest::Approx(0.875).epsilon(1e-6));
    CHECK(cmp.timing_delta_s < 0.003);
    CHECK(cmp.mean_request_ratio < 1.0);
}

TEST_CASE("slot service deadlines separate feasible levels from misses") {
    auto make = [&](double mhz, ClockSource src) {
        Scenario s = base_scenario(mhz, src);
        s.mac = MacMode::Dsme;
        s.warmup = dsme_superframe_duration(s.dsme.so);
        s.duration = dsme_multisuperframe_duration(s.dsme.mo);
        return run_scenario(s).report;
    };
    CHECK(make(8.0, ClockSource::RcDirect).deadline_misses.size() > 0);
    CHECK(make(16.0, ClockSource::RcDirect).deadline_misses.size() > 0);
    CHECK(make(24.0, ClockSource::Pll).deadline_misses.empty());
    CHECK(make(80.0, ClockSource::Pll).deadline_misses.empty());
}

TEST_CASE("expected responses add a staging wake with its own deadline") {
    Scenario s = poll_scenario(8.0, ClockSource::RcDirect);
    s.app.burst = 1;
    s.duration = seconds(4);
    const auto r = run_scenario(s).report;
    // 15000 cycles at 8 MHz need 1.875 ms of the 3.5 ms margin: clean.
    CHECK(r.deadline_misses.empty());

    Scenario tight = s;
    tight.idtx.response_preprocess_cycles = 60000;  // 7.5 ms at 8 MHz: miss
    const auto rt = run_scenario(tight).report;
    REQUIRE(rt.deadline_misses.size() == 1);
    CHECK(rt.deadline_misses[0].label == "response-preprocess");
}

TEST_CASE("a per-task policy switches up mid-wake for the heavy job") {
    const std::uint64_t fft_cycles = 143030;
    auto make = [&](bool dynamic) {
        Scenario s;
        s.profile = prof();
        const auto top = make_level(s.profile, 80.0, ClockSource::Pll);
        const auto low = make_level(s.profile, 8.0, ClockSource::RcDirect);
        s.policy = dynamic ? uniform_policy(s.profile, low) : uniform_policy(s.profile, top);
        s.policy.task_targets["fft"] = top;
        s.mac = MacMode::Idtx;
        s.tasks = {{"fft", fft_cycles}};
        s.warmup = seconds(2);
        s.duration = seconds(1);
        return run_scenario(s);
    };
    const auto stat = make(false);
    const auto dyn = make(true);

    REQUIRE(stat.report.task_windows.size() == 1);
    REQUIRE(dyn.report.task_windows.size() == 1);
    // Same job, same operating point; the dynamic run additionally pays the
    // switch into it, which its window includes.
    CHECK(stat.report.task_windows[0].energy.total_j ==
          doctest::Approx(29.4999e-6).epsilon(1e-4));
    CHECK(dyn.report.task_windows[0].energy.total_j ==
          doctest::Approx(34.4999e-6).epsilon(1e-4));
    const double delta = dyn.report.task_windows[0].energy.total_j -
                         stat.report.task_windows[0].energy.total_j;
    CHECK(delta == doctest::Approx(5.0e-6).epsilon(1e-4));

    // The switch pair was warmed during the lead-in and replays from cache.
    CHECK(dyn.report.cache_misses == 2);
    CHECK(dyn.report.cache_hits == 4);
    CHECK(stat.report.cache_misses == 1);

    const auto has_label = [](const SimTrace& t, const char* label) {
        return std::any_of(t.intervals.begin(), t.intervals.end(),
                           [&](const TraceInterval& r) { return r.label == label; });
    };
    CHECK(has_label(dyn.trace, "dvfs-switch"));
    CHECK(!has_label(stat.trace, "dvfs-switch"));
    CHECK(has_label(dyn.trace, "fft"));

    // The whole-run accounting still favours the dynamic policy: everything
    // except the job runs at the frugal point.
    CHECK(dyn.report.total.total_j < stat.report.total.total_j);
}

TEST_CASE("always-listening mac burns the radio continuously") {
    Scenario s = base_scenario(80.0, ClockSource::Pll);
    s.mac = MacMode::AlwaysOn;
    s.app.burst = 1;
    s.warmup = millis(100);
    s.duration = seconds(2);
    const auto r = run_scenario(s);
    CHECK(r.report.radio_on == r.report.duration);
    CHECK(r.report.average_current_ma > 6.5);
    REQUIRE(r.report.per_request.size() == 1);
    REQUIRE(r.report.burst_present);
}

TEST_CASE("run comparison rejects different experiments") {
    const auto a = run_scenario(poll_scenario(80.0, ClockSource::Pll)).report;

    Scenario s2 = poll_scenario(24.0, ClockSource::Pll);
    s2.app.burst = 1;
    s2.duration = seconds(4);
    const auto b = run_scenario(s2).report;
    CHECK_THROWS_AS(compare_runs(a, b), ShapeMismatchError);

    const auto self = compare_runs(a, a);
    CHECK(self.energy_ratio == doctest::Approx(1.0));
    CHECK(self.saving == doctest::Approx(0.0));
    CHECK(self.timing_delta_s == 0.0);
}

TEST_CASE("scenario validation rejects inconsistent setups") {
    Scenario s = poll_scenario(80.0, ClockSource::Pll);
    s.policy.task_targets.erase("mac");
    CHECK_THROWS_AS(run_scenario(s), UnknownTaskError);

    Scenario burst = poll_scenario(80.0, ClockSource::Pll);
    burst.app.burst = 1;
    burst.duration = 0;
    CHECK_THROWS_AS(run_scenario(burst), ConfigError);

    Scenario tasks = base_scenario(80.0, ClockSource::Pll);
    tasks.mac = MacMode::Dsme;
    tasks.tasks = {{"fft", 1000}};
    tasks.policy.task_targets["fft"] = make_level(tasks.profile, 80.0, ClockSource::Pll);
    CHECK_THROWS_AS(run_scenario(tasks), ConfigError);

    Scenario shortd = base_scenario(80.0, ClockSource::Pll);
    shortd.mac = MacMode::Dsme;
    shortd.warmup = 0;
    shortd.duration = seconds(1);  // shorter than a multisuperframe
    CHECK_THROWS_AS(run_scenario(shortd), ConfigError);

    Scenario none_traffic = base_scenario(80.0, ClockSource::Pll);
    none_traffic.app.burst = 1;
    CHECK_THROWS_AS(run_scenario(none_traffic), ConfigError);

    Scenario nofit = poll_scenario(80.0, ClockSource::Pll);
    nofit.app.burst = 50;
    nofit.duration = seconds(3);
    CHECK_THROWS_AS(run_scenario(nofit), ConfigError);
}

TEST_CASE("trace export writes the csv to disk and fails loudly") {
    const auto r = run_scenario(poll_scenario(80.0, ClockSource::Pll));
    const std::string path = "sim_core_test_trace.csv";
    export_trace(r.trace, path);
    std::string text;
    {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        REQUIRE(f != nullptr);
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
        std::fclose(f);
    }
    std::remove(path.c_str());
    CHECK(text == trace_to_csv(r.trace));
    const auto back = integrate_trace_csv(text);
    CHECK(back.total_j == r.report.total.total_j);

    CHECK_THROWS_AS(export_trace(r.trace, "/nonexistent-dir/trace.csv"), IoError);
    CHECK_THROWS_AS(integrate_trace_csv("bogus,data\n"), IoError);
}

TEST_CASE("timer upkeep merges into polls but stands alone elsewhere") {
    const auto polled = run_scenario(poll_scenario(80.0, ClockSource::Pll));
    int standalone_timer = 0;
    for (const auto& row : polled.trace.intervals) {
        if (row.component == "mcu" && row.label == "timer") ++standalone_timer;
    }
    CHECK(standalone_timer == 0);  // every timer tick coincides with a poll

    Scenario apart = poll_scenario(80.0, ClockSource::Pll);
    apart.idtx.poll_interval = millis(1500);
    const auto r = run_scenario(apart);
    standalone_timer = 0;
    for (const auto& row : r.trace.intervals) {
        if (row.component == "mcu" && row.label == "timer") ++standalone_timer;
    }
    CHECK(standalone_timer > 0);
}
