#include "dvfsim/freq_opt.hpp"

#include "doctest.h"
#include "dvfsim/errors.hpp"
#include "dvfsim/rng.hpp"

using namespace dvfsim;
using doctest::Approx;

namespace {

CalibrationProfile defaults() { return CalibrationProfile{}; }

TaskProfile pure_compute(std::uint64_t cycles) {
    TaskProfile p;
    p.compute_cycles = cycles;
    return p;
}

TaskProfile pure_wait(Nanos dur, RadioState r = RadioState::Off) {
    TaskProfile p;
    p.waits.push_back({dur, r});
    return p;
}

}  // namespace

TEST_CASE("time identities hold at the extremes") {
    const CalibrationProfile p = defaults();
    const ClockConfig top = make_level(p, 80.0, ClockSource::Pll);

    CHECK(evaluate(pure_compute(1000000), top, p).time_s == 1000000 / 80e6);

    for (const auto& level : all_levels(p)) {
        const SweepRow r = evaluate(pure_wait(seconds(1)), level, p);
        CHECK(r.time_s == 1.0);
        CHECK(r.cycles_consumed == level.core_mhz * 1e6);
    }
}

TEST_CASE("poll transaction profile reproduces the measured pair") {
    const CalibrationProfile p = defaults();
    const TaskProfile req = idtx_request_profile(IdtxConfig{}, 1200);
    CHECK(req.compute_cycles == 30480);
    CHECK(req.wait_time() == micros(1120));

    const SweepRow high = evaluate(req, make_level(p, 80.0, ClockSource::Pll), p);
    const SweepRow low = evaluate(req, make_level(p, 24.0, ClockSource::Pll), p);
    CHECK(high.energy_j == Approx(79.41e-6).epsilon(1e-3));
    CHECK(low.energy_j == Approx(66.12e-6).epsilon(1e-3));
    CHECK(low.energy_j / high.energy_j == Approx(0.8326).epsilon(1e-3));
}

TEST_CASE("fft profile lands on its calibrated energy at full speed") {
    const CalibrationProfile p = defaults();
    const SweepRow r = evaluate(fft_task_profile(), make_level(p, 80.0, ClockSource::Pll), p);
    CHECK(r.energy_j == Approx(29.5e-6).epsilon(1e-4));
    CHECK(r.time_s == Approx(143030 / 80e6));
}

TEST_CASE("level enumeration is ordered and complete") {
    const auto levels = all_levels(defaults());
    REQUIRE(levels.size() == 11);
    CHECK(levels.front().core_mhz == 8.0);
    CHECK(levels.front().source == ClockSource::RcDirect);
    CHECK(levels.back().core_mhz == 80.0);
    CHECK(levels.back().source == ClockSource::Pll);
    for (std::size_t i = 1; i < levels.size(); ++i) {
        CHECK(levels[i - 1].core_mhz <= levels[i].core_mhz);
    }
}

TEST_CASE("compute-bound tasks want the top, waits want the bottom") {
    const CalibrationProfile p = defaults();
    const auto rows_fft = sweep(fft_task_profile(), all_levels(p), p);
    const ClockConfig edp_best = select_optimal(rows_fft, Metric::Edp);
    CHECK(edp_best.core_mhz == 80.0);
    CHECK(edp_best.source == ClockSource::Pll);

    const auto rows_wait = sweep(pure_wait(millis(10)), all_levels(p), p);
    const ClockConfig e_best = select_optimal(rows_wait, Metric::Energy);
    CHECK(e_best.core_mhz == 8.0);
    CHECK(e_best.source == ClockSource::RcDirect);

    // Pure waits finish at the same instant everywhere; the tie rule picks
    // the bottom level for time as well.
    const ClockConfig t_best = select_optimal(rows_wait, Metric::Time);
    CHECK(t_best.core_mhz == 8.0);
    CHECK(t_best.source == ClockSource::RcDirect);
}

TEST_CASE("edp rises monotonically below the maximum on the pll chain") {
    const CalibrationProfile p = defaults();
    std::vector<ClockConfig> pll;
    for (double f : p.core_levels_mhz) pll.push_back(make_level(p, f, ClockSource::Pll));
    const auto rows = sweep(fft_task_profile(), pll, p);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].edp_js < rows[i - 1].edp_js);  // ascending f, falling EDP
    }
    CHECK(rows.back().edp_rel == 1.0);
    CHECK(rows.back().time_rel == 1.0);
}

TEST_CASE("transfer-bound tasks gain on both energy and edp at lower f") {
    const CalibrationProfile p = defaults();
    // The fetch phase of a downlink poll: dominated by receiver-on waits.
    TaskProfile fetch;
    fetch.compute_cycles = 3000;
    fetch.waits = {{micros(3800), RadioState::RxListen}, {micros(1792), RadioState::RxBusy}};
    const auto rows = sweep(fetch, all_levels(p), p);
    for (const auto& r : rows) {
        if (r.config.core_mhz == 24.0 && r.config.source == ClockSource::Pll) {
            CHECK(r.energy_rel < 1.0);
            CHECK(r.edp_rel < 1.0);
        }
    }
    // The compute-heavy poll service profile trades time for energy instead:
    // energy falls at 24 MHz but EDP rises.
    const auto poll = sweep(idtx_request_profile(IdtxConfig{}, 1200), all_levels(p), p);
    for (const auto& r : poll) {
        if (r.config.core_mhz == 24.0 && r.config.source == ClockSource::Pll) {
            CHECK(r.energy_rel < 1.0);
            CHECK(r.edp_rel > 1.0);
        }
    }
}

TEST_CASE("single level sweeps normalize to themselves") {
    const CalibrationProfile p = defaults();
    const auto rows =
        sweep(fft_task_profile(), {make_level(p, 24.0, ClockSource::RcDirect)}, p);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].time_rel == 1.0);
    CHECK(rows[0].energy_rel == 1.0);
    CHECK(rows[0].edp_rel == 1.0);
    CHECK(rows[0].cycles_rel == 1.0);
}

namespace {

// Independent argmin with the documented tie rule, kept free of any shared
// helper so regressions in select_optimal cannot hide.
ClockConfig brute_force(const std::vector<SweepRow>& rows, Metric m) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double vi, vb;
        switch (m) {
            case Metric::Energy: vi = rows[i].energy_j; vb = rows[best].energy_j; break;
            case Metric::Edp: vi = rows[i].edp_js; vb = rows[best].edp_js; break;
            default: vi = rows[i].time_s; vb = rows[best].time_s; break;
        }
        if (vi < vb) {
            best = i;
        } else if (vi == vb) {
            const auto& a = rows[i].config;
            const auto& b = rows[best].config;
            if (a.core_mhz < b.core_mhz ||
                (a.core_mhz == b.core_mhz && a.source == ClockSource::RcDirect &&
                 b.source == ClockSource::Pll)) {
                best = i;
            }
        }
    }
    return rows[best].config;
}

}  // namespace

TEST_CASE("optimizer agrees with brute force over random profiles") {
    const CalibrationProfile p = defaults();
    const auto levels = all_levels(p);
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        TaskProfile t;
        t.compute_cycles = rng.below(2000000);
        const int nwaits = (int)rng.below(4);
        for (int w = 0; w < nwaits; ++w) {
            t.waits.push_back({micros(1 + (Nanos)rng.below(5000)),
                               (RadioState)(rng.below(5))});
        }
        if (t.compute_cycles == 0 && t.waits.empty()) t.compute_cycles = 1;
        const auto rows = sweep(t, levels, p);
        for (Metric m : {Metric::Energy, Metric::Edp, Metric::Time}) {
            CHECK(select_optimal(rows, m) == brute_force(rows, m));
        }
    }
}

TEST_CASE("scaling the compute portion keeps the time argmin") {
    const CalibrationProfile p = defaults();
    const auto levels = all_levels(p);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        TaskProfile t = pure_compute(1 + rng.below(500000));
        const ClockConfig a = select_optimal(sweep(t, levels, p), Metric::Time);
        t.compute_cycles *= 17;
        const ClockConfig b = select_optimal(sweep(t, levels, p), Metric::Time);
        CHECK(a == b);
    }
}

TEST_CASE("row identities survive reconstruction") {
    const CalibrationProfile p = defaults();
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        TaskProfile t;
        t.compute_cycles = 1 + rng.below(1000000);
        t.waits.push_back({micros(1 + (Nanos)rng.below(2000)), RadioState::Tx});
        for (const auto& r : sweep(t, all_levels(p), p)) {
            const double hz = r.config.core_mhz * 1e6;
            const double wait_s = to_seconds(t.wait_time());
            CHECK(r.cycles_consumed == (double)t.compute_cycles + wait_s * hz);
            CHECK(r.time_s == (double)t.compute_cycles / hz + wait_s);
            CHECK(r.edp_js == r.energy_j * r.time_s);
        }
    }
}

TEST_CASE("profile json round trips and rejects strangers") {
    const TaskProfile p = idtx_request_profile(IdtxConfig{}, 1200);
    const TaskProfile q = task_profile_from_json(task_profile_to_json(p));
    CHECK(q.compute_cycles == p.compute_cycles);
    REQUIRE(q.waits.size() == p.waits.size());
    for (std::size_t i = 0; i < q.waits.size(); ++i) {
        CHECK(q.waits[i].duration == p.waits[i].duration);
        CHECK(q.waits[i].radio == p.waits[i].radio);
    }
    CHECK_THROWS_AS(task_profile_from_json("{\"cycles\": 5}"), ConfigError);
    CHECK_THROWS_AS(task_profile_from_json("{\"compute_cycles\": 0}"), ConfigError);
    CHECK_THROWS_AS(task_profile_from_json("not json"), ConfigError);
}

TEST_CASE("evaluate rejects off grid operating points") {
    const CalibrationProfile p = defaults();
    ClockConfig c = make_level(p, 80.0, ClockSource::Pll);
    c.core_mhz = 60.0;
    CHECK_THROWS_AS(evaluate(fft_task_profile(), c, p), UnknownLevelError);
}
