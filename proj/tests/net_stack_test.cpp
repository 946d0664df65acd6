#include "dvfsim/net_stack.hpp"

#include "doctest.h"
#include "dvfsim/errors.hpp"
#include "dvfsim/rng.hpp"

using namespace dvfsim;

TEST_CASE("default overheads pin the fragmentation thresholds") {
    StackOverheads o;
    CHECK(plain_frame_capacity(o) == 93);
    CHECK(secure_frame_capacity(o) == 63);
    CHECK_NOTHROW(validate(o));

    // A record one byte smaller would let a full 64 B secure block fit a
    // single frame, which the calibration forbids.
    StackOverheads thin = o;
    thin.dtls_record_bytes = 29;
    CHECK_THROWS_AS(validate(thin), ConfigError);

    StackOverheads fat = o;
    fat.coap_base_bytes = 42;  // plain capacity drops below one block
    CHECK_THROWS_AS(validate(fat), ConfigError);
}

TEST_CASE("single datagram fragmentation oracles") {
    StackOverheads o;

    auto plain16 = fragment(16, false, o);
    REQUIRE(plain16.size() == 1);
    CHECK(plain16[0].psdu_bytes == 16 + 11 + 11 + 12);

    CHECK(fragment(64, false, o).size() == 1);
    CHECK(fragment(93, false, o).size() == 1);
    CHECK(fragment(94, false, o).size() == 2);

    auto secure64 = fragment(64, true, o);
    REQUIRE(secure64.size() == 2);
    CHECK(secure64[0].psdu_bytes == 127);
    CHECK(secure64[1].psdu_bytes == 11 + 5 + 5);
    CHECK(secure64[0].content_bytes + secure64[1].content_bytes == 11 + 12 + 30 + 64);

    CHECK(fragment(63, true, o).size() == 1);
}

TEST_CASE("fragment covers the datagram exactly once for any size") {
    StackOverheads o;
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int payload = (int)rng.below(400);
        const bool secure = rng.below(2) == 1;
        const auto frames = fragment(payload, secure, o);
        int content = 0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            CHECK(frames[i].psdu_bytes <= 127);
            CHECK(frames[i].content_bytes > 0);
            content += frames[i].content_bytes;
            const int hdr = frames.size() == 1 ? o.mac_header_bytes
                            : i == 0 ? o.mac_header_bytes + o.sixlowpan_frag1_bytes
                                     : o.mac_header_bytes + o.sixlowpan_fragn_bytes;
            CHECK(frames[i].psdu_bytes == hdr + frames[i].content_bytes);
        }
        int expect = o.sixlowpan_iphc_udp_bytes + o.coap_base_bytes + payload;
        if (secure) expect += o.dtls_record_bytes;
        CHECK(content == expect);
    }
}

TEST_CASE("exchange plans match the worked examples") {
    StackOverheads o;

    auto get16 = plan_coap_exchange(CoapMethod::Get, 16, false, o);
    REQUIRE(get16.frames.size() == 2);
    CHECK(get16.frames[0].direction == LinkDirection::Uplink);
    CHECK(get16.frames[1].direction == LinkDirection::Downlink);
    CHECK(get16.frames[1].psdu_bytes == 50);
    CHECK(get16.blocks == 1);
    CHECK(get16.cpu_extra_cycles == 0);

    auto get128 = plan_coap_exchange(CoapMethod::Get, 128, false, o);
    CHECK(get128.blocks == 2);
    int ul = 0, dl = 0;
    for (const auto& f : get128.frames) (f.direction == LinkDirection::Uplink ? ul : dl)++;
    CHECK(ul == 2);
    CHECK(dl == 2);
    // Round trips interleave: req, resp, req, resp.
    CHECK(get128.frames[0].direction == LinkDirection::Uplink);
    CHECK(get128.frames[1].direction == LinkDirection::Downlink);
    CHECK(get128.frames[2].direction == LinkDirection::Uplink);
    CHECK(get128.frames[3].direction == LinkDirection::Downlink);

    auto post64s = plan_coap_exchange(CoapMethod::Post, 64, true, o);
    ul = dl = 0;
    for (const auto& f : post64s.frames) (f.direction == LinkDirection::Uplink ? ul : dl)++;
    CHECK(ul == 2);
    CHECK(dl == 1);
    CHECK(post64s.cpu_extra_cycles ==
          2 * o.dtls_cycles_per_record +
              (long long)(12 + 64 + 12 + 0) * o.dtls_cycles_per_byte);
    CHECK(post64s.cpu_cycles_uplink ==
          o.dtls_cycles_per_record + (12 + 64) * o.dtls_cycles_per_byte);
    CHECK(post64s.cpu_cycles_uplink + post64s.cpu_cycles_downlink ==
          post64s.cpu_extra_cycles);

    CHECK_THROWS_AS(plan_coap_exchange(CoapMethod::Get, 0, false, o), ConfigError);
}

TEST_CASE("secure plans dominate plain plans") {
    StackOverheads o;
    for (int payload : {1, 16, 64, 128, 256}) {
        for (CoapMethod m : {CoapMethod::Get, CoapMethod::Post}) {
            auto plain = plan_coap_exchange(m, payload, false, o);
            auto secure = plan_coap_exchange(m, payload, true, o);
            CHECK(secure.frames.size() >= plain.frames.size());
            CHECK(secure.cpu_extra_cycles > plain.cpu_extra_cycles);
        }
    }
}

TEST_CASE("get and post mirror each other for single-block plain payloads") {
    StackOverheads o;
    for (int payload : {1, 16, 64}) {
        auto get = plan_coap_exchange(CoapMethod::Get, payload, false, o);
        auto post = plan_coap_exchange(CoapMethod::Post, payload, false, o);
        REQUIRE(get.frames.size() == post.frames.size());
        for (std::size_t i = 0; i < get.frames.size(); ++i) {
            const auto& mirrored = post.frames[get.frames.size() - 1 - i];
            CHECK(get.frames[i].psdu_bytes == mirrored.psdu_bytes);
            CHECK(get.frames[i].direction != mirrored.direction);
        }
    }
}

TEST_CASE("idtx binding polls once per downlink run") {
    StackOverheads o;
    auto get16 = plan_coap_exchange(CoapMethod::Get, 16, false, o);
    auto actions = bind_to_mac(get16, MacMode::Idtx);
    REQUIRE(actions.size() == 2);
    CHECK(actions[0].kind == MacAction::Kind::CsmaUplink);
    CHECK(actions[1].kind == MacAction::Kind::PollDownlink);
    CHECK(actions[1].psdu_list.size() == 1);

    // A fragmented secure response produces one poll action listing both
    // frames; the MAC realizes a separate poll command per frame.
    auto get128s = plan_coap_exchange(CoapMethod::Get, 128, true, o);
    auto sec = bind_to_mac(get128s, MacMode::Idtx);
    int poll_actions = 0;
    for (const auto& a : sec) {
        if (a.kind == MacAction::Kind::PollDownlink) {
            ++poll_actions;
            CHECK(a.psdu_list.size() == 2);
        }
    }
    CHECK(poll_actions == 2);
}

TEST_CASE("dsme and always-on bindings keep frame order") {
    StackOverheads o;
    auto plan = plan_coap_exchange(CoapMethod::Get, 16, false, o);

    auto dsme = bind_to_mac(plan, MacMode::Dsme);
    REQUIRE(dsme.size() == 2);
    CHECK(dsme[0].kind == MacAction::Kind::GtsUplink);
    CHECK(dsme[1].kind == MacAction::Kind::GtsDownlink);

    auto inl = bind_to_mac(plan, MacMode::AlwaysOn);
    REQUIRE(inl.size() == 2);
    CHECK(inl[0].kind == MacAction::Kind::InlineUplink);
    CHECK(inl[1].kind == MacAction::Kind::InlineDownlink);
}
