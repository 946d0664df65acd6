#pragma once

#include <string>
#include <vector>

#include "dvfsim/mac_802154.hpp"

namespace dvfsim {

enum class LinkDirection { Uplink, Downlink };
enum class CoapMethod { Get, Post };

std::string to_string(LinkDirection d);
std::string to_string(CoapMethod m);
CoapMethod coap_method_from_string(const std::string& name);  // throws ConfigError

// Header cost model for the 6LoWPAN/CoAP(S) stack. All values are bytes
// except the two crypto cycle counts. Defaults satisfy three calibration
// constraints rather than any one RFC layout:
//   - plain payloads up to 64 B fit a single frame,
//   - secure payloads of 64 B overflow into a second frame,
//   - plain payloads of 128 B fragment.
struct StackOverheads {
    int mac_header_bytes = 11;  // incl. FCS
    int sixlowpan_iphc_udp_bytes = 11;
    int sixlowpan_frag1_bytes = 4;
    int sixlowpan_fragn_bytes = 5;
    int coap_base_bytes = 12;  // header + token + baseline options
    int coap_block_option_bytes = 3;
    int dtls_record_bytes = 30;  // header + explicit nonce + tag
    long long dtls_cycles_per_byte = 100;
    long long dtls_cycles_per_record = 20000;
    int block_size_bytes = 64;
};

// Largest application payload that still fits one frame.
int plain_frame_capacity(const StackOverheads& o);
int secure_frame_capacity(const StackOverheads& o);

// Throws ConfigError when the capacity constraints above do not hold.
void validate(const StackOverheads& o);

struct PlannedFrame {
    LinkDirection direction = LinkDirection::Uplink;
    int psdu_bytes = 0;
    // Bytes of the compressed datagram carried by this frame. The frame adds
    // mac_header_bytes plus, when fragmented, a FRAG1/FRAGN header on top.
    int content_bytes = 0;
    // Crypto work tied to this frame: sealing runs before a datagram's first
    // uplink fragment, opening after its last downlink fragment. Zero for
    // plain transactions and for the other fragments.
    long long cpu_cycles = 0;
    std::string label;
};

struct TransactionPlan {
    CoapMethod method = CoapMethod::Get;
    int payload_bytes = 0;
    bool secure = false;
    int blocks = 1;
    long long cpu_extra_cycles = 0;  // crypto work, zero for plain CoAP
    // Split of cpu_extra_cycles by where the work runs: sealing records
    // before uplink transmission, opening records after downlink reception.
    long long cpu_cycles_uplink = 0;
    long long cpu_cycles_downlink = 0;
    std::vector<PlannedFrame> frames;  // chronological order
};

// Splits one datagram carrying `payload_bytes` of application data into link
// frames. Secure datagrams carry one DTLS record. Single-frame when the
// payload fits the capacity above, 6LoWPAN FRAG1/FRAGN otherwise.
std::vector<PlannedFrame> fragment(int payload_bytes, bool secure, const StackOverheads& o);

// Full request/response plan under NSTART=1. GET moves payload downlink,
// POST uplink. Payloads above block_size_bytes engage block-wise transfer
// with one round trip per block.
TransactionPlan plan_coap_exchange(CoapMethod method, int payload_bytes, bool secure,
                                   const StackOverheads& o);

// None keeps the radio off for the whole run and carries no traffic; it is
// the sleep-only baseline and rejects any transaction binding.
enum class MacMode { None, AlwaysOn, Idtx, Dsme };

std::string to_string(MacMode m);
MacMode mac_mode_from_string(const std::string& name);  // throws ConfigError

// One realizable MAC operation. Poll actions carry the psdu of every pending
// downlink frame fetched by the same wake; the MAC layer issues a separate
// poll command per frame.
struct MacAction {
    enum class Kind { CsmaUplink, InlineUplink, InlineDownlink, PollDownlink, GtsUplink, GtsDownlink };
    Kind kind = Kind::CsmaUplink;
    std::vector<int> psdu_list;
    long long cpu_cycles = 0;  // summed crypto work of the member frames
    std::string label;
};

// Maps a plan onto MAC operations, preserving frame order.
//   AlwaysOn: uplink via CSMA with the radio already listening, downlink
//             frames are received inline.
//   Idtx:     uplink via CSMA; each run of consecutive downlink frames
//             becomes one poll action.
//   Dsme:     every frame waits for the next owned GTS of its direction.
std::vector<MacAction> bind_to_mac(const TransactionPlan& plan, MacMode mode);

}  // namespace dvfsim
