#include "dvfsim/net_stack.hpp"

#include <algorithm>
#include <cctype>

#include "dvfsim/errors.hpp"

namespace dvfsim {

std::string to_string(LinkDirection d) {
    return d == LinkDirection::Uplink ? "uplink" : "downlink";
}

std::string to_string(CoapMethod m) { return m == CoapMethod::Get ? "GET" : "POST"; }

CoapMethod coap_method_from_string(const std::string& name) {
    std::string low;
    for (char c : name) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "get") return CoapMethod::Get;
    if (low == "post") return CoapMethod::Post;
    throw ConfigError("unknown coap method: " + name);
}

std::string to_string(MacMode m) {
    switch (m) {
        case MacMode::None: return "none";
        case MacMode::AlwaysOn: return "always-on";
        case MacMode::Idtx: return "idtx";
        case MacMode::Dsme: return "dsme";
    }
    return "?";
}

MacMode mac_mode_from_string(const std::string& name) {
    for (MacMode m : {MacMode::None, MacMode::AlwaysOn, MacMode::Idtx, MacMode::Dsme}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown mac mode: " + name);
}

int plain_frame_capacity(const StackOverheads& o) {
    return PhyTiming::kMaxPsduBytes - o.mac_header_bytes - o.sixlowpan_iphc_udp_bytes -
           o.coap_base_bytes;
}

int secure_frame_capacity(const StackOverheads& o) {
    return plain_frame_capacity(o) - o.dtls_record_bytes;
}

void validate(const StackOverheads& o) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("stack overheads: ") + what);
    };
    require(o.mac_header_bytes > 0, "mac header must be positive");
    require(o.sixlowpan_iphc_udp_bytes > 0, "iphc/udp header must be positive");
    require(o.sixlowpan_frag1_bytes > 0 && o.sixlowpan_fragn_bytes > 0,
            "fragment headers must be positive");
    require(o.coap_base_bytes > 0, "coap base must be positive");
    require(o.coap_block_option_bytes >= 0, "block option must be non-negative");
    require(o.dtls_record_bytes > 0, "dtls record must be positive");
    require(o.dtls_cycles_per_byte >= 0 && o.dtls_cycles_per_record >= 0,
            "crypto cycle counts must be non-negative");
    require(o.block_size_bytes > 0, "block size must be positive");
    const int plain = plain_frame_capacity(o);
    require(plain >= o.block_size_bytes && plain < 128,
            "single-frame capacity must hold one plain block");
    require(secure_frame_capacity(o) < o.block_size_bytes,
            "secure capacity must fall below one block");
}

namespace {

// Compressed datagram length for `app_bytes` of payload plus CoAP headers.
int datagram_bytes(int app_bytes, int coap_bytes, bool secure, const StackOverheads& o) {
    int n = o.sixlowpan_iphc_udp_bytes + coap_bytes + app_bytes;
    if (secure) n += o.dtls_record_bytes;
    return n;
}

std::vector<PlannedFrame> fragment_datagram(int app_bytes, int coap_bytes, bool secure,
                                            const StackOverheads& o) {
    if (app_bytes < 0) throw ConfigError("payload must be non-negative");
    const int total = datagram_bytes(app_bytes, coap_bytes, secure, o);
    std::vector<PlannedFrame> frames;
    if (o.mac_header_bytes + total <= PhyTiming::kMaxPsduBytes) {
        frames.push_back({LinkDirection::Uplink, o.mac_header_bytes + total, total, 0, ""});
        return frames;
    }
    // FRAG1 then FRAGN chunks, exact cover, no padding.
    const int cap1 =
        PhyTiming::kMaxPsduBytes - o.mac_header_bytes - o.sixlowpan_frag1_bytes;
    const int capn =
        PhyTiming::kMaxPsduBytes - o.mac_header_bytes - o.sixlowpan_fragn_bytes;
    int left = total;
    int chunk = std::min(left, cap1);
    frames.push_back({LinkDirection::Uplink,
                      o.mac_header_bytes + o.sixlowpan_frag1_bytes + chunk, chunk, 0, ""});
    left -= chunk;
    while (left > 0) {
        chunk = std::min(left, capn);
        frames.push_back({LinkDirection::Uplink,
                          o.mac_header_bytes + o.sixlowpan_fragn_bytes + chunk, chunk, 0, ""});
        left -= chunk;
    }
    return frames;
}

void append_datagram(TransactionPlan& plan, LinkDirection dir, int app_bytes, int coap_bytes,
                     const StackOverheads& o, const std::string& label) {
    auto frames = fragment_datagram(app_bytes, coap_bytes, plan.secure, o);
    if (plan.secure) {
        // One record per datagram; the protected content excludes the
        // adaptation layer.
        const long long work =
            o.dtls_cycles_per_record + (long long)(coap_bytes + app_bytes) * o.dtls_cycles_per_byte;
        plan.cpu_extra_cycles += work;
        (dir == LinkDirection::Uplink ? plan.cpu_cycles_uplink : plan.cpu_cycles_downlink) +=
            work;
        // Sealing precedes the first fragment out, opening follows the last
        // fragment in.
        (dir == LinkDirection::Uplink ? frames.front() : frames.back()).cpu_cycles = work;
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        frames[i].direction = dir;
        frames[i].label = frames.size() > 1 ? label + "-f" + std::to_string(i) : label;
        plan.frames.push_back(frames[i]);
    }
}

}  // namespace

std::vector<PlannedFrame> fragment(int payload_bytes, bool secure, const StackOverheads& o) {
    validate(o);
    return fragment_datagram(payload_bytes, o.coap_base_bytes, secure, o);
}

TransactionPlan plan_coap_exchange(CoapMethod method, int payload_bytes, bool secure,
                                   const StackOverheads& o) {
    validate(o);
    if (payload_bytes < 1) throw ConfigError("payload must be at least 1 byte");
    if (method != CoapMethod::Get && method != CoapMethod::Post) {
        throw UnsupportedMethodError("only GET and POST are modeled");
    }

    TransactionPlan plan;
    plan.method = method;
    plan.payload_bytes = payload_bytes;
    plan.secure = secure;

    const bool blockwise = payload_bytes > o.block_size_bytes;
    plan.blocks = blockwise ? (payload_bytes + o.block_size_bytes - 1) / o.block_size_bytes : 1;
    const int coap_bytes =
        o.coap_base_bytes + (blockwise ? o.coap_block_option_bytes : 0);

    int left = payload_bytes;
    for (int b = 0; b < plan.blocks; ++b) {
        const int block = std::min(left, o.block_size_bytes);
        left -= block;
        const std::string suffix = plan.blocks > 1 ? "-b" + std::to_string(b) : "";
        if (method == CoapMethod::Get) {
            append_datagram(plan, LinkDirection::Uplink, 0, coap_bytes, o,
                            "coap-req" + suffix);
            append_datagram(plan, LinkDirection::Downlink, block, coap_bytes, o,
                            "coap-resp" + suffix);
        } else {
            append_datagram(plan, LinkDirection::Uplink, block, coap_bytes, o,
                            "coap-req" + suffix);
            append_datagram(plan, LinkDirection::Downlink, 0, coap_bytes, o,
                            "coap-resp" + suffix);
        }
    }
    return plan;
}

std::vector<MacAction> bind_to_mac(const TransactionPlan& plan, MacMode mode) {
    if (mode == MacMode::None) throw ConfigError("the sleep-only mode carries no traffic");
    std::vector<MacAction> actions;
    for (const auto& f : plan.frames) {
        if (f.psdu_bytes > PhyTiming::kMaxPsduBytes) {
            throw FrameTooLargeError("planned frame exceeds the PHY limit");
        }
        const bool up = f.direction == LinkDirection::Uplink;
        switch (mode) {
            case MacMode::None:
                break;  // rejected above
            case MacMode::AlwaysOn:
                actions.push_back({up ? MacAction::Kind::InlineUplink
                                      : MacAction::Kind::InlineDownlink,
                                   {f.psdu_bytes},
                                   f.cpu_cycles,
                                   f.label});
                break;
            case MacMode::Idtx:
                if (up) {
                    actions.push_back(
                        {MacAction::Kind::CsmaUplink, {f.psdu_bytes}, f.cpu_cycles, f.label});
                } else if (!actions.empty() &&
                           actions.back().kind == MacAction::Kind::PollDownlink) {
                    // Same wake fetches the whole downlink run, one poll each.
                    actions.back().psdu_list.push_back(f.psdu_bytes);
                    actions.back().cpu_cycles += f.cpu_cycles;
                } else {
                    actions.push_back(
                        {MacAction::Kind::PollDownlink, {f.psdu_bytes}, f.cpu_cycles, f.label});
                }
                break;
            case MacMode::Dsme:
                actions.push_back({up ? MacAction::Kind::GtsUplink
                                      : MacAction::Kind::GtsDownlink,
                                   {f.psdu_bytes},
                                   f.cpu_cycles,
                                   f.label});
                break;
        }
    }
    return actions;
}

}  // namespace dvfsim
