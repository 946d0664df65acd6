#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace dvfsim {

// All event timestamps and durations are integer nanoseconds. Floating point
// is used only for power/energy values, never for event ordering.
using Nanos = std::int64_t;

constexpr Nanos kNanosPerMicro = 1'000;
constexpr Nanos kNanosPerMilli = 1'000'000;
constexpr Nanos kNanosPerSecond = 1'000'000'000;

constexpr Nanos micros(std::int64_t v) { return v * kNanosPerMicro; }
constexpr Nanos millis(std::int64_t v) { return v * kNanosPerMilli; }
constexpr Nanos seconds(std::int64_t v) { return v * kNanosPerSecond; }

inline Nanos nanos_from_seconds(double s) {
    return static_cast<Nanos>(std::llround(s * 1e9));
}

inline Nanos nanos_from_millis(double ms) {
    return static_cast<Nanos>(std::llround(ms * 1e6));
}

inline Nanos nanos_from_micros(double us) {
    return static_cast<Nanos>(std::llround(us * 1e3));
}

inline double to_seconds(Nanos t) { return static_cast<double>(t) * 1e-9; }
inline double to_millis(Nanos t) { return static_cast<double>(t) * 1e-6; }

// Time a cycle count takes at the given core frequency, rounded to whole ns.
inline Nanos cycles_to_nanos(std::uint64_t cycles, double core_hz) {
    return static_cast<Nanos>(std::llround(static_cast<double>(cycles) * 1e9 / core_hz));
}

// Renders integer nanoseconds as decimal seconds with full precision
// ("1.234567890"). Exact: no floating point involved.
std::string format_seconds(Nanos t);

// Parses the output of format_seconds back to nanoseconds. Throws
// std::invalid_argument on malformed input.
Nanos parse_seconds(const std::string& text);

}  // namespace dvfsim
