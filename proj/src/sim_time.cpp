#include "dvfsim/sim_time.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace dvfsim {

std::string format_seconds(Nanos t) {
    const bool neg = t < 0;
    const std::int64_t mag = neg ? -t : t;
    const std::int64_t whole = mag / kNanosPerSecond;
    const std::int64_t frac = mag % kNanosPerSecond;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%lld.%09lld", neg ? "-" : "",
                  static_cast<long long>(whole), static_cast<long long>(frac));
    return buf;
}

Nanos parse_seconds(const std::string& text) {
    const auto dot = text.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= text.size()) {
        throw std::invalid_argument("bad timestamp: " + text);
    }
    std::string whole_part = text.substr(0, dot);
    std::string frac_part = text.substr(dot + 1);
    bool neg = false;
    if (whole_part[0] == '-') {
        neg = true;
        whole_part.erase(0, 1);
        if (whole_part.empty()) throw std::invalid_argument("bad timestamp: " + text);
    }
    if (frac_part.size() > 9) throw std::invalid_argument("bad timestamp: " + text);
    while (frac_part.size() < 9) frac_part.push_back('0');
    for (char c : whole_part + frac_part) {
        if (c < '0' || c > '9') throw std::invalid_argument("bad timestamp: " + text);
    }
    const std::int64_t whole = std::strtoll(whole_part.c_str(), nullptr, 10);
    const std::int64_t frac = std::strtoll(frac_part.c_str(), nullptr, 10);
    const std::int64_t mag = whole * kNanosPerSecond + frac;
    return neg ? -mag : mag;
}

}  // namespace dvfsim
