#pragma once

#include <cstdint>
#include <random>

namespace dvfsim {

// Deterministic random source. Only raw engine output is used; the standard
// distributions are implementation-defined and would break byte-identical
// traces across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Unbiased integer in [0, bound), bound >= 1. Rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold) return r % bound;
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace dvfsim
