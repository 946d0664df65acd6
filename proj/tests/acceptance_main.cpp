// Full verification battery against the default calibration. One line per
// check; exit status reflects the worst result.

#include <algorithm>
#include <cstdio>

#include "dvfsim/self_test.hpp"

int main() {
    const dvfsim::CalibrationProfile profile;
    const auto results = dvfsim::run_self_test(profile);
    for (const auto& c : results) {
        std::printf("[%s] %2d %-26s %s\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    c.detail.c_str());
    }
    const bool ok = dvfsim::all_passed(results);
    std::printf("%s: %zu/%zu checks passed\n", ok ? "OK" : "FAILURE",
                static_cast<std::size_t>(
                    std::count_if(results.begin(), results.end(),
                                  [](const dvfsim::CheckResult& c) { return c.pass; })),
                results.size());
    return ok ? 0 : 1;
}
