#pragma once

#include <string>
#include <vector>

#include "dvfsim/power_model.hpp"

namespace dvfsim {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;  // measured values and the accepted band
};

// The full verification battery: calibrated-savings reproduction plus the
// calibration-independent structural properties. Every check runs even when
// earlier ones fail; a throwing check is reported as failed, not fatal.
std::vector<CheckResult> run_self_test(const CalibrationProfile& p);

bool all_passed(const std::vector<CheckResult>& results);
std::string self_test_to_json(const std::vector<CheckResult>& results);

}  // namespace dvfsim
