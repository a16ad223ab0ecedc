#pragma once

#include <string>

namespace esw {

// One experiment record: `param` is seeds_per_class for random-walk runs and
// the iteration index for convolution runs.
struct RunResult {
    std::string method;
    int trial = 0;
    int param = 0;
    double oa = 0.0;
    double wall_ms = 0.0;
};

} // namespace esw
