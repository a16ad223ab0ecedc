#pragma once

#include <string>
#include <vector>

#include "esw/run_result.hpp"
#include "esw/watershed.hpp"

namespace esw {

// CSV with header method,trial,<param_name>,oa,wall_ms. Throws
// std::invalid_argument on empty input.
void write_results_csv(const std::vector<RunResult>& results, const std::string& param_name,
                       const std::string& path);

struct Curve {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
};

// Fixed-canvas SVG line chart, one polyline per curve plus a legend. Byte
// output depends only on the input.
void write_curve_svg(const std::vector<Curve>& curves, const std::string& x_label,
                     const std::string& y_label, const std::string& path);

// Shared-bin counts of both sample series: bin_lo,bin_hi,same_class,different_class.
// Throws std::invalid_argument when there is not a single sample.
void write_histogram_csv(const HistogramSamples& samples, int n_bins, const std::string& path);

} // namespace esw
