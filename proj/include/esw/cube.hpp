#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace esw {

// Hyperspectral cube: nr x nc pixels, nz bands. Pixel-major layout: pixel
// (r, c) owns nz contiguous values starting at (r*nc + c)*nz. Values are held
// in double regardless of on-disk precision so distance sums reproduce
// exactly across the ensemble.
struct HyperCube {
    std::int64_t nr = 0;
    std::int64_t nc = 0;
    std::int64_t nz = 0;
    std::vector<double> data;

    HyperCube() = default;
    HyperCube(std::int64_t rows, std::int64_t cols, std::int64_t bands);
    HyperCube(std::int64_t rows, std::int64_t cols, std::int64_t bands, std::vector<double> values);

    std::int64_t n_pixels() const { return nr * nc; }

    const double* pixel(std::int64_t v) const { return data.data() + v * nz; }
    double* pixel(std::int64_t v) { return data.data() + v * nz; }

    double at(std::int64_t r, std::int64_t c, std::int64_t b) const {
        return data[(r * nc + c) * nz + b];
    }
    double& at(std::int64_t r, std::int64_t c, std::int64_t b) {
        return data[(r * nc + c) * nz + b];
    }

    // Throws std::invalid_argument on dimension/finiteness violations.
    void validate() const;
};

// Euclidean distance between the feature vectors of u and v restricted to the
// given band indices. Bounds-checked; the watershed ensemble uses the
// unchecked fast path below.
double subset_distance(const HyperCube& cube, std::int64_t u, std::int64_t v,
                       std::span<const std::uint32_t> bands);

// Same, no validation. Caller guarantees indices are in range.
inline double subset_distance_unchecked(const HyperCube& cube, std::int64_t u, std::int64_t v,
                                        std::span<const std::uint32_t> bands) {
    const double* pu = cube.pixel(u);
    const double* pv = cube.pixel(v);
    double acc = 0.0;
    for (const std::uint32_t b : bands) {
        const double d = pu[b] - pv[b];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Full-band Euclidean distance.
double full_distance(const HyperCube& cube, std::int64_t u, std::int64_t v);

} // namespace esw
