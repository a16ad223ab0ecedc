#include "esw/cube.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esw {

HyperCube::HyperCube(std::int64_t rows, std::int64_t cols, std::int64_t bands)
    : nr(rows), nc(cols), nz(bands) {
    if (nr < 1 || nc < 1 || nz < 1)
        throw std::invalid_argument("HyperCube: dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(nr * nc * nz), 0.0);
}

HyperCube::HyperCube(std::int64_t rows, std::int64_t cols, std::int64_t bands,
                     std::vector<double> values)
    : nr(rows), nc(cols), nz(bands), data(std::move(values)) {
    validate();
}

void HyperCube::validate() const {
    if (nr < 1 || nc < 1 || nz < 1)
        throw std::invalid_argument("HyperCube: dimensions must be >= 1");
    const auto expected = static_cast<std::size_t>(nr * nc * nz);
    if (data.size() != expected)
        throw std::invalid_argument("HyperCube: data length " + std::to_string(data.size()) +
                                    " does not match nr*nc*nz = " + std::to_string(expected));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i]))
            throw std::invalid_argument("HyperCube: non-finite value at flat index " +
                                        std::to_string(i));
    }
}

double subset_distance(const HyperCube& cube, std::int64_t u, std::int64_t v,
                       std::span<const std::uint32_t> bands) {
    const std::int64_t n = cube.n_pixels();
    if (u < 0 || u >= n || v < 0 || v >= n)
        throw std::invalid_argument("subset_distance: vertex id out of range");
    for (const std::uint32_t b : bands) {
        if (b >= static_cast<std::uint64_t>(cube.nz))
            throw std::invalid_argument("subset_distance: band index " + std::to_string(b) +
                                        " out of range (nz = " + std::to_string(cube.nz) + ")");
    }
    return subset_distance_unchecked(cube, u, v, bands);
}

double full_distance(const HyperCube& cube, std::int64_t u, std::int64_t v) {
    const double* pu = cube.pixel(u);
    const double* pv = cube.pixel(v);
    double acc = 0.0;
    for (std::int64_t b = 0; b < cube.nz; ++b) {
        const double d = pu[b] - pv[b];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace esw
