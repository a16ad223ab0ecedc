#pragma once

#include <cstdint>
#include <vector>

namespace esw {

enum class WeightKind : std::uint8_t {
    Dissimilarity, // larger = more likely a class boundary
    Similarity,    // larger = stronger affinity
};

// One nonnegative finite value per canonical edge index of the owning grid.
struct EdgeWeights {
    std::vector<double> values;
    WeightKind kind = WeightKind::Dissimilarity;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    // Throws std::invalid_argument unless every value is finite and >= 0
    // and the length matches n_edges (when n_edges >= 0).
    void validate(std::int64_t n_edges = -1) const;
};

} // namespace esw
