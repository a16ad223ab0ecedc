#pragma once

#include <cstdint>
#include <vector>

namespace esw {

inline constexpr std::int32_t UNLABELLED = 0;

// Per-pixel class assignment. Class ids are >= 1; 0 means unlabelled.
struct LabelMap {
    std::vector<std::int32_t> labels;

    LabelMap() = default;
    explicit LabelMap(std::size_t n) : labels(n, UNLABELLED) {}
    explicit LabelMap(std::vector<std::int32_t> values) : labels(std::move(values)) {}

    std::size_t size() const { return labels.size(); }
    std::int32_t operator[](std::size_t i) const { return labels[i]; }
    std::int32_t& operator[](std::size_t i) { return labels[i]; }

    // Sorted distinct class ids, UNLABELLED excluded.
    std::vector<std::int32_t> distinct_classes() const;

    // Throws std::invalid_argument if any label is negative.
    void validate() const;
};

// Labelled seed vertices: distinct vertex ids with parallel labels >= 1.
struct SeedSet {
    std::vector<std::int64_t> vertices;
    std::vector<std::int32_t> labels;

    std::size_t size() const { return vertices.size(); }

    // Checks parallel lengths, label positivity, vertex range and distinctness.
    void validate(std::int64_t n_vertices) const;
};

} // namespace esw
