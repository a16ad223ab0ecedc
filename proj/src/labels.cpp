#include "esw/labels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace esw {

std::vector<std::int32_t> LabelMap::distinct_classes() const {
    std::vector<std::int32_t> out(labels);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove(out.begin(), out.end(), UNLABELLED), out.end());
    return out;
}

void LabelMap::validate() const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0)
            throw std::invalid_argument("LabelMap: negative label at index " + std::to_string(i));
}

void SeedSet::validate(std::int64_t n_vertices) const {
    if (vertices.empty()) throw std::invalid_argument("SeedSet: empty seed set");
    if (vertices.size() != labels.size())
        throw std::invalid_argument("SeedSet: vertices/labels length mismatch");
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (vertices[i] < 0 || vertices[i] >= n_vertices)
            throw std::invalid_argument("SeedSet: vertex id out of range");
        if (labels[i] < 1) throw std::invalid_argument("SeedSet: seed labels must be >= 1");
    }
    std::vector<std::int64_t> sorted(vertices);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("SeedSet: duplicate seed vertex");
}

} // namespace esw
