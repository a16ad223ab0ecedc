#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace esw {

// Disjoint sets with union by rank and path compression.
class UnionFind {
public:
    explicit UnionFind(std::int64_t n) : parent_(n), rank_(n, 0) {
        if (n < 0) throw std::invalid_argument("UnionFind: negative size");
        std::iota(parent_.begin(), parent_.end(), std::int64_t{0});
    }

    std::int64_t size() const { return static_cast<std::int64_t>(parent_.size()); }

    std::int64_t find(std::int64_t x) {
        check(x);
        std::int64_t root = x;
        while (parent_[root] != root) root = parent_[root];
        while (parent_[x] != root) {
            const std::int64_t next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    // Merges the sets of a and b; returns the representative of the union.
    std::int64_t unite(std::int64_t a, std::int64_t b) {
        std::int64_t ra = find(a);
        std::int64_t rb = find(b);
        if (ra == rb) return ra;
        if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
        parent_[rb] = ra;
        if (rank_[ra] == rank_[rb]) ++rank_[ra];
        return ra;
    }

    bool same(std::int64_t a, std::int64_t b) { return find(a) == find(b); }

private:
    void check(std::int64_t x) const {
        if (x < 0 || x >= size()) throw std::invalid_argument("UnionFind: index out of range");
    }

    std::vector<std::int64_t> parent_;
    std::vector<std::int8_t> rank_;
};

} // namespace esw
