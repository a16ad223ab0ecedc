#pragma once

#include <cstdint>
#include <vector>

namespace esw {

struct Edge {
    std::int64_t u; // u < v
    std::int64_t v;

    bool operator==(const Edge&) const = default;
};

// 4-adjacency pixel graph. Vertex id = r*nc + c. The edge list holds exactly
// the horizontal and vertical neighbor pairs, sorted lexicographically by
// (u, v); this order is the canonical edge index shared by every per-edge
// array and file format in the toolkit.
struct GridGraph {
    std::int64_t nr = 0;
    std::int64_t nc = 0;
    std::vector<Edge> edges;

    std::int64_t n_vertices() const { return nr * nc; }
    std::int64_t n_edges() const { return static_cast<std::int64_t>(edges.size()); }

    std::int64_t vertex_id(std::int64_t r, std::int64_t c) const { return r * nc + c; }
};

// Throws std::invalid_argument unless nr >= 1 and nc >= 1.
GridGraph build_grid_graph(std::int64_t nr, std::int64_t nc);

// Expected edge count nr*(nc-1) + nc*(nr-1).
inline std::int64_t grid_edge_count(std::int64_t nr, std::int64_t nc) {
    return nr * (nc - 1) + nc * (nr - 1);
}

} // namespace esw
