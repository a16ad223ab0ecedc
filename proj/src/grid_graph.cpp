#include "esw/grid_graph.hpp"

#include <stdexcept>

namespace esw {

GridGraph build_grid_graph(std::int64_t nr, std::int64_t nc) {
    if (nr < 1 || nc < 1)
        throw std::invalid_argument("build_grid_graph: dimensions must be >= 1");
    GridGraph g;
    g.nr = nr;
    g.nc = nc;
    g.edges.reserve(static_cast<std::size_t>(grid_edge_count(nr, nc)));
    // Row-major vertex sweep emits (u, u+1) then (u, u+nc) per vertex, which
    // is already lexicographic in (u, v).
    for (std::int64_t r = 0; r < nr; ++r) {
        for (std::int64_t c = 0; c < nc; ++c) {
            const std::int64_t u = r * nc + c;
            if (c + 1 < nc) g.edges.push_back({u, u + 1});
            if (r + 1 < nr) g.edges.push_back({u, u + nc});
        }
    }
    return g;
}

} // namespace esw
