#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "esw/cube.hpp"
#include "esw/grid_graph.hpp"
#include "esw/rng.hpp"
#include "esw/union_find.hpp"

using namespace esw;

namespace {

HyperCube random_cube(std::int64_t nr, std::int64_t nc, std::int64_t nz, std::uint64_t seed) {
    HyperCube cube(nr, nc, nz);
    Rng rng(seed);
    for (auto& v : cube.data) v = rng.uniform(-2.0, 2.0);
    return cube;
}

// Connected components by BFS over an explicit edge list.
std::vector<int> bfs_components(std::int64_t n, const std::vector<Edge>& edges) {
    std::vector<std::vector<std::int64_t>> adj(static_cast<std::size_t>(n));
    for (const Edge& e : edges) {
        adj[static_cast<std::size_t>(e.u)].push_back(e.v);
        adj[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (std::int64_t s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] != -1) continue;
        comp[static_cast<std::size_t>(s)] = next;
        std::queue<std::int64_t> q;
        q.push(s);
        while (!q.empty()) {
            const std::int64_t u = q.front();
            q.pop();
            for (const std::int64_t v : adj[static_cast<std::size_t>(u)])
                if (comp[static_cast<std::size_t>(v)] == -1) {
                    comp[static_cast<std::size_t>(v)] = next;
                    q.push(v);
                }
        }
        ++next;
    }
    return comp;
}

} // namespace

TEST_CASE("grid graph single pixel has no edges") {
    const GridGraph g = build_grid_graph(1, 1);
    CHECK(g.n_edges() == 0);
    CHECK(g.n_vertices() == 1);
}

TEST_CASE("grid graph 2x2 edge list is exactly the 4-adjacency pairs") {
    const GridGraph g = build_grid_graph(2, 2);
    const std::vector<Edge> expected{{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    CHECK(g.edges == expected);
}

TEST_CASE("grid graph 3x4 has 17 edges") {
    CHECK(build_grid_graph(3, 4).n_edges() == 17);
}

TEST_CASE("grid graph rejects zero dimensions") {
    CHECK_THROWS_AS(build_grid_graph(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_grid_graph(3, 0), std::invalid_argument);
}

TEST_CASE("grid graph edge count formula holds for all grids up to 50x50") {
    for (std::int64_t nr = 1; nr <= 50; ++nr)
        for (std::int64_t nc = 1; nc <= 50; ++nc) {
            const GridGraph g = build_grid_graph(nr, nc);
            REQUIRE(g.n_edges() == grid_edge_count(nr, nc));
        }
}

TEST_CASE("grid graph edges are lexicographically sorted 4-neighbor pairs") {
    for (const auto& [nr, nc] : {std::pair<std::int64_t, std::int64_t>{1, 7},
                                {7, 1},
                                {3, 4},
                                {5, 5},
                                {2, 9}}) {
        const GridGraph g = build_grid_graph(nr, nc);
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            const Edge& e = g.edges[i];
            REQUIRE(e.u < e.v);
            // 4-adjacency: either same row and adjacent column, or same
            // column and adjacent row.
            const bool horizontal = e.v == e.u + 1 && e.u / nc == e.v / nc;
            const bool vertical = e.v == e.u + nc;
            REQUIRE((horizontal || vertical));
            if (i > 0) {
                const Edge& p = g.edges[i - 1];
                REQUIRE((p.u < e.u || (p.u == e.u && p.v < e.v)));
            }
        }
    }
}

TEST_CASE("subset distance of a vertex to itself is zero") {
    const HyperCube cube = random_cube(2, 3, 5, 42);
    const std::vector<std::uint32_t> bands{0, 2, 4};
    CHECK(subset_distance(cube, 3, 3, bands) == 0.0);
}

TEST_CASE("subset distance matches the 3-4-5 triangle") {
    HyperCube cube(1, 2, 2);
    cube.at(0, 0, 0) = 3.0;
    cube.at(0, 0, 1) = 0.0;
    cube.at(0, 1, 0) = 0.0;
    cube.at(0, 1, 1) = 4.0;
    const std::vector<std::uint32_t> both{0, 1};
    const std::vector<std::uint32_t> first{0};
    CHECK(subset_distance(cube, 0, 1, both) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(subset_distance(cube, 0, 1, first) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("subset distance rejects out-of-range bands and vertices") {
    const HyperCube cube = random_cube(2, 2, 3, 7);
    const std::vector<std::uint32_t> bad_band{3};
    const std::vector<std::uint32_t> ok{0};
    CHECK_THROWS_AS(subset_distance(cube, 0, 1, bad_band), std::invalid_argument);
    CHECK_THROWS_AS(subset_distance(cube, 0, 4, ok), std::invalid_argument);
    CHECK_THROWS_AS(subset_distance(cube, -1, 1, ok), std::invalid_argument);
}

TEST_CASE("subset distance is a metric on the sampled bands") {
    const HyperCube cube = random_cube(4, 4, 6, 99);
    Rng rng(123);
    for (int it = 0; it < 500; ++it) {
        const auto kf = static_cast<std::uint32_t>(1 + rng.below(6));
        const std::vector<std::uint32_t> bands = rng.sample_without_replacement(6, kf);
        const auto u = static_cast<std::int64_t>(rng.below(16));
        const auto v = static_cast<std::int64_t>(rng.below(16));
        const auto w = static_cast<std::int64_t>(rng.below(16));
        const double duv = subset_distance(cube, u, v, bands);
        const double dvu = subset_distance(cube, v, u, bands);
        const double duw = subset_distance(cube, u, w, bands);
        const double dvw = subset_distance(cube, v, w, bands);
        REQUIRE(duv == dvu);
        REQUIRE(duv >= 0.0);
        REQUIRE(duw <= duv + dvw + 1e-12);
        if (u == v) REQUIRE(duv == 0.0);
    }
}

TEST_CASE("subset distance grows with the band set") {
    const HyperCube cube = random_cube(3, 3, 8, 5);
    Rng rng(17);
    for (int it = 0; it < 300; ++it) {
        const auto k2 = static_cast<std::uint32_t>(1 + rng.below(8));
        std::vector<std::uint32_t> b2 = rng.sample_without_replacement(8, k2);
        const auto k1 = static_cast<std::uint32_t>(1 + rng.below(k2));
        std::vector<std::uint32_t> b1(b2.begin(), b2.begin() + k1);
        const auto u = static_cast<std::int64_t>(rng.below(9));
        const auto v = static_cast<std::int64_t>(rng.below(9));
        REQUIRE(subset_distance(cube, u, v, b1) <=
                subset_distance(cube, u, v, b2) + 1e-12);
    }
}

TEST_CASE("union-find singletons are their own representatives") {
    UnionFind uf(3);
    CHECK(uf.find(2) == 2);
    CHECK(uf.find(0) == 0);
}

TEST_CASE("union-find merges components") {
    UnionFind uf(3);
    uf.unite(0, 1);
    CHECK(uf.find(0) == uf.find(1));
    CHECK(uf.find(2) != uf.find(0));
}

TEST_CASE("union-find partitions five vertices as expected") {
    UnionFind uf(5);
    uf.unite(0, 1);
    uf.unite(1, 2);
    uf.unite(3, 4);
    CHECK(uf.same(0, 2));
    CHECK(uf.same(3, 4));
    CHECK_FALSE(uf.same(2, 3));
}

TEST_CASE("union-find find is idempotent and union returns the representative") {
    UnionFind uf(8);
    const std::int64_t r = uf.unite(2, 5);
    CHECK(uf.find(2) == r);
    CHECK(uf.find(5) == r);
    CHECK(uf.find(uf.find(5)) == uf.find(5));
}

TEST_CASE("union-find rejects out-of-range indices") {
    UnionFind uf(4);
    CHECK_THROWS_AS(uf.find(4), std::invalid_argument);
    CHECK_THROWS_AS(uf.find(-1), std::invalid_argument);
    CHECK_THROWS_AS(uf.unite(0, 7), std::invalid_argument);
}

TEST_CASE("union-find agrees with a BFS component oracle on random sequences") {
    Rng rng(2024);
    for (int seq = 0; seq < 1000; ++seq) {
        const auto n = static_cast<std::int64_t>(2 + rng.below(63));
        const auto m = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(2 * n)));
        UnionFind uf(n);
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < m; ++i) {
            const auto a = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
            const auto b = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
            if (a == b) continue;
            edges.push_back({std::min(a, b), std::max(a, b)});
            uf.unite(a, b);
        }
        const std::vector<int> comp = bfs_components(n, edges);
        for (std::int64_t a = 0; a < n; ++a)
            for (std::int64_t b = a + 1; b < n; ++b)
                REQUIRE(uf.same(a, b) ==
                        (comp[static_cast<std::size_t>(a)] == comp[static_cast<std::size_t>(b)]));
    }
}

TEST_CASE("cube validation rejects bad dimensions and non-finite data") {
    HyperCube cube = random_cube(2, 2, 2, 1);
    CHECK_NOTHROW(cube.validate());
    cube.data[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cube.validate(), std::invalid_argument);
    cube.data[3] = 0.0;
    cube.data.pop_back();
    CHECK_THROWS_AS(cube.validate(), std::invalid_argument);
}
