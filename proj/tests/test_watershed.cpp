#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "esw/cube.hpp"
#include "esw/grid_graph.hpp"
#include "esw/labels.hpp"
#include "esw/rng.hpp"
#include "esw/watershed.hpp"

using namespace esw;

namespace {

HyperCube chain_cube(std::vector<double> values) {
    const auto n = static_cast<std::int64_t>(values.size());
    return HyperCube(1, n, 1, std::move(values));
}

HyperCube random_cube(std::int64_t nr, std::int64_t nc, std::int64_t nz, std::uint64_t seed) {
    HyperCube cube(nr, nc, nz);
    Rng rng(seed);
    for (auto& v : cube.data) v = rng.uniform(0.0, 3.0);
    return cube;
}

std::vector<double> full_edge_distances(const HyperCube& cube, const GridGraph& graph) {
    std::vector<double> d(static_cast<std::size_t>(graph.n_edges()));
    for (std::size_t e = 0; e < d.size(); ++e)
        d[e] = full_distance(cube, graph.edges[e].u, graph.edges[e].v);
    return d;
}

// Exhaustive expectation of cut frequencies for kappa_v = 2 on a fixed band
// subset: every unordered seed pair is equally likely, so the expected weight
// of an edge is (#pairs that cut it) / (#pairs).
std::vector<double> enumerate_pair_weights(const GridGraph& graph,
                                           const std::vector<double>& dist) {
    const std::int64_t n = graph.n_vertices();
    std::vector<double> weight(static_cast<std::size_t>(graph.n_edges()), 0.0);
    std::int64_t pairs = 0;
    for (std::int64_t a = 0; a < n; ++a)
        for (std::int64_t b = a + 1; b < n; ++b) {
            ++pairs;
            SeedSet seeds;
            seeds.vertices = {a, b};
            seeds.labels = {1, 2};
            const LabelMap lab = seeded_watershed(graph, dist, seeds);
            for (std::size_t e = 0; e < weight.size(); ++e) {
                const Edge& ed = graph.edges[e];
                if (lab[static_cast<std::size_t>(ed.u)] != lab[static_cast<std::size_t>(ed.v)])
                    weight[e] += 1.0;
            }
        }
    for (auto& w : weight) w /= static_cast<double>(pairs);
    return weight;
}

} // namespace

TEST_CASE("watershed with every vertex seeded returns the seeds") {
    const GridGraph g = build_grid_graph(2, 3);
    const std::vector<double> dist(static_cast<std::size_t>(g.n_edges()), 1.0);
    SeedSet seeds;
    for (std::int64_t v = 0; v < g.n_vertices(); ++v) {
        seeds.vertices.push_back(v);
        seeds.labels.push_back(static_cast<std::int32_t>(v % 3) + 1);
    }
    const LabelMap lab = seeded_watershed(g, dist, seeds);
    for (std::size_t v = 0; v < lab.size(); ++v)
        CHECK(lab[v] == seeds.labels[v]);
}

TEST_CASE("watershed on a 3-chain attaches the middle pixel across the cheap edge") {
    const HyperCube cube = chain_cube({0.0, 0.1, 1.0});
    const GridGraph g = build_grid_graph(1, 3);
    const std::vector<double> dist = full_edge_distances(cube, g);
    SeedSet seeds;
    seeds.vertices = {0, 2};
    seeds.labels = {1, 2};
    const LabelMap lab = seeded_watershed(g, dist, seeds);
    CHECK(lab[0] == 1);
    CHECK(lab[1] == 1);
    CHECK(lab[2] == 2);
}

TEST_CASE("watershed ties resolve by canonical edge index") {
    const GridGraph g = build_grid_graph(2, 2);
    const std::vector<double> dist(4, 1.0);
    SeedSet seeds;
    seeds.vertices = {0, 3};
    seeds.labels = {1, 2};
    const LabelMap lab = seeded_watershed(g, dist, seeds);
    // Edge (0,1) merges first, then (0,2); (1,3) and (2,3) find both sides
    // labelled and do nothing.
    CHECK(lab[0] == 1);
    CHECK(lab[1] == 1);
    CHECK(lab[2] == 1);
    CHECK(lab[3] == 2);
}

TEST_CASE("watershed rejects an empty seed set") {
    const GridGraph g = build_grid_graph(1, 3);
    const std::vector<double> dist(2, 1.0);
    CHECK_THROWS_AS(seeded_watershed(g, dist, SeedSet{}), std::invalid_argument);
}

TEST_CASE("watershed leaves unreachable components unlabelled") {
    GridGraph g;
    g.nr = 1;
    g.nc = 4;
    g.edges = {{0, 1}, {2, 3}};
    const std::vector<double> dist(2, 1.0);
    SeedSet seeds;
    seeds.vertices = {0};
    seeds.labels = {1};
    const LabelMap lab = seeded_watershed(g, dist, seeds);
    CHECK(lab[0] == 1);
    CHECK(lab[1] == 1);
    CHECK(lab[2] == UNLABELLED);
    CHECK(lab[3] == UNLABELLED);
}

TEST_CASE("watershed labeling is invariant under strictly monotone distance transforms") {
    const HyperCube cube = random_cube(5, 6, 4, 31);
    const GridGraph g = build_grid_graph(5, 6);
    const std::vector<double> dist = full_edge_distances(cube, g);
    std::vector<double> affine(dist.size());
    std::vector<double> expd(dist.size());
    for (std::size_t e = 0; e < dist.size(); ++e) {
        affine[e] = 2.0 * dist[e] + 3.0;
        expd[e] = std::exp(dist[e]);
    }
    SeedSet seeds;
    seeds.vertices = {0, 17, 29};
    seeds.labels = {1, 2, 3};
    const LabelMap base = seeded_watershed(g, dist, seeds);
    const LabelMap la = seeded_watershed(g, affine, seeds);
    const LabelMap le = seeded_watershed(g, expd, seeds);
    CHECK(base.labels == la.labels);
    CHECK(base.labels == le.labels);
}

TEST_CASE("ensemble weight on a single edge with two seeds is always 1") {
    const HyperCube cube = chain_cube({0.4, 0.9});
    const GridGraph g = build_grid_graph(1, 2);
    EswConfig cfg;
    cfg.n_repeats = 5;
    cfg.kappa_f = 1;
    cfg.kappa_v = 2;
    cfg.master_seed = 11;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    CHECK(w.weights.values[0] == 1.0);
}

TEST_CASE("ensemble weights on the 3-chain approach the seed-pair enumeration values") {
    const HyperCube cube = chain_cube({0.0, 0.0, 1.0});
    const GridGraph g = build_grid_graph(1, 3);
    const std::vector<double> dist = full_edge_distances(cube, g);
    const std::vector<double> exact = enumerate_pair_weights(g, dist);
    REQUIRE(exact[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE(exact[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    EswConfig cfg;
    cfg.n_repeats = 10000;
    cfg.kappa_f = 1;
    cfg.kappa_v = 2;
    cfg.master_seed = 7;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    for (std::size_t e = 0; e < 2; ++e) {
        const double p = exact[e];
        const double bound =
            3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.n_repeats));
        CHECK(std::abs(w.weights.values[e] - p) <= bound);
    }
}

TEST_CASE("ensemble weights separate a high-contrast boundary from the interior") {
    // 2x2, one band, left column 0 and right column 10. Over the six
    // equiprobable seed pairs the boundary edges (0,1) and (2,3) are cut 4/6
    // and 6/6 of the time, the interior edges (0,2) and (1,3) only 1/6.
    HyperCube cube(2, 2, 1, {0.0, 10.0, 0.0, 10.0});
    const GridGraph g = build_grid_graph(2, 2);
    const std::vector<double> dist = full_edge_distances(cube, g);
    const std::vector<double> exact = enumerate_pair_weights(g, dist);
    REQUIRE(exact[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    REQUIRE(exact[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    REQUIRE(exact[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    REQUIRE(exact[3] == doctest::Approx(1.0).epsilon(1e-12));

    EswConfig cfg;
    cfg.n_repeats = 1000;
    cfg.kappa_f = 1;
    cfg.kappa_v = 2;
    cfg.master_seed = 3;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    CHECK(w.weights.values[0] > w.weights.values[1]);
    CHECK(w.weights.values[0] > w.weights.values[2]);
    CHECK(w.weights.values[3] > w.weights.values[1]);
    CHECK(w.weights.values[3] > w.weights.values[2]);
}

TEST_CASE("ensemble weights are identical across worker counts") {
    const HyperCube cube = random_cube(6, 7, 5, 77);
    const GridGraph g = build_grid_graph(6, 7);
    EswConfig cfg;
    cfg.n_repeats = 64;
    cfg.master_seed = 99;
    const EswEdgeWeights w1 = esw_edge_weights(cube, g, cfg, 1);
    const EswEdgeWeights w4 = esw_edge_weights(cube, g, cfg, 4);
    CHECK(w1.weights.values == w4.weights.values);
}

TEST_CASE("ensemble weights are in range and quantized to 1/N") {
    const HyperCube cube = random_cube(5, 5, 4, 13);
    const GridGraph g = build_grid_graph(5, 5);
    EswConfig cfg;
    cfg.n_repeats = 50;
    cfg.master_seed = 4;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    for (const double v : w.weights.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        const double scaled = v * static_cast<double>(cfg.n_repeats);
        REQUIRE(std::abs(scaled - std::round(scaled)) < 1e-9);
    }
}

TEST_CASE("single-repetition weights are 0 or 1") {
    const HyperCube cube = random_cube(4, 4, 3, 21);
    const GridGraph g = build_grid_graph(4, 4);
    EswConfig cfg;
    cfg.n_repeats = 1;
    cfg.master_seed = 5;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    for (const double v : w.weights.values) REQUIRE((v == 0.0 || v == 1.0));
}

TEST_CASE("seeding every vertex forces weight 1 on every edge") {
    const HyperCube cube = random_cube(3, 4, 3, 8);
    const GridGraph g = build_grid_graph(3, 4);
    EswConfig cfg;
    cfg.n_repeats = 10;
    cfg.kappa_v = g.n_vertices();
    cfg.master_seed = 6;
    const EswEdgeWeights w = esw_edge_weights(cube, g, cfg);
    for (const double v : w.weights.values) REQUIRE(v == 1.0);
}

TEST_CASE("ensemble config bounds are enforced") {
    const HyperCube cube = random_cube(2, 2, 3, 1);
    const GridGraph g = build_grid_graph(2, 2);
    EswConfig cfg;
    cfg.n_repeats = 0;
    CHECK_THROWS_AS(esw_edge_weights(cube, g, cfg), std::invalid_argument);
    cfg.n_repeats = 1;
    cfg.kappa_f = 4; // only 3 bands
    CHECK_THROWS_AS(esw_edge_weights(cube, g, cfg), std::invalid_argument);
    cfg.kappa_f = 1;
    cfg.kappa_v = 1; // needs at least 2 seeds
    CHECK_THROWS_AS(esw_edge_weights(cube, g, cfg), std::invalid_argument);
    cfg.kappa_v = 5; // only 4 vertices
    CHECK_THROWS_AS(esw_edge_weights(cube, g, cfg), std::invalid_argument);
}

TEST_CASE("defaults resolve to ceil(sqrt(nz)) bands and 5% of vertices") {
    EswConfig cfg;
    const EswConfig r = cfg.resolved(16, 1024);
    CHECK(r.kappa_f == 4);
    CHECK(r.kappa_v == 52); // ceil(0.05 * 1024)
    const EswConfig tiny = cfg.resolved(2, 4);
    CHECK(tiny.kappa_f == 2);
    CHECK(tiny.kappa_v == 2); // clamped up to the minimum of 2
}

TEST_CASE("histogram splits edge samples by class agreement") {
    // Two constant regions with disjoint band supports: same-class subset
    // distances vanish on every subset, cross-class ones never do.
    HyperCube cube(2, 2, 4);
    for (std::int64_t v = 0; v < 4; ++v) {
        double* px = cube.pixel(v);
        const bool left = v % 2 == 0;
        px[0] = left ? 1.0 : 0.0;
        px[1] = left ? 1.0 : 0.0;
        px[2] = left ? 0.0 : 1.0;
        px[3] = left ? 0.0 : 1.0;
    }
    const GridGraph g = build_grid_graph(2, 2);
    LabelMap gt(4);
    gt[0] = 1;
    gt[2] = 1;
    gt[1] = 2;
    gt[3] = 2;
    EswConfig cfg;
    cfg.n_repeats = 40;
    cfg.kappa_f = 2;
    cfg.master_seed = 19;
    const HistogramSamples h = subset_distance_histogram(cube, g, gt, cfg);
    // 2 same-class edges and 2 cross-class edges per repetition.
    CHECK(h.same_class.size() == 80);
    CHECK(h.different_class.size() == 80);
    for (const double d : h.same_class) REQUIRE(d == 0.0);
    for (const double d : h.different_class) REQUIRE(d >= 1.0);
}

TEST_CASE("histogram on a single-band cube reproduces full-band distances") {
    const HyperCube cube = random_cube(3, 3, 1, 44);
    const GridGraph g = build_grid_graph(3, 3);
    LabelMap gt(9);
    for (std::size_t v = 0; v < 9; ++v) gt[v] = v < 5 ? 1 : 2;
    EswConfig cfg;
    cfg.n_repeats = 3;
    cfg.kappa_f = 1;
    cfg.master_seed = 2;
    const HistogramSamples h = subset_distance_histogram(cube, g, gt, cfg);
    std::vector<double> expected_same, expected_diff;
    for (const Edge& e : g.edges) {
        const auto lu = gt[static_cast<std::size_t>(e.u)];
        const auto lv = gt[static_cast<std::size_t>(e.v)];
        const double d = full_distance(cube, e.u, e.v);
        (lu == lv ? expected_same : expected_diff).push_back(d);
    }
    REQUIRE(h.same_class.size() == expected_same.size() * 3);
    REQUIRE(h.different_class.size() == expected_diff.size() * 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t i = 0; i < expected_same.size(); ++i)
            REQUIRE(h.same_class[r * expected_same.size() + i] ==
                    doctest::Approx(expected_same[i]).epsilon(1e-12));
}

TEST_CASE("histogram skips unlabelled pixels and requires two classes") {
    const HyperCube cube = random_cube(2, 2, 2, 3);
    const GridGraph g = build_grid_graph(2, 2);
    LabelMap one(4);
    for (std::size_t v = 0; v < 4; ++v) one[v] = 1;
    EswConfig cfg;
    cfg.n_repeats = 2;
    CHECK_THROWS_AS(subset_distance_histogram(cube, g, one, cfg), std::invalid_argument);

    LabelMap partial(4);
    partial[0] = 1;
    partial[1] = 2;
    // Pixels 2 and 3 stay unlabelled: only edge (0,1) contributes.
    const HistogramSamples h = subset_distance_histogram(cube, g, partial, cfg);
    CHECK(h.same_class.empty());
    CHECK(h.different_class.size() == 2);
}
