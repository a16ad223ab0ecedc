#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esw/cube.hpp"
#include "esw/edge_weights.hpp"
#include "esw/grid_graph.hpp"
#include "esw/labels.hpp"

namespace esw {

// Ensemble configuration. kappa_f bands and kappa_v seed vertices are drawn
// per repetition; n_repeats repetitions are averaged.
struct EswConfig {
    std::int64_t n_repeats = 100;
    std::int64_t kappa_f = 0; // 0 = ceil(sqrt(nz))
    std::int64_t kappa_v = 0; // 0 = ceil(0.05 * |V|), clamped to [2, |V|]
    std::uint64_t master_seed = 0;

    // Resolves the 0-defaults against concrete dimensions and checks bounds.
    EswConfig resolved(std::int64_t nz, std::int64_t n_vertices) const;
    void validate(std::int64_t nz, std::int64_t n_vertices) const;
};

// Estimated boundary probabilities: values[e] = (#repetitions cutting e) / N,
// always in [0, 1] with values[e] * N integral.
struct EswEdgeWeights {
    EdgeWeights weights; // kind == Dissimilarity
    EswConfig config;
};

// Greedy seed propagation: edges are scanned in increasing dissimilarity
// order (ties broken by canonical edge index); an edge merges its two
// components unless both already carry a label, so labelled regions grow
// until they meet. On a connected graph every vertex ends up labelled;
// components never reached by a label keep UNLABELLED.
LabelMap seeded_watershed(const GridGraph& graph, std::span<const double> edge_dist,
                          const SeedSet& seeds);

// Ensemble estimator: per repetition draws kappa_f bands and kappa_v seed
// vertices (distinct pseudo-labels), propagates with seeded_watershed on the
// sampled-band distances, and counts edges whose endpoint labels differ.
// Repetition i consumes the stream substream_seed(master_seed, i), so the
// result is identical for any worker count.
EswEdgeWeights esw_edge_weights(const HyperCube& cube, const GridGraph& graph,
                                const EswConfig& config, int workers = 1);

// Raw subset-distance samples of groundtruth-labelled edges, split by whether
// the endpoint classes agree. Edges touching UNLABELLED pixels are skipped.
struct HistogramSamples {
    std::vector<double> same_class;
    std::vector<double> different_class;
};

HistogramSamples subset_distance_histogram(const HyperCube& cube, const GridGraph& graph,
                                           const LabelMap& gt, const EswConfig& config);

} // namespace esw
