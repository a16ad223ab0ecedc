#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esw/cube.hpp"
#include "esw/edge_weights.hpp"
#include "esw/grid_graph.hpp"
#include "esw/labels.hpp"
#include "esw/run_result.hpp"
#include "esw/watershed.hpp"

namespace esw {

enum class Similarity : std::uint8_t {
    EuclideanExp, // exp(-beta * ||X(i) - X(j)||), full bands
    Cosine,       // X(i).X(j) / (|X(i)||X(j)|), clamped to [0, 1]
    EswComplement // exp(-beta * W_esw(e))
};

std::string similarity_name(Similarity s);

struct RwConfig {
    Similarity similarity = Similarity::EswComplement;
    double beta = 10.0;       // kernel scale; see default_beta_euclidean for EuclideanExp
    double epsilon = 1e-6;    // similarity floor, keeps the reduced system positive definite
    double cg_tol = 1e-8;     // relative residual target
    int cg_max_iter = 20000;

    void validate() const;
};

// Recommended Euclidean kernel scale: 1 / (mean full-band edge distance).
double default_beta_euclidean(const HyperCube& cube, const GridGraph& graph);

// Combinatorial graph Laplacian L = D - W in adjacency form. L_ii = sum of
// incident weights, L_ij = -w_ij on edges. Row sums are zero by construction.
class SparseLaplacian {
public:
    static SparseLaplacian from_edges(std::int64_t n, std::span<const Edge> edges,
                                      std::span<const double> weights);

    std::int64_t dimension() const { return n_; }
    double degree(std::int64_t v) const { return degree_[static_cast<std::size_t>(v)]; }

    // Neighbors of v with the connecting weight, ascending by neighbor id.
    std::span<const std::int64_t> neighbors(std::int64_t v) const;
    std::span<const double> neighbor_weights(std::int64_t v) const;

    // y = L x, fixed per-row accumulation order.
    void apply(std::span<const double> x, std::span<double> y) const;

private:
    std::int64_t n_ = 0;
    std::vector<std::int64_t> offsets_;
    std::vector<std::int64_t> adj_;
    std::vector<double> w_;
    std::vector<double> degree_;
};

// Similarity weights for the random-walk Laplacian. All outputs are floored
// at config.epsilon; Cosine maps zero-norm pixels to the floor.
EdgeWeights similarity_weights(const HyperCube& cube, const GridGraph& graph,
                               const EswEdgeWeights* esw, const RwConfig& config);

// Requires kind == Similarity with strictly positive values.
SparseLaplacian build_laplacian(const GridGraph& graph, const EdgeWeights& weights);

struct RwSolution {
    LabelMap labels;
    // potentials[c-1][v] = probability a walk from v reaches class c seeds
    // first; rows sum to 1 over classes up to solver tolerance.
    std::vector<std::vector<double>> potentials;
};

// Random-walk semi-supervised classification: one harmonic solve per class on
// the seed-reduced system (Jacobi-preconditioned conjugate gradients), then
// per-vertex argmax with ties to the smallest class id. Every class in
// 1..n_classes needs at least one seed. Throws solver_error if CG fails.
RwSolution rw_classify(const SparseLaplacian& laplacian, const SeedSet& seeds,
                       std::int32_t n_classes, const RwConfig& config);

// Seed-sweep protocol: per trial, draw seeds_per_class groundtruth pixels
// per class (stream substream_seed(master_seed, trial)), classify with every
// given method on the shared seed draw, and score overall accuracy on the
// labelled non-seed pixels.
std::vector<RunResult> rw_experiment(const HyperCube& cube, const GridGraph& graph,
                                     const LabelMap& gt, const EswEdgeWeights* esw,
                                     const std::vector<RwConfig>& methods, int seeds_per_class,
                                     int trials, std::uint64_t master_seed, int workers = 1);

} // namespace esw
