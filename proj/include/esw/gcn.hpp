#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "esw/cube.hpp"
#include "esw/edge_weights.hpp"
#include "esw/grid_graph.hpp"
#include "esw/labels.hpp"

namespace esw {

struct GcnConfig {
    int max_steps = 200;
    int repeats = 10;
    std::int32_t n_clusters = 2;
    int knn_k = 10;
    int kmeans_restarts = 5;
    std::int64_t subsample = 0; // 0 = cluster every row
    std::uint64_t master_seed = 0;

    void validate() const;
};

// I - D^{-1/2} W D^{-1/2}: unit diagonal, -w_uv/sqrt(d_u d_v) off-diagonal.
class NormalizedLaplacian {
public:
    static NormalizedLaplacian from_graph(const GridGraph& graph, const EdgeWeights* weights);

    std::int64_t dimension() const { return n_; }
    double degree(std::int64_t v) const { return degree_[static_cast<std::size_t>(v)]; }
    std::span<const std::int64_t> neighbors(std::int64_t v) const;
    // Entries w_uv/sqrt(d_u d_v), aligned with neighbors(v).
    std::span<const double> normalized_weights(std::int64_t v) const;

    // y = L x
    void apply(std::span<const double> x, std::span<double> y) const;

private:
    std::int64_t n_ = 0;
    std::vector<std::int64_t> offsets_;
    std::vector<std::int64_t> adj_;
    std::vector<double> nw_;
    std::vector<double> degree_;
};

// weights == nullptr means every edge counts 1.
NormalizedLaplacian build_normalized_laplacian(const GridGraph& graph,
                                               const EdgeWeights* weights);

struct LambdaMaxEstimate {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Power iteration with a seeded start vector; stops when the Rayleigh
// quotient changes by at most tol between sweeps.
LambdaMaxEstimate estimate_lambda_max(const NormalizedLaplacian& laplacian, double tol = 1e-12,
                                      int max_iter = 50000, std::uint64_t seed = 0);

struct FeatureMatrix {
    std::int64_t n = 0;
    std::int64_t d = 0;
    int step = 0;
    std::vector<double> data; // row-major

    FeatureMatrix() = default;
    FeatureMatrix(std::int64_t n_rows, std::int64_t n_cols);

    double* row(std::int64_t i) { return data.data() + i * d; }
    const double* row(std::int64_t i) const { return data.data() + i * d; }
    void validate() const;
};

// Rows of the cube, one spectrum per vertex.
FeatureMatrix cube_features(const HyperCube& cube);

// out = (I - L/lambda_max) in; row reduction order is fixed regardless of workers.
void convolve_step(const NormalizedLaplacian& laplacian, const FeatureMatrix& in,
                   FeatureMatrix& out, double lambda_max, int workers = 1);

// Applies `steps` filter applications; invokes on_step after each one.
FeatureMatrix graph_convolve(const NormalizedLaplacian& laplacian, FeatureMatrix x,
                             double lambda_max, int steps,
                             const std::function<void(const FeatureMatrix&)>& on_step = {},
                             int workers = 1);

struct ClusterResult {
    LabelMap labels;        // 1..n_clusters
    bool degenerate = false; // fewer than n_clusters distinct clusters emerged
};

// kNN Gaussian affinity (bandwidth = median directed kNN distance), symmetric
// normalized Laplacian, n_clusters smallest eigenvectors, row-normalized,
// seeded k-means. config.subsample > 0 caps the clustered rows; the rest are
// labelled by their nearest clustered row. Randomness comes from
// config.master_seed only.
ClusterResult spectral_cluster(const FeatureMatrix& x, const GcnConfig& config);

// Maximizes the total matched count over cluster-to-column assignments;
// ties resolve to the lexicographically smallest assignment vector.
// Entry c is the matched column of cluster row c, or -1 when the cluster
// is matched to zero-padding.
std::vector<std::int32_t> hungarian_match(const std::vector<std::vector<std::int64_t>>& confusion);

struct ClusterAssignment {
    std::vector<std::int32_t> classes;          // distinct groundtruth labels, ascending
    std::vector<std::int32_t> cluster_to_class; // index into classes, -1 = unmatched
    std::int64_t matched = 0;
};

// Confusion counts over labelled pixels, then hungarian_match.
ClusterAssignment match_clusters(const LabelMap& pred, const LabelMap& gt,
                                 std::int32_t n_clusters);

// Fraction of labelled pixels whose mapped cluster equals the groundtruth label.
double overall_accuracy(const LabelMap& pred, const LabelMap& gt,
                        const ClusterAssignment& assignment);

struct GcnCurves {
    std::vector<std::vector<double>> per_repeat_best; // repeats x max_steps, running max
    std::vector<double> mean_best;                    // length max_steps
    std::vector<double> step_wall_ms;                 // filter step plus all its clusterings
    double lambda_max = 0.0;
    int degenerate_count = 0;
};

// Filters cube features step by step; after each step every repeat clusters
// the current features with its own substream seed and records the running
// best overall accuracy.
GcnCurves gcn_experiment(const HyperCube& cube, const GridGraph& graph, const LabelMap& gt,
                         const EdgeWeights* weights, const GcnConfig& config, int workers = 1);

} // namespace esw
