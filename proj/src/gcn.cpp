#include "esw/gcn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "esw/errors.hpp"
#include "esw/parallel.hpp"
#include "esw/rng.hpp"

namespace esw {

void GcnConfig::validate() const {
    if (max_steps < 1) throw std::invalid_argument("GcnConfig: max_steps must be >= 1");
    if (repeats < 1) throw std::invalid_argument("GcnConfig: repeats must be >= 1");
    if (n_clusters < 2) throw std::invalid_argument("GcnConfig: n_clusters must be >= 2");
    if (knn_k < 1) throw std::invalid_argument("GcnConfig: knn_k must be >= 1");
    if (kmeans_restarts < 1)
        throw std::invalid_argument("GcnConfig: kmeans_restarts must be >= 1");
    if (subsample != 0 && subsample < n_clusters)
        throw std::invalid_argument("GcnConfig: subsample must be 0 or >= n_clusters");
}

NormalizedLaplacian NormalizedLaplacian::from_graph(const GridGraph& graph,
                                                    const EdgeWeights* weights) {
    if (weights != nullptr) {
        weights->validate(graph.n_edges());
        for (std::size_t i = 0; i < weights->values.size(); ++i)
            if (!(weights->values[i] > 0.0))
                throw std::invalid_argument("NormalizedLaplacian: nonpositive weight at edge " +
                                            std::to_string(i));
    }
    const std::int64_t n = graph.n_vertices();
    NormalizedLaplacian L;
    L.n_ = n;
    L.degree_.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const Edge& e = graph.edges[i];
        const double w = weights ? weights->values[i] : 1.0;
        L.degree_[static_cast<std::size_t>(e.u)] += w;
        L.degree_[static_cast<std::size_t>(e.v)] += w;
        ++count[static_cast<std::size_t>(e.u)];
        ++count[static_cast<std::size_t>(e.v)];
    }
    for (std::int64_t v = 0; v < n; ++v)
        if (!(L.degree_[static_cast<std::size_t>(v)] > 0.0))
            throw std::invalid_argument("NormalizedLaplacian: isolated vertex " +
                                        std::to_string(v));
    L.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t v = 0; v < n; ++v)
        L.offsets_[static_cast<std::size_t>(v) + 1] =
            L.offsets_[static_cast<std::size_t>(v)] + count[static_cast<std::size_t>(v)];
    L.adj_.resize(static_cast<std::size_t>(L.offsets_.back()));
    L.nw_.resize(L.adj_.size());
    std::vector<std::int64_t> fill(L.offsets_.begin(), L.offsets_.end() - 1);
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const Edge& e = graph.edges[i];
        const double w = weights ? weights->values[i] : 1.0;
        const double nw = w / std::sqrt(L.degree_[static_cast<std::size_t>(e.u)] *
                                        L.degree_[static_cast<std::size_t>(e.v)]);
        auto& fu = fill[static_cast<std::size_t>(e.u)];
        auto& fv = fill[static_cast<std::size_t>(e.v)];
        L.adj_[static_cast<std::size_t>(fu)] = e.v;
        L.nw_[static_cast<std::size_t>(fu++)] = nw;
        L.adj_[static_cast<std::size_t>(fv)] = e.u;
        L.nw_[static_cast<std::size_t>(fv++)] = nw;
    }
    // Canonical neighbor order inside each row.
    for (std::int64_t v = 0; v < n; ++v) {
        const std::int64_t lo = L.offsets_[static_cast<std::size_t>(v)];
        const std::int64_t hi = L.offsets_[static_cast<std::size_t>(v) + 1];
        std::vector<std::pair<std::int64_t, double>> row;
        row.reserve(static_cast<std::size_t>(hi - lo));
        for (std::int64_t i = lo; i < hi; ++i)
            row.emplace_back(L.adj_[static_cast<std::size_t>(i)],
                             L.nw_[static_cast<std::size_t>(i)]);
        std::sort(row.begin(), row.end());
        for (std::int64_t i = lo; i < hi; ++i) {
            L.adj_[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i - lo)].first;
            L.nw_[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i - lo)].second;
        }
    }
    return L;
}

std::span<const std::int64_t> NormalizedLaplacian::neighbors(std::int64_t v) const {
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {adj_.data() + lo, hi - lo};
}

std::span<const double> NormalizedLaplacian::normalized_weights(std::int64_t v) const {
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {nw_.data() + lo, hi - lo};
}

void NormalizedLaplacian::apply(std::span<const double> x, std::span<double> y) const {
    for (std::int64_t v = 0; v < n_; ++v) {
        double acc = x[static_cast<std::size_t>(v)];
        for (std::int64_t i = offsets_[static_cast<std::size_t>(v)];
             i < offsets_[static_cast<std::size_t>(v) + 1]; ++i)
            acc -= nw_[static_cast<std::size_t>(i)] *
                   x[static_cast<std::size_t>(adj_[static_cast<std::size_t>(i)])];
        y[static_cast<std::size_t>(v)] = acc;
    }
}

NormalizedLaplacian build_normalized_laplacian(const GridGraph& graph,
                                               const EdgeWeights* weights) {
    return NormalizedLaplacian::from_graph(graph, weights);
}

LambdaMaxEstimate estimate_lambda_max(const NormalizedLaplacian& laplacian, double tol,
                                      int max_iter, std::uint64_t seed) {
    if (!(tol > 0.0)) throw std::invalid_argument("estimate_lambda_max: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("estimate_lambda_max: max_iter must be >= 1");
    const auto n = static_cast<std::size_t>(laplacian.dimension());

    Rng rng(substream_seed(seed, 0x6d78));
    std::vector<double> x(n), y(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.real01() - 0.5;
        norm += x[i] * x[i];
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) x[i] /= norm;

    LambdaMaxEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        laplacian.apply(x, y);
        double lambda = 0.0, ny2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lambda += x[i] * y[i];
            ny2 += y[i] * y[i];
        }
        est.value = lambda;
        est.iterations = it;
        if (it > 1 && std::abs(lambda - prev) <= tol) {
            est.converged = true;
            return est;
        }
        prev = lambda;
        if (ny2 == 0.0) { // start vector sits exactly in the null space
            est.converged = true;
            return est;
        }
        const double inv = 1.0 / std::sqrt(ny2);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] * inv;
    }
    return est;
}

FeatureMatrix::FeatureMatrix(std::int64_t n_rows, std::int64_t n_cols)
    : n(n_rows), d(n_cols), data(static_cast<std::size_t>(n_rows * n_cols), 0.0) {}

void FeatureMatrix::validate() const {
    if (n < 1 || d < 1) throw std::invalid_argument("FeatureMatrix: dimensions must be >= 1");
    if (data.size() != static_cast<std::size_t>(n * d))
        throw std::invalid_argument("FeatureMatrix: data length mismatch");
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!std::isfinite(data[i]))
            throw std::invalid_argument("FeatureMatrix: non-finite entry at index " +
                                        std::to_string(i));
}

FeatureMatrix cube_features(const HyperCube& cube) {
    cube.validate();
    FeatureMatrix f(cube.n_pixels(), cube.nz);
    f.data = cube.data;
    return f;
}

void convolve_step(const NormalizedLaplacian& laplacian, const FeatureMatrix& in,
                   FeatureMatrix& out, double lambda_max, int workers) {
    if (!(lambda_max > 0.0))
        throw std::invalid_argument("convolve_step: lambda_max must be > 0");
    if (in.n != laplacian.dimension())
        throw std::invalid_argument("convolve_step: feature rows do not match the graph");
    if (&in == &out) throw std::invalid_argument("convolve_step: in and out must be distinct");
    out.n = in.n;
    out.d = in.d;
    out.step = in.step + 1;
    out.data.resize(static_cast<std::size_t>(in.n * in.d));

    // (I - L/lambda) x = (1 - 1/lambda) x + (1/lambda) D^{-1/2} W D^{-1/2} x
    const double a = 1.0 - 1.0 / lambda_max;
    const double b = 1.0 / lambda_max;
    const std::size_t d = static_cast<std::size_t>(in.d);
    parallel_for(static_cast<std::size_t>(in.n), workers, [&](std::size_t v) {
        const double* xi = in.row(static_cast<std::int64_t>(v));
        double* yo = out.row(static_cast<std::int64_t>(v));
        for (std::size_t c = 0; c < d; ++c) yo[c] = a * xi[c];
        const auto nbrs = laplacian.neighbors(static_cast<std::int64_t>(v));
        const auto nws = laplacian.normalized_weights(static_cast<std::int64_t>(v));
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            const double w = b * nws[k];
            const double* xn = in.row(nbrs[k]);
            for (std::size_t c = 0; c < d; ++c) yo[c] += w * xn[c];
        }
    });
}

FeatureMatrix graph_convolve(const NormalizedLaplacian& laplacian, FeatureMatrix x,
                             double lambda_max, int steps,
                             const std::function<void(const FeatureMatrix&)>& on_step,
                             int workers) {
    if (steps < 1) throw std::invalid_argument("graph_convolve: steps must be >= 1");
    x.validate();
    FeatureMatrix buf;
    for (int k = 0; k < steps; ++k) {
        convolve_step(laplacian, x, buf, lambda_max, workers);
        std::swap(x, buf);
        if (on_step) on_step(x);
    }
    return x;
}

namespace {

double sq_distance(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        acc += t * t;
    }
    return acc;
}

struct AffinityGraph {
    std::vector<std::vector<std::pair<std::int64_t, double>>> rows; // (neighbor, weight)
    std::vector<double> degree;
};

// Symmetric kNN Gaussian affinity; bandwidth is the median directed kNN
// distance (1.0 when every such distance is zero).
AffinityGraph knn_affinity(const double* pts, std::size_t m, std::size_t d, int knn_k) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(knn_k), m - 1);
    std::vector<std::vector<std::pair<double, std::int64_t>>> nn(m);
    std::vector<std::pair<double, std::int64_t>> cand;
    for (std::size_t i = 0; i < m; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            cand.emplace_back(sq_distance(pts + i * d, pts + j * d, d),
                              static_cast<std::int64_t>(j));
        }
        if (k < cand.size())
            std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                             cand.end());
        cand.resize(k);
        nn[i] = cand;
    }

    std::vector<double> dists;
    dists.reserve(m * k);
    for (const auto& row : nn)
        for (const auto& [d2, j] : row) dists.push_back(std::sqrt(d2));
    std::sort(dists.begin(), dists.end());
    const std::size_t h = dists.size() / 2;
    double sigma = dists.size() % 2 == 1 ? dists[h] : 0.5 * (dists[h - 1] + dists[h]);
    if (!(sigma > 0.0)) sigma = 1.0;

    AffinityGraph g;
    g.rows.resize(m);
    g.degree.assign(m, 0.0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [d2, j] : nn[i]) {
            const double w = std::exp(-d2 * inv);
            g.rows[i].emplace_back(j, w);
            g.rows[static_cast<std::size_t>(j)].emplace_back(static_cast<std::int64_t>(i), w);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        auto& row = g.rows[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end(),
                              [](const auto& a, const auto& b) { return a.first == b.first; }),
                  row.end());
        double deg = 0.0;
        for (const auto& [j, w] : row) deg += w;
        g.degree[i] = deg;
    }
    return g;
}

constexpr std::size_t kDenseEigLimit = 512;

// Row-major m x n_eig matrix of the n_eig smallest eigenvectors of the
// symmetric normalized Laplacian of g, smallest eigenvalue first.
std::vector<double> laplacian_embedding(const AffinityGraph& g, std::int32_t n_eig,
                                        std::uint64_t seed) {
    const std::size_t m = g.rows.size();
    const auto ne = static_cast<std::size_t>(n_eig);
    std::vector<double> out(m * ne);

    if (m < kDenseEigLimit) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                      static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (const auto& [j, w] : g.rows[i])
                L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -=
                    w / std::sqrt(g.degree[i] * g.degree[static_cast<std::size_t>(j)]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
        if (es.info() != Eigen::Success)
            throw solver_error("spectral embedding: dense eigensolver failed", 0.0, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < ne; ++c)
                out[i * ne + c] = es.eigenvectors()(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(c));
        return out;
    }

    // Subspace iteration on B = 2I - L = I + D^{-1/2} W D^{-1/2}; the largest
    // eigenpairs of B are the smallest of L.
    const auto block = static_cast<Eigen::Index>(std::min<std::size_t>(ne + 6, m));
    std::vector<std::int64_t> off(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i)
        off[i + 1] = off[i] + static_cast<std::int64_t>(g.rows[i].size());
    std::vector<std::int64_t> adj(static_cast<std::size_t>(off[m]));
    std::vector<double> nw(adj.size());
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t t = static_cast<std::size_t>(off[i]);
        for (const auto& [j, w] : g.rows[i]) {
            adj[t] = j;
            nw[t] = w / std::sqrt(g.degree[i] * g.degree[static_cast<std::size_t>(j)]);
            ++t;
        }
    }

    const auto em = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd Q(em, block);
    Rng rng(substream_seed(seed, 1));
    for (Eigen::Index c = 0; c < block; ++c)
        for (Eigen::Index i = 0; i < em; ++i) Q(i, c) = rng.normal();
    {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(em, block);
    }

    auto apply_b = [&](const Eigen::MatrixXd& in, Eigen::MatrixXd& res) {
        res.resize(em, block);
        for (Eigen::Index c = 0; c < block; ++c) {
            for (std::size_t i = 0; i < m; ++i) {
                double acc = in(static_cast<Eigen::Index>(i), c);
                for (std::int64_t t = off[i]; t < off[i + 1]; ++t)
                    acc += nw[static_cast<std::size_t>(t)] *
                           in(static_cast<Eigen::Index>(adj[static_cast<std::size_t>(t)]), c);
                res(static_cast<Eigen::Index>(i), c) = acc;
            }
        }
    };

    const double tol = 1e-8;
    const int max_sweeps = 2000;
    Eigen::MatrixXd Z, Qr, Zr;
    Eigen::VectorXd theta;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        apply_b(Q, Z);
        Eigen::MatrixXd H = Q.transpose() * Z;
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(H);
        if (hs.info() != Eigen::Success)
            throw solver_error("spectral embedding: Rayleigh-Ritz failed", 0.0, sweep);
        theta = hs.eigenvalues(); // ascending
        Qr = Q * hs.eigenvectors();
        Zr = Z * hs.eigenvectors();
        double max_res = 0.0;
        for (std::size_t c = 0; c < ne; ++c) {
            const Eigen::Index col = block - 1 - static_cast<Eigen::Index>(c);
            max_res = std::max(max_res, (Zr.col(col) - theta(col) * Qr.col(col)).norm());
        }
        if (max_res <= tol || sweep == max_sweeps - 1) break;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Zr);
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(em, block);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < ne; ++c)
            out[i * ne + c] =
                Qr(static_cast<Eigen::Index>(i), block - 1 - static_cast<Eigen::Index>(c));
    return out;
}

struct KmeansResult {
    std::vector<std::int32_t> assign;
    double objective = std::numeric_limits<double>::infinity();
    std::int32_t distinct = 0;
};

// Lloyd iterations with greedy farthest-point init; all ties resolve to the
// smallest index so the outcome depends only on the seed.
KmeansResult kmeans(const std::vector<double>& pts, std::size_t m, std::size_t d,
                    std::int32_t k, int restarts, std::uint64_t seed) {
    const auto ku = static_cast<std::size_t>(k);
    KmeansResult best;
    std::vector<double> centers(ku * d), sums(ku * d);
    std::vector<std::int64_t> members(ku);
    std::vector<std::int32_t> assign(m);
    std::vector<double> mind(m);
    std::vector<char> taken(m);

    for (int r = 0; r < restarts; ++r) {
        Rng rng(substream_seed(seed, 2, static_cast<std::uint64_t>(r)));
        const auto first = static_cast<std::size_t>(rng.below(m));
        std::copy_n(pts.data() + first * d, d, centers.data());
        for (std::size_t i = 0; i < m; ++i)
            mind[i] = sq_distance(pts.data() + i * d, centers.data(), d);
        for (std::size_t c = 1; c < ku; ++c) {
            std::size_t pick = 0;
            for (std::size_t i = 1; i < m; ++i)
                if (mind[i] > mind[pick]) pick = i;
            std::copy_n(pts.data() + pick * d, d, centers.data() + c * d);
            for (std::size_t i = 0; i < m; ++i)
                mind[i] = std::min(mind[i], sq_distance(pts.data() + i * d,
                                                        centers.data() + c * d, d));
        }

        std::fill(assign.begin(), assign.end(), -1);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < m; ++i) {
                std::int32_t bc = 0;
                double bd = sq_distance(pts.data() + i * d, centers.data(), d);
                for (std::int32_t c = 1; c < k; ++c) {
                    const double dd = sq_distance(pts.data() + i * d,
                                                  centers.data() + static_cast<std::size_t>(c) * d, d);
                    if (dd < bd) {
                        bd = dd;
                        bc = c;
                    }
                }
                if (assign[i] != bc) {
                    assign[i] = bc;
                    changed = true;
                }
            }
            if (!changed) break;

            std::fill(sums.begin(), sums.end(), 0.0);
            std::fill(members.begin(), members.end(), 0);
            for (std::size_t i = 0; i < m; ++i) {
                const auto c = static_cast<std::size_t>(assign[i]);
                ++members[c];
                for (std::size_t t = 0; t < d; ++t) sums[c * d + t] += pts[i * d + t];
            }
            for (std::size_t c = 0; c < ku; ++c)
                if (members[c] > 0)
                    for (std::size_t t = 0; t < d; ++t)
                        centers[c * d + t] = sums[c * d + t] / static_cast<double>(members[c]);
            std::fill(taken.begin(), taken.end(), 0);
            for (std::size_t c = 0; c < ku; ++c) {
                if (members[c] > 0) continue;
                // Re-seed the empty cluster on the worst-fit point, if any.
                std::size_t far = m;
                double far_d = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    if (taken[i]) continue;
                    const double dd = sq_distance(
                        pts.data() + i * d,
                        centers.data() + static_cast<std::size_t>(assign[i]) * d, d);
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                if (far < m) {
                    std::copy_n(pts.data() + far * d, d, centers.data() + c * d);
                    taken[far] = 1;
                }
            }
        }

        double obj = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            obj += sq_distance(pts.data() + i * d,
                               centers.data() + static_cast<std::size_t>(assign[i]) * d, d);
        if (obj < best.objective) {
            best.objective = obj;
            best.assign = assign;
        }
    }

    std::vector<char> seen(ku, 0);
    for (std::size_t i = 0; i < m; ++i) seen[static_cast<std::size_t>(best.assign[i])] = 1;
    best.distinct = static_cast<std::int32_t>(std::count(seen.begin(), seen.end(), 1));
    return best;
}

} // namespace

ClusterResult spectral_cluster(const FeatureMatrix& x, const GcnConfig& config) {
    config.validate();
    x.validate();
    const std::int64_t n = x.n;
    if (n < config.n_clusters)
        throw std::invalid_argument("spectral_cluster: fewer rows than clusters");

    const std::int64_t m64 =
        (config.subsample > 0 && config.subsample < n) ? config.subsample : n;
    const auto m = static_cast<std::size_t>(m64);
    const auto d = static_cast<std::size_t>(x.d);

    std::vector<std::int64_t> picked(m);
    if (m64 < n) {
        Rng rng(substream_seed(config.master_seed, 0));
        auto s = rng.sample_without_replacement(static_cast<std::uint32_t>(n),
                                                static_cast<std::uint32_t>(m64));
        std::sort(s.begin(), s.end());
        for (std::size_t t = 0; t < m; ++t) picked[t] = s[t];
    } else {
        std::iota(picked.begin(), picked.end(), 0);
    }

    std::vector<double> pts(m * d);
    for (std::size_t t = 0; t < m; ++t)
        std::copy_n(x.row(picked[t]), d, pts.data() + t * d);

    const AffinityGraph g = knn_affinity(pts.data(), m, d, config.knn_k);
    std::vector<double> emb = laplacian_embedding(g, config.n_clusters, config.master_seed);
    const auto ne = static_cast<std::size_t>(config.n_clusters);
    for (std::size_t i = 0; i < m; ++i) {
        double norm = 0.0;
        for (std::size_t c = 0; c < ne; ++c) norm += emb[i * ne + c] * emb[i * ne + c];
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (std::size_t c = 0; c < ne; ++c) emb[i * ne + c] /= norm;
    }

    const KmeansResult km = kmeans(emb, m, ne, config.n_clusters, config.kmeans_restarts,
                                   config.master_seed);

    // Identical inputs can still split in the embedding (the eigensolver picks
    // arbitrary vectors inside a degenerate eigenspace), so check the points too.
    bool all_equal = true;
    for (std::size_t t = 1; t < m && all_equal; ++t)
        all_equal = std::equal(pts.data() + t * d, pts.data() + (t + 1) * d, pts.data());

    ClusterResult out;
    out.labels = LabelMap(static_cast<std::size_t>(n));
    out.degenerate = km.distinct < config.n_clusters || (all_equal && config.n_clusters > 1);
    std::vector<char> clustered(static_cast<std::size_t>(n), 0);
    for (std::size_t t = 0; t < m; ++t) {
        out.labels[static_cast<std::size_t>(picked[t])] = km.assign[t] + 1;
        clustered[static_cast<std::size_t>(picked[t])] = 1;
    }
    if (m64 < n) {
        // Rows left out of the clustering take the label of their nearest
        // clustered row in feature space.
        for (std::int64_t v = 0; v < n; ++v) {
            if (clustered[static_cast<std::size_t>(v)]) continue;
            std::size_t bt = 0;
            double bd = sq_distance(x.row(v), pts.data(), d);
            for (std::size_t t = 1; t < m; ++t) {
                const double dd = sq_distance(x.row(v), pts.data() + t * d, d);
                if (dd < bd) {
                    bd = dd;
                    bt = t;
                }
            }
            out.labels[static_cast<std::size_t>(v)] = km.assign[bt] + 1;
        }
    }
    return out;
}

namespace {

// Shortest augmenting path assignment on a square cost matrix; returns the
// minimum total cost. Deterministic for a fixed input.
std::int64_t min_cost_assignment(const std::vector<std::vector<std::int64_t>>& a) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return 0;
    const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::int64_t> v(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::int64_t> minv(static_cast<std::size_t>(n) + 1);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            std::int64_t delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const std::int64_t cur = a[static_cast<std::size_t>(i0 - 1)]
                                          [static_cast<std::size_t>(j - 1)] -
                                         u[static_cast<std::size_t>(i0)] -
                                         v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::int64_t total = 0;
    for (int j = 1; j <= n; ++j)
        total += a[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)]
                  [static_cast<std::size_t>(j - 1)];
    return total;
}

} // namespace

std::vector<std::int32_t> hungarian_match(
    const std::vector<std::vector<std::int64_t>>& confusion) {
    const std::size_t R = confusion.size();
    if (R == 0) throw std::invalid_argument("hungarian_match: empty matrix");
    const std::size_t C = confusion[0].size();
    if (C == 0) throw std::invalid_argument("hungarian_match: empty matrix");
    for (const auto& row : confusion) {
        if (row.size() != C) throw std::invalid_argument("hungarian_match: ragged matrix");
        for (const std::int64_t v : row)
            if (v < 0) throw std::invalid_argument("hungarian_match: negative count");
    }
    const std::size_t S = std::max(R, C);

    // Best matched total over completions of rows >= first_row, given the
    // still-open real columns and the number of open zero-padding columns.
    const auto best_completion = [&](std::size_t first_row,
                                     const std::vector<std::size_t>& open_cols) {
        const std::size_t rows = S - first_row;
        if (rows == 0) return std::int64_t{0};
        std::vector<std::vector<std::int64_t>> cost(rows,
                                                    std::vector<std::int64_t>(rows, 0));
        for (std::size_t i = 0; i < rows && first_row + i < R; ++i)
            for (std::size_t j = 0; j < open_cols.size(); ++j)
                cost[i][j] = -confusion[first_row + i][open_cols[j]];
        return -min_cost_assignment(cost);
    };

    std::vector<std::size_t> open_cols(C);
    std::iota(open_cols.begin(), open_cols.end(), 0);
    std::size_t open_pad = S - C;
    const std::int64_t best_total = best_completion(0, open_cols);

    // Fix rows in order, preferring the smallest choice that still reaches
    // the optimum; "unmatched" counts as -1 and so sorts first.
    std::vector<std::int32_t> out(R, -1);
    std::int64_t fixed = 0;
    for (std::size_t r = 0; r < R; ++r) {
        bool done = false;
        if (open_pad > 0 && fixed + best_completion(r + 1, open_cols) == best_total) {
            --open_pad;
            done = true; // out[r] stays -1
        }
        for (std::size_t j = 0; !done && j < open_cols.size(); ++j) {
            const std::int64_t gain = confusion[r][open_cols[j]];
            std::vector<std::size_t> rest = open_cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
            if (fixed + gain + best_completion(r + 1, rest) == best_total) {
                out[r] = static_cast<std::int32_t>(open_cols[j]);
                fixed += gain;
                open_cols = std::move(rest);
                done = true;
            }
        }
        if (!done) throw std::logic_error("hungarian_match: no optimal choice for a row");
    }
    return out;
}

ClusterAssignment match_clusters(const LabelMap& pred, const LabelMap& gt,
                                 std::int32_t n_clusters) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("match_clusters: label map lengths differ");
    if (n_clusters < 1) throw std::invalid_argument("match_clusters: n_clusters must be >= 1");
    ClusterAssignment a;
    a.classes = gt.distinct_classes();
    if (a.classes.empty()) throw std::invalid_argument("match_clusters: no labelled pixels");

    std::vector<std::vector<std::int64_t>> counts(
        static_cast<std::size_t>(n_clusters),
        std::vector<std::int64_t>(a.classes.size(), 0));
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == UNLABELLED) continue;
        const std::int32_t c = pred[i];
        if (c < 1 || c > n_clusters)
            throw std::invalid_argument("match_clusters: cluster id out of range at pixel " +
                                        std::to_string(i));
        const auto col = static_cast<std::size_t>(
            std::lower_bound(a.classes.begin(), a.classes.end(), gt[i]) - a.classes.begin());
        ++counts[static_cast<std::size_t>(c - 1)][col];
    }
    a.cluster_to_class = hungarian_match(counts);
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (a.cluster_to_class[c] >= 0)
            a.matched += counts[c][static_cast<std::size_t>(a.cluster_to_class[c])];
    return a;
}

double overall_accuracy(const LabelMap& pred, const LabelMap& gt,
                        const ClusterAssignment& assignment) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("overall_accuracy: label map lengths differ");
    std::int64_t total = 0, correct = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == UNLABELLED) continue;
        ++total;
        const std::int32_t c = pred[i];
        if (c < 1 || static_cast<std::size_t>(c) > assignment.cluster_to_class.size())
            throw std::invalid_argument("overall_accuracy: cluster id out of range at pixel " +
                                        std::to_string(i));
        const std::int32_t mapped = assignment.cluster_to_class[static_cast<std::size_t>(c - 1)];
        if (mapped >= 0 && assignment.classes[static_cast<std::size_t>(mapped)] == gt[i])
            ++correct;
    }
    if (total == 0) throw std::invalid_argument("overall_accuracy: no labelled pixels");
    return static_cast<double>(correct) / static_cast<double>(total);
}

GcnCurves gcn_experiment(const HyperCube& cube, const GridGraph& graph, const LabelMap& gt,
                         const EdgeWeights* weights, const GcnConfig& config, int workers) {
    config.validate();
    cube.validate();
    if (cube.nr != graph.nr || cube.nc != graph.nc)
        throw std::invalid_argument("gcn_experiment: cube and graph dimensions differ");
    if (gt.size() != static_cast<std::size_t>(graph.n_vertices()))
        throw std::invalid_argument("gcn_experiment: groundtruth length mismatch");
    gt.validate();
    if (gt.distinct_classes().empty())
        throw std::invalid_argument("gcn_experiment: no labelled pixels");

    const NormalizedLaplacian L = build_normalized_laplacian(graph, weights);

    GcnCurves curves;
    if (weights == nullptr) {
        curves.lambda_max = 2.0; // exact spectral bound for unit weights
    } else {
        const LambdaMaxEstimate est = estimate_lambda_max(L, 1e-12, 50000, config.master_seed);
        curves.lambda_max = est.value * 1.01;
    }

    const auto repeats = static_cast<std::size_t>(config.repeats);
    const auto steps = static_cast<std::size_t>(config.max_steps);
    curves.per_repeat_best.assign(repeats, std::vector<double>(steps, 0.0));
    std::vector<double> best(repeats, 0.0);
    std::vector<int> degenerate(repeats, 0);

    curves.step_wall_ms.assign(steps, 0.0);
    FeatureMatrix x = cube_features(cube);
    FeatureMatrix buf;
    for (std::size_t k = 1; k <= steps; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        convolve_step(L, x, buf, curves.lambda_max, workers);
        std::swap(x, buf);
        parallel_for(repeats, workers, [&](std::size_t r) {
            GcnConfig local = config;
            local.master_seed = substream_seed(config.master_seed, r, k);
            const ClusterResult cl = spectral_cluster(x, local);
            const ClusterAssignment asg = match_clusters(cl.labels, gt, config.n_clusters);
            const double oa = overall_accuracy(cl.labels, gt, asg);
            if (cl.degenerate) ++degenerate[r];
            best[r] = std::max(best[r], oa);
            curves.per_repeat_best[r][k - 1] = best[r];
        });
        const auto t1 = std::chrono::steady_clock::now();
        curves.step_wall_ms[k - 1] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }

    curves.mean_best.assign(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        double acc = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) acc += curves.per_repeat_best[r][k];
        curves.mean_best[k] = acc / static_cast<double>(repeats);
    }
    for (const int c : degenerate) curves.degenerate_count += c;
    return curves;
}

} // namespace esw
