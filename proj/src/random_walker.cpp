#include "esw/random_walker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "esw/errors.hpp"
#include "esw/parallel.hpp"
#include "esw/rng.hpp"

namespace esw {

std::string similarity_name(Similarity s) {
    switch (s) {
        case Similarity::EuclideanExp: return "euclidean";
        case Similarity::Cosine: return "cosine";
        case Similarity::EswComplement: return "esw";
    }
    return "unknown";
}

void RwConfig::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("RwConfig: beta must be > 0");
    if (!(epsilon > 0.0) || epsilon > 1e-3)
        throw std::invalid_argument("RwConfig: epsilon must be in (0, 1e-3]");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("RwConfig: cg_tol must be > 0");
    if (cg_max_iter < 1) throw std::invalid_argument("RwConfig: cg_max_iter must be >= 1");
}

double default_beta_euclidean(const HyperCube& cube, const GridGraph& graph) {
    if (graph.n_edges() == 0) return 1.0;
    double sum = 0.0;
    for (const Edge& e : graph.edges) sum += full_distance(cube, e.u, e.v);
    const double mean = sum / static_cast<double>(graph.n_edges());
    return mean > 0.0 ? 1.0 / mean : 1.0;
}

SparseLaplacian SparseLaplacian::from_edges(std::int64_t n, std::span<const Edge> edges,
                                            std::span<const double> weights) {
    if (edges.size() != weights.size())
        throw std::invalid_argument("SparseLaplacian: edges/weights length mismatch");
    SparseLaplacian L;
    L.n_ = n;
    std::vector<std::int64_t> count(static_cast<std::size_t>(n), 0);
    for (const Edge& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v)
            throw std::invalid_argument("SparseLaplacian: bad edge");
        ++count[static_cast<std::size_t>(e.u)];
        ++count[static_cast<std::size_t>(e.v)];
    }
    L.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t v = 0; v < n; ++v)
        L.offsets_[static_cast<std::size_t>(v) + 1] =
            L.offsets_[static_cast<std::size_t>(v)] + count[static_cast<std::size_t>(v)];
    L.adj_.resize(static_cast<std::size_t>(L.offsets_.back()));
    L.w_.resize(L.adj_.size());
    std::vector<std::int64_t> fill(L.offsets_.begin(), L.offsets_.end() - 1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        const double w = weights[i];
        L.adj_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.u)])] = e.v;
        L.w_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.u)]++)] = w;
        L.adj_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.v)])] = e.u;
        L.w_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.v)]++)] = w;
    }
    // Canonical neighbor order inside each row.
    for (std::int64_t v = 0; v < n; ++v) {
        const std::int64_t lo = L.offsets_[static_cast<std::size_t>(v)];
        const std::int64_t hi = L.offsets_[static_cast<std::size_t>(v) + 1];
        std::vector<std::pair<std::int64_t, double>> row;
        row.reserve(static_cast<std::size_t>(hi - lo));
        for (std::int64_t i = lo; i < hi; ++i)
            row.emplace_back(L.adj_[static_cast<std::size_t>(i)], L.w_[static_cast<std::size_t>(i)]);
        std::sort(row.begin(), row.end());
        for (std::int64_t i = lo; i < hi; ++i) {
            L.adj_[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i - lo)].first;
            L.w_[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i - lo)].second;
        }
    }
    L.degree_.assign(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t v = 0; v < n; ++v) {
        double d = 0.0;
        for (std::int64_t i = L.offsets_[static_cast<std::size_t>(v)];
             i < L.offsets_[static_cast<std::size_t>(v) + 1]; ++i)
            d += L.w_[static_cast<std::size_t>(i)];
        L.degree_[static_cast<std::size_t>(v)] = d;
    }
    return L;
}

std::span<const std::int64_t> SparseLaplacian::neighbors(std::int64_t v) const {
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {adj_.data() + lo, hi - lo};
}

std::span<const double> SparseLaplacian::neighbor_weights(std::int64_t v) const {
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {w_.data() + lo, hi - lo};
}

void SparseLaplacian::apply(std::span<const double> x, std::span<double> y) const {
    for (std::int64_t v = 0; v < n_; ++v) {
        double acc = degree_[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
        for (std::int64_t i = offsets_[static_cast<std::size_t>(v)];
             i < offsets_[static_cast<std::size_t>(v) + 1]; ++i)
            acc -= w_[static_cast<std::size_t>(i)] *
                   x[static_cast<std::size_t>(adj_[static_cast<std::size_t>(i)])];
        y[static_cast<std::size_t>(v)] = acc;
    }
}

EdgeWeights similarity_weights(const HyperCube& cube, const GridGraph& graph,
                               const EswEdgeWeights* esw, const RwConfig& config) {
    config.validate();
    cube.validate();
    if (cube.nr != graph.nr || cube.nc != graph.nc)
        throw std::invalid_argument("similarity_weights: cube and graph dimensions differ");
    if (config.similarity == Similarity::EswComplement) {
        if (esw == nullptr)
            throw std::invalid_argument("similarity_weights: ESW weights required for this mode");
        esw->weights.validate(graph.n_edges());
    }

    EdgeWeights out;
    out.kind = WeightKind::Similarity;
    out.values.resize(static_cast<std::size_t>(graph.n_edges()));

    for (std::int64_t e = 0; e < graph.n_edges(); ++e) {
        const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
        double s = 0.0;
        switch (config.similarity) {
            case Similarity::EuclideanExp:
                s = std::exp(-config.beta * full_distance(cube, edge.u, edge.v));
                break;
            case Similarity::Cosine: {
                const double* pu = cube.pixel(edge.u);
                const double* pv = cube.pixel(edge.v);
                double dot = 0.0, nu = 0.0, nv = 0.0;
                for (std::int64_t b = 0; b < cube.nz; ++b) {
                    dot += pu[b] * pv[b];
                    nu += pu[b] * pu[b];
                    nv += pv[b] * pv[b];
                }
                s = (nu > 0.0 && nv > 0.0) ? dot / std::sqrt(nu * nv) : 0.0;
                s = std::clamp(s, 0.0, 1.0);
                break;
            }
            case Similarity::EswComplement:
                s = std::exp(-config.beta * esw->weights.values[static_cast<std::size_t>(e)]);
                break;
        }
        out.values[static_cast<std::size_t>(e)] = std::max(s, config.epsilon);
    }
    return out;
}

SparseLaplacian build_laplacian(const GridGraph& graph, const EdgeWeights& weights) {
    if (weights.kind != WeightKind::Similarity)
        throw std::invalid_argument("build_laplacian: weights must be similarities");
    weights.validate(graph.n_edges());
    for (std::size_t i = 0; i < weights.values.size(); ++i)
        if (!(weights.values[i] > 0.0))
            throw std::invalid_argument("build_laplacian: nonpositive weight at edge " +
                                        std::to_string(i));
    return SparseLaplacian::from_edges(graph.n_vertices(), graph.edges, weights.values);
}

namespace {

// Seed-reduced system L_UU in CSR, with cached RHS contributions from seeds.
struct ReducedSystem {
    std::vector<std::int64_t> unlabeled;          // global ids, ascending
    std::vector<std::int64_t> global_to_reduced;  // -1 for seeds
    std::vector<std::int64_t> offsets;
    std::vector<std::int64_t> adj;                // reduced neighbor indices
    std::vector<double> w;
    std::vector<double> diag;                     // full degree of each unlabeled vertex
};

ReducedSystem build_reduced(const SparseLaplacian& L, std::span<const std::int32_t> seed_of) {
    const std::int64_t n = L.dimension();
    ReducedSystem rs;
    rs.global_to_reduced.assign(static_cast<std::size_t>(n), -1);
    for (std::int64_t v = 0; v < n; ++v) {
        if (seed_of[static_cast<std::size_t>(v)] == UNLABELLED) {
            rs.global_to_reduced[static_cast<std::size_t>(v)] =
                static_cast<std::int64_t>(rs.unlabeled.size());
            rs.unlabeled.push_back(v);
        }
    }
    rs.offsets.assign(rs.unlabeled.size() + 1, 0);
    rs.diag.resize(rs.unlabeled.size());
    for (std::size_t i = 0; i < rs.unlabeled.size(); ++i) {
        const std::int64_t v = rs.unlabeled[i];
        rs.diag[i] = L.degree(v);
        std::int64_t cnt = 0;
        const auto nbrs = L.neighbors(v);
        for (const std::int64_t u : nbrs)
            if (seed_of[static_cast<std::size_t>(u)] == UNLABELLED) ++cnt;
        rs.offsets[i + 1] = rs.offsets[i] + cnt;
    }
    rs.adj.resize(static_cast<std::size_t>(rs.offsets.back()));
    rs.w.resize(rs.adj.size());
    for (std::size_t i = 0; i < rs.unlabeled.size(); ++i) {
        const std::int64_t v = rs.unlabeled[i];
        const auto nbrs = L.neighbors(v);
        const auto ws = L.neighbor_weights(v);
        std::int64_t fill = rs.offsets[i];
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            const std::int64_t u = nbrs[k];
            if (seed_of[static_cast<std::size_t>(u)] != UNLABELLED) continue;
            rs.adj[static_cast<std::size_t>(fill)] = rs.global_to_reduced[static_cast<std::size_t>(u)];
            rs.w[static_cast<std::size_t>(fill)] = ws[k];
            ++fill;
        }
    }
    return rs;
}

// y = L_UU x
void apply_reduced(const ReducedSystem& rs, std::span<const double> x, std::span<double> y) {
    const std::size_t m = rs.unlabeled.size();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = rs.diag[i] * x[i];
        for (std::int64_t k = rs.offsets[i]; k < rs.offsets[i + 1]; ++k)
            acc -= rs.w[static_cast<std::size_t>(k)] *
                   x[static_cast<std::size_t>(rs.adj[static_cast<std::size_t>(k)])];
        y[i] = acc;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Jacobi-preconditioned conjugate gradients on the reduced system.
// Throws solver_error when the relative residual target is not met.
void solve_cg(const ReducedSystem& rs, std::span<const double> rhs, std::span<double> x,
              double tol, int max_iter) {
    const std::size_t m = rs.unlabeled.size();
    std::fill(x.begin(), x.end(), 0.0);
    const double norm_b = std::sqrt(dot(rhs, rhs));
    if (norm_b == 0.0) return;
    const double target = tol * norm_b;

    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> z(m), p(m), Ap(m);
    for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / rs.diag[i];
    p = z;
    double rz = dot(r, z);
    double res = norm_b;
    for (int it = 0; it < max_iter; ++it) {
        apply_reduced(rs, p, Ap);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) throw solver_error("cg: system not positive definite", res, it);
        const double alpha = rz / pAp;
        for (std::size_t i = 0; i < m; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < m; ++i) r[i] -= alpha * Ap[i];
        res = std::sqrt(dot(r, r));
        if (res <= target) return;
        for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / rs.diag[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
    }
    throw solver_error("cg: no convergence within " + std::to_string(max_iter) +
                           " iterations (residual " + std::to_string(res) + ")",
                       res, max_iter);
}

} // namespace

RwSolution rw_classify(const SparseLaplacian& laplacian, const SeedSet& seeds,
                       std::int32_t n_classes, const RwConfig& config) {
    config.validate();
    seeds.validate(laplacian.dimension());
    if (n_classes < 1) throw std::invalid_argument("rw_classify: n_classes must be >= 1");

    const std::int64_t n = laplacian.dimension();
    std::vector<std::int32_t> seed_of(static_cast<std::size_t>(n), UNLABELLED);
    std::vector<std::int64_t> class_seed_count(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::int32_t c = seeds.labels[i];
        if (c > n_classes)
            throw std::invalid_argument("rw_classify: seed label exceeds n_classes");
        seed_of[static_cast<std::size_t>(seeds.vertices[i])] = c;
        ++class_seed_count[static_cast<std::size_t>(c - 1)];
    }
    for (std::int32_t c = 0; c < n_classes; ++c)
        if (class_seed_count[static_cast<std::size_t>(c)] == 0)
            throw std::invalid_argument("rw_classify: class " + std::to_string(c + 1) +
                                        " has no seed");

    RwSolution sol;
    sol.potentials.assign(static_cast<std::size_t>(n_classes),
                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
    sol.labels = LabelMap(static_cast<std::size_t>(n));

    const ReducedSystem rs = build_reduced(laplacian, seed_of);

    if (!rs.unlabeled.empty()) {
        std::vector<double> rhs(rs.unlabeled.size());
        std::vector<double> xu(rs.unlabeled.size());
        for (std::int32_t c = 1; c <= n_classes; ++c) {
            // rhs_u = sum over seed neighbors with label c of w(u, seed)
            for (std::size_t i = 0; i < rs.unlabeled.size(); ++i) {
                const std::int64_t v = rs.unlabeled[i];
                const auto nbrs = laplacian.neighbors(v);
                const auto ws = laplacian.neighbor_weights(v);
                double acc = 0.0;
                for (std::size_t k = 0; k < nbrs.size(); ++k)
                    if (seed_of[static_cast<std::size_t>(nbrs[k])] == c) acc += ws[k];
                rhs[i] = acc;
            }
            solve_cg(rs, rhs, xu, config.cg_tol, config.cg_max_iter);
            auto& pot = sol.potentials[static_cast<std::size_t>(c - 1)];
            for (std::size_t i = 0; i < rs.unlabeled.size(); ++i)
                pot[static_cast<std::size_t>(rs.unlabeled[i])] = xu[i];
        }
    }
    for (std::int64_t v = 0; v < n; ++v) {
        const std::int32_t s = seed_of[static_cast<std::size_t>(v)];
        if (s != UNLABELLED)
            sol.potentials[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(v)] = 1.0;
    }

    for (std::int64_t v = 0; v < n; ++v) {
        const std::int32_t s = seed_of[static_cast<std::size_t>(v)];
        if (s != UNLABELLED) {
            sol.labels[static_cast<std::size_t>(v)] = s;
            continue;
        }
        std::int32_t best = 1;
        double best_pot = sol.potentials[0][static_cast<std::size_t>(v)];
        for (std::int32_t c = 2; c <= n_classes; ++c) {
            const double p = sol.potentials[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(v)];
            if (p > best_pot) {
                best_pot = p;
                best = c;
            }
        }
        sol.labels[static_cast<std::size_t>(v)] = best;
    }
    return sol;
}

std::vector<RunResult> rw_experiment(const HyperCube& cube, const GridGraph& graph,
                                     const LabelMap& gt, const EswEdgeWeights* esw,
                                     const std::vector<RwConfig>& methods, int seeds_per_class,
                                     int trials, std::uint64_t master_seed, int workers) {
    if (methods.empty()) throw std::invalid_argument("rw_experiment: no methods given");
    if (seeds_per_class < 1) throw std::invalid_argument("rw_experiment: seeds_per_class >= 1");
    if (trials < 1) throw std::invalid_argument("rw_experiment: trials >= 1");
    if (gt.size() != static_cast<std::size_t>(graph.n_vertices()))
        throw std::invalid_argument("rw_experiment: groundtruth length mismatch");
    gt.validate();

    const std::vector<std::int32_t> classes = gt.distinct_classes();
    if (classes.size() < 2) throw std::invalid_argument("rw_experiment: need >= 2 classes");
    const auto n_classes = static_cast<std::int32_t>(classes.size());

    // Per-class pixel pools, ascending pixel order so draws are reproducible.
    std::vector<std::vector<std::int64_t>> pools(classes.size());
    std::int64_t n_labeled = 0;
    for (std::int64_t v = 0; v < graph.n_vertices(); ++v) {
        const std::int32_t l = gt[static_cast<std::size_t>(v)];
        if (l == UNLABELLED) continue;
        ++n_labeled;
        const auto it = std::lower_bound(classes.begin(), classes.end(), l);
        pools[static_cast<std::size_t>(it - classes.begin())].push_back(v);
    }
    for (std::size_t c = 0; c < pools.size(); ++c)
        if (pools[c].size() < static_cast<std::size_t>(seeds_per_class))
            throw std::invalid_argument("rw_experiment: class " + std::to_string(classes[c]) +
                                        " has fewer than seeds_per_class labelled pixels");
    if (n_labeled == static_cast<std::int64_t>(classes.size()) *
                         static_cast<std::int64_t>(seeds_per_class))
        throw std::invalid_argument("rw_experiment: no labelled pixels left for evaluation");

    // Weights and Laplacians do not depend on the seed draw; build them once.
    std::vector<SparseLaplacian> laplacians;
    laplacians.reserve(methods.size());
    for (const RwConfig& cfg : methods)
        laplacians.push_back(build_laplacian(graph, similarity_weights(cube, graph, esw, cfg)));

    std::vector<std::vector<RunResult>> per_trial(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
        Rng rng(substream_seed(master_seed, t));
        SeedSet seeds;
        for (std::size_t c = 0; c < pools.size(); ++c) {
            const auto pick = rng.sample_without_replacement(
                static_cast<std::uint32_t>(pools[c].size()),
                static_cast<std::uint32_t>(seeds_per_class));
            for (const std::uint32_t k : pick) {
                seeds.vertices.push_back(pools[c][k]);
                seeds.labels.push_back(static_cast<std::int32_t>(c) + 1);
            }
        }
        std::vector<bool> is_seed(gt.size(), false);
        for (const std::int64_t v : seeds.vertices) is_seed[static_cast<std::size_t>(v)] = true;

        for (std::size_t m = 0; m < methods.size(); ++m) {
            const auto t0 = std::chrono::steady_clock::now();
            const RwSolution sol = rw_classify(laplacians[m], seeds, n_classes, methods[m]);
            const auto t1 = std::chrono::steady_clock::now();

            std::int64_t correct = 0, total = 0;
            for (std::int64_t v = 0; v < graph.n_vertices(); ++v) {
                const std::int32_t l = gt[static_cast<std::size_t>(v)];
                if (l == UNLABELLED || is_seed[static_cast<std::size_t>(v)]) continue;
                ++total;
                const auto it = std::lower_bound(classes.begin(), classes.end(), l);
                const auto cls = static_cast<std::int32_t>(it - classes.begin()) + 1;
                if (sol.labels[static_cast<std::size_t>(v)] == cls) ++correct;
            }
            RunResult rec;
            rec.method = similarity_name(methods[m].similarity);
            rec.trial = static_cast<int>(t);
            rec.param = seeds_per_class;
            rec.oa = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            per_trial[t].push_back(std::move(rec));
        }
    });

    std::vector<RunResult> out;
    out.reserve(static_cast<std::size_t>(trials) * methods.size());
    for (auto& trial_records : per_trial)
        for (auto& r : trial_records) out.push_back(std::move(r));
    return out;
}

} // namespace esw
