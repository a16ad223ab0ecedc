#include "esw/watershed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "esw/parallel.hpp"
#include "esw/rng.hpp"
#include "esw/union_find.hpp"

namespace esw {

EswConfig EswConfig::resolved(std::int64_t nz, std::int64_t n_vertices) const {
    EswConfig r = *this;
    if (r.kappa_f == 0)
        r.kappa_f = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(nz))));
    if (r.kappa_v == 0) {
        r.kappa_v = static_cast<std::int64_t>(std::ceil(0.05 * static_cast<double>(n_vertices)));
        r.kappa_v = std::clamp<std::int64_t>(r.kappa_v, 2, n_vertices);
    }
    r.validate(nz, n_vertices);
    return r;
}

void EswConfig::validate(std::int64_t nz, std::int64_t n_vertices) const {
    if (n_repeats < 1) throw std::invalid_argument("EswConfig: n_repeats must be >= 1");
    if (kappa_f < 1 || kappa_f > nz)
        throw std::invalid_argument("EswConfig: kappa_f must be in [1, nz]");
    if (kappa_v < 2 || kappa_v > n_vertices)
        throw std::invalid_argument("EswConfig: kappa_v must be in [2, |V|]");
}

namespace {

// Shared per-call scratch so the ensemble loop does not reallocate.
struct WatershedScratch {
    std::vector<std::int64_t> order;     // edge indices sorted by (dist, index)
    std::vector<std::int64_t> parent;    // union-find storage, flattened inline
    std::vector<std::int8_t> rank;
    std::vector<std::int32_t> comp_label; // label of a component, read via root

    void reset(std::int64_t n_vertices, std::int64_t n_edges) {
        order.resize(static_cast<std::size_t>(n_edges));
        std::iota(order.begin(), order.end(), std::int64_t{0});
        parent.resize(static_cast<std::size_t>(n_vertices));
        std::iota(parent.begin(), parent.end(), std::int64_t{0});
        rank.assign(static_cast<std::size_t>(n_vertices), 0);
        comp_label.assign(static_cast<std::size_t>(n_vertices), UNLABELLED);
    }

    std::int64_t find(std::int64_t x) {
        std::int64_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            const std::int64_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    std::int64_t unite(std::int64_t ra, std::int64_t rb) {
        if (rank[ra] < rank[rb]) std::swap(ra, rb);
        parent[rb] = ra;
        if (rank[ra] == rank[rb]) ++rank[ra];
        return ra;
    }
};

// Core of Kruskal-style label propagation. edge_dist is indexed by canonical
// edge id; labels are written into out (size |V|, pre-filled UNLABELLED).
void run_watershed(const GridGraph& graph, std::span<const double> edge_dist,
                   std::span<const std::int64_t> seed_vertices,
                   std::span<const std::int32_t> seed_labels, WatershedScratch& ws,
                   std::vector<std::int32_t>& out) {
    const std::int64_t n = graph.n_vertices();
    const std::int64_t m = graph.n_edges();
    ws.reset(n, m);

    for (std::size_t i = 0; i < seed_vertices.size(); ++i)
        ws.comp_label[static_cast<std::size_t>(seed_vertices[i])] = seed_labels[i];

    std::sort(ws.order.begin(), ws.order.end(), [&](std::int64_t a, std::int64_t b) {
        const double da = edge_dist[static_cast<std::size_t>(a)];
        const double db = edge_dist[static_cast<std::size_t>(b)];
        if (da != db) return da < db;
        return a < b;
    });

    for (const std::int64_t e : ws.order) {
        const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
        const std::int64_t ru = ws.find(edge.u);
        const std::int64_t rv = ws.find(edge.v);
        if (ru == rv) continue;
        const std::int32_t lu = ws.comp_label[static_cast<std::size_t>(ru)];
        const std::int32_t lv = ws.comp_label[static_cast<std::size_t>(rv)];
        // Two labelled components must not merge: the edge between them is a
        // watershed cut. One label (or none) propagates to the union.
        if (lu != UNLABELLED && lv != UNLABELLED) continue;
        const std::int64_t root = ws.unite(ru, rv);
        ws.comp_label[static_cast<std::size_t>(root)] = (lu != UNLABELLED) ? lu : lv;
    }

    out.resize(static_cast<std::size_t>(n));
    for (std::int64_t v = 0; v < n; ++v)
        out[static_cast<std::size_t>(v)] = ws.comp_label[static_cast<std::size_t>(ws.find(v))];
}

} // namespace

LabelMap seeded_watershed(const GridGraph& graph, std::span<const double> edge_dist,
                          const SeedSet& seeds) {
    if (edge_dist.size() != static_cast<std::size_t>(graph.n_edges()))
        throw std::invalid_argument("seeded_watershed: edge_dist length mismatch");
    seeds.validate(graph.n_vertices());
    for (const double d : edge_dist)
        if (!std::isfinite(d) || d < 0.0)
            throw std::invalid_argument("seeded_watershed: dissimilarities must be finite and >= 0");

    WatershedScratch ws;
    LabelMap result(static_cast<std::size_t>(graph.n_vertices()));
    run_watershed(graph, edge_dist, seeds.vertices, seeds.labels, ws, result.labels);
    return result;
}

EswEdgeWeights esw_edge_weights(const HyperCube& cube, const GridGraph& graph,
                                const EswConfig& config, int workers) {
    cube.validate();
    if (cube.nr != graph.nr || cube.nc != graph.nc)
        throw std::invalid_argument("esw_edge_weights: cube and graph dimensions differ");
    const EswConfig cfg = config.resolved(cube.nz, graph.n_vertices());

    const std::int64_t n_vertices = graph.n_vertices();
    const std::int64_t n_edges = graph.n_edges();
    const int n_workers = std::max(1, workers);

    // Per-worker cut counters; integer sums merge exactly in any order.
    std::vector<std::vector<std::uint32_t>> counts(
        static_cast<std::size_t>(n_workers),
        std::vector<std::uint32_t>(static_cast<std::size_t>(n_edges), 0));

    struct RepScratch {
        WatershedScratch ws;
        std::vector<double> dist;
        std::vector<std::int32_t> labels;
        std::vector<std::int64_t> seed_vertices;
        std::vector<std::int32_t> seed_labels;
    };
    std::vector<RepScratch> scratch(static_cast<std::size_t>(n_workers));
    for (auto& s : scratch) {
        s.dist.resize(static_cast<std::size_t>(n_edges));
        s.seed_vertices.resize(static_cast<std::size_t>(cfg.kappa_v));
        s.seed_labels.resize(static_cast<std::size_t>(cfg.kappa_v));
    }

    parallel_for_worker(
        static_cast<std::size_t>(cfg.n_repeats), n_workers, [&](std::size_t rep, int worker) {
            RepScratch& s = scratch[static_cast<std::size_t>(worker)];
            Rng rng(substream_seed(cfg.master_seed, rep));

            const auto bands = rng.sample_without_replacement(
                static_cast<std::uint32_t>(cube.nz), static_cast<std::uint32_t>(cfg.kappa_f));
            const auto verts = rng.sample_without_replacement(
                static_cast<std::uint32_t>(n_vertices), static_cast<std::uint32_t>(cfg.kappa_v));
            for (std::size_t i = 0; i < verts.size(); ++i) {
                s.seed_vertices[i] = static_cast<std::int64_t>(verts[i]);
                s.seed_labels[i] = static_cast<std::int32_t>(i) + 1; // distinct pseudo-labels
            }

            for (std::int64_t e = 0; e < n_edges; ++e) {
                const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
                s.dist[static_cast<std::size_t>(e)] =
                    subset_distance_unchecked(cube, edge.u, edge.v, bands);
            }

            run_watershed(graph, s.dist, s.seed_vertices, s.seed_labels, s.ws, s.labels);

            auto& cut = counts[static_cast<std::size_t>(worker)];
            for (std::int64_t e = 0; e < n_edges; ++e) {
                const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
                if (s.labels[static_cast<std::size_t>(edge.u)] !=
                    s.labels[static_cast<std::size_t>(edge.v)])
                    ++cut[static_cast<std::size_t>(e)];
            }
        });

    EswEdgeWeights result;
    result.config = cfg;
    result.weights.kind = WeightKind::Dissimilarity;
    result.weights.values.assign(static_cast<std::size_t>(n_edges), 0.0);
    const double inv_n = 1.0 / static_cast<double>(cfg.n_repeats);
    for (std::int64_t e = 0; e < n_edges; ++e) {
        std::uint64_t total = 0;
        for (const auto& c : counts) total += c[static_cast<std::size_t>(e)];
        result.weights.values[static_cast<std::size_t>(e)] =
            static_cast<double>(total) * inv_n;
    }
    return result;
}

HistogramSamples subset_distance_histogram(const HyperCube& cube, const GridGraph& graph,
                                           const LabelMap& gt, const EswConfig& config) {
    cube.validate();
    if (cube.nr != graph.nr || cube.nc != graph.nc)
        throw std::invalid_argument("subset_distance_histogram: cube and graph dimensions differ");
    if (gt.size() != static_cast<std::size_t>(graph.n_vertices()))
        throw std::invalid_argument("subset_distance_histogram: groundtruth length mismatch");
    gt.validate();
    if (gt.distinct_classes().size() < 2)
        throw std::invalid_argument("subset_distance_histogram: need >= 2 labelled classes");
    const EswConfig cfg = config.resolved(cube.nz, graph.n_vertices());

    HistogramSamples out;
    for (std::int64_t rep = 0; rep < cfg.n_repeats; ++rep) {
        Rng rng(substream_seed(cfg.master_seed, static_cast<std::uint64_t>(rep)));
        const auto bands = rng.sample_without_replacement(
            static_cast<std::uint32_t>(cube.nz), static_cast<std::uint32_t>(cfg.kappa_f));
        for (const Edge& edge : graph.edges) {
            const std::int32_t lu = gt[static_cast<std::size_t>(edge.u)];
            const std::int32_t lv = gt[static_cast<std::size_t>(edge.v)];
            if (lu == UNLABELLED || lv == UNLABELLED) continue;
            const double d = subset_distance_unchecked(cube, edge.u, edge.v, bands);
            (lu == lv ? out.same_class : out.different_class).push_back(d);
        }
    }
    return out;
}

} // namespace esw
