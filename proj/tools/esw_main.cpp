// Command-line front end: synthesis, ensemble edge-weight estimation,
// random-walk and convolution-clustering evaluations, histogram and image
// diagnostics. Exit codes: 0 success, 2 usage or config error, 3 data or
// format error, 4 solver failure.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "esw/errors.hpp"
#include "esw/gcn.hpp"
#include "esw/io.hpp"
#include "esw/parallel.hpp"
#include "esw/random_walker.hpp"
#include "esw/report.hpp"
#include "esw/rng.hpp"
#include "esw/synth.hpp"
#include "esw/watershed.hpp"

namespace {

using esw::EswConfig;
using esw::GcnConfig;
using esw::RwConfig;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// One JSON object per line; keys sort alphabetically so bytes are stable.
class RunLog {
public:
    RunLog(const std::string& path, std::string config_hash)
        : hash_(std::move(config_hash)) {
        if (path.empty()) return;
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw esw::format_error("cannot open for writing: " + path);
    }

    void record(const std::string& cmd, const std::string& method, int trial, int param,
                double oa, double wall_ms) {
        if (!out_.is_open()) return;
        nlohmann::json j;
        j["cmd"] = cmd;
        j["config"] = hash_;
        j["method"] = method;
        j["trial"] = trial;
        j["param"] = param;
        j["oa"] = oa;
        j["wall_ms"] = wall_ms;
        out_ << j.dump() << '\n';
    }

private:
    std::string hash_;
    std::ofstream out_;
};

void check_same_grid(std::int64_t nr_a, std::int64_t nc_a, std::int64_t nr_b, std::int64_t nc_b,
                     const std::string& what) {
    if (nr_a != nr_b || nc_a != nc_b)
        throw std::invalid_argument(what + ": expected " + std::to_string(nr_a) + "x" +
                                    std::to_string(nc_a) + ", found " + std::to_string(nr_b) +
                                    "x" + std::to_string(nc_b));
}

struct SynthArgs {
    esw::SynthSpec spec;
    std::string layout = "voronoi";
    std::string out_cube;
    std::string out_gt;
};

void run_synth(const SynthArgs& a) {
    esw::SynthSpec spec = a.spec;
    if (a.layout == "stripes") spec.layout = esw::SynthLayout::Stripes;
    else if (a.layout == "blocks") spec.layout = esw::SynthLayout::Blocks;
    else spec.layout = esw::SynthLayout::Voronoi;

    const esw::SynthData data = esw::synth_cube(spec);
    esw::write_cube(data.cube, a.out_cube);
    esw::GroundTruthData gt;
    gt.nr = spec.nr;
    gt.nc = spec.nc;
    gt.labels = data.gt;
    esw::write_groundtruth(gt, a.out_gt);
}

struct EswArgs {
    std::string cube_path;
    std::string out_path;
    EswConfig config;
    int workers = 0;
};

void run_esw(const EswArgs& a) {
    const esw::HyperCube cube = esw::read_cube(a.cube_path);
    const esw::GridGraph graph = esw::build_grid_graph(cube.nr, cube.nc);
    const esw::EswEdgeWeights weights =
        esw::esw_edge_weights(cube, graph, a.config, esw::resolve_workers(a.workers));
    esw::EdgeWeightData data;
    data.nr = cube.nr;
    data.nc = cube.nc;
    data.esw = weights;
    esw::write_edge_weights(data, a.out_path);
}

struct RwEvalArgs {
    std::string cube_path;
    std::string gt_path;
    std::string weights_path;
    std::string out_csv;
    std::string out_svg;
    std::string log_path;
    std::vector<int> seeds_grid{1, 2, 5, 10};
    int trials = 50;
    double beta_esw = 10.0;
    double beta_euclid = 0.0; // 0 = 1 / mean full-band edge distance
    double epsilon = 1e-6;
    double cg_tol = 1e-8;
    int cg_max_iter = 20000;
    std::uint64_t seed = 0;
    int workers = 0;
    bool mask_timing = false;
};

void run_rw_eval(const RwEvalArgs& a) {
    const esw::HyperCube cube = esw::read_cube(a.cube_path);
    const esw::GridGraph graph = esw::build_grid_graph(cube.nr, cube.nc);
    const esw::GroundTruthData gt = esw::read_groundtruth(a.gt_path);
    check_same_grid(cube.nr, cube.nc, gt.nr, gt.nc, "groundtruth grid");

    const esw::EswEdgeWeights* esw_weights = nullptr;
    esw::EdgeWeightData weight_data;
    if (!a.weights_path.empty()) {
        weight_data = esw::read_edge_weights(a.weights_path);
        check_same_grid(cube.nr, cube.nc, weight_data.nr, weight_data.nc, "edge-weight grid");
        esw_weights = &weight_data.esw;
    }

    RwConfig base;
    base.epsilon = a.epsilon;
    base.cg_tol = a.cg_tol;
    base.cg_max_iter = a.cg_max_iter;

    std::vector<RwConfig> methods;
    if (esw_weights != nullptr) {
        RwConfig m = base;
        m.similarity = esw::Similarity::EswComplement;
        m.beta = a.beta_esw;
        methods.push_back(m);
    }
    {
        RwConfig m = base;
        m.similarity = esw::Similarity::EuclideanExp;
        m.beta = a.beta_euclid > 0.0 ? a.beta_euclid : esw::default_beta_euclidean(cube, graph);
        methods.push_back(m);
    }
    {
        RwConfig m = base;
        m.similarity = esw::Similarity::Cosine;
        m.beta = 1.0; // unused by the cosine kernel
        methods.push_back(m);
    }

    std::string cfg = "rw-eval|" + a.cube_path + "|" + a.gt_path + "|" + a.weights_path;
    for (const int s : a.seeds_grid) cfg += "|s" + std::to_string(s);
    cfg += "|t" + std::to_string(a.trials) + "|seed" + std::to_string(a.seed);
    RunLog log(a.log_path, hex64(fnv1a(cfg)));

    const int workers = esw::resolve_workers(a.workers);
    std::vector<esw::RunResult> all;
    for (const int spc : a.seeds_grid) {
        auto records = esw::rw_experiment(cube, graph, gt.labels, esw_weights, methods, spc,
                                          a.trials, esw::substream_seed(a.seed,
                                                                        static_cast<std::uint64_t>(spc)),
                                          workers);
        for (auto& r : records) {
            if (a.mask_timing) r.wall_ms = 0.0;
            log.record("rw-eval", r.method, r.trial, r.param, r.oa, r.wall_ms);
            all.push_back(std::move(r));
        }
    }
    esw::write_results_csv(all, "seeds_per_class", a.out_csv);

    if (!a.out_svg.empty()) {
        std::vector<esw::Curve> curves;
        for (const RwConfig& m : methods) {
            esw::Curve c;
            c.name = esw::similarity_name(m.similarity);
            for (const int spc : a.seeds_grid) {
                double sum = 0.0;
                std::int64_t n = 0;
                for (const auto& r : all)
                    if (r.method == c.name && r.param == spc) {
                        sum += r.oa;
                        ++n;
                    }
                c.xs.push_back(spc);
                c.ys.push_back(sum / static_cast<double>(n));
            }
            curves.push_back(std::move(c));
        }
        esw::write_curve_svg(curves, "seeds per class", "mean overall accuracy", a.out_svg);
    }
}

struct GcnEvalArgs {
    std::string cube_path;
    std::string gt_path;
    std::string weights_path;
    std::string out_csv;
    std::string out_svg;
    std::string log_path;
    GcnConfig config;
    std::int32_t clusters = 0; // 0 = number of distinct groundtruth classes
    double beta_esw = 10.0;
    double epsilon = 1e-6;
    int workers = 0;
    bool mask_timing = false;
};

void run_gcn_eval(const GcnEvalArgs& a) {
    const esw::HyperCube cube = esw::read_cube(a.cube_path);
    const esw::GridGraph graph = esw::build_grid_graph(cube.nr, cube.nc);
    const esw::GroundTruthData gt = esw::read_groundtruth(a.gt_path);
    check_same_grid(cube.nr, cube.nc, gt.nr, gt.nc, "groundtruth grid");

    GcnConfig config = a.config;
    config.n_clusters =
        a.clusters > 0 ? a.clusters
                       : static_cast<std::int32_t>(gt.labels.distinct_classes().size());

    // ESW boundary probabilities become affinities through the same
    // exponential map the random-walk classifier uses.
    const esw::EdgeWeights* weighted = nullptr;
    esw::EdgeWeights similarities;
    if (!a.weights_path.empty()) {
        const esw::EdgeWeightData data = esw::read_edge_weights(a.weights_path);
        check_same_grid(cube.nr, cube.nc, data.nr, data.nc, "edge-weight grid");
        RwConfig conv;
        conv.similarity = esw::Similarity::EswComplement;
        conv.beta = a.beta_esw;
        conv.epsilon = a.epsilon;
        similarities = esw::similarity_weights(cube, graph, &data.esw, conv);
        weighted = &similarities;
    }

    const std::string cfg = "gcn-eval|" + a.cube_path + "|" + a.gt_path + "|" + a.weights_path +
                            "|k" + std::to_string(config.n_clusters) + "|m" +
                            std::to_string(config.max_steps) + "|r" +
                            std::to_string(config.repeats) + "|seed" +
                            std::to_string(config.master_seed);
    RunLog log(a.log_path, hex64(fnv1a(cfg)));

    const int workers = esw::resolve_workers(a.workers);
    std::vector<esw::RunResult> all;
    std::vector<esw::Curve> curves;
    const auto run_variant = [&](const char* name, const esw::EdgeWeights* w) {
        const esw::GcnCurves out = esw::gcn_experiment(cube, graph, gt.labels, w, config, workers);
        for (std::size_t r = 0; r < out.per_repeat_best.size(); ++r)
            for (std::size_t k = 0; k < out.per_repeat_best[r].size(); ++k) {
                esw::RunResult rec;
                rec.method = name;
                rec.trial = static_cast<int>(r);
                rec.param = static_cast<int>(k) + 1;
                rec.oa = out.per_repeat_best[r][k];
                rec.wall_ms = a.mask_timing ? 0.0 : out.step_wall_ms[k];
                log.record("gcn-eval", rec.method, rec.trial, rec.param, rec.oa, rec.wall_ms);
                all.push_back(std::move(rec));
            }
        esw::Curve c;
        c.name = name;
        for (std::size_t k = 0; k < out.mean_best.size(); ++k) {
            c.xs.push_back(static_cast<double>(k + 1));
            c.ys.push_back(out.mean_best[k]);
        }
        curves.push_back(std::move(c));
    };

    run_variant("unweighted", nullptr);
    if (weighted != nullptr) run_variant("weighted", weighted);

    esw::write_results_csv(all, "iteration", a.out_csv);
    if (!a.out_svg.empty())
        esw::write_curve_svg(curves, "iteration", "mean best overall accuracy", a.out_svg);
}

struct HistArgs {
    std::string cube_path;
    std::string gt_path;
    std::string out_csv;
    EswConfig config;
    int bins = 20;
};

void run_hist(const HistArgs& a) {
    const esw::HyperCube cube = esw::read_cube(a.cube_path);
    const esw::GridGraph graph = esw::build_grid_graph(cube.nr, cube.nc);
    const esw::GroundTruthData gt = esw::read_groundtruth(a.gt_path);
    check_same_grid(cube.nr, cube.nc, gt.nr, gt.nc, "groundtruth grid");
    const esw::HistogramSamples samples =
        esw::subset_distance_histogram(cube, graph, gt.labels, a.config);
    esw::write_histogram_csv(samples, a.bins, a.out_csv);
}

struct VizArgs {
    std::string weights_path;
    std::string out_pgm;
};

void run_viz(const VizArgs& a) {
    const esw::EdgeWeightData data = esw::read_edge_weights(a.weights_path);
    const esw::GridGraph graph = esw::build_grid_graph(data.nr, data.nc);
    esw::export_cubical_pgm(graph, data.esw.weights, a.out_pgm);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic-watershed edge weights for hyperspectral pixel graphs"};
    app.require_subcommand(1);

    SynthArgs synth;
    {
        CLI::App* c = app.add_subcommand("synth", "Generate a synthetic cube and groundtruth");
        c->add_option("--nr", synth.spec.nr, "Rows")->capture_default_str();
        c->add_option("--nc", synth.spec.nc, "Columns")->capture_default_str();
        c->add_option("--nz", synth.spec.nz, "Bands")->capture_default_str();
        c->add_option("--classes", synth.spec.n_classes, "Number of classes")
            ->capture_default_str();
        c->add_option("--layout", synth.layout, "Region layout")
            ->check(CLI::IsMember({"stripes", "blocks", "voronoi"}))
            ->capture_default_str();
        c->add_option("--rho", synth.spec.rho, "Fraction of bands shared across classes")
            ->capture_default_str();
        c->add_option("--sigma", synth.spec.sigma, "Noise level")->capture_default_str();
        c->add_option("--seed", synth.spec.seed, "Master seed")->capture_default_str();
        c->add_option("--sites", synth.spec.n_sites, "Voronoi cells (0 = 3 * classes)")
            ->capture_default_str();
        c->add_option("--stripe-height", synth.spec.stripe_height,
                      "Stripe height in rows (0 = rows / classes)")
            ->capture_default_str();
        c->add_option("--out-cube", synth.out_cube, "Output cube path")->required();
        c->add_option("--out-gt", synth.out_gt, "Output groundtruth path")->required();
        c->callback([&] { run_synth(synth); });
    }

    EswArgs eswa;
    {
        CLI::App* c = app.add_subcommand("esw", "Estimate ensemble edge weights");
        c->add_option("--cube", eswa.cube_path, "Input cube")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--repeats", eswa.config.n_repeats, "Ensemble repetitions")
            ->capture_default_str();
        c->add_option("--kappa-f", eswa.config.kappa_f, "Bands per repetition (0 = ceil sqrt)")
            ->capture_default_str();
        c->add_option("--kappa-v", eswa.config.kappa_v,
                      "Seed vertices per repetition (0 = 5% of pixels)")
            ->capture_default_str();
        c->add_option("--seed", eswa.config.master_seed, "Master seed")->capture_default_str();
        c->add_option("--workers", eswa.workers, "Worker threads (0 = ESW_WORKERS or 1)")
            ->capture_default_str();
        c->add_option("--out", eswa.out_path, "Output edge-weight file")->required();
        c->callback([&] { run_esw(eswa); });
    }

    RwEvalArgs rwa;
    {
        CLI::App* c = app.add_subcommand("rw-eval", "Random-walk classification sweep");
        c->add_option("--cube", rwa.cube_path, "Input cube")->required()->check(CLI::ExistingFile);
        c->add_option("--gt", rwa.gt_path, "Groundtruth file")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--weights", rwa.weights_path, "Ensemble edge-weight file")
            ->check(CLI::ExistingFile);
        c->add_option("--seeds", rwa.seeds_grid, "Seeds-per-class grid")->capture_default_str();
        c->add_option("--trials", rwa.trials, "Trials per grid point")->capture_default_str();
        c->add_option("--beta-esw", rwa.beta_esw, "Exponent for ensemble weights")
            ->capture_default_str();
        c->add_option("--beta-euclid", rwa.beta_euclid,
                      "Exponent for Euclidean distances (0 = 1 / mean edge distance)")
            ->capture_default_str();
        c->add_option("--epsilon", rwa.epsilon, "Similarity floor")->capture_default_str();
        c->add_option("--cg-tol", rwa.cg_tol, "Solver relative tolerance")->capture_default_str();
        c->add_option("--cg-max-iter", rwa.cg_max_iter, "Solver iteration cap")
            ->capture_default_str();
        c->add_option("--seed", rwa.seed, "Master seed")->capture_default_str();
        c->add_option("--workers", rwa.workers, "Worker threads (0 = ESW_WORKERS or 1)")
            ->capture_default_str();
        c->add_flag("--mask-timing", rwa.mask_timing, "Write wall_ms as 0 for byte-stable output");
        c->add_option("--out-csv", rwa.out_csv, "Output CSV")->required();
        c->add_option("--out-svg", rwa.out_svg, "Output SVG chart");
        c->add_option("--log", rwa.log_path, "JSONL run log");
        c->callback([&] { run_rw_eval(rwa); });
    }

    GcnEvalArgs gca;
    {
        CLI::App* c = app.add_subcommand("gcn-eval", "Convolution clustering evaluation");
        c->add_option("--cube", gca.cube_path, "Input cube")->required()->check(CLI::ExistingFile);
        c->add_option("--gt", gca.gt_path, "Groundtruth file")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--weights", gca.weights_path, "Ensemble edge-weight file")
            ->check(CLI::ExistingFile);
        c->add_option("--max-steps", gca.config.max_steps, "Convolution steps")
            ->capture_default_str();
        c->add_option("--repeats", gca.config.repeats, "Clustering repeats")
            ->capture_default_str();
        c->add_option("--clusters", gca.clusters, "Clusters (0 = distinct groundtruth classes)")
            ->capture_default_str();
        c->add_option("--knn-k", gca.config.knn_k, "Affinity graph neighbors")
            ->capture_default_str();
        c->add_option("--kmeans-restarts", gca.config.kmeans_restarts, "k-means restarts")
            ->capture_default_str();
        c->add_option("--subsample", gca.config.subsample,
                      "Cap on clustered pixels (0 = cluster all)")
            ->capture_default_str();
        c->add_option("--beta-esw", gca.beta_esw, "Exponent mapping weights to affinities")
            ->capture_default_str();
        c->add_option("--epsilon", gca.epsilon, "Affinity floor")->capture_default_str();
        c->add_option("--seed", gca.config.master_seed, "Master seed")->capture_default_str();
        c->add_option("--workers", gca.workers, "Worker threads (0 = ESW_WORKERS or 1)")
            ->capture_default_str();
        c->add_flag("--mask-timing", gca.mask_timing, "Write wall_ms as 0 for byte-stable output");
        c->add_option("--out-csv", gca.out_csv, "Output CSV")->required();
        c->add_option("--out-svg", gca.out_svg, "Output SVG chart");
        c->add_option("--log", gca.log_path, "JSONL run log");
        c->callback([&] { run_gcn_eval(gca); });
    }

    HistArgs hista;
    {
        CLI::App* c = app.add_subcommand("hist", "Band-subset distance histogram");
        c->add_option("--cube", hista.cube_path, "Input cube")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--gt", hista.gt_path, "Groundtruth file")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--repeats", hista.config.n_repeats, "Band draws")->capture_default_str();
        c->add_option("--kappa-f", hista.config.kappa_f, "Bands per draw (0 = ceil sqrt)")
            ->capture_default_str();
        c->add_option("--kappa-v", hista.config.kappa_v, "Unused by the histogram; kept resolved")
            ->capture_default_str();
        c->add_option("--seed", hista.config.master_seed, "Master seed")->capture_default_str();
        c->add_option("--bins", hista.bins, "Histogram bins")->capture_default_str();
        c->add_option("--out", hista.out_csv, "Output CSV")->required();
        c->callback([&] { run_hist(hista); });
    }

    VizArgs viza;
    {
        CLI::App* c = app.add_subcommand("viz", "Render edge weights as a cubical-complex image");
        c->add_option("--weights", viza.weights_path, "Ensemble edge-weight file")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--out", viza.out_pgm, "Output PGM image")->required();
        c->callback([&] { run_viz(viza); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const esw::solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 4;
    } catch (const esw::format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
