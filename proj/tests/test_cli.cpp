#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "esw/io.hpp"

#ifndef ESW_CLI_BIN
#error "ESW_CLI_BIN must point at the command-line binary"
#endif

using namespace esw;

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "esw_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + ESW_CLI_BIN + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int count_lines(const std::string& text) {
    int n = 0;
    for (const char c : text)
        if (c == '\n') ++n;
    return n;
}

struct Fixture {
    fs::path cube;
    fs::path gt;
    fs::path weights;
};

// One small synthetic scene reused by the pipeline subcommand checks.
const Fixture& fixture() {
    static Fixture f = [] {
        Fixture fx;
        const auto dir = work_dir();
        fx.cube = dir / "fix_cube.bin";
        fx.gt = dir / "fix_gt.bin";
        fx.weights = dir / "fix_w.bin";
        REQUIRE(run("synth --nr 10 --nc 10 --nz 8 --classes 3 --rho 0.5 --sigma 0.05 --seed 4"
                    " --out-cube " + fx.cube.string() + " --out-gt " + fx.gt.string()) == 0);
        REQUIRE(run("esw --cube " + fx.cube.string() +
                    " --repeats 60 --seed 9 --out " + fx.weights.string()) == 0);
        return fx;
    }();
    return f;
}

} // namespace

TEST_CASE("help exits cleanly") {
    CHECK(run("--help") == 0);
    CHECK(run("synth --help") == 0);
}

TEST_CASE("missing and unknown arguments exit with the usage code") {
    CHECK(run("") == 2);
    CHECK(run("synth --nr 4") == 2);
    CHECK(run("frobnicate") == 2);
    const auto out = (work_dir() / "never.csv").string();
    CHECK(run("rw-eval --cube nope.bin --gt nope.bin --out-csv " + out) == 2);
}

TEST_CASE("synthesis is byte-deterministic across reruns") {
    const auto dir = work_dir();
    const auto c1 = dir / "s1_cube.bin", g1 = dir / "s1_gt.bin";
    const auto c2 = dir / "s2_cube.bin", g2 = dir / "s2_gt.bin";
    const std::string flags = "synth --nr 12 --nc 9 --nz 6 --classes 3 --layout blocks"
                              " --rho 0.25 --sigma 0.1 --seed 31";
    REQUIRE(run(flags + " --out-cube " + c1.string() + " --out-gt " + g1.string()) == 0);
    REQUIRE(run(flags + " --out-cube " + c2.string() + " --out-gt " + g2.string()) == 0);
    CHECK(slurp(c1) == slurp(c2));
    CHECK(slurp(g1) == slurp(g2));
}

TEST_CASE("degenerate band overlap is a config error") {
    const auto dir = work_dir();
    CHECK(run("synth --rho 1.0 --out-cube " + (dir / "x.bin").string() + " --out-gt " +
              (dir / "y.bin").string()) == 2);
}

TEST_CASE("a single-repetition ensemble quantizes weights to 0 or 1") {
    const auto& fx = fixture();
    const auto out = work_dir() / "n1.bin";
    REQUIRE(run("esw --cube " + fx.cube.string() + " --repeats 1 --seed 2 --out " +
                out.string()) == 0);
    const EdgeWeightData data = read_edge_weights(out.string());
    for (const double v : data.esw.weights.values) REQUIRE((v == 0.0 || v == 1.0));
}

TEST_CASE("worker count never changes the estimated weights") {
    const auto& fx = fixture();
    const auto w1 = work_dir() / "w1.bin";
    const auto w4 = work_dir() / "w4.bin";
    const std::string flags =
        "esw --cube " + fx.cube.string() + " --repeats 40 --seed 11 --out ";
    REQUIRE(run(flags + w1.string() + " --workers 1") == 0);
    REQUIRE(run(flags + w4.string() + " --workers 4") == 0);
    CHECK(slurp(w1) == slurp(w4));
}

TEST_CASE("the ESW_WORKERS fallback behaves like the flag") {
    const auto& fx = fixture();
    const auto we = work_dir() / "we.bin";
    const std::string cmd = std::string("ESW_WORKERS=3 \"") + ESW_CLI_BIN + "\" esw --cube " +
                            fx.cube.string() + " --repeats 40 --seed 11 --out " + we.string() +
                            " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const auto w1 = work_dir() / "w1b.bin";
    REQUIRE(run("esw --cube " + fx.cube.string() + " --repeats 40 --seed 11 --out " +
                w1.string()) == 0);
    CHECK(slurp(we) == slurp(w1));
}

TEST_CASE("chain ensemble weights via the binary approach the enumerated values") {
    const auto dir = work_dir();
    HyperCube chain(1, 3, 1, {0.0, 0.0, 1.0});
    const auto cube_path = dir / "chain.bin";
    write_cube(chain, cube_path.string());
    const auto out = dir / "chain_w.bin";
    REQUIRE(run("esw --cube " + cube_path.string() +
                " --repeats 10000 --kappa-f 1 --kappa-v 2 --seed 13 --out " +
                out.string()) == 0);
    const EdgeWeightData data = read_edge_weights(out.string());
    CHECK(data.esw.weights.values[0] == doctest::Approx(1.0 / 3.0).epsilon(0.15));
    CHECK(data.esw.weights.values[1] == doctest::Approx(2.0 / 3.0).epsilon(0.075));
}

TEST_CASE("the seed sweep writes one row per method, trial, and grid point") {
    const auto& fx = fixture();
    const auto csv = work_dir() / "rw.csv";
    REQUIRE(run("rw-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --weights " + fx.weights.string() +
                " --seeds 1 --trials 1 --seed 3 --out-csv " + csv.string()) == 0);
    const std::string text = slurp(csv);
    CHECK(count_lines(text) == 4); // header + esw + euclidean + cosine
    CHECK(text.find("method,trial,seeds_per_class,oa,wall_ms") == 0);
    CHECK(text.find("esw,") != std::string::npos);
    CHECK(text.find("euclidean,") != std::string::npos);
    CHECK(text.find("cosine,") != std::string::npos);

    // Without stored weights only the two spectral baselines run.
    const auto csv2 = work_dir() / "rw2.csv";
    REQUIRE(run("rw-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --seeds 1 --trials 1 --seed 3 --out-csv " + csv2.string()) == 0);
    CHECK(count_lines(slurp(csv2)) == 3);
}

TEST_CASE("evaluation outputs are byte-identical across runs and worker counts") {
    const auto& fx = fixture();
    const auto csv1 = work_dir() / "det1.csv";
    const auto csv2 = work_dir() / "det2.csv";
    const auto svg1 = work_dir() / "det1.svg";
    const auto svg2 = work_dir() / "det2.svg";
    const std::string base = "rw-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                             " --weights " + fx.weights.string() +
                             " --seeds 1 2 --trials 3 --seed 21 --mask-timing";
    REQUIRE(run(base + " --workers 1 --out-csv " + csv1.string() + " --out-svg " +
                svg1.string()) == 0);
    REQUIRE(run(base + " --workers 4 --out-csv " + csv2.string() + " --out-svg " +
                svg2.string()) == 0);
    CHECK(slurp(csv1) == slurp(csv2));
    CHECK(slurp(svg1) == slurp(svg2));
}

TEST_CASE("a missing groundtruth file is a usage error") {
    const auto& fx = fixture();
    CHECK(run("rw-eval --cube " + fx.cube.string() + " --gt " +
              (work_dir() / "missing.bin").string() + " --out-csv " +
              (work_dir() / "no.csv").string()) == 2);
}

TEST_CASE("corrupt input files are data errors") {
    const auto bad = work_dir() / "bad.bin";
    std::ofstream(bad, std::ios::binary) << "garbage";
    CHECK(run("viz --weights " + bad.string() + " --out " +
              (work_dir() / "bad.pgm").string()) == 3);
    CHECK(run("esw --cube " + bad.string() + " --out " +
              (work_dir() / "bad_w.bin").string()) == 3);
}

TEST_CASE("dimension mismatches between inputs are config errors") {
    const auto& fx = fixture();
    const auto dir = work_dir();
    const auto other_gt = dir / "other_gt.bin";
    const auto other_cube = dir / "other_cube.bin";
    REQUIRE(run("synth --nr 6 --nc 6 --nz 8 --classes 2 --seed 5 --out-cube " +
                other_cube.string() + " --out-gt " + other_gt.string()) == 0);
    CHECK(run("rw-eval --cube " + fx.cube.string() + " --gt " + other_gt.string() +
              " --out-csv " + (dir / "mm.csv").string()) == 2);
}

TEST_CASE("an impossible solver budget is a solver error") {
    const auto& fx = fixture();
    CHECK(run("rw-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
              " --seeds 1 --trials 1 --seed 3 --cg-tol 1e-300 --cg-max-iter 1 --out-csv " +
              (work_dir() / "solver.csv").string()) == 4);
}

TEST_CASE("the convolution sweep writes a row per repeat and iteration") {
    const auto& fx = fixture();
    const auto csv = work_dir() / "gcn.csv";
    const auto svg = work_dir() / "gcn.svg";
    REQUIRE(run("gcn-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --weights " + fx.weights.string() +
                " --max-steps 3 --repeats 2 --knn-k 6 --kmeans-restarts 2 --seed 17" +
                " --mask-timing --out-csv " + csv.string() + " --out-svg " + svg.string()) == 0);
    const std::string text = slurp(csv);
    // Header + (unweighted + weighted) x 2 repeats x 3 iterations.
    CHECK(count_lines(text) == 13);
    CHECK(text.find("method,trial,iteration,oa,wall_ms") == 0);
    CHECK(text.find("unweighted,") != std::string::npos);
    CHECK(text.find("weighted,") != std::string::npos);
    CHECK(slurp(svg).find("<svg") == 0);

    // Weights omitted: only the unweighted variant, 2 x 3 rows.
    const auto csv2 = work_dir() / "gcn2.csv";
    REQUIRE(run("gcn-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --max-steps 3 --repeats 2 --knn-k 6 --kmeans-restarts 2 --seed 17" +
                " --mask-timing --out-csv " + csv2.string()) == 0);
    CHECK(count_lines(slurp(csv2)) == 7);

    // A single step yields a length-1 curve per repeat.
    const auto csv3 = work_dir() / "gcn3.csv";
    REQUIRE(run("gcn-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --max-steps 1 --repeats 2 --knn-k 6 --kmeans-restarts 2 --seed 17" +
                " --mask-timing --out-csv " + csv3.string()) == 0);
    const std::string text3 = slurp(csv3);
    CHECK(count_lines(text3) == 3);
    CHECK(text3.find(",1,") != std::string::npos); // iteration column stays at 1
}

TEST_CASE("the run log holds one JSON record per result row") {
    const auto& fx = fixture();
    const auto csv = work_dir() / "logged.csv";
    const auto log = work_dir() / "logged.jsonl";
    REQUIRE(run("rw-eval --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --seeds 1 2 --trials 2 --seed 5 --mask-timing --out-csv " + csv.string() +
                " --log " + log.string()) == 0);
    const std::string text = slurp(log);
    CHECK(count_lines(text) == 8); // 2 methods x 2 grid points x 2 trials
    CHECK(text.find("\"cmd\":\"rw-eval\"") != std::string::npos);
    CHECK(text.find("\"config\":\"") != std::string::npos);
    CHECK(text.find("\"oa\":") != std::string::npos);
}

TEST_CASE("the histogram subcommand writes the two-series CSV") {
    const auto& fx = fixture();
    const auto out = work_dir() / "hist.csv";
    REQUIRE(run("hist --cube " + fx.cube.string() + " --gt " + fx.gt.string() +
                " --repeats 10 --kappa-f 1 --seed 3 --bins 10 --out " + out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(text.find("bin_lo,bin_hi,same_class,different_class") == 0);
    CHECK(count_lines(text) == 11);
}

TEST_CASE("the visualization subcommand writes a doubled-resolution PGM") {
    const auto& fx = fixture();
    const auto out = work_dir() / "viz.pgm";
    REQUIRE(run("viz --weights " + fx.weights.string() + " --out " + out.string()) == 0);
    const std::string bytes = slurp(out);
    CHECK(bytes.rfind("P5\n19 19\n255\n", 0) == 0);
    CHECK(bytes.size() == std::string("P5\n19 19\n255\n").size() + 19 * 19);
}
