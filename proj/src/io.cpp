#include "esw/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "esw/errors.hpp"

namespace esw {

namespace {

void append_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

void append_u16(std::string& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    append_bytes(out, b, 2);
}

void append_u32(std::string& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    append_bytes(out, b, 4);
}

void append_u64(std::string& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    append_bytes(out, b, 8);
}

void append_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(out, bits);
}

void append_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    append_u64(out, bits);
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("cannot open for writing: " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw format_error("write failed: " + path);
}

struct Reader {
    std::vector<unsigned char> bytes;
    std::size_t off = 0;

    explicit Reader(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw format_error("cannot open: " + path);
        f.seekg(0, std::ios::end);
        const std::streamoff size = f.tellg();
        f.seekg(0, std::ios::beg);
        bytes.resize(static_cast<std::size_t>(size));
        if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), size);
        if (!f) throw format_error("read failed: " + path);
    }

    void need(std::size_t n, const char* what) const {
        if (off + n > bytes.size())
            throw format_error("offset " + std::to_string(off) + ": truncated file, expected " +
                               std::to_string(n) + " bytes for " + what);
    }

    void expect_magic(const char* magic) {
        need(4, "magic");
        if (std::memcmp(bytes.data() + off, magic, 4) != 0)
            throw format_error("offset " + std::to_string(off) + ": bad magic, expected " +
                               std::string(magic));
        off += 4;
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes[off]) |
                                static_cast<std::uint16_t>(bytes[off + 1]) << 8;
        off += 2;
        return v;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
        off += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
        off += 8;
        return v;
    }

    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void expect_version() {
        const std::size_t at = off;
        const std::uint16_t v = u16("version");
        if (v != 1)
            throw format_error("offset " + std::to_string(at) + ": unsupported version " +
                               std::to_string(v));
    }

    std::uint32_t dim(const char* what) {
        const std::size_t at = off;
        const std::uint32_t v = u32(what);
        if (v == 0)
            throw format_error("offset " + std::to_string(at) + ": zero " + what);
        return v;
    }

    void expect_end() const {
        if (off != bytes.size())
            throw format_error("offset " + std::to_string(off) + ": trailing bytes after payload");
    }
};

} // namespace

HyperCube read_cube(const std::string& path) {
    Reader r(path);
    r.expect_magic("HSIC");
    r.expect_version();
    const std::uint64_t nr = r.dim("nr");
    const std::uint64_t nc = r.dim("nc");
    const std::uint64_t nz = r.dim("nz");
    const std::uint64_t pixels = nr * nc;
    if (pixels > std::numeric_limits<std::uint64_t>::max() / nz ||
        pixels * nz > std::numeric_limits<std::uint64_t>::max() / 4)
        throw format_error("offset 6: dimensions overflow the payload size");
    const std::uint64_t n = pixels * nz;
    const std::size_t payload_at = r.off;
    r.need(static_cast<std::size_t>(n) * 4, "cube payload");

    HyperCube cube(static_cast<std::int64_t>(nr), static_cast<std::int64_t>(nc),
                   static_cast<std::int64_t>(nz));
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t at = r.off;
        const float v = r.f32("cube payload");
        if (!std::isfinite(v))
            throw format_error("offset " + std::to_string(at) + ": non-finite value");
        cube.data[static_cast<std::size_t>(i)] = static_cast<double>(v);
    }
    (void)payload_at;
    r.expect_end();
    return cube;
}

void write_cube(const HyperCube& cube, const std::string& path) {
    cube.validate();
    std::string out;
    out.reserve(18 + cube.data.size() * 4);
    append_bytes(out, "HSIC", 4);
    append_u16(out, 1);
    append_u32(out, static_cast<std::uint32_t>(cube.nr));
    append_u32(out, static_cast<std::uint32_t>(cube.nc));
    append_u32(out, static_cast<std::uint32_t>(cube.nz));
    for (std::size_t i = 0; i < cube.data.size(); ++i) {
        const float v = static_cast<float>(cube.data[i]);
        if (!std::isfinite(v))
            throw std::invalid_argument("write_cube: value at index " + std::to_string(i) +
                                        " exceeds 32-bit float range");
        append_f32(out, v);
    }
    write_file(path, out);
}

GroundTruthData read_groundtruth(const std::string& path) {
    Reader r(path);
    r.expect_magic("HSIG");
    r.expect_version();
    const std::uint64_t nr = r.dim("nr");
    const std::uint64_t nc = r.dim("nc");
    const std::uint64_t n = nr * nc;
    r.need(static_cast<std::size_t>(n) * 2, "label payload");

    GroundTruthData gt;
    gt.nr = static_cast<std::int64_t>(nr);
    gt.nc = static_cast<std::int64_t>(nc);
    gt.labels = LabelMap(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i)
        gt.labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(r.u16("label payload"));
    r.expect_end();
    return gt;
}

void write_groundtruth(const GroundTruthData& gt, const std::string& path) {
    if (gt.nr < 1 || gt.nc < 1)
        throw std::invalid_argument("write_groundtruth: dimensions must be >= 1");
    if (gt.labels.size() != static_cast<std::size_t>(gt.nr * gt.nc))
        throw std::invalid_argument("write_groundtruth: label count does not match dimensions");
    std::string out;
    out.reserve(14 + gt.labels.size() * 2);
    append_bytes(out, "HSIG", 4);
    append_u16(out, 1);
    append_u32(out, static_cast<std::uint32_t>(gt.nr));
    append_u32(out, static_cast<std::uint32_t>(gt.nc));
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const std::int32_t l = gt.labels[i];
        if (l < 0 || l > 65535)
            throw std::invalid_argument("write_groundtruth: label at pixel " + std::to_string(i) +
                                        " out of u16 range");
        append_u16(out, static_cast<std::uint16_t>(l));
    }
    write_file(path, out);
}

EdgeWeightData read_edge_weights(const std::string& path) {
    Reader r(path);
    r.expect_magic("HSIW");
    r.expect_version();
    const std::uint64_t nr = r.dim("nr");
    const std::uint64_t nc = r.dim("nc");
    const std::size_t count_at = r.off;
    const std::uint64_t n_edges = r.u32("n_edges");
    const auto expected = static_cast<std::uint64_t>(
        grid_edge_count(static_cast<std::int64_t>(nr), static_cast<std::int64_t>(nc)));
    if (n_edges != expected)
        throw format_error("offset " + std::to_string(count_at) + ": edge count " +
                           std::to_string(n_edges) + " does not match the " + std::to_string(nr) +
                           "x" + std::to_string(nc) + " grid (expected " +
                           std::to_string(expected) + ")");
    r.need(static_cast<std::size_t>(n_edges) * 8 + 20, "edge weights and config");

    EdgeWeightData data;
    data.nr = static_cast<std::int64_t>(nr);
    data.nc = static_cast<std::int64_t>(nc);
    data.esw.weights.kind = WeightKind::Dissimilarity;
    data.esw.weights.values.resize(static_cast<std::size_t>(n_edges));
    for (std::uint64_t i = 0; i < n_edges; ++i) {
        const std::size_t at = r.off;
        const double v = r.f64("edge weight");
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw format_error("offset " + std::to_string(at) + ": invalid edge weight");
        data.esw.weights.values[static_cast<std::size_t>(i)] = v;
    }
    const std::size_t trailer_at = r.off;
    data.esw.config.n_repeats = static_cast<std::int64_t>(r.u32("n_repeats"));
    data.esw.config.kappa_f = static_cast<std::int64_t>(r.u32("kappa_f"));
    data.esw.config.kappa_v = static_cast<std::int64_t>(r.u32("kappa_v"));
    data.esw.config.master_seed = r.u64("master_seed");
    if (data.esw.config.n_repeats < 1 || data.esw.config.kappa_f < 1 ||
        data.esw.config.kappa_v < 2)
        throw format_error("offset " + std::to_string(trailer_at) + ": invalid ensemble config");
    r.expect_end();
    return data;
}

void write_edge_weights(const EdgeWeightData& data, const std::string& path) {
    if (data.nr < 1 || data.nc < 1)
        throw std::invalid_argument("write_edge_weights: dimensions must be >= 1");
    const std::int64_t n_edges = grid_edge_count(data.nr, data.nc);
    data.esw.weights.validate(n_edges);
    for (const double v : data.esw.weights.values)
        if (v > 1.0)
            throw std::invalid_argument("write_edge_weights: weight above 1");
    const EswConfig& cfg = data.esw.config;
    if (cfg.n_repeats < 1 || cfg.kappa_f < 1 || cfg.kappa_v < 2)
        throw std::invalid_argument("write_edge_weights: unresolved ensemble config");
    if (cfg.n_repeats > std::numeric_limits<std::uint32_t>::max() ||
        cfg.kappa_f > std::numeric_limits<std::uint32_t>::max() ||
        cfg.kappa_v > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("write_edge_weights: config field exceeds u32 range");

    std::string out;
    out.reserve(18 + static_cast<std::size_t>(n_edges) * 8 + 20);
    append_bytes(out, "HSIW", 4);
    append_u16(out, 1);
    append_u32(out, static_cast<std::uint32_t>(data.nr));
    append_u32(out, static_cast<std::uint32_t>(data.nc));
    append_u32(out, static_cast<std::uint32_t>(n_edges));
    for (const double v : data.esw.weights.values) append_f64(out, v);
    append_u32(out, static_cast<std::uint32_t>(cfg.n_repeats));
    append_u32(out, static_cast<std::uint32_t>(cfg.kappa_f));
    append_u32(out, static_cast<std::uint32_t>(cfg.kappa_v));
    append_u64(out, cfg.master_seed);
    write_file(path, out);
}

void export_cubical_pgm(const GridGraph& graph, const EdgeWeights& weights,
                        const std::string& path) {
    weights.validate(graph.n_edges());
    const std::int64_t nr = graph.nr, nc = graph.nc;
    const std::int64_t h = 2 * nr - 1, w = 2 * nc - 1;

    double wmax = 0.0;
    for (const double v : weights.values) wmax = std::max(wmax, v);
    if (wmax <= 0.0) wmax = 1.0;

    std::vector<unsigned char> img(static_cast<std::size_t>(h * w), 0);
    const auto cell = [&](std::int64_t i, std::int64_t j) -> unsigned char& {
        return img[static_cast<std::size_t>(i * w + j)];
    };
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const Edge& edge = graph.edges[e];
        const std::int64_t r = edge.u / nc, c = edge.u % nc;
        const auto value = static_cast<unsigned char>(
            std::lround(255.0 * weights.values[e] / wmax));
        if (edge.v == edge.u + 1)
            cell(2 * r, 2 * c + 1) = value; // horizontal edge
        else
            cell(2 * r + 1, 2 * c) = value; // vertical edge
    }
    for (std::int64_t i = 1; i < h; i += 2)
        for (std::int64_t j = 1; j < w; j += 2) {
            unsigned char m = cell(i - 1, j);
            m = std::max(m, cell(i + 1, j));
            m = std::max(m, cell(i, j - 1));
            m = std::max(m, cell(i, j + 1));
            cell(i, j) = m;
        }

    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data()), img.size());
    write_file(path, out);
}

} // namespace esw
