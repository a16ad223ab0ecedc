#pragma once

#include <cstdint>
#include <string>

#include "esw/cube.hpp"
#include "esw/edge_weights.hpp"
#include "esw/grid_graph.hpp"
#include "esw/labels.hpp"
#include "esw/watershed.hpp"

namespace esw {

// Binary containers, all little-endian.
//   cube:        "HSIC" u16 version=1, nr/nc/nz u32, nr*nc*nz f32 pixel-major
//   groundtruth: "HSIG" u16 version=1, nr/nc u32, nr*nc u16 labels (0 = unlabelled)
//   edgeweights: "HSIW" u16 version=1, nr/nc u32, n_edges u32, n_edges f64 in
//                canonical edge order, then n_repeats/kappa_f/kappa_v u32 u32 u32
//                and master_seed u64
// Readers throw format_error naming the byte offset of the first inconsistency
// and accept nothing but exactly the writer's layout.

HyperCube read_cube(const std::string& path);
void write_cube(const HyperCube& cube, const std::string& path);

struct GroundTruthData {
    std::int64_t nr = 0;
    std::int64_t nc = 0;
    LabelMap labels;
};

GroundTruthData read_groundtruth(const std::string& path);
void write_groundtruth(const GroundTruthData& gt, const std::string& path);

struct EdgeWeightData {
    std::int64_t nr = 0;
    std::int64_t nc = 0;
    EswEdgeWeights esw;
};

EdgeWeightData read_edge_weights(const std::string& path);
void write_edge_weights(const EdgeWeightData& data, const std::string& path);

// Doubled-resolution edge-weight rendering: binary PGM (P5, maxval 255) of
// size (2nc-1) x (2nr-1) pixels (width x height). Even-even cells are 0,
// odd cells between adjacent pixels hold round(255*w/w_max), odd-odd cells
// the max of their edge neighbors. w_max falls back to 1 when every weight
// is zero.
void export_cubical_pgm(const GridGraph& graph, const EdgeWeights& weights,
                        const std::string& path);

} // namespace esw
