#pragma once

#include <cstdint>
#include <vector>

#include "esw/cube.hpp"
#include "esw/labels.hpp"

namespace esw {

enum class SynthLayout : std::uint8_t { Stripes, Blocks, Voronoi };

// Synthetic scene: classes share identical mean spectra on floor(rho*nz)
// bands and sit max(1, 5*sigma) apart on every remaining band, so band-subset
// distances between distinct classes collapse to noise level with probability
// about rho^kappa_f.
struct SynthSpec {
    std::int64_t nr = 32;
    std::int64_t nc = 32;
    std::int64_t nz = 16;
    std::int32_t n_classes = 4;
    SynthLayout layout = SynthLayout::Voronoi;
    double rho = 0.5;
    double sigma = 0.1;
    std::uint64_t seed = 0;
    std::int64_t n_sites = 0;       // Voronoi cells; 0 = 3 * n_classes
    std::int64_t stripe_height = 0; // 0 = nr / n_classes, at least 1

    // Rejects rho so high that two classes coincide on every band.
    void validate() const;
};

// The per-class mean spectra the generator draws, n_classes rows of nz values.
std::vector<std::vector<double>> synth_class_means(const SynthSpec& spec);

struct SynthData {
    HyperCube cube;
    LabelMap gt; // every pixel labelled 1..n_classes
};

// Deterministic per seed. Throws std::invalid_argument when the layout leaves
// some class without pixels.
SynthData synth_cube(const SynthSpec& spec);

} // namespace esw
