#include "esw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "esw/rng.hpp"

namespace esw {

void SynthSpec::validate() const {
    if (nr < 1 || nc < 1 || nz < 1)
        throw std::invalid_argument("SynthSpec: dimensions must be >= 1");
    if (n_classes < 2) throw std::invalid_argument("SynthSpec: n_classes must be >= 2");
    if (!(rho >= 0.0) || !(rho <= 1.0))
        throw std::invalid_argument("SynthSpec: rho must be in [0, 1]");
    if (!(sigma >= 0.0)) throw std::invalid_argument("SynthSpec: sigma must be >= 0");
    if (static_cast<std::int64_t>(std::floor(rho * static_cast<double>(nz))) >= nz)
        throw std::invalid_argument(
            "SynthSpec: rho leaves no class-separating band, classes would coincide");
    if (n_sites < 0) throw std::invalid_argument("SynthSpec: n_sites must be >= 0");
    if (stripe_height < 0) throw std::invalid_argument("SynthSpec: stripe_height must be >= 0");
}

std::vector<std::vector<double>> synth_class_means(const SynthSpec& spec) {
    spec.validate();
    const auto s = static_cast<std::size_t>(
        std::floor(spec.rho * static_cast<double>(spec.nz)));
    const double delta = std::max(1.0, 5.0 * spec.sigma);

    Rng rng(substream_seed(spec.seed, 0));
    std::vector<double> base(static_cast<std::size_t>(spec.nz));
    for (auto& v : base) v = rng.uniform(0.5, 1.5);

    std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.n_classes), base);
    for (std::size_t c = 0; c < means.size(); ++c)
        for (std::size_t b = s; b < base.size(); ++b)
            means[c][b] += static_cast<double>(c) * delta;
    return means;
}

namespace {

LabelMap make_layout(const SynthSpec& spec) {
    const std::int64_t nr = spec.nr, nc = spec.nc;
    const std::int32_t k = spec.n_classes;
    LabelMap gt(static_cast<std::size_t>(nr * nc));

    switch (spec.layout) {
        case SynthLayout::Stripes: {
            const std::int64_t h =
                spec.stripe_height > 0 ? spec.stripe_height : std::max<std::int64_t>(1, nr / k);
            for (std::int64_t r = 0; r < nr; ++r) {
                const auto cls = static_cast<std::int32_t>((r / h) % k) + 1;
                for (std::int64_t c = 0; c < nc; ++c)
                    gt[static_cast<std::size_t>(r * nc + c)] = cls;
            }
            break;
        }
        case SynthLayout::Blocks: {
            const auto g = static_cast<std::int64_t>(
                std::ceil(std::sqrt(static_cast<double>(k))));
            for (std::int64_t r = 0; r < nr; ++r) {
                const std::int64_t br = r * g / nr;
                for (std::int64_t c = 0; c < nc; ++c) {
                    const std::int64_t bc = c * g / nc;
                    gt[static_cast<std::size_t>(r * nc + c)] =
                        static_cast<std::int32_t>((br * g + bc) % k) + 1;
                }
            }
            break;
        }
        case SynthLayout::Voronoi: {
            const std::int64_t sites = spec.n_sites > 0 ? spec.n_sites : 3 * k;
            Rng rng(substream_seed(spec.seed, 1));
            std::vector<std::pair<std::int64_t, std::int64_t>> pos(
                static_cast<std::size_t>(sites));
            for (auto& p : pos) {
                p.first = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(nr)));
                p.second = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(nc)));
            }
            for (std::int64_t r = 0; r < nr; ++r)
                for (std::int64_t c = 0; c < nc; ++c) {
                    std::size_t best = 0;
                    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
                    for (std::size_t s = 0; s < pos.size(); ++s) {
                        const std::int64_t dr = r - pos[s].first;
                        const std::int64_t dc = c - pos[s].second;
                        const std::int64_t d = dr * dr + dc * dc;
                        if (d < best_d) {
                            best_d = d;
                            best = s;
                        }
                    }
                    gt[static_cast<std::size_t>(r * nc + c)] =
                        static_cast<std::int32_t>(best % static_cast<std::size_t>(k)) + 1;
                }
            break;
        }
    }

    std::vector<char> present(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t i = 0; i < gt.size(); ++i) present[static_cast<std::size_t>(gt[i])] = 1;
    for (std::int32_t c = 1; c <= k; ++c)
        if (!present[static_cast<std::size_t>(c)])
            throw std::invalid_argument("synth_cube: layout left class " + std::to_string(c) +
                                        " without pixels; adjust layout or seed");
    return gt;
}

} // namespace

SynthData synth_cube(const SynthSpec& spec) {
    spec.validate();
    const std::vector<std::vector<double>> means = synth_class_means(spec);

    SynthData out;
    out.gt = make_layout(spec);
    out.cube = HyperCube(spec.nr, spec.nc, spec.nz);

    Rng noise(substream_seed(spec.seed, 2));
    const std::int64_t n = spec.nr * spec.nc;
    for (std::int64_t v = 0; v < n; ++v) {
        const auto& mean = means[static_cast<std::size_t>(out.gt[static_cast<std::size_t>(v)] - 1)];
        double* px = out.cube.pixel(v);
        for (std::int64_t b = 0; b < spec.nz; ++b) {
            px[b] = mean[static_cast<std::size_t>(b)];
            if (spec.sigma > 0.0) px[b] += spec.sigma * noise.normal();
        }
    }
    return out;
}

} // namespace esw
