#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace esw {

// splitmix64 finalizer. Used to derive independent stream seeds from a master
// seed plus stream indices, so ensemble members can run in any order (or in
// parallel) and still consume identical random sequences.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(master ^ 0x6a09e667f3bcc909ULL);
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    s = mix64(s ^ c);
    return s;
}

// Deterministic random stream. The raw generator is std::mt19937_64 (its
// output sequence is pinned by the standard); every distribution on top is
// implemented here rather than via <random> adaptors, whose algorithms are
// implementation-defined and would break run-to-run reproducibility across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n). Rejection sampling, exact.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX / n * n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

    // Standard normal via Marsaglia's polar method; second deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * real01() - 1.0;
            v = 2.0 * real01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // k distinct values from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
        std::vector<std::uint32_t> idx(n);
        for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
        for (std::uint32_t i = 0; i < k; ++i) {
            const std::uint32_t j = i + static_cast<std::uint32_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace esw
