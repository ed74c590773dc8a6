#pragma once

#include <cstdint>
#include <random>

namespace csvm {

// Finalizer from splitmix64; bijective on uint64.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent child seed from (master, stream, item). Used so that
// every rerun of the same job id gets the same seed no matter which thread
// executes it or in what order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t item = 0) {
    std::uint64_t z = mix64(master + 0x9e3779b97f4a7c15ull * (stream + 1));
    return mix64(z + 0x9e3779b97f4a7c15ull * (item + 1));
}

// mt19937_64 with pinned real/integer conversions. The standard pins the
// engine output exactly; the conversions below avoid std::uniform_*
// distributions, whose sequences differ between library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        auto k = static_cast<std::uint64_t>(unit() * static_cast<double>(span));
        if (k >= span) k = span - 1;
        return lo + static_cast<int>(k);
    }

    std::size_t index(std::size_t n) {
        auto k = static_cast<std::size_t>(unit() * static_cast<double>(n));
        return k >= n ? n - 1 : k;
    }

private:
    std::mt19937_64 eng_;
};

// Seed stream tags; keeps the derivation sites from colliding.
namespace seed_stream {
inline constexpr std::uint64_t fold_split = 1;
inline constexpr std::uint64_t svm = 2;
inline constexpr std::uint64_t holdout = 3;
inline constexpr std::uint64_t tune = 4;
inline constexpr std::uint64_t evaluate = 5;
}  // namespace seed_stream

}  // namespace csvm
