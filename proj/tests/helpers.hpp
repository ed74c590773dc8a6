#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/rng.hpp"

namespace test {

inline csvm::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                  const std::vector<int>& labels) {
    csvm::Dataset ds;
    ds.n_att = rows.empty() ? 0 : rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        ds.records.push_back(csvm::Record{rows[i], labels[i]});
    return ds;
}

// First normalized record of the nine-attribute example used throughout the
// convolution tests.
inline const std::vector<double> kExampleRecord = {0.50, 0.10, 0.10, 0.10, 0.20,
                                                   0.10, 0.30, 0.10, 0.10};

inline std::vector<double> random_vector(csvm::Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Two interleaved half-moons; a small two-class problem that an rbf SVM
// separates well but a linear one does not.
inline csvm::Dataset two_moons(std::size_t n, std::uint64_t seed) {
    csvm::Rng rng(seed);
    csvm::Dataset ds;
    ds.n_att = 2;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, 3.14159265358979323846);
        const double noise_x = rng.uniform(-0.08, 0.08);
        const double noise_y = rng.uniform(-0.08, 0.08);
        if (i % 2 == 0) {
            ds.records.push_back(
                csvm::Record{{std::cos(t) + noise_x, std::sin(t) + noise_y}, +1});
        } else {
            ds.records.push_back(
                csvm::Record{{1.0 - std::cos(t) + noise_x, 0.35 - std::sin(t) + noise_y}, -1});
        }
    }
    return ds;
}

}  // namespace test
