#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"

#include "json.hpp"

namespace csvm {

inline constexpr double kWeightBound = 2.0;  // filter values live in [-2, 2]

struct Filter {
    std::vector<double> weights;

    bool operator==(const Filter&) const = default;
};

struct FilterBank {
    std::vector<Filter> filters;  // uniform length

    std::size_t n_filter() const { return filters.size(); }
    std::size_t n_var() const { return filters.empty() ? 0 : filters.front().weights.size(); }

    bool operator==(const FilterBank&) const = default;
};

// Cyclic convolution of one layer: out[a] = sum_j in[(a+j) mod n] * w[j].
// The modulo realizes the repeated-attribute append (the first n_var-1
// attributes wrap around), so the attribute count is preserved.
inline std::vector<double> convolve_layer(std::span<const double> values, const Filter& filter) {
    const std::size_t n_att = values.size();
    const std::size_t n_var = filter.weights.size();
    if (n_var == 0 || n_var > n_att)
        throw data_error("filter length " + std::to_string(n_var) +
                         " invalid for " + std::to_string(n_att) + " attributes");
    std::vector<double> out(n_att);
    for (std::size_t a = 0; a < n_att; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_var; ++j) {
            std::size_t idx = a + j;
            if (idx >= n_att) idx -= n_att;
            acc += values[idx] * filter.weights[j];
        }
        out[a] = acc;
    }
    return out;
}

// Applies the first `depth` filters in index order; depth 0 is the identity.
inline std::vector<double> apply_bank(std::span<const double> values, const FilterBank& bank,
                                      std::size_t depth) {
    if (depth > bank.n_filter())
        throw data_error("depth " + std::to_string(depth) + " exceeds bank size " +
                         std::to_string(bank.n_filter()));
    std::vector<double> cur(values.begin(), values.end());
    for (std::size_t f = 0; f < depth; ++f) cur = convolve_layer(cur, bank.filters[f]);
    return cur;
}

inline Dataset transform_dataset(const Dataset& ds, const FilterBank& bank, std::size_t depth) {
    Dataset out = ds;
    for (auto& r : out.records) r.attributes = apply_bank(r.attributes, bank, depth);
    return out;
}

// --- serialization --------------------------------------------------------
// Flat row-major JSON: {"n_filter": F, "n_var": V, "weights": [[...], ...]}.

inline nlohmann::ordered_json bank_to_json(const FilterBank& bank) {
    nlohmann::ordered_json j;
    j["n_filter"] = bank.n_filter();
    j["n_var"] = bank.n_var();
    auto rows = nlohmann::ordered_json::array();
    for (const auto& f : bank.filters) rows.push_back(f.weights);
    j["weights"] = std::move(rows);
    return j;
}

inline FilterBank bank_from_json(const nlohmann::json& j) {
    FilterBank bank;
    for (const auto& row : j.at("weights"))
        bank.filters.push_back(Filter{row.get<std::vector<double>>()});
    const auto nv = bank.n_var();
    for (const auto& f : bank.filters)
        if (f.weights.size() != nv) throw data_error("filter bank rows have unequal lengths");
    return bank;
}

inline void save_bank(const FilterBank& bank, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write filter bank to '" + path + "'");
    out << bank_to_json(bank).dump(2) << '\n';
}

inline FilterBank load_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open filter bank '" + path + "'");
    nlohmann::json j;
    in >> j;
    return bank_from_json(j);
}

}  // namespace csvm
