#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/rng.hpp"

namespace csvm {

class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Record {
    std::vector<double> attributes;
    int label = 0;  // -1 or +1

    bool operator==(const Record&) const = default;
};

struct Dataset {
    std::string name;
    std::size_t n_att = 0;
    std::vector<Record> records;
    // Set by normalize(): per-attribute shift (0 unless negatives were seen)
    // and positive divisor. Empty on raw datasets.
    std::vector<double> norm_shifts;
    std::vector<double> norm_divisors;

    std::size_t size() const { return records.size(); }

    bool has_both_labels() const {
        bool pos = false, neg = false;
        for (const auto& r : records) (r.label > 0 ? pos : neg) = true;
        return pos && neg;
    }

    bool operator==(const Dataset&) const = default;
};

enum class DataFormat { sparse_index, csv };

inline DataFormat parse_format(const std::string& s) {
    if (s == "sparse" || s == "sparse-index" || s == "libsvm") return DataFormat::sparse_index;
    if (s == "csv") return DataFormat::csv;
    throw data_error("unknown dataset format '" + s + "' (expected sparse|csv)");
}

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + tok.size() && !tok.empty() && std::isfinite(out);
}

[[noreturn]] inline void fail_line(std::size_t line_no, const std::string& what) {
    throw parse_error("line " + std::to_string(line_no) + ": " + what);
}

// Maps the two distinct raw label strings onto {-1,+1}. Numeric labels order
// by value, otherwise lexicographically; the smaller becomes -1.
inline std::map<std::string, int> label_mapping(const std::vector<std::string>& distinct) {
    if (distinct.size() != 2)
        throw parse_error(distinct.size() > 2 ? "more than two classes"
                                              : "fewer than two classes");
    double a, b;
    bool numeric = parse_double(distinct[0], a) && parse_double(distinct[1], b);
    std::map<std::string, int> m;
    if (numeric) {
        m[distinct[a < b ? 0 : 1]] = -1;
        m[distinct[a < b ? 1 : 0]] = +1;
    } else {
        const bool first_low = distinct[0] < distinct[1];
        m[distinct[first_low ? 0 : 1]] = -1;
        m[distinct[first_low ? 1 : 0]] = +1;
    }
    return m;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    for (auto& cell : cells) {
        auto b = cell.find_first_not_of(" \t");
        auto e = cell.find_last_not_of(" \t");
        cell = (b == std::string::npos) ? std::string{} : cell.substr(b, e - b + 1);
    }
    return cells;
}

inline bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

}  // namespace detail

// Parses either sparse "label idx:val ..." (1-based indices, absent = 0) or
// CSV with a label column (default: last). Records with missing values ("?")
// are dropped. Raw labels are mapped onto {-1,+1}; exactly two distinct raw
// labels must be present.
inline Dataset parse_dataset(std::istream& in, DataFormat format,
                             std::optional<std::size_t> label_column = std::nullopt,
                             std::string name = {}) {
    Dataset ds;
    ds.name = std::move(name);

    std::vector<std::string> raw_labels;            // per kept record
    std::vector<std::string> distinct;              // insertion order
    auto note_label = [&](const std::string& lab) {
        if (std::find(distinct.begin(), distinct.end(), lab) == distinct.end())
            distinct.push_back(lab);
        raw_labels.push_back(lab);
    };

    std::string line;
    std::size_t line_no = 0;
    std::size_t csv_width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

        if (format == DataFormat::sparse_index) {
            std::istringstream ls(line);
            std::string tok;
            if (!(ls >> tok)) continue;
            Record rec;
            note_label(tok);
            while (ls >> tok) {
                auto colon = tok.find(':');
                if (colon == std::string::npos)
                    detail::fail_line(line_no, "expected idx:val, got '" + tok + "'");
                double idx_d, val;
                if (!detail::parse_double(tok.substr(0, colon), idx_d) ||
                    idx_d < 1 || idx_d != std::floor(idx_d))
                    detail::fail_line(line_no, "bad feature index in '" + tok + "'");
                if (!detail::parse_double(tok.substr(colon + 1), val))
                    detail::fail_line(line_no, "unparsable number in '" + tok + "'");
                auto idx = static_cast<std::size_t>(idx_d);
                if (rec.attributes.size() < idx) rec.attributes.resize(idx, 0.0);
                rec.attributes[idx - 1] = val;
            }
            ds.records.push_back(std::move(rec));
        } else {
            auto cells = detail::split_csv_line(line);
            if (csv_width == 0) {
                csv_width = cells.size();
                if (csv_width < 2) detail::fail_line(line_no, "need at least 2 columns");
            } else if (cells.size() != csv_width) {
                detail::fail_line(line_no, "inconsistent column count (" +
                                               std::to_string(cells.size()) + " vs " +
                                               std::to_string(csv_width) + ")");
            }
            const std::size_t lab_col = label_column.value_or(csv_width - 1);
            if (lab_col >= csv_width) detail::fail_line(line_no, "label column out of range");

            bool missing = false;
            for (const auto& c : cells)
                if (detail::is_missing(c)) missing = true;
            if (missing) continue;  // Breast-cancer raw release has '?' rows

            Record rec;
            rec.attributes.reserve(csv_width - 1);
            for (std::size_t c = 0; c < csv_width; ++c) {
                if (c == lab_col) continue;
                double v;
                if (!detail::parse_double(cells[c], v))
                    detail::fail_line(line_no, "unparsable number '" + cells[c] + "'");
                rec.attributes.push_back(v);
            }
            note_label(cells[lab_col]);
            ds.records.push_back(std::move(rec));
        }
    }

    if (ds.records.empty()) throw parse_error("empty input");

    for (const auto& r : ds.records) ds.n_att = std::max(ds.n_att, r.attributes.size());
    if (format == DataFormat::sparse_index) {
        for (auto& r : ds.records) r.attributes.resize(ds.n_att, 0.0);
    }

    auto mapping = detail::label_mapping(distinct);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        ds.records[i].label = mapping.at(raw_labels[i]);
    return ds;
}

inline Dataset parse_dataset_file(const std::string& path, DataFormat format,
                                  std::optional<std::size_t> label_column = std::nullopt,
                                  std::string name = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file '" + path + "'");
    if (name.empty()) {
        auto slash = path.find_last_of('/');
        name = slash == std::string::npos ? path : path.substr(slash + 1);
    }
    return parse_dataset(in, format, label_column, std::move(name));
}

// Divisor scaling per attribute: optional shift by the minimum (only when a
// negative value exists), then division by the post-shift maximum absolute
// value. All-zero columns keep divisor 1. Output values land in [0, 1].
inline Dataset normalize(const Dataset& ds) {
    if (ds.records.empty()) throw data_error("normalize: empty dataset");
    Dataset out = ds;
    out.norm_shifts.assign(ds.n_att, 0.0);
    out.norm_divisors.assign(ds.n_att, 1.0);

    for (std::size_t a = 0; a < ds.n_att; ++a) {
        double mn = ds.records[0].attributes[a];
        for (const auto& r : ds.records) mn = std::min(mn, r.attributes[a]);
        const double shift = mn < 0.0 ? -mn : 0.0;
        double mx = 0.0;
        for (const auto& r : ds.records) mx = std::max(mx, std::abs(r.attributes[a] + shift));
        const double div = mx > 0.0 ? mx : 1.0;
        out.norm_shifts[a] = shift;
        out.norm_divisors[a] = div;
        for (auto& r : out.records) r.attributes[a] = (r.attributes[a] + shift) / div;
    }
    return out;
}

// Canonical dump: attribute columns then the {-1,+1} label, full precision,
// no header. parse_dataset(csv) reads it back exactly.
inline void write_csv(const Dataset& ds, std::ostream& out) {
    char buf[48];
    for (const auto& r : ds.records) {
        for (double v : r.attributes) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << (r.label > 0 ? "+1" : "-1") << '\n';
    }
}

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // per record, fold index in [0, k)
    std::uint64_t seed = 0;
};

// Seeded uniform permutation cut into k chunks; the first n%k folds carry one
// extra record.
inline FoldPlan split_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (k < 2 || k > n)
        throw data_error("fold count " + std::to_string(k) + " out of range for " +
                         std::to_string(n) + " records");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, seed_stream::fold_split));
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.index(i + 1)]);

    FoldPlan plan{k, std::vector<std::size_t>(n), seed};
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) plan.assignment[perm[pos++]] = f;
    }
    return plan;
}

inline Dataset subset_where(const Dataset& ds, const FoldPlan& plan, std::size_t fold,
                            bool complement) {
    if (plan.assignment.size() != ds.size())
        throw data_error("fold plan does not match dataset");
    Dataset out;
    out.name = ds.name;
    out.n_att = ds.n_att;
    out.norm_shifts = ds.norm_shifts;
    out.norm_divisors = ds.norm_divisors;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if ((plan.assignment[i] == fold) != complement) out.records.push_back(ds.records[i]);
    return out;
}

inline Dataset fold_subset(const Dataset& ds, const FoldPlan& plan, std::size_t fold) {
    return subset_where(ds, plan, fold, false);
}

inline Dataset fold_complement(const Dataset& ds, const FoldPlan& plan, std::size_t fold) {
    return subset_where(ds, plan, fold, true);
}

}  // namespace csvm
