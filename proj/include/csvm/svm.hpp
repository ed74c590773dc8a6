#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/rng.hpp"

#include "json.hpp"

namespace csvm {

enum class KernelKind { linear, polynomial, rbf, sigmoid };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    int degree = 3;      // polynomial exponent p
    double sigma = 1.0;  // rbf width
    double kappa = 1.0;  // sigmoid gain
    double delta = 0.0;  // sigmoid offset

    // Baseline default: rbf with 2*sigma^2 = n_att, i.e. gamma = 1/n_att.
    static KernelSpec rbf_default(std::size_t n_att) {
        KernelSpec s;
        s.kind = KernelKind::rbf;
        s.sigma = std::sqrt(static_cast<double>(n_att) / 2.0);
        return s;
    }

    bool operator==(const KernelSpec&) const = default;
};

inline double dot(std::span<const double> x, std::span<const double> z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * z[i];
    return acc;
}

inline double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> z) {
    if (x.size() != z.size())
        throw data_error("kernel dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(z.size()) + ")");
    switch (spec.kind) {
        case KernelKind::linear:
            return dot(x, z);
        case KernelKind::polynomial:
            return std::pow(dot(x, z) + 1.0, spec.degree);
        case KernelKind::rbf: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - z[i];
                d2 += d * d;
            }
            return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
        }
        case KernelKind::sigmoid:
            return std::tanh(spec.kappa * dot(x, z) - spec.delta);
    }
    throw std::logic_error("unreachable kernel kind");
}

struct SvmConfig {
    KernelSpec kernel;
    double c = 1.0;
    double tol = 1e-3;
    int max_passes = 1000;
    std::uint64_t seed = 0;

    bool operator==(const SvmConfig&) const = default;
};

struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // lambda_i * y_i
    double bias = 0.0;
    KernelSpec kernel;
    double c = 1.0;
    bool converged = true;

    bool operator==(const SvmModel&) const = default;
};

inline double decision_value(const SvmModel& m, std::span<const double> x) {
    double f = m.bias;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        f += m.dual_coefs[i] * kernel_eval(m.kernel, m.support_vectors[i], x);
    return f;
}

// sign(0) resolves to +1.
inline int predict(const SvmModel& m, std::span<const double> x) {
    return decision_value(m, x) >= 0.0 ? +1 : -1;
}

inline double accuracy(const SvmModel& m, const Dataset& ds) {
    if (ds.records.empty()) throw data_error("accuracy: empty dataset");
    std::size_t correct = 0;
    for (const auto& r : ds.records)
        if (predict(m, r.attributes) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace detail {

// SMO on the soft-margin dual with maximal-violating-pair selection and the
// two-threshold stopping rule: iterate until the worst violation gap drops
// below tol, which directly bounds every point's KKT residual by tol/2. Full
// Gram matrix and gradient cache (training sets here are at most a few
// hundred records). Ties between equally violating points break by a seeded
// random priority, so a fixed seed gives a reproducible model.
class SmoSolver {
public:
    SmoSolver(const Dataset& ds, const KernelSpec& kernel, double c, double tol,
              int max_passes, std::uint64_t seed, bool check_objective)
        : kernel_(kernel),
          c_(c),
          tol_(tol),
          max_passes_(max_passes),
          rng_(derive_seed(seed, seed_stream::svm)),
          check_objective_(check_objective) {
        if (c <= 0.0) throw data_error("svm: C must be positive");
        if (tol <= 0.0) throw data_error("svm: tol must be positive");
        if (kernel.kind == KernelKind::rbf && kernel.sigma <= 0.0)
            throw data_error("svm: rbf sigma must be positive");
        if (kernel.kind == KernelKind::polynomial && kernel.degree < 1)
            throw data_error("svm: polynomial degree must be >= 1");
        n_ = ds.size();
        if (n_ == 0) throw data_error("svm: empty training set");
        if (!ds.has_both_labels()) throw data_error("svm: training set has a single class");
        x_.reserve(n_);
        y_.reserve(n_);
        for (const auto& r : ds.records) {
            for (double v : r.attributes)
                if (!std::isfinite(v)) throw data_error("svm: non-finite attribute value");
            x_.push_back(r.attributes);
            y_.push_back(static_cast<double>(r.label));
        }
        gram_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                gram_[i * n_ + j] = gram_[j * n_ + i] = kernel_eval(kernel_, x_[i], x_[j]);
        alpha_.assign(n_, 0.0);
        // v_k = y_k - u_k where u is the decision value without bias
        v_.assign(y_.begin(), y_.end());
        priority_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) priority_[i] = i;
        for (std::size_t i = n_ - 1; i > 0; --i)
            std::swap(priority_[i], priority_[rng_.index(i + 1)]);
    }

    SvmModel solve() {
        // can raise y*alpha (alpha below C for +1, above 0 for -1)
        auto in_up = [&](std::size_t k) {
            return y_[k] > 0 ? alpha_[k] < c_ : alpha_[k] > 0.0;
        };
        auto in_down = [&](std::size_t k) {
            return y_[k] > 0 ? alpha_[k] > 0.0 : alpha_[k] < c_;
        };
        auto select = [&](std::size_t& i, std::size_t& j) {
            i = j = n_;
            for (std::size_t k = 0; k < n_; ++k) {
                if (in_up(k) &&
                    (i == n_ || v_[k] > v_[i] ||
                     (v_[k] == v_[i] && priority_[k] < priority_[i])))
                    i = k;
                if (in_down(k) &&
                    (j == n_ || v_[k] < v_[j] ||
                     (v_[k] == v_[j] && priority_[k] < priority_[j])))
                    j = k;
            }
        };

        bool converged = false;
        const std::size_t max_iter =
            static_cast<std::size_t>(max_passes_) * std::max<std::size_t>(n_, 1);
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            std::size_t i, j;
            select(i, j);
            if (i == n_ || j == n_ || v_[i] - v_[j] <= tol_) {
                converged = true;
                break;
            }
            const double gap = v_[i] - v_[j];
            double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (eta <= 0.0) eta = 1e-12;  // indefinite kernels: clipped step
            const double slack_i = y_[i] > 0 ? c_ - alpha_[i] : alpha_[i];
            const double slack_j = y_[j] > 0 ? alpha_[j] : c_ - alpha_[j];
            const double lambda = std::min({slack_i, slack_j, gap / eta});
            if (lambda <= 0.0) {
                converged = true;  // numerically pinned
                break;
            }

            double before = 0.0;
            if (check_objective_) before = dual_objective();

            alpha_[i] += y_[i] * lambda;
            alpha_[j] -= y_[j] * lambda;
            snap(i);
            snap(j);
            for (std::size_t k = 0; k < n_; ++k) v_[k] += lambda * (K(j, k) - K(i, k));

            if (check_objective_) {
                const double after = dual_objective();
                if (after < before - 1e-9)
                    throw std::logic_error("smo: dual objective decreased");
            }
        }

        // bias centers the final violation interval
        double up_max = -std::numeric_limits<double>::infinity();
        double down_min = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_; ++k) {
            if (in_up(k)) up_max = std::max(up_max, v_[k]);
            if (in_down(k)) down_min = std::min(down_min, v_[k]);
        }
        double bias;
        if (std::isfinite(up_max) && std::isfinite(down_min))
            bias = 0.5 * (up_max + down_min);
        else if (std::isfinite(up_max))
            bias = up_max;
        else
            bias = down_min;

        SvmModel m;
        m.kernel = kernel_;
        m.c = c_;
        m.bias = bias;
        m.converged = converged;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] > 0.0) {
                m.support_vectors.push_back(x_[i]);
                m.dual_coefs.push_back(alpha_[i] * y_[i]);
            }
        }
        return m;
    }

private:
    double K(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }

    void snap(std::size_t k) {
        if (alpha_[k] < 1e-12 * c_)
            alpha_[k] = 0.0;
        else if (alpha_[k] > (1.0 - 1e-12) * c_)
            alpha_[k] = c_;
    }

    double dual_objective() const {
        double lin = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] == 0.0) continue;
            lin += alpha_[i];
            for (std::size_t j = 0; j < n_; ++j)
                quad += alpha_[i] * alpha_[j] * y_[i] * y_[j] * K(i, j);
        }
        return lin - 0.5 * quad;
    }

    KernelSpec kernel_;
    double c_;
    double tol_;
    int max_passes_;
    Rng rng_;
    bool check_objective_;
    std::size_t n_ = 0;
    std::vector<std::vector<double>> x_;
    std::vector<double> y_;
    std::vector<double> gram_;
    std::vector<double> alpha_;
    std::vector<double> v_;
    std::vector<std::size_t> priority_;
};

}  // namespace detail

inline SvmModel train_svc(const Dataset& ds, const KernelSpec& kernel, double c, double tol,
                          int max_passes, std::uint64_t seed = 0, bool check_objective =
#ifndef NDEBUG
                              true
#else
                              false
#endif
) {
    return detail::SmoSolver(ds, kernel, c, tol, max_passes, seed, check_objective).solve();
}

inline SvmModel train_svc(const Dataset& ds, const SvmConfig& cfg) {
    return train_svc(ds, cfg.kernel, cfg.c, cfg.tol, cfg.max_passes, cfg.seed);
}

// --- serialization --------------------------------------------------------

inline nlohmann::ordered_json kernel_to_json(const KernelSpec& k) {
    nlohmann::ordered_json j;
    switch (k.kind) {
        case KernelKind::linear: j["kind"] = "linear"; break;
        case KernelKind::polynomial: j["kind"] = "polynomial"; break;
        case KernelKind::rbf: j["kind"] = "rbf"; break;
        case KernelKind::sigmoid: j["kind"] = "sigmoid"; break;
    }
    j["degree"] = k.degree;
    j["sigma"] = k.sigma;
    j["kappa"] = k.kappa;
    j["delta"] = k.delta;
    return j;
}

inline KernelSpec kernel_from_json(const nlohmann::json& j) {
    KernelSpec k;
    const std::string kind = j.at("kind");
    if (kind == "linear")
        k.kind = KernelKind::linear;
    else if (kind == "polynomial")
        k.kind = KernelKind::polynomial;
    else if (kind == "rbf")
        k.kind = KernelKind::rbf;
    else if (kind == "sigmoid")
        k.kind = KernelKind::sigmoid;
    else
        throw data_error("unknown kernel kind '" + kind + "'");
    k.degree = j.at("degree");
    k.sigma = j.at("sigma");
    k.kappa = j.at("kappa");
    k.delta = j.at("delta");
    return k;
}

inline nlohmann::ordered_json model_to_json(const SvmModel& m) {
    nlohmann::ordered_json j;
    j["kernel"] = kernel_to_json(m.kernel);
    j["c"] = m.c;
    j["bias"] = m.bias;
    j["converged"] = m.converged;
    j["dual_coefs"] = m.dual_coefs;
    auto svs = nlohmann::ordered_json::array();
    for (const auto& v : m.support_vectors) svs.push_back(v);
    j["support_vectors"] = std::move(svs);
    return j;
}

inline SvmModel model_from_json(const nlohmann::json& j) {
    SvmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.c = j.at("c");
    m.bias = j.at("bias");
    m.converged = j.at("converged");
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    for (const auto& v : j.at("support_vectors"))
        m.support_vectors.push_back(v.get<std::vector<double>>());
    if (m.support_vectors.size() != m.dual_coefs.size())
        throw data_error("svm model: coefficient/vector count mismatch");
    return m;
}

inline void save_model(const SvmModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write svm model to '" + path + "'");
    out << model_to_json(m).dump(2) << '\n';
}

inline SvmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open svm model '" + path + "'");
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace csvm
