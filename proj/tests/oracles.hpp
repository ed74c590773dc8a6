#pragma once

// Reference implementations used only by the tests. They stay deliberately
// independent of the library code paths they check.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Append-and-slide convolution: physically repeat the first n_var-1
// attributes after the last one, then slide a stride-1 window.
inline std::vector<double> append_slide(const std::vector<double>& values,
                                        const std::vector<double>& weights) {
    std::vector<double> padded = values;
    for (std::size_t a = 0; a + 1 < weights.size(); ++a) padded.push_back(values[a]);
    std::vector<double> out(values.size());
    for (std::size_t a = 0; a < values.size(); ++a) {
        double b = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) b += padded[a + j] * weights[j];
        out[a] = b;
    }
    return out;
}

inline std::vector<double> append_slide_stack(std::vector<double> values,
                                              const std::vector<std::vector<double>>& filters,
                                              std::size_t depth) {
    for (std::size_t f = 0; f < depth; ++f) values = append_slide(values, filters[f]);
    return values;
}

// Dense grid search over the soft-margin dual for tiny problems (n = 4).
// Three multipliers run over a refining grid; the fourth comes from the
// equality constraint. Returns dual coefficients (alpha_i * y_i) and bias.
struct DualSolution {
    std::array<double, 4> alpha{};
    double bias = 0.0;
    double objective = 0.0;
};

template <typename KernelFn>
inline DualSolution grid_search_dual(const std::vector<std::vector<double>>& x,
                                     const std::array<int, 4>& y, double c, KernelFn kernel) {
    std::array<std::array<double, 4>, 4> k{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) k[i][j] = kernel(x[i], x[j]);

    auto objective = [&](const std::array<double, 4>& a) {
        double lin = 0.0, quad = 0.0;
        for (int i = 0; i < 4; ++i) {
            lin += a[i];
            for (int j = 0; j < 4; ++j) quad += a[i] * a[j] * y[i] * y[j] * k[i][j];
        }
        return lin - 0.5 * quad;
    };

    std::array<double, 4> best{};
    double best_obj = 0.0;  // alpha = 0 is feasible with objective 0
    std::array<double, 3> lo{0.0, 0.0, 0.0}, hi{c, c, c};
    constexpr int kSteps = 24;
    for (int round = 0; round < 16; ++round) {
        std::array<double, 4> a{};
        for (int i0 = 0; i0 <= kSteps; ++i0) {
            a[0] = lo[0] + (hi[0] - lo[0]) * i0 / kSteps;
            for (int i1 = 0; i1 <= kSteps; ++i1) {
                a[1] = lo[1] + (hi[1] - lo[1]) * i1 / kSteps;
                for (int i2 = 0; i2 <= kSteps; ++i2) {
                    a[2] = lo[2] + (hi[2] - lo[2]) * i2 / kSteps;
                    const double a3 = -y[3] * (a[0] * y[0] + a[1] * y[1] + a[2] * y[2]);
                    if (a3 < 0.0 || a3 > c) continue;
                    a[3] = a3;
                    const double obj = objective(a);
                    if (obj > best_obj) {
                        best_obj = obj;
                        best = a;
                    }
                }
            }
        }
        for (int d = 0; d < 3; ++d) {
            const double span = (hi[d] - lo[d]) / 5.0;
            lo[d] = std::max(0.0, best[d] - span);
            hi[d] = std::min(c, best[d] + span);
        }
    }

    DualSolution sol;
    sol.alpha = best;
    sol.objective = best_obj;

    auto f_without_bias = [&](int i) {
        double f = 0.0;
        for (int j = 0; j < 4; ++j) f += best[j] * y[j] * k[i][j];
        return f;
    };
    double bias_sum = 0.0;
    int bias_count = 0;
    for (int i = 0; i < 4; ++i) {
        if (best[i] > 1e-6 * c && best[i] < (1.0 - 1e-6) * c) {
            bias_sum += y[i] - f_without_bias(i);
            ++bias_count;
        }
    }
    if (bias_count > 0) {
        sol.bias = bias_sum / bias_count;
    } else {
        // No interior multiplier: take the midpoint of the feasible interval.
        double lo_b = -1e30, hi_b = 1e30;
        for (int i = 0; i < 4; ++i) {
            const double margin = y[i] - f_without_bias(i);
            const bool at_zero = best[i] <= 1e-6 * c;
            if (at_zero) {
                if (y[i] > 0)
                    lo_b = std::max(lo_b, margin);  // need y*f >= 1
                else
                    hi_b = std::min(hi_b, margin);
            } else {  // at C: need y*f <= 1
                if (y[i] > 0)
                    hi_b = std::min(hi_b, margin);
                else
                    lo_b = std::max(lo_b, margin);
            }
        }
        sol.bias = 0.5 * (lo_b + hi_b);
    }
    return sol;
}

}  // namespace oracle
