#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/convolution.hpp"
#include "csvm/dataset.hpp"
#include "csvm/rng.hpp"
#include "csvm/svm.hpp"

namespace csvm {

enum class FitnessMode { transductive, holdout };

inline FitnessMode parse_fitness_mode(const std::string& s) {
    if (s == "transductive") return FitnessMode::transductive;
    if (s == "holdout") return FitnessMode::holdout;
    throw data_error("unknown fitness mode '" + s + "'");
}

struct SsoParams {
    // Selection probabilities (c_g, c_p, c_w, c_r); cumulative sums give the
    // stepwise-function thresholds.
    std::array<double, 4> c = {0.40, 0.30, 0.20, 0.10};
    std::size_t n_sol = 25;
    std::size_t n_filter = 1;
    std::size_t n_var = 1;
    std::size_t n_gen = 25;
    double bound = kWeightBound;
    // One-variable step: w + step_scale * rho[step_low, step_high].
    double step_scale = 0.05;
    double step_low = -0.01;
    double step_high = 0.04;
    SvmConfig svm;
    FitnessMode fitness_mode = FitnessMode::transductive;
    std::uint64_t holdout_seed = 0;  // pins the inner 80/20 split
    bool check_cache = false;        // verify prefix-fitness cache on accept

    void validate() const {
        double sum = 0.0;
        for (double v : c) {
            if (v < 0.0) throw data_error("sso: selection probabilities must be nonnegative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw data_error("sso: selection probabilities must sum to 1");
        if (n_sol < 1 || n_filter < 1 || n_var < 1)
            throw data_error("sso: n_sol, n_filter, n_var must be positive");
        if (!(step_low < step_high)) throw data_error("sso: step_low must be < step_high");
        if (bound <= 0.0) throw data_error("sso: bound must be positive");
    }

    bool operator==(const SsoParams&) const = default;
};

namespace detail {

inline double fitness_of_transformed(const Dataset& transformed, const SsoParams& params) {
    if (params.fitness_mode == FitnessMode::transductive) {
        SvmModel m = train_svc(transformed, params.svm);
        return accuracy(m, transformed);
    }
    const std::size_t n = transformed.size();
    if (n < 2) throw data_error("holdout fitness needs at least 2 records");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(params.holdout_seed, seed_stream::holdout));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    std::size_t n_train = (n * 4 + 4) / 5;  // ceil(0.8 n)
    if (n_train >= n) n_train = n - 1;

    Dataset train, eval;
    train.name = eval.name = transformed.name;
    train.n_att = eval.n_att = transformed.n_att;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? train : eval).records.push_back(transformed.records[perm[i]]);
    SvmModel m = train_svc(train, params.svm);
    return accuracy(m, eval);
}

}  // namespace detail

// Classification accuracy of the SVM on the prefix-transformed records.
// Transductive mode trains and scores on the same records; holdout mode uses
// a seeded 80/20 inner split.
inline double fitness(const FilterBank& bank, std::size_t depth, const Dataset& data,
                      const SsoParams& params) {
    return detail::fitness_of_transformed(transform_dataset(data, bank, depth), params);
}

struct Candidate {
    FilterBank bank;
    // prefix_fitness[d-1] = fitness at prefix depth d; NaN marks stale.
    std::vector<double> prefix_fitness;
    std::size_t p_filter = 1;  // 1-based best depth, lowest wins ties

    double best_fitness() const { return prefix_fitness[p_filter - 1]; }
};

struct Population {
    std::vector<Candidate> candidates;
    std::size_t g_best = 0;
    std::size_t current = 0;  // referent of the stepwise function's third branch

    double best_fitness() const { return candidates[g_best].best_fitness(); }
};

namespace detail {

inline std::size_t argmax_depth(const std::vector<double>& prefix_fitness) {
    std::size_t best = 1;
    for (std::size_t d = 2; d <= prefix_fitness.size(); ++d)
        if (prefix_fitness[d - 1] > prefix_fitness[best - 1]) best = d;
    return best;
}

// Recomputes prefix fitness for depths [from_depth, n_filter] and p_filter.
// `evals` counts classifier trainings; a deterministic work measure.
inline void refresh_candidate(Candidate& cand, const Dataset& data, const SsoParams& params,
                              std::size_t from_depth, std::size_t* evals = nullptr) {
    Dataset cur = transform_dataset(data, cand.bank, from_depth - 1);
    for (std::size_t d = from_depth; d <= cand.bank.n_filter(); ++d) {
        for (auto& r : cur.records)
            r.attributes = convolve_layer(r.attributes, cand.bank.filters[d - 1]);
        cand.prefix_fitness[d - 1] = fitness_of_transformed(cur, params);
        if (evals) ++*evals;
    }
    cand.p_filter = argmax_depth(cand.prefix_fitness);
}

inline FilterBank random_bank(const SsoParams& params, Rng& rng) {
    FilterBank bank;
    bank.filters.resize(params.n_filter);
    for (auto& f : bank.filters) {
        f.weights.resize(params.n_var);
        for (auto& w : f.weights) w = rng.uniform(-params.bound, params.bound);
    }
    return bank;
}

inline Candidate random_candidate(const Dataset& data, const SsoParams& params, Rng& rng,
                                  std::size_t* evals = nullptr) {
    Candidate cand;
    cand.bank = random_bank(params, rng);
    cand.prefix_fitness.assign(params.n_filter, std::numeric_limits<double>::quiet_NaN());
    refresh_candidate(cand, data, params, 1, evals);
    return cand;
}

}  // namespace detail

inline Population init_population(const Dataset& data, const SsoParams& params, Rng& rng,
                                  std::size_t* evals = nullptr) {
    params.validate();
    Population pop;
    pop.candidates.reserve(params.n_sol);
    for (std::size_t s = 0; s < params.n_sol; ++s)
        pop.candidates.push_back(detail::random_candidate(data, params, rng, evals));
    pop.g_best = 0;
    for (std::size_t s = 1; s < params.n_sol; ++s)
        if (pop.candidates[s].best_fitness() > pop.best_fitness()) pop.g_best = s;
    pop.current = pop.g_best;
    return pop;
}

inline Population init_population(const Dataset& data, const SsoParams& params,
                                  std::uint64_t seed) {
    Rng rng(seed);
    return init_population(data, params, rng);
}

struct Selection {
    bool fresh = false;       // "otherwise" branch: brand-new random solution
    std::size_t index = 0;    // population slot the proposal competes for
};

// Stepwise solution selection. Draws one rho in [0,1): below c_g picks gBest,
// below c_g+c_p a uniformly random index, below c_g+c_p+c_w the persistent
// current index, otherwise a fresh random solution (which competes at the
// current slot).
inline Selection select_solution(Population& pop, const SsoParams& params, Rng& rng) {
    const double rho = rng.unit();
    const double t_g = params.c[0];
    const double t_p = t_g + params.c[1];
    const double t_w = t_p + params.c[2];
    Selection sel;
    if (rho < t_g) {
        sel.index = pop.g_best;
    } else if (rho < t_p) {
        sel.index = rng.index(pop.candidates.size());
    } else if (rho < t_w) {
        sel.index = pop.current;
    } else {
        sel.fresh = true;
        sel.index = pop.current;
        return sel;
    }
    pop.current = sel.index;
    return sel;
}

// One-filter one-variable update: nudge one weight of one filter within the
// best-depth prefix, redraw every deeper filter, keep cached fitness below
// the edited depth and mark the rest stale.
inline Candidate propose_update(const Candidate& cand, const SsoParams& params, Rng& rng) {
    Candidate next = cand;
    const std::size_t f = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(cand.p_filter)));
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(params.n_var)));
    double& w = next.bank.filters[f - 1].weights[k - 1];
    w += params.step_scale * rng.uniform(params.step_low, params.step_high);
    w = std::max(std::min(w, params.bound), -params.bound);
    for (std::size_t h = f + 1; h <= next.bank.n_filter(); ++h)
        for (auto& v : next.bank.filters[h - 1].weights) v = rng.uniform(-params.bound, params.bound);
    for (std::size_t d = f; d <= next.bank.n_filter(); ++d)
        next.prefix_fitness[d - 1] = std::numeric_limits<double>::quiet_NaN();
    return next;
}

// Greedy acceptance: the incumbent survives only on strictly better fitness;
// ties and improvements replace it. Returns true when the candidate was
// accepted. gBest moves to the accepted slot when its fitness is at least the
// incumbent best.
inline bool accept_step(Population& pop, std::size_t index, Candidate candidate,
                        const Dataset& data, const SsoParams& params,
                        std::size_t* evals = nullptr) {
    std::size_t from_depth = 1;
    while (from_depth <= candidate.prefix_fitness.size() &&
           !std::isnan(candidate.prefix_fitness[from_depth - 1]))
        ++from_depth;
    const bool partial_reuse = from_depth > 1 && from_depth <= candidate.prefix_fitness.size();
    if (from_depth <= candidate.prefix_fitness.size())
        detail::refresh_candidate(candidate, data, params, from_depth, evals);
    else
        candidate.p_filter = detail::argmax_depth(candidate.prefix_fitness);

    if (params.check_cache && partial_reuse) {
        Candidate fresh = candidate;
        detail::refresh_candidate(fresh, data, params, 1);
        for (std::size_t d = 1; d <= candidate.prefix_fitness.size(); ++d)
            if (fresh.prefix_fitness[d - 1] != candidate.prefix_fitness[d - 1])
                throw std::logic_error("sso: stale prefix-fitness cache at depth " +
                                       std::to_string(d));
    }

    if (candidate.best_fitness() < pop.candidates[index].best_fitness()) return false;
    pop.candidates[index] = std::move(candidate);
    if (pop.candidates[index].best_fitness() >= pop.best_fitness()) pop.g_best = index;
    return true;
}

struct CheckpointSnapshot {
    std::size_t generation = 0;
    double phi = 0.0;               // gBest fitness at this checkpoint
    std::size_t earliest_gen = 0;   // first generation attaining phi (0 = init)
    std::size_t depth = 1;          // gBest p_filter
    std::size_t n_best = 0;         // candidates attaining phi
    double seconds = 0.0;           // wall clock since training start
    std::size_t evals = 0;          // classifier trainings so far (deterministic)
    FilterBank bank;                // gBest bank at this checkpoint
};

struct TrainedModel {
    FilterBank bank;  // gBest truncated to its best depth
    std::size_t depth = 1;
    double fitness = 0.0;
    std::size_t earliest_gen = 0;
    std::size_t best_count = 0;
    std::vector<CheckpointSnapshot> checkpoints;
    SvmModel svm;  // classifier at the reported depth
    double seconds = 0.0;
};

inline nlohmann::ordered_json trained_model_to_json(const TrainedModel& m) {
    nlohmann::ordered_json j;
    j["bank"] = bank_to_json(m.bank);
    j["depth"] = m.depth;
    j["fitness"] = m.fitness;
    j["svm"] = model_to_json(m.svm);
    return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    m.bank = bank_from_json(j.at("bank"));
    m.depth = j.at("depth");
    m.fitness = j.at("fitness");
    m.svm = model_from_json(j.at("svm"));
    return m;
}

inline void save_trained_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write model to '" + path + "'");
    out << trained_model_to_json(m).dump(2) << '\n';
}

inline TrainedModel load_trained_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open model '" + path + "'");
    nlohmann::json j;
    in >> j;
    return trained_model_from_json(j);
}

// Runs n_gen generations of select -> propose -> accept, one solution updated
// per generation. Checkpoints must be sorted ascending and within n_gen.
inline TrainedModel train(const Dataset& data, const SsoParams& params, std::uint64_t seed,
                          const std::vector<std::size_t>& checkpoints = {}) {
    params.validate();
    if (!data.has_both_labels()) throw data_error("sso: training data has a single class");
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (checkpoints[i] <= checkpoints[i - 1])
            throw data_error("sso: checkpoints must be strictly ascending");
    if (!checkpoints.empty() &&
        (checkpoints.front() < 1 || checkpoints.back() > params.n_gen))
        throw data_error("sso: checkpoints must lie in [1, n_gen]");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Rng rng(seed);
    std::size_t evals = 0;
    Population pop = init_population(data, params, rng, &evals);
    double best = pop.best_fitness();
    std::size_t earliest = 0;

    TrainedModel out;
    auto snapshot = [&](std::size_t gen) {
        CheckpointSnapshot s;
        s.generation = gen;
        s.phi = best;
        s.earliest_gen = earliest;
        s.depth = pop.candidates[pop.g_best].p_filter;
        s.n_best = 0;
        for (const auto& c : pop.candidates)
            if (c.best_fitness() == best) ++s.n_best;
        s.seconds = elapsed();
        s.evals = evals;
        s.bank = pop.candidates[pop.g_best].bank;
        s.bank.filters.resize(s.depth);
        out.checkpoints.push_back(std::move(s));
    };

    std::size_t next_cp = 0;
    for (std::size_t t = 1; t <= params.n_gen; ++t) {
        Selection sel = select_solution(pop, params, rng);
        Candidate cand;
        if (sel.fresh) {
            cand = Candidate{};
            cand.bank = detail::random_bank(params, rng);
            cand.prefix_fitness.assign(params.n_filter,
                                       std::numeric_limits<double>::quiet_NaN());
        } else {
            cand = propose_update(pop.candidates[sel.index], params, rng);
        }
        accept_step(pop, sel.index, std::move(cand), data, params, &evals);
        if (pop.best_fitness() > best) {
            best = pop.best_fitness();
            earliest = t;
        }
        if (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            snapshot(t);
            ++next_cp;
        }
    }

    const Candidate& winner = pop.candidates[pop.g_best];
    out.bank = winner.bank;
    out.bank.filters.resize(winner.p_filter);
    out.depth = winner.p_filter;
    out.fitness = winner.best_fitness();
    out.earliest_gen = earliest;
    out.best_count = 0;
    for (const auto& c : pop.candidates)
        if (c.best_fitness() == out.fitness) ++out.best_count;
    out.svm = train_svc(transform_dataset(data, winner.bank, winner.p_filter), params.svm);
    out.seconds = elapsed();
    return out;
}

}  // namespace csvm
