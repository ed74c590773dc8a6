#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/parallel.hpp"
#include "csvm/rng.hpp"
#include "csvm/sso.hpp"

namespace csvm {

struct OaDesign {
    std::array<std::array<int, 4>, 9> rows;
};

// Canonical L9(3^4): every level appears three times per column and every
// ordered level pair appears exactly once per column pair.
inline OaDesign build_l9() {
    return OaDesign{{{{{1, 1, 1, 1}},
                      {{1, 2, 2, 2}},
                      {{1, 3, 3, 3}},
                      {{2, 1, 2, 3}},
                      {{2, 2, 3, 1}},
                      {{2, 3, 1, 2}},
                      {{3, 1, 3, 2}},
                      {{3, 2, 1, 3}},
                      {{3, 3, 2, 1}}}}};
}

// Factor levels. Column order is (n_filter, n_sol, n_var, c); n_var levels
// are the ceilings of l*n_att/4.
struct LevelTable {
    std::array<std::size_t, 3> n_filter = {1, 3, 4};
    std::array<std::size_t, 3> n_sol = {25, 50, 75};
    std::array<std::array<double, 4>, 3> c = {{{0.40, 0.30, 0.20, 0.10},
                                               {0.35, 0.25, 0.15, 0.25},
                                               {0.45, 0.30, 0.20, 0.05}}};

    std::size_t n_var_for(int level, std::size_t n_att) const {
        const std::size_t raw = (static_cast<std::size_t>(level) * n_att + 3) / 4;
        return std::min(std::max<std::size_t>(raw, 1), n_att);
    }
};

inline SsoParams params_for_try(const std::array<int, 4>& row, std::size_t n_att,
                                const SsoParams& base, const LevelTable& levels = {}) {
    for (int code : row)
        if (code < 1 || code > 3) throw data_error("oa: level code out of range");
    SsoParams p = base;
    p.n_filter = levels.n_filter[row[0] - 1];
    p.n_sol = levels.n_sol[row[1] - 1];
    p.n_var = levels.n_var_for(row[2], n_att);
    p.c = levels.c[row[3] - 1];
    return p;
}

struct TryCheckpoint {
    std::size_t generation = 0;
    double phi = 0.0;              // best fitness across repetitions
    double t_seconds = 0.0;        // summed wall clock across repetitions (report only)
    double cost = 0.0;             // summed classifier trainings; the seed-reproducible
                                   // runtime measure the selection rules compare
    std::size_t g_earliest = 0;    // earliest generation attaining phi
    std::size_t f_depth = 1;       // filter depth of the best repetition
    std::size_t n_best = 0;        // repetitions attaining phi
};

struct TryStats {
    std::size_t try_id = 0;  // 1-based row of the array
    SsoParams params;
    std::vector<TryCheckpoint> checkpoints;
};

// Runs every array row for `reps` repetitions on the sampled fold and folds
// the per-repetition checkpoint snapshots into TryStats. Seeds derive from
// (seed, try, rep), so results do not depend on thread count.
inline std::vector<TryStats> run_trials(const Dataset& fold, const OaDesign& design,
                                        const LevelTable& levels, const SsoParams& base,
                                        std::size_t reps = 15,
                                        const std::vector<std::size_t>& checkpoints = {25, 50,
                                                                                       75},
                                        std::uint64_t seed = 1,
                                        std::size_t threads = 1) {
    if (fold.records.empty()) throw data_error("oa: empty tuning fold");
    if (reps < 1) throw data_error("oa: reps must be >= 1");
    if (checkpoints.empty()) throw data_error("oa: need at least one checkpoint");

    const std::size_t n_tries = design.rows.size();
    std::vector<SsoParams> try_params(n_tries);
    for (std::size_t t = 0; t < n_tries; ++t) {
        try_params[t] = params_for_try(design.rows[t], fold.n_att, base, levels);
        try_params[t].n_gen = checkpoints.back();
    }

    std::vector<std::vector<TrainedModel>> runs(n_tries);
    for (auto& r : runs) r.resize(reps);
    parallel_for(n_tries * reps, threads, [&](std::size_t job) {
        const std::size_t t = job / reps;
        const std::size_t r = job % reps;
        runs[t][r] = train(fold, try_params[t], derive_seed(seed, t, r), checkpoints);
    });

    std::vector<TryStats> stats(n_tries);
    for (std::size_t t = 0; t < n_tries; ++t) {
        stats[t].try_id = t + 1;
        stats[t].params = try_params[t];
        for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
            TryCheckpoint cp;
            cp.generation = checkpoints[ci];
            double phi = -1.0;
            for (std::size_t r = 0; r < reps; ++r)
                phi = std::max(phi, runs[t][r].checkpoints[ci].phi);
            cp.phi = phi;
            cp.g_earliest = std::numeric_limits<std::size_t>::max();
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& snap = runs[t][r].checkpoints[ci];
                cp.t_seconds += snap.seconds;
                cp.cost += static_cast<double>(snap.evals);
                if (snap.phi != phi) continue;
                ++cp.n_best;
                if (snap.earliest_gen < cp.g_earliest) {
                    cp.g_earliest = snap.earliest_gen;
                    cp.f_depth = snap.depth;
                }
            }
            stats[t].checkpoints.push_back(cp);
        }
    }
    return stats;
}

// Index (into the checkpoint list) of the earliest checkpoint already at the
// try's fitness level at `upto`; the generation budget the try really needed.
inline std::size_t effective_checkpoint(const TryStats& t, std::size_t upto) {
    for (std::size_t j = 0; j <= upto; ++j)
        if (t.checkpoints[j].phi == t.checkpoints[upto].phi) return j;
    return upto;
}

// Rule 2 only discriminates when the shortest runtime wins by a wide margin;
// anything within the factor below is treated as a runtime tie and passed on
// to Rule 3.
inline constexpr double kRule2GapFactor = 1.5;

// Rule 1: highest accuracy at the target checkpoint. Rule 2: shortest runtime
// (taken at each survivor's effective checkpoint), decisive only with a big
// gap. Rule 3: most repetitions attaining the best fitness. Residual ties
// fall to the lowest try index. Returns an index into `stats`. Runtime here
// is the `cost` field so the decision is seed-reproducible.
inline std::size_t select_best_try(const std::vector<TryStats>& stats,
                                   std::size_t checkpoint_index) {
    if (stats.empty()) throw data_error("oa: no stats to select from");
    for (const auto& t : stats)
        if (checkpoint_index >= t.checkpoints.size())
            throw data_error("oa: checkpoint index out of range");

    double best_phi = -1.0;
    for (const auto& t : stats)
        best_phi = std::max(best_phi, t.checkpoints[checkpoint_index].phi);
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < stats.size(); ++i)
        if (stats[i].checkpoints[checkpoint_index].phi == best_phi) survivors.push_back(i);
    if (survivors.size() == 1) return survivors.front();

    auto runtime_of = [&](std::size_t i) {
        const auto eff = effective_checkpoint(stats[i], checkpoint_index);
        return stats[i].checkpoints[eff].cost;
    };
    double t_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : survivors) t_min = std::min(t_min, runtime_of(i));
    std::vector<std::size_t> near;
    for (std::size_t i : survivors)
        if (runtime_of(i) < kRule2GapFactor * t_min) near.push_back(i);
    if (near.size() == 1) return near.front();

    std::size_t best = near.front();
    auto n_best_of = [&](std::size_t i) {
        return stats[i].checkpoints[effective_checkpoint(stats[i], checkpoint_index)].n_best;
    };
    for (std::size_t i : near)
        if (n_best_of(i) > n_best_of(best)) best = i;
    return best;
}

}  // namespace csvm
