#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csvm/dataset.hpp"
#include "csvm/oa.hpp"
#include "csvm/parallel.hpp"
#include "csvm/sso.hpp"
#include "csvm/svm.hpp"

#include "json.hpp"

namespace csvm {

// transductive/holdout mirror the fitness modes on self-contained folds;
// split trains on the other k-1 folds and scores the held-out fold.
enum class EvalMode { transductive, holdout, split };

inline EvalMode parse_eval_mode(const std::string& s) {
    if (s == "transductive") return EvalMode::transductive;
    if (s == "holdout") return EvalMode::holdout;
    if (s == "split") return EvalMode::split;
    throw data_error("unknown mode '" + s + "' (expected transductive|holdout|split)");
}

inline std::string to_string(EvalMode m) {
    switch (m) {
        case EvalMode::transductive: return "transductive";
        case EvalMode::holdout: return "holdout";
        case EvalMode::split: return "split";
    }
    return {};
}

struct Summary {
    double avg = 0.0, max = 0.0, min = 0.0, stdev = 0.0;

    bool operator==(const Summary&) const = default;
};

// Mean, extrema and sample standard deviation (n-1 denominator).
inline Summary summarize(std::span<const double> samples) {
    if (samples.empty()) throw data_error("summarize: empty input");
    Summary s;
    s.min = s.max = samples[0];
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.avg = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - s.avg) * (v - s.avg);
        s.stdev = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    }
    return s;
}

struct MpiValue {
    double value = 0.0;
    bool starred = false;  // baseline already perfect; ratio undefined

    bool operator==(const MpiValue&) const = default;
};

struct MpiPair {
    MpiValue avg, max;

    bool operator==(const MpiPair&) const = default;
};

// Maximum possible improvement, in percent: 100*(fitness - F_svm)/(1 - F_svm).
// A baseline of 1 yields the starred marker instead of a value.
inline MpiPair mpi_metrics(double f_svm, double avg_fitness, double max_fitness) {
    if (f_svm < 0.0 || f_svm > 1.0) throw data_error("mpi: baseline outside [0,1]");
    MpiPair out;
    if (f_svm == 1.0) {
        out.avg.starred = out.max.starred = true;
        return out;
    }
    out.avg.value = 100.0 * (avg_fitness - f_svm) / (1.0 - f_svm);
    out.max.value = 100.0 * (max_fitness - f_svm) / (1.0 - f_svm);
    return out;
}

// Depth-0 fitness: the untransformed fold scored mode-consistently.
inline double baseline_svm(const Dataset& fold, const SsoParams& params) {
    return fitness(FilterBank{}, 0, fold, params);
}

struct ExperimentConfig {
    std::string dataset_path;
    DataFormat format = DataFormat::sparse_index;
    std::optional<std::size_t> label_column;
    std::string dataset_name;  // defaults to file name
    std::size_t folds = 10;
    std::size_t reps = 15;
    std::vector<std::size_t> checkpoints = {25, 50, 75, 100};
    std::uint64_t seed = 1;
    EvalMode mode = EvalMode::transductive;
    SvmConfig svm;
    bool default_kernel = true;  // rbf with 2*sigma^2 = n_att
    std::optional<SsoParams> explicit_params;
    std::size_t tune_fold = 0;  // 0-based k*
    std::size_t tune_reps = 15;
    std::vector<std::size_t> tune_checkpoints = {25, 50, 75};
    std::size_t threads = 1;
    std::string models_dir;  // when set, every trained model is saved there

    void validate() const {
        if (checkpoints.empty()) throw data_error("config: checkpoints must be nonempty");
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (checkpoints[i] <= checkpoints[i - 1])
                throw data_error("config: checkpoints must be ascending");
        if (folds < 2) throw data_error("config: need at least 2 folds");
        if (reps < 1) throw data_error("config: reps must be >= 1");
        if (tune_fold >= folds) throw data_error("config: tune fold out of range");
    }
};

struct FoldCheckpointStat {
    std::size_t generation = 0;
    Summary fitness;
    MpiValue mpi_avg, mpi_max;
    std::vector<double> samples;  // per repetition

    bool operator==(const FoldCheckpointStat&) const = default;
};

struct FoldReport {
    std::size_t fold = 0;  // 1-based
    double f_svm = 0.0;
    std::vector<FoldCheckpointStat> checkpoints;
    double wall_seconds = 0.0;

    bool operator==(const FoldReport&) const = default;
};

struct TuneReport {
    std::vector<TryStats> trials;
    std::size_t selected_index = 0;  // into trials
    std::size_t selected_try_id = 1;
    std::size_t n_gen = 0;      // generation budget the winner actually needed
    double runtime_gap = 0.0;   // min vs next runtime among accuracy-tied tries
};

struct RunReport {
    std::string dataset;
    std::size_t n_records = 0;
    std::size_t n_att = 0;
    std::size_t folds = 0;
    std::size_t reps = 0;
    std::vector<std::size_t> checkpoints;
    std::uint64_t seed = 0;
    EvalMode mode = EvalMode::transductive;
    SsoParams params;
    std::optional<TuneReport> tuning;
    std::vector<FoldReport> fold_reports;
    double wall_seconds = 0.0;
};

namespace detail {

// Ratio between the shortest and second-shortest runtime cost among the tries
// tied on accuracy; informational output for the Rule 2 judgment.
inline double rule2_runtime_gap(const std::vector<TryStats>& stats, std::size_t cp) {
    double best_phi = -1.0;
    for (const auto& t : stats) best_phi = std::max(best_phi, t.checkpoints[cp].phi);
    std::vector<double> runtimes;
    for (const auto& t : stats)
        if (t.checkpoints[cp].phi == best_phi)
            runtimes.push_back(t.checkpoints[effective_checkpoint(t, cp)].cost);
    if (runtimes.size() < 2) return 0.0;
    std::sort(runtimes.begin(), runtimes.end());
    return runtimes[0] > 0.0 ? runtimes[1] / runtimes[0] : 0.0;
}

inline double checkpoint_sample(const CheckpointSnapshot& snap, EvalMode mode,
                                const Dataset& train_data, const Dataset& eval_fold,
                                const SsoParams& params) {
    if (mode != EvalMode::split) return snap.phi;
    const std::size_t depth = snap.bank.n_filter();
    SvmModel m = train_svc(transform_dataset(train_data, snap.bank, depth), params.svm);
    return accuracy(m, transform_dataset(eval_fold, snap.bank, depth));
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Dataset raw = parse_dataset_file(config.dataset_path, config.format, config.label_column,
                                     config.dataset_name);
    Dataset ds = normalize(raw);
    if (!ds.has_both_labels()) throw data_error("experiment: dataset has a single class");

    SvmConfig svm = config.svm;
    if (config.default_kernel) svm.kernel = KernelSpec::rbf_default(ds.n_att);
    svm.seed = derive_seed(config.seed, seed_stream::svm);

    const FoldPlan plan = split_folds(ds, config.folds, config.seed);

    SsoParams base;
    base.svm = svm;
    base.fitness_mode =
        config.mode == EvalMode::holdout ? FitnessMode::holdout : FitnessMode::transductive;
    base.holdout_seed = derive_seed(config.seed, seed_stream::holdout);

    RunReport report;
    report.dataset = ds.name;
    report.n_records = ds.size();
    report.n_att = ds.n_att;
    report.folds = config.folds;
    report.reps = config.reps;
    report.checkpoints = config.checkpoints;
    report.seed = config.seed;
    report.mode = config.mode;

    SsoParams params;
    if (config.explicit_params) {
        params = *config.explicit_params;
        params.svm = svm;
        params.fitness_mode = base.fitness_mode;
        params.holdout_seed = base.holdout_seed;
        if (params.n_var > ds.n_att)
            throw data_error("params: n_var exceeds attribute count");
    } else {
        Dataset tune_ds = fold_subset(ds, plan, config.tune_fold);
        auto trials =
            run_trials(tune_ds, build_l9(), LevelTable{}, base, config.tune_reps,
                       config.tune_checkpoints, derive_seed(config.seed, seed_stream::tune),
                       config.threads);
        const std::size_t last = config.tune_checkpoints.size() - 1;
        TuneReport tune;
        tune.selected_index = select_best_try(trials, last);
        tune.selected_try_id = trials[tune.selected_index].try_id;
        const auto eff = effective_checkpoint(trials[tune.selected_index], last);
        tune.n_gen = trials[tune.selected_index].checkpoints[eff].generation;
        tune.runtime_gap = detail::rule2_runtime_gap(trials, last);
        params = trials[tune.selected_index].params;
        tune.trials = std::move(trials);
        report.tuning = std::move(tune);
    }
    params.n_gen = config.checkpoints.back();
    report.params = params;

    // Phase 2: every fold, `reps` independent trainings with derived seeds.
    const std::size_t n_jobs = config.folds * config.reps;
    std::vector<std::vector<double>> samples(n_jobs);  // per checkpoint
    std::vector<Dataset> train_sets(config.folds), eval_folds(config.folds);
    for (std::size_t j = 0; j < config.folds; ++j) {
        eval_folds[j] = fold_subset(ds, plan, j);
        train_sets[j] = config.mode == EvalMode::split ? fold_complement(ds, plan, j)
                                                       : eval_folds[j];
    }
    if (!config.models_dir.empty())
        std::filesystem::create_directories(config.models_dir);
    std::vector<double> job_seconds(n_jobs, 0.0);
    parallel_for(n_jobs, config.threads, [&](std::size_t job) {
        const std::size_t fold = job / config.reps;
        const std::size_t rep = job % config.reps;
        TrainedModel model = train(train_sets[fold], params,
                                   derive_seed(config.seed, 100 + fold, rep),
                                   config.checkpoints);
        for (const auto& snap : model.checkpoints)
            samples[job].push_back(detail::checkpoint_sample(snap, config.mode,
                                                             train_sets[fold],
                                                             eval_folds[fold], params));
        job_seconds[job] = model.seconds;
        if (!config.models_dir.empty()) {
            const auto name = "fold_" + std::to_string(fold + 1) + "_rep_" +
                              std::to_string(rep + 1) + ".model.json";
            save_trained_model(model,
                               (std::filesystem::path(config.models_dir) / name).string());
        }
    });

    for (std::size_t fold = 0; fold < config.folds; ++fold) {
        FoldReport fr;
        fr.fold = fold + 1;
        if (config.mode == EvalMode::split) {
            SvmModel m = train_svc(train_sets[fold], params.svm);
            fr.f_svm = accuracy(m, eval_folds[fold]);
        } else {
            fr.f_svm = baseline_svm(eval_folds[fold], params);
        }
        for (std::size_t ci = 0; ci < config.checkpoints.size(); ++ci) {
            FoldCheckpointStat stat;
            stat.generation = config.checkpoints[ci];
            for (std::size_t rep = 0; rep < config.reps; ++rep)
                stat.samples.push_back(samples[fold * config.reps + rep][ci]);
            stat.fitness = summarize(stat.samples);
            const MpiPair mpi = mpi_metrics(fr.f_svm, stat.fitness.avg, stat.fitness.max);
            stat.mpi_avg = mpi.avg;
            stat.mpi_max = mpi.max;
            fr.checkpoints.push_back(std::move(stat));
        }
        for (std::size_t rep = 0; rep < config.reps; ++rep)
            fr.wall_seconds += job_seconds[fold * config.reps + rep];
        report.fold_reports.push_back(std::move(fr));
    }

    report.wall_seconds = elapsed();
    return report;
}

// --- serialization --------------------------------------------------------

inline nlohmann::ordered_json params_to_json(const SsoParams& p) {
    nlohmann::ordered_json j;
    j["c"] = p.c;
    j["n_sol"] = p.n_sol;
    j["n_filter"] = p.n_filter;
    j["n_var"] = p.n_var;
    j["n_gen"] = p.n_gen;
    j["bound"] = p.bound;
    j["step_scale"] = p.step_scale;
    j["step_low"] = p.step_low;
    j["step_high"] = p.step_high;
    j["svm"] = {{"kernel", kernel_to_json(p.svm.kernel)},
                {"c", p.svm.c},
                {"tol", p.svm.tol},
                {"max_passes", p.svm.max_passes},
                {"seed", p.svm.seed}};
    j["fitness_mode"] = p.fitness_mode == FitnessMode::holdout ? "holdout" : "transductive";
    j["holdout_seed"] = p.holdout_seed;
    return j;
}

inline SsoParams params_from_json(const nlohmann::json& j) {
    SsoParams p;
    p.c = j.at("c");
    p.n_sol = j.at("n_sol");
    p.n_filter = j.at("n_filter");
    p.n_var = j.at("n_var");
    p.n_gen = j.at("n_gen");
    p.bound = j.value("bound", kWeightBound);
    p.step_scale = j.value("step_scale", 0.05);
    p.step_low = j.value("step_low", -0.01);
    p.step_high = j.value("step_high", 0.04);
    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        p.svm.kernel = kernel_from_json(s.at("kernel"));
        p.svm.c = s.at("c");
        p.svm.tol = s.at("tol");
        p.svm.max_passes = s.at("max_passes");
        p.svm.seed = s.at("seed");
    }
    p.fitness_mode = parse_fitness_mode(j.value("fitness_mode", "transductive"));
    p.holdout_seed = j.value("holdout_seed", std::uint64_t{0});
    p.validate();
    return p;
}

inline nlohmann::ordered_json try_stats_to_json(const TryStats& t) {
    nlohmann::ordered_json j;
    j["try"] = t.try_id;
    j["params"] = params_to_json(t.params);
    auto cps = nlohmann::ordered_json::array();
    for (const auto& cp : t.checkpoints)
        cps.push_back({{"generation", cp.generation},
                       {"phi", cp.phi},
                       {"t_seconds", cp.t_seconds},
                       {"cost", cp.cost},
                       {"g_earliest", cp.g_earliest},
                       {"f_depth", cp.f_depth},
                       {"n_best", cp.n_best}});
    j["checkpoints"] = std::move(cps);
    return j;
}

inline TryStats try_stats_from_json(const nlohmann::json& j) {
    TryStats t;
    t.try_id = j.at("try");
    t.params = params_from_json(j.at("params"));
    for (const auto& c : j.at("checkpoints")) {
        TryCheckpoint cp;
        cp.generation = c.at("generation");
        cp.phi = c.at("phi");
        cp.t_seconds = c.at("t_seconds");
        cp.cost = c.at("cost");
        cp.g_earliest = c.at("g_earliest");
        cp.f_depth = c.at("f_depth");
        cp.n_best = c.at("n_best");
        t.checkpoints.push_back(cp);
    }
    return t;
}

inline nlohmann::ordered_json mpi_to_json(const MpiValue& m) {
    if (m.starred) return nullptr;
    return m.value;
}

inline MpiValue mpi_from_json(const nlohmann::json& j) {
    MpiValue m;
    if (j.is_null())
        m.starred = true;
    else
        m.value = j.get<double>();
    return m;
}

inline nlohmann::ordered_json report_to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset;
    j["n_records"] = r.n_records;
    j["n_att"] = r.n_att;
    j["folds"] = r.folds;
    j["reps"] = r.reps;
    j["checkpoints"] = r.checkpoints;
    j["seed"] = r.seed;
    j["mode"] = to_string(r.mode);
    j["params"] = params_to_json(r.params);
    if (r.tuning) {
        nlohmann::ordered_json t;
        t["selected_try"] = r.tuning->selected_try_id;
        t["selected_index"] = r.tuning->selected_index;
        t["n_gen"] = r.tuning->n_gen;
        t["runtime_gap"] = r.tuning->runtime_gap;
        auto trials = nlohmann::ordered_json::array();
        for (const auto& s : r.tuning->trials) trials.push_back(try_stats_to_json(s));
        t["trials"] = std::move(trials);
        j["tuning"] = std::move(t);
    } else {
        j["tuning"] = nullptr;
    }
    auto folds = nlohmann::ordered_json::array();
    for (const auto& f : r.fold_reports) {
        nlohmann::ordered_json fj;
        fj["fold"] = f.fold;
        fj["f_svm"] = f.f_svm;
        fj["wall_seconds"] = f.wall_seconds;
        auto cps = nlohmann::ordered_json::array();
        for (const auto& s : f.checkpoints)
            cps.push_back({{"generation", s.generation},
                           {"avg", s.fitness.avg},
                           {"max", s.fitness.max},
                           {"min", s.fitness.min},
                           {"stdev", s.fitness.stdev},
                           {"mpi_avg", mpi_to_json(s.mpi_avg)},
                           {"mpi_max", mpi_to_json(s.mpi_max)},
                           {"samples", s.samples}});
        fj["checkpoints"] = std::move(cps);
        folds.push_back(std::move(fj));
    }
    j["folds_reports"] = std::move(folds);
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.dataset = j.at("dataset");
    r.n_records = j.at("n_records");
    r.n_att = j.at("n_att");
    r.folds = j.at("folds");
    r.reps = j.at("reps");
    r.checkpoints = j.at("checkpoints").get<std::vector<std::size_t>>();
    r.seed = j.at("seed");
    r.mode = parse_eval_mode(j.at("mode"));
    r.params = params_from_json(j.at("params"));
    if (!j.at("tuning").is_null()) {
        const auto& t = j.at("tuning");
        TuneReport tune;
        tune.selected_try_id = t.at("selected_try");
        tune.selected_index = t.at("selected_index");
        tune.n_gen = t.at("n_gen");
        tune.runtime_gap = t.at("runtime_gap");
        for (const auto& s : t.at("trials")) tune.trials.push_back(try_stats_from_json(s));
        r.tuning = std::move(tune);
    }
    for (const auto& fj : j.at("folds_reports")) {
        FoldReport f;
        f.fold = fj.at("fold");
        f.f_svm = fj.at("f_svm");
        f.wall_seconds = fj.at("wall_seconds");
        for (const auto& c : fj.at("checkpoints")) {
            FoldCheckpointStat s;
            s.generation = c.at("generation");
            s.fitness.avg = c.at("avg");
            s.fitness.max = c.at("max");
            s.fitness.min = c.at("min");
            s.fitness.stdev = c.at("stdev");
            s.mpi_avg = mpi_from_json(c.at("mpi_avg"));
            s.mpi_max = mpi_from_json(c.at("mpi_max"));
            s.samples = c.at("samples").get<std::vector<double>>();
            f.checkpoints.push_back(std::move(s));
        }
        r.fold_reports.push_back(std::move(f));
    }
    r.wall_seconds = j.at("wall_seconds");
    return r;
}

// Zeros every wall-clock field in a serialized report, for comparisons that
// ignore timing.
inline void strip_timing(nlohmann::ordered_json& j) {
    if (j.is_object()) {
        for (auto& [key, val] : j.items()) {
            if (key == "wall_seconds" || key == "t_seconds" || key == "seconds")
                val = 0.0;
            else
                strip_timing(val);
        }
    } else if (j.is_array()) {
        for (auto& v : j) strip_timing(v);
    }
}

enum class EmitFormat { csv, json, both };

inline EmitFormat parse_emit_format(const std::string& s) {
    if (s == "csv") return EmitFormat::csv;
    if (s == "json") return EmitFormat::json;
    if (s == "both") return EmitFormat::both;
    throw data_error("unknown emit format '" + s + "'");
}

namespace detail {

inline std::string fmt_full(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Wide per-fold statistics CSV: one AVG/MAX/MIN/STDEV row per fold, baseline in
// the svm column, percentages.
inline void write_fold_stats_csv(const RunReport& r, std::ostream& out) {
    out << "fold,index,svm";
    for (std::size_t g : r.checkpoints) out << ",f" << g;
    out << '\n';
    static constexpr const char* rows[4] = {"AVG", "MAX", "MIN", "STDEV"};
    for (const auto& f : r.fold_reports) {
        for (int k = 0; k < 4; ++k) {
            out << f.fold << ',' << rows[k] << ','
                << detail::fmt_full(k == 3 ? 0.0 : 100.0 * f.f_svm);
            for (const auto& s : f.checkpoints) {
                const double v = k == 0   ? s.fitness.avg
                                 : k == 1 ? s.fitness.max
                                 : k == 2 ? s.fitness.min
                                          : s.fitness.stdev;
                out << ',' << detail::fmt_full(100.0 * v);
            }
            out << '\n';
        }
    }
}

// Long-format CSV feeding boxplots: one row per (fold, checkpoint, rep)
// sample plus one baseline row per fold at checkpoint 0.
inline void write_samples_csv(const RunReport& r, std::ostream& out) {
    out << "fold,checkpoint,repetition,fitness\n";
    for (const auto& f : r.fold_reports) {
        out << f.fold << ",0,0," << detail::fmt_full(100.0 * f.f_svm) << '\n';
        for (const auto& s : f.checkpoints)
            for (std::size_t rep = 0; rep < s.samples.size(); ++rep)
                out << f.fold << ',' << s.generation << ',' << rep + 1 << ','
                    << detail::fmt_full(100.0 * s.samples[rep]) << '\n';
    }
}

inline void write_mpi_csv(const RunReport& r, std::ostream& out) {
    out << "fold,checkpoint,mpi_avg,mpi_max\n";
    for (const auto& f : r.fold_reports)
        for (const auto& s : f.checkpoints) {
            out << f.fold << ',' << s.generation << ',';
            out << (s.mpi_avg.starred ? "*" : detail::fmt_full(s.mpi_avg.value)) << ',';
            out << (s.mpi_max.starred ? "*" : detail::fmt_full(s.mpi_max.value)) << '\n';
        }
}

// Tuning CSV: per try and checkpoint the wall runtime, deterministic cost,
// earliest generation, depth, repetition count at the best fitness, 100*phi.
inline void write_trials_csv(const std::vector<TryStats>& trials, std::ostream& out) {
    out << "try";
    if (!trials.empty())
        for (const auto& cp : trials.front().checkpoints) {
            const auto g = std::to_string(cp.generation);
            out << ",t" << g << ",cost" << g << ",g" << g << ",f" << g << ",n" << g << ",phi"
                << g;
        }
    out << '\n';
    for (const auto& t : trials) {
        out << t.try_id;
        for (const auto& cp : t.checkpoints)
            out << ',' << detail::fmt_full(cp.t_seconds) << ',' << detail::fmt_full(cp.cost)
                << ',' << cp.g_earliest << ',' << cp.f_depth << ',' << cp.n_best << ','
                << detail::fmt_full(100.0 * cp.phi);
        out << '\n';
    }
}

inline std::vector<std::string> emit_report(const RunReport& r, EmitFormat format,
                                            const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream out(path);
        if (!out) throw data_error("cannot write report file '" + path + "'");
        written.push_back(path);
        return out;
    };
    if (format != EmitFormat::csv) {
        auto out = open("report.json");
        out << report_to_json(r).dump(2) << '\n';
    }
    if (format != EmitFormat::json) {
        {
            auto out = open("fold_stats.csv");
            write_fold_stats_csv(r, out);
        }
        {
            auto out = open("samples.csv");
            write_samples_csv(r, out);
        }
        {
            auto out = open("mpi.csv");
            write_mpi_csv(r, out);
        }
        if (r.tuning) {
            auto out = open("trials.csv");
            write_trials_csv(r.tuning->trials, out);
        }
    }
    return written;
}

}  // namespace csvm
