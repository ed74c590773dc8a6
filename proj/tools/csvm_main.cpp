// csvm command line: OA tuning, the k-fold experiment, the SVM baseline, and
// offline application of saved filter banks.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "csvm/experiment.hpp"

namespace {

struct CommonOpts {
    std::string dataset;
    std::string format = "sparse";
    std::optional<std::size_t> label_column;
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    std::string mode = "transductive";
    std::size_t threads = csvm::default_threads();
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_folds = true) {
    cmd->add_option("--dataset", o.dataset, "Path to the dataset file")->required();
    cmd->add_option("--format", o.format, "Input format: sparse|csv")
        ->check(CLI::IsMember({"sparse", "csv", "libsvm", "sparse-index"}));
    cmd->add_option("--label-column", o.label_column,
                    "CSV label column (0-based; default: last)");
    if (with_folds) cmd->add_option("--folds", o.folds, "Fold count k");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--mode", o.mode, "Evaluation mode")
        ->check(CLI::IsMember({"transductive", "holdout", "split"}));
    cmd->add_option("--threads", o.threads, "Worker threads");
}

csvm::Dataset load_normalized(const CommonOpts& o) {
    auto ds = csvm::parse_dataset_file(o.dataset, csvm::parse_format(o.format),
                                       o.label_column);
    return csvm::normalize(ds);
}

int cmd_tune(const CommonOpts& o, std::size_t reps,
             const std::vector<std::size_t>& checkpoints, std::size_t fold_index,
             const std::string& out_dir) {
    auto ds = load_normalized(o);
    if (fold_index < 1 || fold_index > o.folds)
        throw csvm::data_error("--fold-index must be in [1, folds]");
    auto plan = csvm::split_folds(ds, o.folds, o.seed);
    auto fold = csvm::fold_subset(ds, plan, fold_index - 1);

    csvm::SsoParams base;
    base.svm.kernel = csvm::KernelSpec::rbf_default(ds.n_att);
    base.svm.seed = csvm::derive_seed(o.seed, csvm::seed_stream::svm);
    base.fitness_mode = o.mode == "holdout" ? csvm::FitnessMode::holdout
                                            : csvm::FitnessMode::transductive;
    base.holdout_seed = csvm::derive_seed(o.seed, csvm::seed_stream::holdout);

    auto trials = csvm::run_trials(fold, csvm::build_l9(), csvm::LevelTable{}, base, reps,
                                   checkpoints, csvm::derive_seed(o.seed, csvm::seed_stream::tune),
                                   o.threads);
    const std::size_t last = checkpoints.size() - 1;
    const std::size_t sel = csvm::select_best_try(trials, last);
    const std::size_t eff = csvm::effective_checkpoint(trials[sel], last);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(std::filesystem::path(out_dir) / "trials.csv");
        csvm::write_trials_csv(trials, out);
    }
    {
        csvm::SsoParams params = trials[sel].params;
        params.n_gen = trials[sel].checkpoints[eff].generation;
        nlohmann::ordered_json j;
        j["selected_try"] = trials[sel].try_id;
        j["n_gen"] = params.n_gen;
        j["runtime_gap"] = csvm::detail::rule2_runtime_gap(trials, last);
        j["params"] = csvm::params_to_json(params);
        std::ofstream out(std::filesystem::path(out_dir) / "selected.json");
        out << j.dump(2) << '\n';
    }
    std::cout << "selected try " << trials[sel].try_id << " (n_filter="
              << trials[sel].params.n_filter << ", n_sol=" << trials[sel].params.n_sol
              << ", n_var=" << trials[sel].params.n_var << ", n_gen="
              << trials[sel].checkpoints[eff].generation << ")\n"
              << "wrote " << out_dir << "/trials.csv and " << out_dir << "/selected.json\n";
    return 0;
}

int cmd_run(const CommonOpts& o, std::size_t reps, const std::vector<std::size_t>& checkpoints,
            const std::string& params_file, std::size_t tune_reps,
            const std::vector<std::size_t>& tune_checkpoints, std::size_t tune_fold,
            const std::string& out_dir, const std::string& emit,
            const std::string& models_dir) {
    csvm::ExperimentConfig cfg;
    cfg.dataset_path = o.dataset;
    cfg.format = csvm::parse_format(o.format);
    cfg.label_column = o.label_column;
    cfg.folds = o.folds;
    cfg.reps = reps;
    cfg.checkpoints = checkpoints;
    cfg.seed = o.seed;
    cfg.mode = csvm::parse_eval_mode(o.mode);
    cfg.threads = o.threads;
    cfg.tune_reps = tune_reps;
    cfg.tune_checkpoints = tune_checkpoints;
    cfg.models_dir = models_dir;
    if (tune_fold < 1 || tune_fold > o.folds)
        throw csvm::data_error("--tune-fold must be in [1, folds]");
    cfg.tune_fold = tune_fold - 1;
    if (!params_file.empty()) {
        std::ifstream in(params_file);
        if (!in) throw csvm::data_error("cannot open params file '" + params_file + "'");
        nlohmann::json j;
        in >> j;
        cfg.explicit_params =
            csvm::params_from_json(j.contains("params") ? j.at("params") : j);
    }

    auto report = csvm::run_experiment(cfg);
    auto written = csvm::emit_report(report, csvm::parse_emit_format(emit), out_dir);

    if (report.tuning)
        std::cout << "tuned parameters from try " << report.tuning->selected_try_id
                  << " (n_gen=" << report.tuning->n_gen << ", runtime gap "
                  << report.tuning->runtime_gap << ")\n";
    for (const auto& f : report.fold_reports) {
        std::cout << "fold " << f.fold << ": svm=" << 100.0 * f.f_svm;
        for (const auto& s : f.checkpoints)
            std::cout << " f" << s.generation << "=" << 100.0 * s.fitness.max;
        std::cout << '\n';
    }
    for (const auto& w : written) std::cout << "wrote " << w << '\n';
    return 0;
}

int cmd_baseline(const CommonOpts& o, const std::string& out_file,
                 const std::string& models_dir) {
    auto ds = load_normalized(o);
    auto plan = csvm::split_folds(ds, o.folds, o.seed);

    csvm::SsoParams params;
    params.svm.kernel = csvm::KernelSpec::rbf_default(ds.n_att);
    params.svm.seed = csvm::derive_seed(o.seed, csvm::seed_stream::svm);
    params.fitness_mode = o.mode == "holdout" ? csvm::FitnessMode::holdout
                                              : csvm::FitnessMode::transductive;
    params.holdout_seed = csvm::derive_seed(o.seed, csvm::seed_stream::holdout);
    const auto mode = csvm::parse_eval_mode(o.mode);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file);
        if (!file) throw csvm::data_error("cannot write '" + out_file + "'");
        out = &file;
    }
    *out << "fold,accuracy\n";
    for (std::size_t j = 0; j < o.folds; ++j) {
        auto fold = csvm::fold_subset(ds, plan, j);
        double acc;
        csvm::SvmModel model;
        if (mode == csvm::EvalMode::split) {
            model = csvm::train_svc(csvm::fold_complement(ds, plan, j), params.svm);
            acc = csvm::accuracy(model, fold);
        } else {
            model = csvm::train_svc(fold, params.svm);
            acc = csvm::baseline_svm(fold, params);
        }
        *out << j + 1 << ',' << 100.0 * acc << '\n';
        if (!models_dir.empty()) {
            std::filesystem::create_directories(models_dir);
            csvm::save_model(model, (std::filesystem::path(models_dir) /
                                     ("fold_" + std::to_string(j + 1) + ".svm.json"))
                                        .string());
        }
    }
    return 0;
}

int cmd_transform(const CommonOpts& o, const std::string& bank_file,
                  std::optional<std::size_t> depth, bool raw, const std::string& out_file) {
    auto ds = raw ? csvm::parse_dataset_file(o.dataset, csvm::parse_format(o.format),
                                             o.label_column)
                  : load_normalized(o);
    auto bank = csvm::load_bank(bank_file);
    auto transformed =
        csvm::transform_dataset(ds, bank, depth.value_or(bank.n_filter()));
    if (out_file.empty()) {
        csvm::write_csv(transformed, std::cout);
    } else {
        std::ofstream out(out_file);
        if (!out) throw csvm::data_error("cannot write '" + out_file + "'");
        csvm::write_csv(transformed, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convolutional SVM: repeated-attribute convolution features trained by "
                 "greedy swarm search with an SVM fitness"};
    app.require_subcommand(1);

    CommonOpts tune_o, run_o, base_o, tr_o;
    std::size_t tune_reps = 15, run_reps = 15;
    std::vector<std::size_t> tune_cps = {25, 50, 75};
    std::vector<std::size_t> run_cps = {25, 50, 75, 100};
    std::vector<std::size_t> run_tune_cps = {25, 50, 75};
    std::size_t tune_fold = 1, run_tune_fold = 1, run_tune_reps = 15;
    std::string tune_out = "tune_out", run_out = "run_out", run_params, run_emit = "both";
    std::string run_models, base_out, base_models, tr_bank, tr_out;
    std::optional<std::size_t> tr_depth;
    bool tr_raw = false;

    auto* tune = app.add_subcommand("tune", "Small-sample orthogonal-array parameter search");
    add_common(tune, tune_o);
    tune->add_option("--reps", tune_reps, "Repetitions per try");
    tune->add_option("--checkpoints", tune_cps, "Generation checkpoints")->delimiter(',');
    tune->add_option("--fold-index", tune_fold, "1-based fold used for tuning");
    tune->add_option("--out", tune_out, "Output directory");

    auto* run = app.add_subcommand("run", "Two-phase experiment: tune, then k-fold runs");
    add_common(run, run_o);
    run->add_option("--reps", run_reps, "Repetitions per fold");
    run->add_option("--checkpoints", run_cps, "Generation checkpoints")->delimiter(',');
    run->add_option("--params", run_params, "Parameter file (skips the tuning phase)");
    run->add_option("--tune-reps", run_tune_reps, "Tuning repetitions per try");
    run->add_option("--tune-checkpoints", run_tune_cps, "Tuning checkpoints")->delimiter(',');
    run->add_option("--tune-fold", run_tune_fold, "1-based fold used for tuning");
    run->add_option("--out", run_out, "Output directory");
    run->add_option("--emit", run_emit, "Report format")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    run->add_option("--save-models", run_models,
                    "Directory for the trained per-repetition models");

    auto* baseline = app.add_subcommand("baseline", "Default-SVM accuracy per fold");
    add_common(baseline, base_o);
    baseline->add_option("--out", base_out, "Output CSV (default: stdout)");
    baseline->add_option("--save-models", base_models, "Directory for per-fold SVM models");

    auto* transform = app.add_subcommand("transform", "Apply a saved filter bank");
    add_common(transform, tr_o, /*with_folds=*/false);
    transform->add_option("--bank", tr_bank, "Filter bank JSON")->required();
    transform->add_option("--depth", tr_depth, "Prefix depth (default: all filters)");
    transform->add_flag("--raw", tr_raw, "Skip normalization before transforming");
    transform->add_option("--out", tr_out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (tune->parsed()) return cmd_tune(tune_o, tune_reps, tune_cps, tune_fold, tune_out);
        if (run->parsed())
            return cmd_run(run_o, run_reps, run_cps, run_params, run_tune_reps, run_tune_cps,
                           run_tune_fold, run_out, run_emit, run_models);
        if (baseline->parsed()) return cmd_baseline(base_o, base_out, base_models);
        if (transform->parsed())
            return cmd_transform(tr_o, tr_bank, tr_depth, tr_raw, tr_out);
    } catch (const csvm::parse_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const csvm::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
