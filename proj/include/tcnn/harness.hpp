#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcnn/splits.hpp"
#include "tcnn/trainer.hpp"
#include "tcnn/weights_io.hpp"

namespace tcnn {

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

inline std::string pct(double fraction) { return fmt("%.2f", 100.0 * fraction); }

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot open " + path);
    return out;
}

}  // namespace detail

// One trained split with its three evaluations.
template <typename T>
struct ExperimentRun {
    std::string name;
    TrainOutcome<T> outcome;
    EvalBundle train_eval;
    EvalBundle val_eval;
    EvalBundle test_eval;
};

template <typename T>
ExperimentRun<T> run_experiment(const std::string& name, const SampleSet& train,
                                const SampleSet& validation, const SampleSet& test,
                                const ArchConfig& arch, const TrainConfig& cfg) {
    ExperimentRun<T> run;
    run.name = name;
    run.outcome = train_model<T>(train, validation, arch, cfg);
    run.train_eval = evaluate(run.outcome.model, run.outcome.standardizer, train, cfg.batch_size);
    run.val_eval = evaluate(run.outcome.model, run.outcome.standardizer, validation, cfg.batch_size);
    run.test_eval = evaluate(run.outcome.model, run.outcome.standardizer, test, cfg.batch_size);
    return run;
}

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    auto out = detail::open_out(path);
    out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy,val_mse\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        out << e + 1 << ',' << detail::fmt("%.6f", history[e].train_loss) << ','
            << detail::pct(history[e].train_accuracy) << ','
            << detail::fmt("%.6f", history[e].val_loss) << ','
            << detail::pct(history[e].val_accuracy) << ','
            << detail::fmt("%.6f", history[e].val_mse) << '\n';
}

inline void write_confusion_csv(const std::string& path, const Metrics& m) {
    auto out = detail::open_out(path);
    const auto name = [&](std::size_t k) {
        return m.classes == label_count ? std::string(label_name(static_cast<Label>(k)))
                                        : std::to_string(k);
    };
    out << "true\\predicted";
    for (std::size_t k = 0; k < m.classes; ++k) out << ',' << name(k);
    out << '\n';
    for (std::size_t i = 0; i < m.classes; ++i) {
        out << name(i);
        for (std::size_t j = 0; j < m.classes; ++j) out << ',' << m.count(i, j);
        out << '\n';
    }
}

// Standardizer + architecture sidecar, so saved weights stay usable on their
// own. Written as `<weights path>.meta.json`.
inline void write_model_meta(const std::string& weights_path, const ArchConfig& arch,
                             const Standardizer& st, const std::string& precision) {
    nlohmann::json j;
    j["arch"]["input_size"] = arch.input_size;
    j["arch"]["input_channels"] = arch.input_channels;
    j["arch"]["conv1_filters"] = arch.conv1_filters;
    j["arch"]["conv1_kernel"] = arch.conv1_kernel;
    j["arch"]["conv1_stride"] = arch.conv1_stride;
    j["arch"]["pool_window"] = arch.pool_window;
    j["arch"]["pool_stride"] = arch.pool_stride;
    j["arch"]["conv2_filters"] = arch.conv2_filters;
    j["arch"]["conv2_kernel"] = arch.conv2_kernel;
    j["arch"]["conv2_stride"] = arch.conv2_stride;
    j["arch"]["conv1_branch"] = arch.conv1_branch == Conv1Branch::energy ? "energy" : "global_max";
    j["arch"]["dense1_width"] = arch.dense1_width;
    j["arch"]["dense2_width"] = arch.dense2_width;
    j["arch"]["classes"] = arch.classes;
    j["standardizer"]["mean"] = st.mean;
    j["standardizer"]["stddev"] = st.stddev;
    j["precision"] = precision;
    j["labels"] = {"ND", "MC", "AC"};
    auto out = detail::open_out(weights_path + ".meta.json");
    out << j.dump(2) << '\n';
}

struct ModelMeta {
    ArchConfig arch;
    Standardizer standardizer;
    std::string precision = "f32";
};

inline ModelMeta read_model_meta(const std::string& weights_path) {
    std::ifstream in(weights_path + ".meta.json");
    if (!in) throw std::runtime_error("meta: cannot open " + weights_path + ".meta.json");
    nlohmann::json j;
    in >> j;
    ModelMeta meta;
    const auto& a = j.at("arch");
    meta.arch.input_size = a.at("input_size").get<std::size_t>();
    meta.arch.input_channels = a.at("input_channels").get<std::size_t>();
    meta.arch.conv1_filters = a.at("conv1_filters").get<std::size_t>();
    meta.arch.conv1_kernel = a.at("conv1_kernel").get<std::size_t>();
    meta.arch.conv1_stride = a.at("conv1_stride").get<std::size_t>();
    meta.arch.pool_window = a.at("pool_window").get<std::size_t>();
    meta.arch.pool_stride = a.at("pool_stride").get<std::size_t>();
    meta.arch.conv2_filters = a.at("conv2_filters").get<std::size_t>();
    meta.arch.conv2_kernel = a.at("conv2_kernel").get<std::size_t>();
    meta.arch.conv2_stride = a.at("conv2_stride").get<std::size_t>();
    meta.arch.conv1_branch = conv1_branch_from_string(a.at("conv1_branch").get<std::string>());
    meta.arch.dense1_width = a.at("dense1_width").get<std::size_t>();
    meta.arch.dense2_width = a.at("dense2_width").get<std::size_t>();
    meta.arch.classes = a.at("classes").get<std::size_t>();
    meta.standardizer.mean = j.at("standardizer").at("mean").get<double>();
    meta.standardizer.stddev = j.at("standardizer").at("stddev").get<double>();
    meta.precision = j.value("precision", "f32");
    return meta;
}

// ---- hold-out -------------------------------------------------------------

template <typename T>
ExperimentRun<T> run_holdout(const SampleSet& samples, const SplitResult& split,
                             const ArchConfig& arch, const TrainConfig& cfg,
                             const std::string& out_dir = "") {
    detail::assert_no_leakage(split);
    auto run = run_experiment<T>("holdout", subset_samples(samples, split.train),
                                 subset_samples(samples, split.validation),
                                 subset_samples(samples, split.test), arch, cfg);
    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        const auto base = fs::path(out_dir);

        auto csv = detail::open_out((base / "report.csv").string());
        csv << "split,stage,accuracy,loss,mse\n";
        const EvalBundle* evals[3] = {&run.train_eval, &run.val_eval, &run.test_eval};
        const char* stages[3] = {"train", "validation", "test"};
        for (int i = 0; i < 3; ++i)
            csv << "holdout," << stages[i] << ',' << detail::pct(evals[i]->patch.accuracy()) << ','
                << detail::fmt("%.6f", evals[i]->loss) << ',' << detail::fmt("%.6f", evals[i]->mse)
                << '\n';
        csv.close();

        auto txt = detail::open_out((base / "report.txt").string());
        txt << "hold-out evaluation, patch-level accuracy (%)\n\n";
        txt << "training  validation  test\n";
        txt << detail::pct(run.train_eval.patch.accuracy()) << "     "
            << detail::pct(run.val_eval.patch.accuracy()) << "       "
            << detail::pct(run.test_eval.patch.accuracy()) << '\n';
        txt << "\nimage-level test accuracy: " << detail::pct(run.test_eval.image.accuracy())
            << "%\n";
        txt << "epochs run: " << run.outcome.history.size()
            << ", best epoch: " << run.outcome.best_epoch + 1 << '\n';
        txt.close();

        write_history_csv((base / "history.csv").string(), run.outcome.history);
        write_confusion_csv((base / "confusion_test_patch.csv").string(), run.test_eval.patch);
        write_confusion_csv((base / "confusion_test_image.csv").string(), run.test_eval.image);
        save_weights(run.outcome.model, (base / "model.weights").string());
        write_model_meta((base / "model.weights").string(), arch, run.outcome.standardizer,
                         sizeof(T) == 4 ? "f32" : "f64");
    }
    return run;
}

template <typename T>
ExperimentRun<T> run_holdout(const SampleSet& samples, const ArchConfig& arch,
                             const TrainConfig& cfg, const SplitSpec& spec,
                             const std::string& out_dir = "") {
    return run_holdout<T>(samples, make_holdout(manifest_from_samples(samples), spec), arch, cfg,
                          out_dir);
}

// ---- 3-fold cross-validation ----------------------------------------------

template <typename T>
struct CvOutcome {
    std::vector<ExperimentRun<T>> folds;
    double mean_test_accuracy = 0.0;  // percent, patch level
    double std_test_accuracy = 0.0;   // sample standard deviation, percent
};

template <typename T>
CvOutcome<T> run_cv(const SampleSet& samples, const ArchConfig& arch, const TrainConfig& cfg,
                    const SplitSpec& spec, const std::string& out_dir = "") {
    const auto splits = make_folds(manifest_from_samples(samples), spec);
    CvOutcome<T> cv;
    for (int r = 0; r < 3; ++r) {
        const auto& split = splits[static_cast<std::size_t>(r)];
        cv.folds.push_back(run_experiment<T>("fold" + std::to_string(r + 1),
                                             subset_samples(samples, split.train),
                                             subset_samples(samples, split.validation),
                                             subset_samples(samples, split.test), arch, cfg));
    }

    double mean = 0.0;
    for (const auto& fold : cv.folds) mean += 100.0 * fold.test_eval.patch.accuracy();
    mean /= 3.0;
    double var = 0.0;
    for (const auto& fold : cv.folds) {
        const double d = 100.0 * fold.test_eval.patch.accuracy() - mean;
        var += d * d;
    }
    cv.mean_test_accuracy = mean;
    cv.std_test_accuracy = std::sqrt(var / 2.0);  // sample deviation across the three folds

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        const auto base = fs::path(out_dir);

        auto csv = detail::open_out((base / "report.csv").string());
        csv << "split,stage,accuracy,loss,mse\n";
        for (const auto& fold : cv.folds) {
            const EvalBundle* evals[3] = {&fold.train_eval, &fold.val_eval, &fold.test_eval};
            const char* stages[3] = {"train", "validation", "test"};
            for (int i = 0; i < 3; ++i)
                csv << fold.name << ',' << stages[i] << ',' << detail::pct(evals[i]->patch.accuracy())
                    << ',' << detail::fmt("%.6f", evals[i]->loss) << ','
                    << detail::fmt("%.6f", evals[i]->mse) << '\n';
        }
        csv << "cv_mean,test," << detail::fmt("%.2f", cv.mean_test_accuracy) << ",,\n";
        csv << "cv_std,test," << detail::fmt("%.2f", cv.std_test_accuracy) << ",,\n";
        csv.close();

        auto txt = detail::open_out((base / "report.txt").string());
        txt << "3-fold cross-validation, patch-level accuracy (%)\n\n";
        txt << "fold  train   validation  test\n";
        for (std::size_t r = 0; r < cv.folds.size(); ++r) {
            const auto& fold = cv.folds[r];
            txt << r + 1 << "     " << detail::pct(fold.train_eval.patch.accuracy()) << "   "
                << detail::pct(fold.val_eval.patch.accuracy()) << "       "
                << detail::pct(fold.test_eval.patch.accuracy()) << '\n';
        }
        txt << "\ntest accuracy: " << detail::fmt("%.2f", cv.mean_test_accuracy)
            << "% with a standard deviation of " << detail::fmt("%.2f", cv.std_test_accuracy)
            << "%\n";
        txt << "image-level test accuracy per fold:";
        for (const auto& fold : cv.folds) txt << ' ' << detail::pct(fold.test_eval.image.accuracy());
        txt << '\n';
        txt.close();

        for (const auto& fold : cv.folds) {
            write_history_csv((base / (fold.name + "_history.csv")).string(), fold.outcome.history);
            write_confusion_csv((base / (fold.name + "_confusion_patch.csv")).string(),
                                fold.test_eval.patch);
            write_confusion_csv((base / (fold.name + "_confusion_image.csv")).string(),
                                fold.test_eval.image);
            save_weights(fold.outcome.model, (base / (fold.name + ".weights")).string());
            write_model_meta((base / (fold.name + ".weights")).string(), arch,
                             fold.outcome.standardizer, sizeof(T) == 4 ? "f32" : "f64");
        }
    }
    return cv;
}

}  // namespace tcnn
