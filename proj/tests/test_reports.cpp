#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "tcnn/harness.hpp"

using tcnn::ArchConfig;
using tcnn::SampleSet;
using tcnn::SplitSpec;
using tcnn::TrainConfig;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// a small corpus the little networks can actually learn
SampleSet small_corpus(std::size_t per_class = 4) {
    tcnn::SynthConfig synth;
    synth.per_class = per_class;
    synth.width = 160;
    synth.height = 40;
    synth.seed = 21;
    return tcnn::slice_sources(tcnn::synth_corpus(synth), 40, 0.5);
}

ArchConfig small_arch() {
    ArchConfig arch;
    arch.input_size = 40;
    arch.conv1_filters = 8;
    arch.conv2_filters = 12;
    arch.dense1_width = 24;
    arch.dense2_width = 12;
    return arch;
}

TrainConfig small_train() {
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.max_epochs = 3;
    cfg.patience = 5;
    cfg.seed = 13;
    return cfg;
}

double accuracy_from_confusion_csv(const fs::path& path) {
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 4);
    std::size_t diag = 0, total = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 4);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const auto v = static_cast<std::size_t>(std::stoull(cells[j]));
            total += v;
            if (j == i) diag += v;
        }
    }
    REQUIRE(total > 0);
    return static_cast<double>(diag) / static_cast<double>(total);
}

std::string pct(double fraction) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
    return buf;
}

}  // namespace

TEST_CASE("hold-out run writes a consistent artifact set", "[harness]") {
    const auto dir = temp_dir("tcnn_holdout_run");
    const auto samples = small_corpus();
    const auto arch = small_arch();
    const auto cfg = small_train();
    SplitSpec spec;
    spec.seed = 3;

    const auto run = tcnn::run_holdout<float>(samples, arch, cfg, spec, dir.string());

    for (const char* name : {"report.csv", "report.txt", "history.csv", "confusion_test_patch.csv",
                             "confusion_test_image.csv", "model.weights", "model.weights.meta.json"})
        REQUIRE(fs::exists(dir / name));

    const auto report = read_lines(dir / "report.csv");
    REQUIRE(report.size() == 4);
    CHECK(report[0] == "split,stage,accuracy,loss,mse");
    const auto test_row = split_csv(report[3]);
    REQUIRE(test_row.size() == 5);
    CHECK(test_row[0] == "holdout");
    CHECK(test_row[1] == "test");

    // the reported accuracy reproduces exactly from the stored confusion matrix
    CHECK(test_row[2] == pct(accuracy_from_confusion_csv(dir / "confusion_test_patch.csv")));
    CHECK(test_row[2] == pct(run.test_eval.patch.accuracy()));

    const auto history = read_lines(dir / "history.csv");
    CHECK(history.size() == run.outcome.history.size() + 1);
    CHECK(history[0] == "epoch,train_loss,train_accuracy,val_loss,val_accuracy,val_mse");

    // weights + sidecar restore to a model that reproduces the test confusion
    const auto meta = tcnn::read_model_meta((dir / "model.weights").string());
    CHECK(meta.precision == "f32");
    CHECK(meta.arch.input_size == arch.input_size);
    CHECK(meta.arch.conv1_filters == arch.conv1_filters);
    CHECK(meta.standardizer.mean == run.outcome.standardizer.mean);
    CHECK(meta.standardizer.stddev == run.outcome.standardizer.stddev);

    const auto loaded = tcnn::load_weights<float>((dir / "model.weights").string(), meta.arch);
    const auto split = tcnn::make_holdout(tcnn::manifest_from_samples(samples), spec);
    const auto eval = tcnn::evaluate(loaded, meta.standardizer, tcnn::subset_samples(samples, split.test),
                                     cfg.batch_size);
    CHECK(eval.patch.confusion == run.test_eval.patch.confusion);
    CHECK(eval.image.confusion == run.test_eval.image.confusion);
    fs::remove_all(dir);
}

TEST_CASE("cross-validation report carries three folds plus spread", "[harness]") {
    const auto dir = temp_dir("tcnn_cv_run");
    const auto samples = small_corpus();
    SplitSpec spec;
    spec.mode = tcnn::SplitMode::threefold;
    spec.seed = 5;

    const auto cv = tcnn::run_cv<float>(samples, small_arch(), small_train(), spec, dir.string());
    REQUIRE(cv.folds.size() == 3);

    const auto report = read_lines(dir / "report.csv");
    REQUIRE(report.size() == 12);  // header + 3 folds x 3 stages + mean + std
    CHECK(report[0] == "split,stage,accuracy,loss,mse");
    double mean = 0.0;
    std::vector<double> test_acc;
    for (std::size_t i = 1; i <= 9; ++i) {
        const auto row = split_csv(report[i]);
        REQUIRE(row.size() == 5);
        CHECK(row[0] == "fold" + std::to_string(1 + (i - 1) / 3));
        if (row[1] == "test") test_acc.push_back(std::stod(row[2]));
    }
    REQUIRE(test_acc.size() == 3);
    for (double a : test_acc) mean += a / 3.0;
    double var = 0.0;
    for (double a : test_acc) var += (a - mean) * (a - mean) / 2.0;

    const auto mean_row = split_csv(report[10]);
    const auto std_row = split_csv(report[11]);
    CHECK(mean_row[0] == "cv_mean");
    CHECK(std_row[0] == "cv_std");
    CHECK(std::abs(std::stod(mean_row[2]) - mean) < 0.01);
    CHECK(std::abs(std::stod(std_row[2]) - std::sqrt(var)) < 0.015);

    const auto txt = read_file(dir / "report.txt");
    CHECK(txt.find("fold  train   validation  test") != std::string::npos);
    CHECK(txt.find("\n1     ") != std::string::npos);
    CHECK(txt.find("\n2     ") != std::string::npos);
    CHECK(txt.find("\n3     ") != std::string::npos);
    CHECK(txt.find("with a standard deviation of") != std::string::npos);

    for (int fold = 1; fold <= 3; ++fold) {
        const std::string base = "fold" + std::to_string(fold);
        CHECK(fs::exists(dir / (base + "_history.csv")));
        CHECK(fs::exists(dir / (base + "_confusion_patch.csv")));
        CHECK(fs::exists(dir / (base + "_confusion_image.csv")));
        CHECK(fs::exists(dir / (base + ".weights")));
    }
    fs::remove_all(dir);
}

TEST_CASE("cross-validation reports are reproducible byte for byte", "[harness]") {
    const auto dir_a = temp_dir("tcnn_cv_rep_a");
    const auto dir_b = temp_dir("tcnn_cv_rep_b");
    const auto samples = small_corpus(3);
    SplitSpec spec;
    spec.mode = tcnn::SplitMode::threefold;
    spec.seed = 8;
    auto cfg = small_train();
    cfg.max_epochs = 2;

    tcnn::run_cv<float>(samples, small_arch(), cfg, spec, dir_a.string());
    tcnn::run_cv<float>(samples, small_arch(), cfg, spec, dir_b.string());

    for (const char* name : {"report.csv", "report.txt", "fold1_history.csv", "fold2.weights",
                             "fold3_confusion_patch.csv", "fold1.weights.meta.json"})
        CHECK(read_file(dir_a / name) == read_file(dir_b / name));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
