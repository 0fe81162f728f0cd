#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tcnn/config.hpp"
#include "tcnn/features.hpp"
#include "tcnn/harness.hpp"
#include "tcnn/linear_classifier.hpp"
#include "tcnn/log_polar.hpp"
#include "tcnn/parallel.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string precision = "f32";
    std::string out_dir = "out";
};

// Every section is materialized up front so require_all_consumed() can flag
// typos no matter which subcommand runs.
struct Settings {
    tcnn::ArchConfig arch;
    tcnn::TrainConfig train;
    tcnn::PipelineConfig pipeline;
    tcnn::SynthConfig synth;
    tcnn::SplitSpec split;
};

Settings load_settings(const GlobalOpts& g) {
    tcnn::ConfigMap map;
    if (!g.config_path.empty()) map = tcnn::parse_config_file(g.config_path);
    for (const auto& assignment : g.overrides) tcnn::apply_override(map, assignment);
    Settings s;
    s.arch = tcnn::arch_from_config(map);
    s.train = tcnn::train_from_config(map, g.seed);
    s.pipeline = tcnn::pipeline_from_config(map);
    s.synth = tcnn::synth_from_config(map, g.seed);
    s.split = tcnn::split_from_config(map, g.seed);
    map.require_all_consumed();
    return s;
}

template <typename Fn>
int with_precision(const std::string& precision, Fn&& fn) {
    if (precision == "f64") return fn(double{});
    return fn(float{});
}

std::string patch_name(const std::string& source_id, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_p%02zu.png", index);
    return source_id + buf;
}

// Sources plus their patches, either synthesized in memory or read back from
// a manifest on disk.
tcnn::SampleSet gather_samples(const std::string& manifest_path, const Settings& s) {
    if (manifest_path.empty()) {
        std::printf("synthesizing %zu sources per class (seed %" PRIu64 ")\n", s.synth.per_class,
                    s.synth.seed);
        return tcnn::slice_sources(tcnn::synth_corpus(s.synth), s.pipeline.window,
                                   s.pipeline.overlap);
    }
    const auto manifest = tcnn::read_manifest(manifest_path);
    return tcnn::load_samples(manifest, fs::path(manifest_path).parent_path().string());
}

// A manifest whose records all carry train/validation/test tags selects the
// split itself; anything else falls back to the seeded splitter.
bool fully_tagged(const tcnn::DatasetManifest& manifest) {
    for (const auto& rec : manifest)
        if (rec.split != "train" && rec.split != "validation" && rec.split != "test") return false;
    return !manifest.empty();
}

tcnn::SplitResult split_from_tags(const tcnn::DatasetManifest& manifest) {
    tcnn::SplitResult split;
    for (const auto& rec : manifest) {
        if (rec.split == "train") split.train.push_back(rec);
        else if (rec.split == "validation") split.validation.push_back(rec);
        else split.test.push_back(rec);
    }
    return split;
}

std::size_t count_sources(const tcnn::DatasetManifest& manifest) {
    return tcnn::list_sources(manifest).size();
}

std::size_t argmax_row(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return best;
}

template <typename T>
std::vector<std::size_t> predict_patches(const tcnn::Model<T>& m, const tcnn::Standardizer& st,
                                         const std::vector<tcnn::GrayImage>& patches,
                                         std::size_t batch_size) {
    const std::size_t input_size = m.config.input_size;
    std::vector<std::size_t> out;
    out.reserve(patches.size());
    for (std::size_t start = 0; start < patches.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, patches.size() - start);
        tcnn::Tensor<T> batch({n, 1, input_size, input_size});
        for (std::size_t i = 0; i < n; ++i)
            tcnn::detail::fill_input(batch, i, patches[start + i], input_size, st);
        const auto logits = tcnn::forward(m, batch);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row(m.config.classes);
            for (std::size_t k = 0; k < row.size(); ++k)
                row[k] = static_cast<double>(logits.data[i * row.size() + k]);
            out.push_back(argmax_row(row));
        }
    }
    return out;
}

void print_eval(const char* what, const tcnn::EvalBundle& eval) {
    std::printf("%s: patch accuracy %.2f%%, image accuracy %.2f%%, loss %.6f, mse %.6f\n", what,
                100.0 * eval.patch.accuracy(), 100.0 * eval.image.accuracy(), eval.loss, eval.mse);
}

void print_confusion(const tcnn::Metrics& m) {
    std::printf("%-14s", "truth\\pred");
    for (std::size_t k = 0; k < m.classes; ++k)
        std::printf("%8s", tcnn::label_name(static_cast<tcnn::Label>(k)));
    std::printf("\n");
    for (std::size_t i = 0; i < m.classes; ++i) {
        std::printf("%-14s", tcnn::label_name(static_cast<tcnn::Label>(i)));
        for (std::size_t j = 0; j < m.classes; ++j) std::printf("%8zu", m.count(i, j));
        std::printf("\n");
    }
}

// Per-map min/max stretch so faint late-layer activations stay visible.
tcnn::GrayImage map_to_image(const float* data, std::size_t h, std::size_t w) {
    tcnn::GrayImage img(w, h);
    float lo = data[0], hi = data[0];
    for (std::size_t i = 1; i < h * w; ++i) {
        lo = std::min(lo, data[i]);
        hi = std::max(hi, data[i]);
    }
    const float span = hi - lo;
    for (std::size_t i = 0; i < h * w; ++i)
        img.pixels[i] = span > 0.0f ? (data[i] - lo) / span : 0.0f;
    return img;
}

int cmd_params(const Settings& s) {
    const auto table = tcnn::param_table(s.arch);
    std::printf("%-8s %12s\n", "layer", "parameters");
    std::size_t total = 0;
    for (const auto& row : table) {
        std::printf("%-8s %12zu\n", row.name.c_str(), row.count);
        total += row.count;
    }
    std::printf("%-8s %12zu\n", "total", total);
    return 0;
}

int cmd_synth(const GlobalOpts& g, const Settings& s) {
    const auto corpus = tcnn::synth_dataset(s.synth, g.out_dir);
    const fs::path base(g.out_dir);
    fs::create_directories(base / "patches");
    tcnn::DatasetManifest manifest;
    for (const auto& src : corpus) {
        const auto set = tcnn::slice_patches(src.image, s.pipeline.window, s.pipeline.overlap);
        for (std::size_t i = 0; i < set.patches.size(); ++i) {
            const std::string name = patch_name(src.id, i);
            tcnn::write_image((base / "patches" / name).string(), set.patches[i]);
            manifest.push_back({"patches/" + name, src.label, src.id, i, ""});
        }
    }
    tcnn::write_manifest((base / "manifest.jsonl").string(), manifest);
    std::printf("wrote %zu sources and %zu patches under %s\n", corpus.size(), manifest.size(),
                g.out_dir.c_str());
    std::printf("manifest: %s\n", (base / "manifest.jsonl").string().c_str());
    return 0;
}

int cmd_unfold(const GlobalOpts& g, const Settings& s, const std::string& input,
               std::string output) {
    const auto img = tcnn::read_image(input);
    const auto strip =
        tcnn::unfold_log_polar(img, tcnn::default_geometry(img, s.pipeline.radial, s.pipeline.angular));
    if (output.empty()) {
        fs::create_directories(g.out_dir);
        output = (fs::path(g.out_dir) / (fs::path(input).stem().string() + "_unfolded.png")).string();
    }
    tcnn::write_image(output, strip);
    std::printf("%s: %zux%zu -> %s (%zux%zu)\n", input.c_str(), img.width, img.height,
                output.c_str(), strip.width, strip.height);
    return 0;
}

int cmd_slice(const GlobalOpts& g, const Settings& s, const std::string& input) {
    const auto img = tcnn::read_image(input);
    const auto set = tcnn::slice_patches(img, s.pipeline.window, s.pipeline.overlap);
    fs::create_directories(g.out_dir);
    const std::string stem = fs::path(input).stem().string();
    for (std::size_t i = 0; i < set.patches.size(); ++i)
        tcnn::write_image((fs::path(g.out_dir) / patch_name(stem, i)).string(), set.patches[i]);
    std::printf("%s: %zu patches of %zux%zu into %s\n", input.c_str(), set.patches.size(),
                set.window, set.window, g.out_dir.c_str());
    return 0;
}

void write_tagged(const std::string& path, const tcnn::SplitResult& split,
                  const fs::path& manifest_dir, const fs::path& out_dir) {
    const bool rebase = fs::absolute(manifest_dir).lexically_normal() !=
                        fs::absolute(out_dir).lexically_normal();
    tcnn::DatasetManifest tagged;
    const char* names[3] = {"train", "validation", "test"};
    const tcnn::DatasetManifest* parts[3] = {&split.train, &split.validation, &split.test};
    for (int i = 0; i < 3; ++i)
        for (auto rec : *parts[i]) {
            rec.split = names[i];
            if (rebase && fs::path(rec.path).is_relative())
                rec.path = fs::absolute(manifest_dir / rec.path).lexically_normal().string();
            tagged.push_back(std::move(rec));
        }
    tcnn::write_manifest(path, tagged);
    std::printf("%s: %zu/%zu/%zu patches (%zu/%zu/%zu sources)\n", path.c_str(),
                split.train.size(), split.validation.size(), split.test.size(),
                count_sources(split.train), count_sources(split.validation),
                count_sources(split.test));
}

int cmd_split(const GlobalOpts& g, const Settings& s, const std::string& manifest_path) {
    const auto manifest = tcnn::read_manifest(manifest_path);
    const fs::path mdir = fs::path(manifest_path).parent_path();
    fs::create_directories(g.out_dir);
    if (s.split.mode == tcnn::SplitMode::holdout) {
        write_tagged((fs::path(g.out_dir) / "manifest_holdout.jsonl").string(),
                     tcnn::make_holdout(manifest, s.split), mdir, g.out_dir);
    } else {
        const auto folds = tcnn::make_folds(manifest, s.split);
        for (std::size_t r = 0; r < folds.size(); ++r)
            write_tagged((fs::path(g.out_dir) /
                          ("manifest_fold" + std::to_string(r + 1) + ".jsonl")).string(),
                         folds[r], mdir, g.out_dir);
    }
    return 0;
}

int cmd_train(const GlobalOpts& g, const Settings& s, const std::string& manifest_path) {
    return with_precision(g.precision, [&](auto tag) {
        using T = decltype(tag);
        const auto samples = gather_samples(manifest_path, s);
        tcnn::ExperimentRun<T> run = [&] {
            if (!manifest_path.empty()) {
                const auto manifest = tcnn::read_manifest(manifest_path);
                if (fully_tagged(manifest)) {
                    std::printf("using the split tags stored in %s\n", manifest_path.c_str());
                    return tcnn::run_holdout<T>(samples, split_from_tags(manifest), s.arch,
                                                s.train, g.out_dir);
                }
            }
            auto spec = s.split;
            spec.mode = tcnn::SplitMode::holdout;
            return tcnn::run_holdout<T>(samples, s.arch, s.train, spec, g.out_dir);
        }();
        std::printf("trained %zu epochs, best %zu\n", run.outcome.history.size(),
                    run.outcome.best_epoch + 1);
        print_eval("train", run.train_eval);
        print_eval("validation", run.val_eval);
        print_eval("test", run.test_eval);
        std::printf("artifacts under %s\n", g.out_dir.c_str());
        return run.outcome.aborted ? 1 : 0;
    });
}

int cmd_cv(const GlobalOpts& g, const Settings& s, const std::string& manifest_path) {
    return with_precision(g.precision, [&](auto tag) {
        using T = decltype(tag);
        const auto samples = gather_samples(manifest_path, s);
        auto spec = s.split;
        spec.mode = tcnn::SplitMode::threefold;
        const auto cv = tcnn::run_cv<T>(samples, s.arch, s.train, spec, g.out_dir);
        for (const auto& fold : cv.folds)
            std::printf("%s: test patch accuracy %.2f%%\n", fold.name.c_str(),
                        100.0 * fold.test_eval.patch.accuracy());
        std::printf("mean %.2f%% +- %.2f%%\n", cv.mean_test_accuracy, cv.std_test_accuracy);
        std::printf("artifacts under %s\n", g.out_dir.c_str());
        for (const auto& fold : cv.folds)
            if (fold.outcome.aborted) return 1;
        return 0;
    });
}

int cmd_eval(const Settings& s, const std::string& model_path, const std::string& manifest_path,
             const std::string& subset) {
    const auto meta = tcnn::read_model_meta(model_path);
    auto manifest = tcnn::read_manifest(manifest_path);
    if (subset != "all") {
        tcnn::DatasetManifest filtered;
        for (const auto& rec : manifest)
            if (rec.split == subset) filtered.push_back(rec);
        if (filtered.empty())
            throw std::runtime_error("eval: manifest has no records tagged \"" + subset + "\"");
        manifest = std::move(filtered);
    }
    const auto samples =
        tcnn::load_samples(manifest, fs::path(manifest_path).parent_path().string());
    return with_precision(meta.precision, [&](auto tag) {
        using T = decltype(tag);
        const auto model = tcnn::load_weights<T>(model_path, meta.arch);
        const auto eval = tcnn::evaluate(model, meta.standardizer, samples, s.train.batch_size);
        print_eval(subset.c_str(), eval);
        std::printf("\npatch-level confusion:\n");
        print_confusion(eval.patch);
        std::printf("\nimage-level confusion:\n");
        print_confusion(eval.image);
        return 0;
    });
}

int cmd_infer(const Settings& s, const std::string& model_path,
              const std::vector<std::string>& inputs) {
    const auto meta = tcnn::read_model_meta(model_path);
    return with_precision(meta.precision, [&](auto tag) {
        using T = decltype(tag);
        const auto model = tcnn::load_weights<T>(model_path, meta.arch);
        for (const auto& input : inputs) {
            const auto img = tcnn::read_image(input);
            std::vector<tcnn::GrayImage> patches;
            if (img.width == img.height) {
                patches.push_back(img);
            } else {
                auto set = tcnn::slice_patches(img, s.pipeline.window, s.pipeline.overlap);
                patches = std::move(set.patches);
            }
            const auto votes =
                predict_patches(model, meta.standardizer, patches, s.train.batch_size);
            const auto verdict = tcnn::majority_vote(votes, meta.arch.classes);
            std::vector<std::size_t> counts(meta.arch.classes, 0);
            for (auto v : votes) ++counts[v];
            std::printf("%s: %s (votes", input.c_str(),
                        tcnn::label_name(static_cast<tcnn::Label>(verdict)));
            for (std::size_t k = 0; k < counts.size(); ++k)
                std::printf(" %s=%zu", tcnn::label_name(static_cast<tcnn::Label>(k)), counts[k]);
            std::printf(")\n");
        }
        return 0;
    });
}

int cmd_features(const GlobalOpts& g, const std::string& manifest_path, std::string output,
                 const tcnn::LpqConfig& lpq_cfg, const tcnn::GlcmConfig& glcm_cfg) {
    const auto manifest = tcnn::read_manifest(manifest_path);
    const auto samples =
        tcnn::load_samples(manifest, fs::path(manifest_path).parent_path().string());
    std::vector<tcnn::FeatureVector> rows(samples.size());
    std::vector<std::string> labels(samples.size());
    tcnn::parallel_for(samples.size(), [&](std::size_t i) {
        rows[i] = tcnn::extract_features(samples[i].patch, lpq_cfg, glcm_cfg);
        labels[i] = tcnn::label_name(static_cast<tcnn::Label>(samples[i].label));
    });
    if (output.empty()) {
        fs::create_directories(g.out_dir);
        output = (fs::path(g.out_dir) / "features.csv").string();
    }
    tcnn::write_feature_csv(output, rows, labels);
    std::printf("wrote %zu rows x %zu features to %s\n", rows.size(),
                rows.empty() ? 0 : rows[0].values.size(), output.c_str());
    return 0;
}

int cmd_baseline_train(const GlobalOpts& g, const Settings& s, const std::string& manifest_path,
                       const tcnn::LpqConfig& lpq_cfg, const tcnn::GlcmConfig& glcm_cfg,
                       const tcnn::LinearTrainConfig& lin_cfg) {
    const auto samples = gather_samples(manifest_path, s);
    auto spec = s.split;
    spec.mode = tcnn::SplitMode::holdout;
    const auto split = tcnn::make_holdout(tcnn::manifest_from_samples(samples), spec);

    // no early stopping here, so train and validation merge into the fit set
    auto fit_set = tcnn::subset_samples(samples, split.train);
    const auto val_set = tcnn::subset_samples(samples, split.validation);
    fit_set.insert(fit_set.end(), val_set.begin(), val_set.end());
    const auto test_set = tcnn::subset_samples(samples, split.test);

    const auto featurize = [&](const tcnn::SampleSet& set) {
        std::vector<tcnn::FeatureVector> rows(set.size());
        tcnn::parallel_for(set.size(), [&](std::size_t i) {
            rows[i] = tcnn::extract_features(set[i].patch, lpq_cfg, glcm_cfg);
        });
        return rows;
    };
    const auto fit_rows = featurize(fit_set);
    const auto test_rows = featurize(test_set);

    std::vector<std::size_t> fit_labels(fit_set.size());
    for (std::size_t i = 0; i < fit_set.size(); ++i) fit_labels[i] = fit_set[i].label;
    const auto result = tcnn::train_linear(fit_rows, fit_labels, s.arch.classes, lin_cfg);

    const auto score = [&](const std::vector<tcnn::FeatureVector>& rows,
                           const tcnn::SampleSet& set) {
        tcnn::Metrics m(s.arch.classes);
        for (std::size_t i = 0; i < rows.size(); ++i)
            m.add(set[i].label, tcnn::predict_linear(result.model, rows[i]));
        return m;
    };
    const auto train_m = score(fit_rows, fit_set);
    const auto test_m = score(test_rows, test_set);

    std::printf("linear baseline on %zu-dim handcrafted features\n",
                fit_rows.empty() ? 0 : fit_rows[0].values.size());
    std::printf("fit accuracy %.2f%% (%zu patches), test accuracy %.2f%% (%zu patches)\n",
                100.0 * train_m.accuracy(), fit_set.size(), 100.0 * test_m.accuracy(),
                test_set.size());
    std::printf("final loss %.6f after %zu epochs\n", result.loss_history.back(),
                result.loss_history.size());
    print_confusion(test_m);

    fs::create_directories(g.out_dir);
    const fs::path base(g.out_dir);
    auto txt = tcnn::detail::open_out((base / "baseline_report.txt").string());
    txt << "handcrafted-feature linear baseline, patch-level accuracy (%)\n\n";
    txt << "fit     test\n";
    txt << tcnn::detail::pct(train_m.accuracy()) << "   " << tcnn::detail::pct(test_m.accuracy())
        << "\n";
    txt.close();
    tcnn::write_confusion_csv((base / "baseline_confusion_patch.csv").string(), test_m);
    auto hist = tcnn::detail::open_out((base / "baseline_history.csv").string());
    hist << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
        hist << e + 1 << ',' << tcnn::detail::fmt("%.9f", result.loss_history[e]) << '\n';
    hist.close();
    std::printf("artifacts under %s\n", g.out_dir.c_str());
    return 0;
}

int cmd_activations(const GlobalOpts& g, const Settings& s, const std::string& model_path,
                    const std::string& input) {
    const auto img = tcnn::read_image(input);
    tcnn::GrayImage patch = img;
    if (img.width != img.height) {
        auto set = tcnn::slice_patches(img, s.pipeline.window, s.pipeline.overlap);
        std::printf("%s is a strip; using its first %zux%zu window\n", input.c_str(), set.window,
                    set.window);
        patch = std::move(set.patches.front());
    }

    std::string precision = "f32";
    tcnn::ArchConfig arch = s.arch;
    tcnn::Standardizer st;
    if (!model_path.empty()) {
        const auto meta = tcnn::read_model_meta(model_path);
        precision = meta.precision;
        arch = meta.arch;
        st = meta.standardizer;
    }

    return with_precision(precision, [&](auto tag) {
        using T = decltype(tag);
        const auto model = model_path.empty()
                               ? tcnn::build_model<T>(arch, s.train.seed)
                               : tcnn::load_weights<T>(model_path, arch);
        tcnn::Tensor<T> batch({1, 1, arch.input_size, arch.input_size});
        tcnn::detail::fill_input(batch, 0, patch, arch.input_size, st);
        tcnn::ActivationBundle<T> acts;
        (void)tcnn::forward(model, batch, &acts);

        fs::create_directories(g.out_dir);
        const fs::path base(g.out_dir);
        const auto dump_maps = [&](const char* name, const tcnn::Tensor<T>& maps) {
            const std::size_t f = maps.shape[1], h = maps.shape[2], w = maps.shape[3];
            std::vector<float> plane(h * w);
            for (std::size_t k = 0; k < f; ++k) {
                const T* src = maps.data.data() + k * h * w;
                for (std::size_t i = 0; i < h * w; ++i) plane[i] = static_cast<float>(src[i]);
                char file[48];
                std::snprintf(file, sizeof(file), "act_%s_%02zu.png", name, k);
                tcnn::write_image((base / file).string(), map_to_image(plane.data(), h, w));
            }
            std::printf("%s: %zu maps of %zux%zu\n", name, f, h, w);
        };
        dump_maps("conv1", acts.conv1);
        dump_maps("conv2", acts.conv2);

        auto csv = tcnn::detail::open_out((base / "act_vectors.csv").string());
        csv << "vector,index,value\n";
        const auto dump_vec = [&](const char* name, const tcnn::Tensor<T>& v) {
            for (std::size_t i = 0; i < v.size(); ++i)
                csv << name << ',' << i << ','
                    << tcnn::detail::fmt("%.9g", static_cast<double>(v.data[i])) << '\n';
        };
        dump_vec("energy", acts.energy);
        dump_vec("dense1", acts.dense1);
        dump_vec("dense2", acts.dense2);
        dump_vec("logits", acts.logits);
        csv.close();
        std::printf("activation maps and vectors under %s\n", g.out_dir.c_str());
        return 0;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compact texture-CNN toolkit: synthetic corrosion corpora, log-polar "
                 "preprocessing, training, and handcrafted baselines"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "ini-style settings file")->group("Global");
    app.add_option("--set", g.overrides, "override one setting, section.key=value")
        ->group("Global");
    app.add_option("--seed", g.seed, "master seed for synthesis, splits, and training")
        ->group("Global");
    app.add_option("--threads", g.threads, "worker threads (1 = fully deterministic)")
        ->check(CLI::PositiveNumber)
        ->group("Global");
    app.add_option("--precision", g.precision, "compute precision")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->group("Global");
    app.add_option("--out-dir", g.out_dir, "directory for generated artifacts")->group("Global");

    auto* c_params = app.add_subcommand("params", "print the per-layer trainable parameter table");

    auto* c_synth = app.add_subcommand(
        "synth", "generate a synthetic corpus: source strips, patches, and a manifest");

    std::string input, output;
    auto* c_unfold = app.add_subcommand("unfold", "unwrap a bore image into a log-polar strip");
    c_unfold->add_option("input", input, "circular bore image (png or pgm)")->required();
    c_unfold->add_option("-o,--output", output, "output path (default <out-dir>/<stem>_unfolded.png)");

    auto* c_slice = app.add_subcommand("slice", "cut a strip into overlapping square patches");
    c_slice->add_option("input", input, "strip image whose height is the window size")->required();

    std::string manifest_path;
    auto* c_split = app.add_subcommand("split", "assign split tags to a patch manifest");
    c_split->add_option("--manifest", manifest_path, "patch manifest (jsonl)")->required();

    auto* c_train = app.add_subcommand("train", "train one hold-out model and write its reports");
    c_train->add_option("--manifest", manifest_path,
                        "patch manifest; omitted = synthesize in memory");

    auto* c_cv = app.add_subcommand("cv", "run 3-fold cross-validation and write its reports");
    c_cv->add_option("--manifest", manifest_path, "patch manifest; omitted = synthesize in memory");

    std::string model_path, subset = "all";
    auto* c_eval = app.add_subcommand("eval", "score a saved model against a manifest");
    c_eval->add_option("--model", model_path, "weights file with .meta.json sidecar")->required();
    c_eval->add_option("--manifest", manifest_path, "patch manifest (jsonl)")->required();
    c_eval->add_option("--subset", subset, "restrict to one split tag")
        ->check(CLI::IsMember({"all", "train", "validation", "test"}));

    std::vector<std::string> infer_inputs;
    auto* c_infer = app.add_subcommand("infer", "classify images (strips get a majority vote)");
    c_infer->add_option("--model", model_path, "weights file with .meta.json sidecar")->required();
    c_infer->add_option("images", infer_inputs, "patch or strip images")->required();

    tcnn::LpqConfig lpq_cfg;
    tcnn::GlcmConfig glcm_cfg;
    auto add_feature_flags = [&](CLI::App* cmd) {
        cmd->add_option("--lpq-window", lpq_cfg.window, "phase-quantization window (odd, >= 3)");
        cmd->add_flag("--whiten", lpq_cfg.whiten, "decorrelate phase coefficients before quantizing");
        cmd->add_option("--glcm-levels", glcm_cfg.levels, "co-occurrence gray levels");
        cmd->add_option("--glcm-distance", glcm_cfg.distance, "co-occurrence pixel offset");
    };
    auto* c_features =
        app.add_subcommand("features", "extract handcrafted descriptors for every manifest patch");
    c_features->add_option("--manifest", manifest_path, "patch manifest (jsonl)")->required();
    c_features->add_option("-o,--output", output, "csv path (default <out-dir>/features.csv)");
    add_feature_flags(c_features);

    tcnn::LinearTrainConfig lin_cfg;
    auto* c_baseline = app.add_subcommand(
        "baseline-train", "fit the linear classifier on handcrafted features, hold-out protocol");
    c_baseline->add_option("--manifest", manifest_path,
                           "patch manifest; omitted = synthesize in memory");
    c_baseline->add_option("--epochs", lin_cfg.epochs, "gradient-descent epochs");
    c_baseline->add_option("--lr", lin_cfg.learning_rate, "step size");
    c_baseline->add_option("--l2", lin_cfg.l2, "ridge penalty");
    add_feature_flags(c_baseline);

    auto* c_acts = app.add_subcommand("activations",
                                      "dump per-layer feature maps for one patch as images");
    c_acts->add_option("input", input, "patch or strip image")->required();
    c_acts->add_option("--model", model_path, "weights file; omitted = fresh seeded weights");

    CLI11_PARSE(app, argc, argv);

    try {
        tcnn::set_thread_count(g.threads);
        const Settings s = load_settings(g);
        if (c_params->parsed()) return cmd_params(s);
        if (c_synth->parsed()) return cmd_synth(g, s);
        if (c_unfold->parsed()) return cmd_unfold(g, s, input, output);
        if (c_slice->parsed()) return cmd_slice(g, s, input);
        if (c_split->parsed()) return cmd_split(g, s, manifest_path);
        if (c_train->parsed()) return cmd_train(g, s, manifest_path);
        if (c_cv->parsed()) return cmd_cv(g, s, manifest_path);
        if (c_eval->parsed()) return cmd_eval(s, model_path, manifest_path, subset);
        if (c_infer->parsed()) return cmd_infer(s, model_path, infer_inputs);
        if (c_features->parsed()) return cmd_features(g, manifest_path, output, lpq_cfg, glcm_cfg);
        if (c_baseline->parsed())
            return cmd_baseline_train(g, s, manifest_path, lpq_cfg, glcm_cfg, lin_cfg);
        if (c_acts->parsed()) return cmd_activations(g, s, model_path, input);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tcnn: %s\n", e.what());
        return 1;
    }
    return 0;
}
