#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixmeter/evaluate.hpp"
#include "mixmeter/forest.hpp"
#include "mixmeter/pipeline.hpp"
#include "mixmeter/synth.hpp"

namespace {

using namespace mixmeter;

struct ForestFlags {
    int trees = ForestConfig{}.n_estimators;
    int max_depth = ForestConfig{}.max_depth;
    int min_samples_split = ForestConfig{}.min_samples_split;
    bool bootstrap = true;
    std::string max_features = "sqrt";
    std::uint64_t seed = ForestConfig{}.random_state;
    int jobs = 1;
    std::size_t pca = 0;  // 0 = off

    void add_to(CLI::App& cmd) {
        cmd.add_option("--trees", trees, "Number of trees")->capture_default_str();
        cmd.add_option("--max-depth", max_depth,
                       "Maximum tree depth, -1 for unlimited")
            ->capture_default_str();
        cmd.add_option("--min-samples-split", min_samples_split,
                       "Smallest node the trees may split")
            ->capture_default_str();
        cmd.add_flag("--bootstrap,!--no-bootstrap", bootstrap,
                     "Bootstrap-resample each tree's training set")
            ->capture_default_str();
        cmd.add_option("--max-features", max_features,
                       "Split candidates per node: sqrt, all, or a count")
            ->capture_default_str();
        cmd.add_option("--seed", seed, "Forest random state")->capture_default_str();
        cmd.add_option("--jobs", jobs, "Worker threads for tree training")
            ->capture_default_str();
        cmd.add_option("--pca", pca,
                       "Project onto this many principal components first (0 = off)")
            ->capture_default_str();
    }

    TrainOptions options() const {
        TrainOptions opts;
        opts.forest.n_estimators = trees;
        opts.forest.max_depth = max_depth;
        opts.forest.min_samples_split = min_samples_split;
        opts.forest.bootstrap = bootstrap;
        if (max_features == "sqrt") {
            opts.forest.max_features = MaxFeaturesRule::kSqrt;
        } else if (max_features == "all") {
            opts.forest.max_features = MaxFeaturesRule::kAll;
        } else {
            opts.forest.max_features = MaxFeaturesRule::kFixed;
            try {
                opts.forest.max_features_fixed = std::stoi(max_features);
            } catch (const std::exception&) {
                throw CLI::ValidationError(
                    "--max-features", "expected sqrt, all, or a positive count");
            }
            if (opts.forest.max_features_fixed < 1) {
                throw CLI::ValidationError(
                    "--max-features", "expected sqrt, all, or a positive count");
            }
        }
        opts.forest.random_state = seed;
        opts.forest.jobs = jobs;
        opts.use_pca = pca > 0;
        opts.pca_components = pca;
        return opts;
    }

    std::string describe(std::size_t d, const TrainOptions& opts) const {
        std::string text = "forest: n_estimators=" + std::to_string(trees) +
                           " max_depth=" + std::to_string(max_depth) +
                           " min_samples_split=" + std::to_string(min_samples_split) +
                           " bootstrap=" + (bootstrap ? "on" : "off") +
                           " max_features=" + max_features + " (resolved " +
                           std::to_string(opts.forest.resolve_max_features(d)) + ")" +
                           " random_state=" + std::to_string(seed);
        if (opts.use_pca) {
            text += "\npca: " + std::to_string(opts.pca_components) + " components";
        } else {
            text += "\npca: off";
        }
        return text;
    }
};

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_extract(const std::string& manifest_path, const std::string& out_path,
                const std::string& agg_name, const ExtractOptions& base) {
    ExtractOptions options = base;
    options.aggregation = parse_aggregation(agg_name);
    const auto entries = read_manifest(manifest_path);
    if (entries.empty()) throw std::runtime_error("manifest lists no songs");

    std::vector<std::string> warnings;
    Dataset dataset;
    dataset.aggregation = options.aggregation;
    dataset.columns = columns_for(options.aggregation);
    dataset.records = extract_manifest(entries, options, &warnings);
    print_warnings(warnings);
    write_dataset(out_path, dataset);
    std::cout << "extracted " << dataset.records.size() << " rows from "
              << entries.size() << " songs into " << out_path << '\n';
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& model_path,
              const ForestFlags& flags) {
    const Dataset dataset = read_dataset(dataset_path);
    if (dataset.records.empty()) throw std::runtime_error("dataset has no rows");
    const EvalData data = to_eval_data(dataset);
    const TrainOptions opts = flags.options();

    const std::size_t d = data.X[0].size();
    ForestModel model = train_model(data, opts, dataset.aggregation,
                                    schema_hash(dataset.aggregation));
    write_model(model_path, model);

    std::cout << "training on " << data.X.size() << " rows, " << d << " features, "
              << model.classes.size() << " classes ("
              << aggregation_name(dataset.aggregation) << ")\n";
    std::cout << flags.describe(opts.use_pca ? model.n_features : d, opts) << '\n';
    std::cout << "wrote model to " << model_path << '\n';
    return 0;
}

int cmd_evaluate(const std::string& dataset_path, const std::string& protocol,
                 std::size_t folds, double train_fraction, std::uint64_t split_seed,
                 const ForestFlags& flags, const std::string& out_prefix) {
    const Dataset dataset = read_dataset(dataset_path);
    if (dataset.records.empty()) throw std::runtime_error("dataset has no rows");
    const EvalData data = to_eval_data(dataset);

    EvalOptions options;
    options.train = flags.options();
    options.split_seed = split_seed;
    options.train_fraction = train_fraction;
    options.folds = folds;

    EvalResult result;
    if (protocol == "cv") {
        result = evaluate_cv(data, options);
    } else if (protocol == "split") {
        result = evaluate_split(data, options);
    } else {
        throw std::runtime_error("unknown protocol '" + protocol +
                                 "' (expected cv or split)");
    }

    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        if (result.folds.size() > 1) {
            char line[64];
            std::snprintf(line, sizeof line, "---- fold %zu accuracy %.3f ----", f + 1,
                          result.folds[f].report.accuracy);
            std::cout << line << '\n';
        }
    }
    if (result.folds.size() > 1) {
        char line[64];
        std::snprintf(line, sizeof line, "mean accuracy %.3f", result.mean_accuracy);
        std::cout << line << "\n\n";
    }
    std::cout << format_confusion(result.pooled) << '\n';
    std::cout << format_report(result.pooled_report);

    if (!out_prefix.empty()) {
        auto write_text = [&](const std::string& suffix, const std::string& text) {
            const std::string p = out_prefix + suffix;
            std::ofstream out(p, std::ios::trunc);
            if (!out) throw std::runtime_error(p + ": cannot open for writing");
            out << text;
        };
        write_text("report.txt", format_report(result.pooled_report));
        write_text("report.kv",
                   report_key_values(result.pooled_report, result.pooled));
        write_text("confusion.txt", format_confusion(result.pooled));
        std::cout << "wrote " << out_prefix << "report.txt, " << out_prefix
                  << "report.kv, " << out_prefix << "confusion.txt\n";
    }
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& dataset_path,
                const std::vector<std::string>& audio_paths, bool as_json,
                const ExtractOptions& base) {
    const ForestModel model = read_model(model_path);

    EvalData data;
    if (!dataset_path.empty()) {
        const Dataset dataset = read_dataset(dataset_path);
        const auto expected = schema_hash(dataset.aggregation);
        if (expected != model.feature_schema) {
            throw std::runtime_error(
                "dataset schema " + std::to_string(expected) +
                " does not match the model's schema " +
                std::to_string(model.feature_schema) +
                " (different layout or aggregation mode)");
        }
        data = to_eval_data(dataset);
    } else {
        ExtractOptions options = base;
        options.aggregation = model.aggregation;
        std::vector<std::string> warnings;
        for (const auto& p : audio_paths) {
            const auto id = std::filesystem::path(p).stem().string();
            for (auto& r : extract_song(p, id, "", options, &warnings)) {
                data.X.push_back(std::move(r.features));
                data.row_ids.push_back(r.song_id);
                data.row_labels.push_back("");
            }
        }
        print_warnings(warnings);
    }
    if (data.X.empty()) throw std::runtime_error("nothing to predict");

    const auto predictions = predict_units_detailed(model, data);
    if (as_json) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& p : predictions) {
            nlohmann::json probs;
            for (std::size_t k = 0; k < model.classes.size(); ++k) {
                probs[model.classes[k]] = p.mean_proba[k];
            }
            out.push_back({{"song_id", p.id},
                           {"label", model.classes[static_cast<std::size_t>(p.predicted)]},
                           {"proba", probs}});
        }
        std::cout << out.dump(2) << '\n';
    } else {
        for (const auto& p : predictions) {
            std::cout << p.id << ' '
                      << model.classes[static_cast<std::size_t>(p.predicted)];
            char buf[32];
            for (double v : p.mean_proba) {
                std::snprintf(buf, sizeof buf, " %.6f", v);
                std::cout << buf;
            }
            std::cout << '\n';
        }
    }
    return 0;
}

int cmd_synth(const std::string& out_dir, const std::string& spec_path,
              int songs_per_class, double duration_s, std::uint64_t seed,
              bool seed_given) {
    SynthSpec spec = spec_path.empty() ? demo_spec() : read_synth_spec(spec_path);
    if (songs_per_class > 0) spec.songs_per_class = songs_per_class;
    if (duration_s > 0.0) spec.duration_s = duration_s;
    if (seed_given) spec.seed = seed;

    const auto manifest = write_corpus(spec, out_dir);
    std::cout << "wrote " << spec.classes.size() * spec.songs_per_class << " songs ("
              << spec.classes.size() << " classes) and " << manifest.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "mixmeter: studio-metering features and DJ-set style classification "
        "for stereo WAV recordings"};
    app.require_subcommand(1);

    ExtractOptions extract_options;
    std::string manifest_path, dataset_path, model_path, out_path;
    std::string agg_name = "mean_std";

    auto add_extract_flags = [&](CLI::App& cmd) {
        cmd.add_option("--silence-db", extract_options.pre.silence_threshold_db,
                       "Crop threshold in dBFS")
            ->capture_default_str();
        cmd.add_option("--center-s", extract_options.pre.center_duration_s,
                       "Central section length in seconds")
            ->capture_default_str();
        cmd.add_option("--window", extract_options.pre.window_len,
                       "Analysis window length in samples")
            ->capture_default_str();
        cmd.add_option("--rate", extract_options.pre.expected_sample_rate,
                       "Expected sample rate (mismatch is a warning)")
            ->capture_default_str();
        cmd.add_flag("--allow-mono", extract_options.wav.allow_mono_upmix,
                     "Accept mono files by duplicating the channel");
    };

    auto* extract = app.add_subcommand("extract", "Extract features for a manifest");
    extract->add_option("--manifest", manifest_path, "song_id,path,label CSV")
        ->required();
    extract->add_option("--out", out_path, "Dataset CSV to write")->required();
    extract->add_option("--agg", agg_name, "mean_std or per_window_vote")
        ->capture_default_str();
    extract->add_option("--jobs", extract_options.jobs, "Songs processed in parallel")
        ->capture_default_str();
    add_extract_flags(*extract);

    ForestFlags train_flags;
    auto* train = app.add_subcommand("train", "Train a classifier on a dataset");
    train->add_option("--dataset", dataset_path, "Dataset CSV")->required();
    train->add_option("--model-out", model_path, "Model file to write")->required();
    train_flags.add_to(*train);

    ForestFlags eval_flags;
    std::string protocol = "cv";
    std::size_t folds = 5;
    double train_fraction = 0.9;
    std::uint64_t split_seed = 49;
    std::string out_prefix;
    auto* evaluate = app.add_subcommand("evaluate", "Cross-validate or split-evaluate");
    evaluate->add_option("--dataset", dataset_path, "Dataset CSV")->required();
    evaluate->add_option("--protocol", protocol, "cv or split")->capture_default_str();
    evaluate->add_option("--folds", folds, "Folds for the cv protocol")
        ->capture_default_str();
    evaluate->add_option("--train-fraction", train_fraction,
                         "Train share for the split protocol")
        ->capture_default_str();
    evaluate->add_option("--split-seed", split_seed, "Seed for splits and folds")
        ->capture_default_str();
    evaluate->add_option("--out-prefix", out_prefix,
                         "Write report.txt, report.kv and confusion.txt with this prefix");
    eval_flags.add_to(*evaluate);

    std::vector<std::string> audio_paths;
    bool as_json = false;
    auto* predict = app.add_subcommand("predict", "Classify dataset rows or WAV files");
    predict->add_option("--model", model_path, "Model file")->required();
    auto* predict_dataset =
        predict->add_option("--dataset", dataset_path, "Dataset CSV to classify");
    predict->add_option("--audio", audio_paths, "WAV files to classify")
        ->excludes(predict_dataset);
    predict->add_flag("--json", as_json, "Emit JSON instead of plain lines");
    add_extract_flags(*predict);

    std::string synth_out, synth_spec;
    int synth_songs = 0;
    double synth_duration = 0.0;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--spec", synth_spec, "JSON recipe (defaults to a 3-class demo)");
    synth->add_option("--songs-per-class", synth_songs, "Override songs per class");
    synth->add_option("--duration", synth_duration, "Override song length in seconds");
    auto* seed_opt = synth->add_option("--seed", synth_seed, "Override the corpus seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            return cmd_extract(manifest_path, out_path, agg_name, extract_options);
        }
        if (train->parsed()) {
            return cmd_train(dataset_path, model_path, train_flags);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(dataset_path, protocol, folds, train_fraction,
                                split_seed, eval_flags, out_prefix);
        }
        if (predict->parsed()) {
            if (dataset_path.empty() && audio_paths.empty()) {
                throw std::runtime_error("predict needs --dataset or --audio");
            }
            return cmd_predict(model_path, dataset_path, audio_paths, as_json,
                               extract_options);
        }
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_spec, synth_songs, synth_duration,
                             synth_seed, seed_opt->count() > 0);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
