#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mixmeter/evaluate.hpp"
#include "mixmeter/features.hpp"
#include "mixmeter/rng.hpp"

using namespace mixmeter;

namespace {

std::vector<std::string> repeated_labels(
    const std::vector<std::pair<std::string, std::size_t>>& spec) {
    std::vector<std::string> labels;
    for (const auto& [name, count] : spec) {
        labels.insert(labels.end(), count, name);
    }
    return labels;
}

std::map<std::string, std::size_t> count_by_label(
    const std::vector<std::string>& labels, const std::vector<std::size_t>& indices) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i : indices) counts[labels[i]]++;
    return counts;
}

/// Well separated class blobs; each unit owns `rows_per_unit` feature rows.
EvalData blob_data(std::size_t n_classes, std::size_t units_per_class,
                   std::size_t rows_per_unit, std::uint64_t seed) {
    const std::array<const char*, 4> tags = {"alpha", "bravo", "charlie", "delta"};
    Rng rng(seed);
    EvalData data;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t u = 0; u < units_per_class; ++u) {
            const std::string id =
                std::string(tags[c]) + "_song" + std::to_string(u);
            for (std::size_t r = 0; r < rows_per_unit; ++r) {
                data.X.push_back({static_cast<double>(c) * 40.0 + 0.05 * rng.normal(),
                                  static_cast<double>(c) * -20.0 + 0.05 * rng.normal(),
                                  rng.normal()});
                data.row_ids.push_back(id);
                data.row_labels.push_back(tags[c]);
            }
        }
    }
    return data;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        REQUIRE(eq != std::string::npos);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

TEST_CASE("stratified_split keeps per class proportions") {
    const auto labels = repeated_labels({{"x", 10}, {"z", 10}});
    const auto [train, eval] = stratified_split(labels, 0.8, 7);

    CHECK(train.size() == 16);
    CHECK(eval.size() == 4);
    CHECK(std::is_sorted(train.begin(), train.end()));
    CHECK(std::is_sorted(eval.begin(), eval.end()));

    auto train_counts = count_by_label(labels, train);
    auto eval_counts = count_by_label(labels, eval);
    CHECK(train_counts["x"] == 8);
    CHECK(train_counts["z"] == 8);
    CHECK(eval_counts["x"] == 2);
    CHECK(eval_counts["z"] == 2);

    std::vector<std::size_t> all(train);
    all.insert(all.end(), eval.begin(), eval.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("stratified_split rounds the train share per class") {
    // lround(0.5 * 9) = 5 for each of the two classes.
    const auto labels = repeated_labels({{"p", 9}, {"q", 9}});
    const auto [train, eval] = stratified_split(labels, 0.5, 3);
    CHECK(train.size() == 10);
    CHECK(eval.size() == 8);
    auto train_counts = count_by_label(labels, train);
    CHECK(train_counts["p"] == 5);
    CHECK(train_counts["q"] == 5);
}

TEST_CASE("stratified_split is seed deterministic") {
    const auto labels = repeated_labels({{"a", 12}, {"b", 6}, {"c", 9}});
    const auto first = stratified_split(labels, 0.7, 99);
    const auto second = stratified_split(labels, 0.7, 99);
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);

    const auto other = stratified_split(labels, 0.7, 100);
    CHECK(first.first != other.first);
}

TEST_CASE("stratified_split validates its input") {
    CHECK_THROWS_AS(stratified_split({}, 0.5, 1), std::invalid_argument);
    const std::vector<std::string> labels = {"a", "a", "b", "b"};
    CHECK_THROWS_AS(stratified_split(labels, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(labels, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(labels, -0.3, 1), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(labels, 1.7, 1), std::invalid_argument);
}

TEST_CASE("stratified_folds deals classes round robin") {
    SUBCASE("single class sizes") {
        const auto labels = repeated_labels({{"only", 11}});
        const auto folds = stratified_folds(labels, 5, 8);
        REQUIRE(folds.size() == 5);
        CHECK(folds[0].size() == 3);
        for (std::size_t f = 1; f < 5; ++f) CHECK(folds[f].size() == 2);
    }
    SUBCASE("two classes balance inside every fold") {
        const auto labels = repeated_labels({{"a", 7}, {"b", 5}});
        const auto folds = stratified_folds(labels, 3, 8);
        REQUIRE(folds.size() == 3);
        CHECK(folds[0].size() == 5);
        CHECK(folds[1].size() == 4);
        CHECK(folds[2].size() == 3);
        for (const auto& fold : folds) {
            CHECK(std::is_sorted(fold.begin(), fold.end()));
            auto counts = count_by_label(labels, fold);
            CHECK(counts["a"] >= 2);
            CHECK(counts["b"] >= 1);
        }
    }
    SUBCASE("folds partition the index range") {
        const auto labels = repeated_labels({{"a", 9}, {"b", 6}});
        const auto folds = stratified_folds(labels, 4, 21);
        std::vector<std::size_t> all;
        for (const auto& fold : folds) all.insert(all.end(), fold.begin(), fold.end());
        std::sort(all.begin(), all.end());
        REQUIRE(all.size() == labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    }
    SUBCASE("leave one out") {
        const auto labels = repeated_labels({{"a", 6}});
        const auto folds = stratified_folds(labels, 6, 4);
        REQUIRE(folds.size() == 6);
        for (const auto& fold : folds) CHECK(fold.size() == 1);
    }
    SUBCASE("rejects bad fold counts") {
        const auto labels = repeated_labels({{"a", 4}});
        CHECK_THROWS_AS(stratified_folds(labels, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(stratified_folds(labels, 5, 1), std::invalid_argument);
    }
    SUBCASE("seed deterministic") {
        const auto labels = repeated_labels({{"a", 10}, {"b", 10}});
        CHECK(stratified_folds(labels, 5, 77) == stratified_folds(labels, 5, 77));
    }
}

TEST_CASE("make_confusion counts actual rows against predicted columns") {
    const std::vector<std::string> classes = {"red", "green", "blue"};
    const std::vector<int> actual = {0, 1, 1, 2, 2, 2};
    const std::vector<int> predicted = {0, 1, 0, 2, 2, 1};
    const auto cm = make_confusion(actual, predicted, classes);

    CHECK(cm.classes == classes);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[2][2] == 2);
    CHECK(cm.counts[2][1] == 1);
    CHECK(cm.counts[0][1] == 0);
    CHECK(cm.total() == 6);
    CHECK(cm.trace() == 4);
}

TEST_CASE("make_confusion handles empty and invalid input") {
    const std::vector<std::string> classes = {"a", "b"};
    const auto empty = make_confusion({}, {}, classes);
    CHECK(empty.total() == 0);
    const auto report = make_report(empty);
    CHECK(report.accuracy == 0.0);
    CHECK(report.per_class[0].support == 0);
    CHECK(report.per_class[0].precision == 0.0);

    CHECK_THROWS_AS(make_confusion({0}, {}, classes), std::invalid_argument);
    CHECK_THROWS_AS(make_confusion({0, 2}, {0, 0}, classes), std::invalid_argument);
    CHECK_THROWS_AS(make_confusion({0, -1}, {0, 0}, classes), std::invalid_argument);
    CHECK_THROWS_AS(make_confusion({0, 0}, {0, 5}, classes), std::invalid_argument);
}

TEST_CASE("a perfect confusion matrix reports all ones") {
    const std::vector<std::string> classes = {"a", "b", "c", "d"};
    std::vector<int> actual, predicted;
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < 5; ++i) {
            actual.push_back(c);
            predicted.push_back(c);
        }
    }
    const auto report = make_report(make_confusion(actual, predicted, classes));
    CHECK(report.accuracy == 1.0);
    CHECK(report.macro_f1 == 1.0);
    CHECK(report.weighted_precision == 1.0);
    CHECK(report.micro_f1 == 1.0);
    for (const auto& m : report.per_class) {
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
        CHECK(m.support == 5);
    }
}

TEST_CASE("ten class DJ study matrix reproduces the reported metrics") {
    const std::vector<std::string> classes = {"mg", "dv", "hw", "ab", "dg",
                                              "ti", "dd", "aj", "oh", "mm"};
    const std::array<std::array<std::size_t, 10>, 10> counts = {{
        {10, 0, 0, 0, 2, 4, 0, 0, 0, 0},
        {0, 6, 0, 1, 0, 0, 0, 1, 1, 1},
        {0, 1, 0, 1, 0, 1, 0, 0, 0, 0},
        {0, 2, 1, 2, 0, 5, 0, 0, 0, 1},
        {1, 0, 0, 0, 5, 0, 2, 2, 0, 0},
        {1, 0, 1, 0, 0, 12, 2, 0, 0, 0},
        {0, 0, 1, 1, 0, 2, 19, 0, 1, 1},
        {0, 0, 1, 0, 0, 1, 1, 2, 0, 0},
        {0, 0, 0, 0, 1, 0, 3, 1, 6, 0},
        {0, 0, 0, 1, 1, 0, 0, 0, 1, 17},
    }};

    std::vector<int> actual, predicted;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            for (std::size_t k = 0; k < counts[static_cast<std::size_t>(i)]
                                                [static_cast<std::size_t>(j)]; ++k) {
                actual.push_back(i);
                predicted.push_back(j);
            }
        }
    }
    const auto cm = make_confusion(actual, predicted, classes);
    CHECK(cm.total() == 127);
    CHECK(cm.trace() == 79);
    const std::array<std::size_t, 10> supports = {16, 10, 3, 11, 10, 16, 25, 5, 11, 20};

    const auto report = make_report(cm);
    const std::array<std::array<double, 3>, 10> expected = {{
        {0.833, 0.625, 0.714},
        {0.667, 0.600, 0.632},
        {0.000, 0.000, 0.000},
        {0.333, 0.182, 0.235},
        {0.556, 0.500, 0.526},
        {0.480, 0.750, 0.585},
        {0.704, 0.760, 0.731},
        {0.333, 0.400, 0.364},
        {0.667, 0.545, 0.600},
        {0.850, 0.850, 0.850},
    }};
    for (std::size_t c = 0; c < 10; ++c) {
        const auto& m = report.per_class[c];
        CHECK(m.support == supports[c]);
        CHECK(std::abs(m.precision - expected[c][0]) <= 0.001);
        CHECK(std::abs(m.recall - expected[c][1]) <= 0.001);
        CHECK(std::abs(m.f1 - expected[c][2]) <= 0.001);
    }
    CHECK(std::abs(report.weighted_precision - 0.634) <= 0.002);
    CHECK(std::abs(report.weighted_recall - 0.622) <= 0.002);
    CHECK(std::abs(report.weighted_f1 - 0.619) <= 0.002);
    CHECK(report.accuracy == 79.0 / 127.0);
    CHECK(report.micro_precision == report.accuracy);
    CHECK(report.micro_recall == report.accuracy);
    CHECK(report.micro_f1 == report.accuracy);
}

TEST_CASE("a never predicted class yields zero precision") {
    const std::vector<std::string> classes = {"a", "b"};
    // Every prediction lands on class a.
    const auto cm = make_confusion({0, 0, 1, 1}, {0, 0, 0, 0}, classes);
    const auto report = make_report(cm);
    CHECK(report.per_class[1].precision == 0.0);
    CHECK(report.per_class[1].recall == 0.0);
    CHECK(report.per_class[1].f1 == 0.0);
    CHECK(report.per_class[0].recall == 1.0);
    CHECK(report.accuracy == 0.5);
}

TEST_CASE("format_report lays out one row per class plus the averages") {
    const std::vector<std::string> classes = {"deep", "wide"};
    const auto cm = make_confusion({0, 0, 1, 1}, {0, 1, 1, 1}, classes);
    const auto text = format_report(make_report(cm));

    CHECK(text.find("precision") != std::string::npos);
    CHECK(text.find("recall") != std::string::npos);
    CHECK(text.find("support") != std::string::npos);
    CHECK(text.find("deep") != std::string::npos);
    CHECK(text.find("wide") != std::string::npos);
    CHECK(text.find("accuracy") != std::string::npos);
    CHECK(text.find("macro avg") != std::string::npos);
    CHECK(text.find("weighted avg") != std::string::npos);
    CHECK(text.find("micro avg") != std::string::npos);
    CHECK(text.find("0.750") != std::string::npos);  // accuracy 3/4
}

TEST_CASE("format_confusion prints the counts grid") {
    const std::vector<std::string> classes = {"one", "two"};
    const auto cm = make_confusion({0, 0, 0, 1}, {0, 0, 1, 1}, classes);
    const auto text = format_confusion(cm);
    CHECK(text.find("actual\\predicted") != std::string::npos);
    CHECK(text.find("one") != std::string::npos);
    CHECK(text.find("2") != std::string::npos);
    // One header line plus one line per class.
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("report_key_values emits a parsable flat map") {
    const std::vector<std::string> classes = {"kick", "snare"};
    const auto cm = make_confusion({0, 0, 1, 1}, {0, 1, 1, 1}, classes);
    const auto report = make_report(cm);
    const auto kv = parse_key_values(report_key_values(report, cm));

    CHECK(kv.at("accuracy") == "0.750000");
    CHECK(kv.at("class.kick.precision") == "1.000000");
    CHECK(kv.at("class.kick.recall") == "0.500000");
    CHECK(kv.at("class.snare.support") == "2");
    CHECK(kv.at("confusion.kick.kick") == "1");
    CHECK(kv.at("confusion.kick.snare") == "1");
    CHECK(kv.at("confusion.snare.snare") == "2");
    CHECK(kv.count("macro_f1") == 1);
    CHECK(kv.count("weighted_precision") == 1);
    CHECK(kv.count("micro_recall") == 1);
}

TEST_CASE("evaluate_split scores held out units of separable data") {
    const auto data = blob_data(3, 4, 5, 2024);
    EvalOptions options;
    options.train_fraction = 0.75;
    options.split_seed = 11;
    options.train.forest.n_estimators = 7;

    const auto result = evaluate_split(data, options);
    REQUIRE(result.folds.size() == 1);
    CHECK(result.mean_accuracy == 1.0);
    CHECK(result.pooled_report.accuracy == 1.0);
    // One eval unit per class.
    CHECK(result.pooled.total() == 3);
    CHECK(result.pooled.trace() == 3);
    CHECK(result.pooled.classes == std::vector<std::string>{"alpha", "bravo", "charlie"});

    const auto again = evaluate_split(data, options);
    CHECK(again.pooled.counts == result.pooled.counts);
}

TEST_CASE("evaluate_cv pools every unit exactly once") {
    const auto data = blob_data(3, 4, 4, 555);
    EvalOptions options;
    options.folds = 4;
    options.split_seed = 5;
    options.train.forest.n_estimators = 7;

    const auto result = evaluate_cv(data, options);
    REQUIRE(result.folds.size() == 4);
    CHECK(result.pooled.total() == 12);
    CHECK(result.pooled.trace() == 12);
    CHECK(result.mean_accuracy == 1.0);
    double mean = 0.0;
    for (const auto& fold : result.folds) {
        CHECK(fold.confusion.total() == 3);
        mean += fold.report.accuracy;
    }
    CHECK(result.mean_accuracy == mean / 4.0);
}

TEST_CASE("evaluate_split works with the PCA front end enabled") {
    const auto data = blob_data(2, 5, 4, 31);
    EvalOptions options;
    options.train_fraction = 0.8;
    options.train.forest.n_estimators = 5;
    options.train.use_pca = true;
    options.train.pca_components = 2;

    const auto result = evaluate_split(data, options);
    CHECK(result.mean_accuracy == 1.0);
}

TEST_CASE("train_model memorizes separable training units") {
    const auto data = blob_data(3, 3, 4, 99);
    TrainOptions options;
    options.forest.n_estimators = 7;
    const auto model = train_model(data, options, Aggregation::kMeanStd,
                                   schema_hash(Aggregation::kMeanStd));

    CHECK(model.classes == std::vector<std::string>{"alpha", "bravo", "charlie"});
    CHECK(model.aggregation == Aggregation::kMeanStd);
    CHECK(model.feature_schema == schema_hash(Aggregation::kMeanStd));
    CHECK(model.n_features == 3);
    CHECK_FALSE(model.pca.has_value());

    const auto predictions = predict_units(model, data);
    REQUIRE(predictions.size() == 9);
    for (const auto& [id, predicted] : predictions) {
        int expected = 0;
        if (id.rfind("bravo", 0) == 0) expected = 1;
        if (id.rfind("charlie", 0) == 0) expected = 2;
        CHECK(predicted == expected);
    }
}

TEST_CASE("unit votes group interleaved rows and break ties low") {
    // Train on two tight blobs, then vote units assembled by hand.
    const auto train = blob_data(2, 4, 3, 404);
    TrainOptions options;
    options.forest.n_estimators = 9;
    const auto model = train_model(train, options, Aggregation::kPerWindowVote,
                                   schema_hash(Aggregation::kPerWindowVote));

    EvalData probe;
    const std::vector<double> at_alpha = {0.0, 0.0, 0.0};
    const std::vector<double> at_bravo = {40.0, -20.0, 0.0};
    // "mixed" rows are interleaved with the "pure" unit's rows.
    probe.X = {at_bravo, at_alpha, at_bravo, at_bravo, at_alpha};
    probe.row_ids = {"mixed", "pure", "mixed", "mixed", "pure"};
    probe.row_labels = {"bravo", "alpha", "bravo", "bravo", "alpha"};

    const auto predictions = predict_units(model, probe);
    REQUIRE(predictions.size() == 2);
    CHECK(predictions[0].first == "mixed");  // first appearance order
    CHECK(predictions[0].second == 1);       // 2 of 3 rows vote bravo
    CHECK(predictions[1].first == "pure");
    CHECK(predictions[1].second == 0);

    EvalData tie;
    tie.X = {at_alpha, at_bravo};
    tie.row_ids = {"split", "split"};
    tie.row_labels = {"alpha", "alpha"};
    const auto tied = predict_units(model, tie);
    REQUIRE(tied.size() == 1);
    CHECK(tied[0].second == 0);  // equal ballots keep the lowest class

    const auto detailed = predict_units_detailed(model, tie);
    REQUIRE(detailed.size() == 1);
    CHECK(detailed[0].id == "split");
    CHECK(detailed[0].predicted == 0);
    REQUIRE(detailed[0].mean_proba.size() == 2);
    CHECK(detailed[0].mean_proba[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(detailed[0].mean_proba[0] + detailed[0].mean_proba[1] ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluation input validation") {
    EvalData bad = blob_data(2, 2, 2, 1);
    bad.row_ids.pop_back();
    EvalOptions options;
    CHECK_THROWS_AS(evaluate_split(bad, options), std::invalid_argument);

    EvalData conflict = blob_data(2, 2, 2, 2);
    conflict.row_labels.back() = "alpha";
    conflict.row_labels.front() = "bravo";
    CHECK_THROWS_WITH_AS(evaluate_cv(conflict, options),
                         doctest::Contains("conflicting labels"), std::runtime_error);
}
