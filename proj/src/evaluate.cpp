#include "mixmeter/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mixmeter/rng.hpp"

namespace mixmeter {
namespace {

/// Class names in first-appearance order.
std::vector<std::string> class_order(const std::vector<std::string>& labels) {
    std::vector<std::string> classes;
    for (const auto& label : labels) {
        if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
            classes.push_back(label);
        }
    }
    return classes;
}

int class_index(const std::vector<std::string>& classes, const std::string& label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw std::runtime_error("unknown class label: " + label);
    return static_cast<int>(it - classes.begin());
}

/// Rows grouped into units by id, first-appearance order.
struct Units {
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> rows;
};

Units group_units(const EvalData& data) {
    if (data.X.size() != data.row_ids.size() || data.X.size() != data.row_labels.size()) {
        throw std::invalid_argument("evaluation rows, ids and labels must align");
    }
    Units units;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < data.X.size(); ++r) {
        const auto& id = data.row_ids[r];
        auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, units.ids.size());
            units.ids.push_back(id);
            units.labels.push_back(data.row_labels[r]);
            units.rows.push_back({r});
        } else {
            if (units.labels[it->second] != data.row_labels[r]) {
                throw std::runtime_error("conflicting labels for id " + id);
            }
            units.rows[it->second].push_back(r);
        }
    }
    return units;
}

/// Per-class index lists, classes in first-appearance order, each list
/// shuffled by the shared generator.
std::vector<std::vector<std::size_t>> shuffled_class_indices(
    const std::vector<std::string>& labels, std::uint64_t seed) {
    const auto classes = class_order(labels);
    std::vector<std::vector<std::size_t>> per_class(classes.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        per_class[static_cast<std::size_t>(class_index(classes, labels[i]))].push_back(i);
    }
    Rng rng(seed);
    for (auto& indices : per_class) rng.shuffle(indices);
    return per_class;
}

int vote(const ForestModel& model, const EvalData& data,
         const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> ballots(model.classes.size(), 0);
    for (std::size_t r : rows) ballots[static_cast<std::size_t>(
        forest_predict(model, data.X[r]))]++;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < ballots.size(); ++i) {
        if (ballots[i] > ballots[arg]) arg = i;  // ties keep the lowest index
    }
    return static_cast<int>(arg);
}

ForestModel fit_on_rows(const EvalData& data, const std::vector<std::size_t>& rows,
                        const std::vector<std::string>& classes,
                        const TrainOptions& options) {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    X.reserve(rows.size());
    y.reserve(rows.size());
    for (std::size_t r : rows) {
        X.push_back(data.X[r]);
        y.push_back(class_index(classes, data.row_labels[r]));
    }
    ForestModel model;
    model.classes = classes;
    model.config = options.forest;
    if (options.use_pca) {
        model.pca = pca_fit(X, options.pca_components);
        X = pca_transform(*model.pca, X);
    }
    model.n_features = X.empty() ? 0 : X[0].size();
    model.trees = forest_fit(X, y, classes.size(), options.forest);
    return model;
}

FoldResult score_units(const ForestModel& model, const EvalData& data,
                       const Units& units, const std::vector<std::size_t>& eval_units,
                       const std::vector<std::string>& classes,
                       std::vector<int>* pooled_actual,
                       std::vector<int>* pooled_predicted) {
    std::vector<int> actual, predicted;
    actual.reserve(eval_units.size());
    predicted.reserve(eval_units.size());
    for (std::size_t u : eval_units) {
        actual.push_back(class_index(classes, units.labels[u]));
        predicted.push_back(vote(model, data, units.rows[u]));
    }
    if (pooled_actual != nullptr) {
        pooled_actual->insert(pooled_actual->end(), actual.begin(), actual.end());
        pooled_predicted->insert(pooled_predicted->end(), predicted.begin(),
                                 predicted.end());
    }
    FoldResult fold;
    fold.confusion = make_confusion(actual, predicted, classes);
    fold.report = make_report(fold.confusion);
    return fold;
}

std::vector<std::size_t> train_rows_for(const Units& units,
                                        const std::vector<std::size_t>& train_units) {
    std::vector<std::size_t> rows;
    for (std::size_t u : train_units) {
        rows.insert(rows.end(), units.rows[u].begin(), units.rows[u].end());
    }
    return rows;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed) {
    if (labels.empty()) throw std::invalid_argument("split of an empty label list");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must be inside (0, 1)");
    }
    std::vector<std::size_t> train, eval;
    for (const auto& indices : shuffled_class_indices(labels, seed)) {
        const auto n_train = static_cast<std::size_t>(
            std::lround(train_fraction * static_cast<double>(indices.size())));
        for (std::size_t i = 0; i < indices.size(); ++i) {
            (i < n_train ? train : eval).push_back(indices[i]);
        }
    }
    std::sort(train.begin(), train.end());
    std::sort(eval.begin(), eval.end());
    return {train, eval};
}

std::vector<std::vector<std::size_t>> stratified_folds(
    const std::vector<std::string>& labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need at least two folds");
    if (k > labels.size()) throw std::invalid_argument("more folds than samples");
    std::vector<std::vector<std::size_t>> folds(k);
    for (const auto& indices : shuffled_class_indices(labels, seed)) {
        for (std::size_t i = 0; i < indices.size(); ++i) {
            folds[i % k].push_back(indices[i]);
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (const auto& row : counts) {
        for (std::size_t v : row) sum += v;
    }
    return sum;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
    return sum;
}

ConfusionMatrix make_confusion(const std::vector<int>& actual,
                               const std::vector<int>& predicted,
                               const std::vector<std::string>& classes) {
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("actual/predicted size mismatch");
    }
    const std::size_t k = classes.size();
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const int a = actual[i], p = predicted[i];
        if (a < 0 || p < 0 || static_cast<std::size_t>(a) >= k ||
            static_cast<std::size_t>(p) >= k) {
            throw std::invalid_argument("class index out of range");
        }
        cm.counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)]++;
    }
    return cm;
}

ClassReport make_report(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes.size();
    const auto total = cm.total();
    ClassReport report;
    report.per_class.resize(k);

    double weighted_support = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t row_sum = 0, col_sum = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += cm.counts[i][j];
            col_sum += cm.counts[j][i];
        }
        const auto diag = static_cast<double>(cm.counts[i][i]);
        auto& m = report.per_class[i];
        m.name = cm.classes[i];
        m.support = row_sum;
        m.precision = col_sum == 0 ? 0.0 : diag / static_cast<double>(col_sum);
        m.recall = row_sum == 0 ? 0.0 : diag / static_cast<double>(row_sum);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);

        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.macro_f1 += m.f1;
        report.weighted_precision += m.precision * static_cast<double>(m.support);
        report.weighted_recall += m.recall * static_cast<double>(m.support);
        report.weighted_f1 += m.f1 * static_cast<double>(m.support);
        weighted_support += static_cast<double>(m.support);
    }
    if (k > 0) {
        report.macro_precision /= static_cast<double>(k);
        report.macro_recall /= static_cast<double>(k);
        report.macro_f1 /= static_cast<double>(k);
    }
    if (weighted_support > 0.0) {
        report.weighted_precision /= weighted_support;
        report.weighted_recall /= weighted_support;
        report.weighted_f1 /= weighted_support;
    }
    report.accuracy =
        total == 0 ? 0.0 : static_cast<double>(cm.trace()) / static_cast<double>(total);
    // Single-label multiclass pooling: every false negative is someone
    // else's false positive, so the three micro averages all equal accuracy.
    report.micro_precision = report.micro_recall = report.micro_f1 = report.accuracy;
    return report;
}

std::string format_report(const ClassReport& report) {
    std::size_t width = std::string("weighted avg").size();
    for (const auto& m : report.per_class) width = std::max(width, m.name.size());

    std::ostringstream os;
    auto row = [&](const std::string& name, const std::string& p, const std::string& r,
                   const std::string& f1, const std::string& support) {
        os << name << std::string(width - name.size(), ' ') << "  ";
        char buf[96];
        std::snprintf(buf, sizeof buf, "%9s  %9s  %9s  %9s", p.c_str(), r.c_str(),
                      f1.c_str(), support.c_str());
        os << buf << '\n';
    };
    row("", "precision", "recall", "f1", "support");
    std::size_t total = 0;
    for (const auto& m : report.per_class) {
        row(m.name, fmt3(m.precision), fmt3(m.recall), fmt3(m.f1),
            std::to_string(m.support));
        total += m.support;
    }
    os << '\n';
    row("accuracy", "", "", fmt3(report.accuracy), std::to_string(total));
    row("macro avg", fmt3(report.macro_precision), fmt3(report.macro_recall),
        fmt3(report.macro_f1), std::to_string(total));
    row("weighted avg", fmt3(report.weighted_precision), fmt3(report.weighted_recall),
        fmt3(report.weighted_f1), std::to_string(total));
    row("micro avg", fmt3(report.micro_precision), fmt3(report.micro_recall),
        fmt3(report.micro_f1), std::to_string(total));
    return os.str();
}

std::string format_confusion(const ConfusionMatrix& cm) {
    std::size_t width = std::string("actual\\predicted").size();
    for (const auto& name : cm.classes) width = std::max(width, name.size());
    for (const auto& row : cm.counts) {
        for (std::size_t v : row) width = std::max(width, std::to_string(v).size());
    }
    width += 2;

    std::ostringstream os;
    auto cell = [&](const std::string& text) {
        os << text << std::string(width - text.size(), ' ');
    };
    cell("actual\\predicted");
    for (const auto& name : cm.classes) cell(name);
    os << '\n';
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        cell(cm.classes[i]);
        for (std::size_t v : cm.counts[i]) cell(std::to_string(v));
        os << '\n';
    }
    return os.str();
}

std::string report_key_values(const ClassReport& report, const ConfusionMatrix& cm) {
    std::ostringstream os;
    char buf[64];
    auto put = [&](const std::string& key, double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        os << key << '=' << buf << '\n';
    };
    put("accuracy", report.accuracy);
    put("macro_precision", report.macro_precision);
    put("macro_recall", report.macro_recall);
    put("macro_f1", report.macro_f1);
    put("weighted_precision", report.weighted_precision);
    put("weighted_recall", report.weighted_recall);
    put("weighted_f1", report.weighted_f1);
    put("micro_precision", report.micro_precision);
    put("micro_recall", report.micro_recall);
    put("micro_f1", report.micro_f1);
    for (const auto& m : report.per_class) {
        put("class." + m.name + ".precision", m.precision);
        put("class." + m.name + ".recall", m.recall);
        put("class." + m.name + ".f1", m.f1);
        os << "class." << m.name << ".support=" << m.support << '\n';
    }
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        for (std::size_t j = 0; j < cm.classes.size(); ++j) {
            os << "confusion." << cm.classes[i] << '.' << cm.classes[j] << '='
               << cm.counts[i][j] << '\n';
        }
    }
    return os.str();
}

EvalResult evaluate_split(const EvalData& data, const EvalOptions& options) {
    const Units units = group_units(data);
    const auto classes = class_order(units.labels);
    auto [train_units, eval_units] =
        stratified_split(units.labels, options.train_fraction, options.split_seed);

    const auto model =
        fit_on_rows(data, train_rows_for(units, train_units), classes, options.train);

    EvalResult result;
    std::vector<int> actual, predicted;
    result.folds.push_back(
        score_units(model, data, units, eval_units, classes, &actual, &predicted));
    result.pooled = make_confusion(actual, predicted, classes);
    result.pooled_report = make_report(result.pooled);
    result.mean_accuracy = result.folds.front().report.accuracy;
    return result;
}

EvalResult evaluate_cv(const EvalData& data, const EvalOptions& options) {
    const Units units = group_units(data);
    const auto classes = class_order(units.labels);
    const auto folds = stratified_folds(units.labels, options.folds, options.split_seed);

    EvalResult result;
    std::vector<int> actual, predicted;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train_units;
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g == f) continue;
            train_units.insert(train_units.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_units.begin(), train_units.end());
        const auto model =
            fit_on_rows(data, train_rows_for(units, train_units), classes, options.train);
        result.folds.push_back(
            score_units(model, data, units, folds[f], classes, &actual, &predicted));
        result.mean_accuracy += result.folds.back().report.accuracy;
    }
    result.mean_accuracy /= static_cast<double>(folds.size());
    result.pooled = make_confusion(actual, predicted, classes);
    result.pooled_report = make_report(result.pooled);
    return result;
}

ForestModel train_model(const EvalData& data, const TrainOptions& options,
                        Aggregation aggregation, std::uint64_t feature_schema) {
    const Units units = group_units(data);
    const auto classes = class_order(units.labels);
    std::vector<std::size_t> all_rows(data.X.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    ForestModel model = fit_on_rows(data, all_rows, classes, options);
    model.aggregation = aggregation;
    model.feature_schema = feature_schema;
    return model;
}

std::vector<std::pair<std::string, int>> predict_units(const ForestModel& model,
                                                       const EvalData& data) {
    const Units units = group_units(data);
    std::vector<std::pair<std::string, int>> out;
    out.reserve(units.ids.size());
    for (std::size_t u = 0; u < units.ids.size(); ++u) {
        out.emplace_back(units.ids[u], vote(model, data, units.rows[u]));
    }
    return out;
}

std::vector<UnitPrediction> predict_units_detailed(const ForestModel& model,
                                                   const EvalData& data) {
    const Units units = group_units(data);
    std::vector<UnitPrediction> out;
    out.reserve(units.ids.size());
    for (std::size_t u = 0; u < units.ids.size(); ++u) {
        UnitPrediction p;
        p.id = units.ids[u];
        p.predicted = vote(model, data, units.rows[u]);
        p.mean_proba.assign(model.classes.size(), 0.0);
        for (std::size_t r : units.rows[u]) {
            const auto probs = forest_predict_proba(model, data.X[r]);
            for (std::size_t k = 0; k < probs.size(); ++k) p.mean_proba[k] += probs[k];
        }
        for (auto& v : p.mean_proba) v /= static_cast<double>(units.rows[u].size());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mixmeter
