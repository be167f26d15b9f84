#include "mixmeter/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mixmeter/parallel.hpp"
#include "mixmeter/rng.hpp"

namespace mixmeter {
namespace {

double entropy_of(const std::vector<std::size_t>& counts, std::size_t total) {
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

/// Grows one tree depth-first (left child before right). All randomness
/// comes from the provided generator: first the bootstrap draw, then one
/// partial Fisher-Yates per node for the candidate features.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                std::size_t n_classes, const ForestConfig& config, Rng rng,
                std::vector<NodeAudit>* audit)
        : X_(X), y_(y), n_classes_(n_classes), config_(config), rng_(rng),
          audit_(audit), d_(X.empty() ? 0 : X[0].size()),
          m_(config.resolve_max_features(X.empty() ? 0 : X[0].size())) {
        pool_.resize(d_);
        for (std::size_t j = 0; j < d_; ++j) pool_[j] = j;
    }

    DecisionTree build() {
        const std::size_t n = X_.size();
        std::vector<std::size_t> indices;
        indices.reserve(n);
        if (config_.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                indices.push_back(static_cast<std::size_t>(rng_.bounded(n)));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) indices.push_back(i);
        }
        DecisionTree tree;
        grow(tree, indices, 0);
        return tree;
    }

private:
    struct BestSplit {
        double gain = 0.0;
        std::size_t feature = 0;
        double threshold = 0.0;
        bool found = false;
        int audit_index = -1;
    };

    int grow(DecisionTree& tree, std::vector<std::size_t>& indices, int depth) {
        const std::size_t size = indices.size();
        std::vector<std::size_t> counts(n_classes_, 0);
        for (std::size_t i : indices) counts[static_cast<std::size_t>(y_[i])]++;

        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool pure =
            std::count_if(counts.begin(), counts.end(),
                          [](std::size_t c) { return c > 0; }) <= 1;
        const bool depth_capped = config_.max_depth >= 0 && depth >= config_.max_depth;
        const bool too_small =
            size < static_cast<std::size_t>(std::max(config_.min_samples_split, 2));

        BestSplit best;
        NodeAudit node_audit;
        if (!pure && !depth_capped && !too_small) {
            best = find_split(indices, counts, audit_ ? &node_audit : nullptr);
        }
        if (audit_) {
            node_audit.chosen = best.found ? best.audit_index : -1;
            audit_->push_back(std::move(node_audit));
        }

        if (!best.found) {
            auto& leaf = tree.nodes[id];
            leaf.probs.resize(n_classes_);
            for (std::size_t k = 0; k < n_classes_; ++k) {
                leaf.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(size);
            }
            return id;
        }

        std::vector<std::size_t> left_idx, right_idx;
        left_idx.reserve(size);
        right_idx.reserve(size);
        for (std::size_t i : indices) {
            (X_[i][best.feature] <= best.threshold ? left_idx : right_idx).push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        tree.nodes[id].feature = static_cast<int>(best.feature);
        tree.nodes[id].threshold = best.threshold;
        const int left = grow(tree, left_idx, depth + 1);
        tree.nodes[id].left = left;
        const int right = grow(tree, right_idx, depth + 1);
        tree.nodes[id].right = right;
        return id;
    }

    BestSplit find_split(const std::vector<std::size_t>& indices,
                         const std::vector<std::size_t>& counts, NodeAudit* audit) {
        const std::size_t size = indices.size();
        const double h_parent = entropy_of(counts, size);

        // Draw m candidate features without replacement.
        for (std::size_t j = 0; j < m_; ++j) {
            const std::size_t pick =
                j + static_cast<std::size_t>(rng_.bounded(d_ - j));
            std::swap(pool_[j], pool_[pick]);
        }

        BestSplit best;
        std::vector<std::size_t> sorted(indices);
        std::vector<std::size_t> left_counts(n_classes_);
        std::vector<std::size_t> right_counts(n_classes_);

        for (std::size_t j = 0; j < m_; ++j) {
            const std::size_t f = pool_[j];
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                const double va = X_[a][f], vb = X_[b][f];
                return va < vb || (va == vb && a < b);
            });

            std::fill(left_counts.begin(), left_counts.end(), 0);
            for (std::size_t pos = 0; pos + 1 < size; ++pos) {
                left_counts[static_cast<std::size_t>(y_[sorted[pos]])]++;
                const double v0 = X_[sorted[pos]][f];
                const double v1 = X_[sorted[pos + 1]][f];
                if (!(v0 < v1)) continue;

                const std::size_t nl = pos + 1;
                const std::size_t nr = size - nl;
                for (std::size_t k = 0; k < n_classes_; ++k) {
                    right_counts[k] = counts[k] - left_counts[k];
                }
                const double h_split =
                    (static_cast<double>(nl) * entropy_of(left_counts, nl) +
                     static_cast<double>(nr) * entropy_of(right_counts, nr)) /
                    static_cast<double>(size);
                const double gain = h_parent - h_split;

                double threshold = v0 + (v1 - v0) / 2.0;
                if (!(threshold < v1)) threshold = v0;  // keep v1 on the right

                if (audit != nullptr) {
                    audit->evaluated.push_back({f, threshold, gain});
                }
                // Strict improvement, so earlier candidates win gain ties.
                if (gain > 0.0 && (!best.found || gain > best.gain)) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = threshold;
                    if (audit != nullptr) {
                        best.audit_index = static_cast<int>(audit->evaluated.size()) - 1;
                    }
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<int>& y_;
    const std::size_t n_classes_;
    const ForestConfig& config_;
    Rng rng_;
    std::vector<NodeAudit>* audit_;
    const std::size_t d_;
    const std::size_t m_;
    std::vector<std::size_t> pool_;
};

}  // namespace

double entropy_bits(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total == 0) throw std::invalid_argument("entropy of an empty count vector");
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

std::size_t ForestConfig::resolve_max_features(std::size_t d) const {
    if (d == 0) return 0;
    std::size_t m = d;
    switch (max_features) {
        case MaxFeaturesRule::kSqrt:
            m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
            break;
        case MaxFeaturesRule::kAll:
            m = d;
            break;
        case MaxFeaturesRule::kFixed:
            m = static_cast<std::size_t>(std::max(max_features_fixed, 1));
            break;
    }
    return std::clamp<std::size_t>(m, 1, d);
}

std::vector<DecisionTree> forest_fit(const std::vector<std::vector<double>>& X,
                                     const std::vector<int>& y, std::size_t n_classes,
                                     const ForestConfig& config,
                                     std::vector<NodeAudit>* audit) {
    if (X.empty()) throw std::invalid_argument("forest_fit: empty training set");
    if (X.size() != y.size()) throw std::invalid_argument("forest_fit: X/y size mismatch");
    if (n_classes == 0) throw std::invalid_argument("forest_fit: no classes");
    const std::size_t d = X[0].size();
    if (d == 0) throw std::invalid_argument("forest_fit: zero-width rows");
    for (const auto& row : X) {
        if (row.size() != d) throw std::invalid_argument("forest_fit: ragged rows");
    }
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
            throw std::invalid_argument("forest_fit: label out of range");
        }
    }
    for (const auto& row : X) {
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("forest_fit: non-finite feature value");
            }
        }
    }
    bool multi_class = false;
    for (int label : y) {
        if (label != y.front()) {
            multi_class = true;
            break;
        }
    }
    if (!multi_class) throw std::invalid_argument("forest_fit: single-class input");
    if (config.n_estimators < 1) {
        throw std::invalid_argument("forest_fit: need at least one tree");
    }

    const auto n_trees = static_cast<std::size_t>(config.n_estimators);
    std::vector<DecisionTree> trees(n_trees);
    // Per-tree seeds depend only on (random_state, tree index), so the
    // forest is identical however many workers run.
    const int jobs = audit != nullptr ? 1 : config.jobs;
    parallel_for(n_trees, jobs, [&](std::size_t t) {
        Rng rng(Rng::mix(config.random_state, t));
        TreeBuilder builder(X, y, n_classes, config, rng, audit);
        trees[t] = builder.build();
    });
    return trees;
}

std::vector<double> tree_predict_proba(const DecisionTree& tree,
                                       std::span<const double> x,
                                       std::size_t n_classes) {
    const TreeNode* node = &tree.nodes.at(0);
    while (!node->is_leaf()) {
        const std::size_t f = static_cast<std::size_t>(node->feature);
        node = &tree.nodes[static_cast<std::size_t>(
            x[f] <= node->threshold ? node->left : node->right)];
    }
    if (node->probs.size() != n_classes) {
        throw std::runtime_error("tree leaf has wrong class count");
    }
    return node->probs;
}

std::vector<double> forest_predict_proba(const ForestModel& model,
                                         std::span<const double> x) {
    std::vector<double> input(x.begin(), x.end());
    if (model.pca.has_value()) input = pca_transform(*model.pca, input);
    if (input.size() != model.n_features) {
        throw std::invalid_argument("predict: feature count mismatch");
    }
    const std::size_t k = model.classes.size();
    std::vector<double> probs(k, 0.0);
    for (const auto& tree : model.trees) {
        const auto p = tree_predict_proba(tree, input, k);
        for (std::size_t i = 0; i < k; ++i) probs[i] += p[i];
    }
    for (auto& p : probs) p /= static_cast<double>(model.trees.size());
    return probs;
}

int forest_predict(const ForestModel& model, std::span<const double> x) {
    const auto probs = forest_predict_proba(model, x);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[arg]) arg = i;  // ties keep the lowest index
    }
    return static_cast<int>(arg);
}

namespace {

const char* rule_name(MaxFeaturesRule rule) {
    switch (rule) {
        case MaxFeaturesRule::kSqrt: return "sqrt";
        case MaxFeaturesRule::kAll: return "all";
        case MaxFeaturesRule::kFixed: return "fixed";
    }
    return "sqrt";
}

MaxFeaturesRule parse_rule(const std::string& name) {
    if (name == "sqrt") return MaxFeaturesRule::kSqrt;
    if (name == "all") return MaxFeaturesRule::kAll;
    if (name == "fixed") return MaxFeaturesRule::kFixed;
    throw std::runtime_error("model file: unknown max_features rule " + name);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_model(const std::filesystem::path& path, const ForestModel& model) {
    std::ostringstream os;
    os << "mixmeter model v1\n";
    os << "schema " << model.feature_schema << '\n';
    os << "aggregation " << aggregation_name(model.aggregation) << '\n';
    os << "n_features " << model.n_features << '\n';
    os << "classes " << model.classes.size() << '\n';
    for (const auto& name : model.classes) os << "class " << name << '\n';
    const auto& c = model.config;
    os << "config n_estimators " << c.n_estimators << " max_depth " << c.max_depth
       << " min_samples_split " << c.min_samples_split << " bootstrap "
       << (c.bootstrap ? 1 : 0) << " max_features " << rule_name(c.max_features)
       << " max_features_fixed " << c.max_features_fixed << " random_state "
       << c.random_state << '\n';
    os << "pca " << (model.pca.has_value() ? 1 : 0) << '\n';
    if (model.pca.has_value()) write_pca(os, *model.pca);
    os << "trees " << model.trees.size() << '\n';
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& tree = model.trees[t];
        os << "tree " << t << ' ' << tree.nodes.size() << '\n';
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& node = tree.nodes[i];
            if (node.is_leaf()) {
                os << "node " << i << " leaf";
                for (double p : node.probs) os << ' ' << fmt_double(p);
                os << '\n';
            } else {
                os << "node " << i << " split " << node.feature << ' '
                   << fmt_double(node.threshold) << ' ' << node.left << ' ' << node.right
                   << '\n';
            }
        }
    }
    os << "end\n";

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error(path.string() + ": cannot open for writing");
    const std::string text = os.str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw std::runtime_error(path.string() + ": write error");
}

ForestModel read_model(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error(path.string() + ": cannot open");
    auto bad = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error(path.string() + ": " + what);
    };

    std::string line;
    if (!std::getline(file, line) || line != "mixmeter model v1") {
        throw bad("not a mixmeter model file (or unknown version)");
    }

    ForestModel model;
    std::string word;
    auto expect = [&](const char* keyword) {
        if (!(file >> word) || word != keyword) {
            throw bad(std::string("expected ") + keyword);
        }
    };

    expect("schema");
    if (!(file >> model.feature_schema)) throw bad("bad schema value");
    expect("aggregation");
    if (!(file >> word)) throw bad("bad aggregation value");
    model.aggregation = parse_aggregation(word);
    expect("n_features");
    if (!(file >> model.n_features)) throw bad("bad n_features value");
    expect("classes");
    std::size_t n_classes = 0;
    if (!(file >> n_classes) || n_classes == 0) throw bad("bad class count");
    for (std::size_t i = 0; i < n_classes; ++i) {
        expect("class");
        std::getline(file, line);
        if (line.empty() || line.front() != ' ') throw bad("bad class name line");
        model.classes.push_back(line.substr(1));
    }

    expect("config");
    auto read_int = [&](const char* keyword, auto& target) {
        expect(keyword);
        if (!(file >> target)) throw bad(std::string("bad ") + keyword);
    };
    read_int("n_estimators", model.config.n_estimators);
    read_int("max_depth", model.config.max_depth);
    read_int("min_samples_split", model.config.min_samples_split);
    int bootstrap = 0;
    read_int("bootstrap", bootstrap);
    model.config.bootstrap = bootstrap != 0;
    expect("max_features");
    if (!(file >> word)) throw bad("bad max_features");
    model.config.max_features = parse_rule(word);
    read_int("max_features_fixed", model.config.max_features_fixed);
    read_int("random_state", model.config.random_state);

    expect("pca");
    int has_pca = 0;
    if (!(file >> has_pca)) throw bad("bad pca flag");
    if (has_pca != 0) model.pca = read_pca(file);

    expect("trees");
    std::size_t n_trees = 0;
    if (!(file >> n_trees)) throw bad("bad tree count");
    model.trees.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        expect("tree");
        std::size_t index = 0, n_nodes = 0;
        if (!(file >> index >> n_nodes) || index != t) throw bad("trees out of order");
        auto& tree = model.trees[t];
        tree.nodes.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            expect("node");
            std::size_t id = 0;
            if (!(file >> id >> word) || id != i) throw bad("nodes out of order");
            auto& node = tree.nodes[i];
            if (word == "split") {
                if (!(file >> node.feature >> node.threshold >> node.left >> node.right)) {
                    throw bad("bad split node");
                }
                if (node.feature < 0) throw bad("split node with negative feature");
            } else if (word == "leaf") {
                node.probs.resize(n_classes);
                for (auto& p : node.probs) {
                    if (!(file >> p)) throw bad("bad leaf probabilities");
                }
            } else {
                throw bad("unknown node kind " + word);
            }
        }
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            if (node.left < 0 || node.right < 0 ||
                node.left >= static_cast<int>(n_nodes) ||
                node.right >= static_cast<int>(n_nodes)) {
                throw bad("node child out of range");
            }
        }
    }
    expect("end");
    return model;
}

}  // namespace mixmeter
