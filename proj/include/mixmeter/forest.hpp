#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixmeter/features.hpp"
#include "mixmeter/pca.hpp"

namespace mixmeter {

/// Shannon entropy of a count vector, in bits. Negative counts throw;
/// an all-zero vector throws.
double entropy_bits(std::span<const std::size_t> counts);

enum class MaxFeaturesRule { kSqrt, kAll, kFixed };

struct ForestConfig {
    int n_estimators = 25;
    int max_depth = 15;            // root is depth 0; <0 means unlimited
    int min_samples_split = 2;
    bool bootstrap = true;
    MaxFeaturesRule max_features = MaxFeaturesRule::kSqrt;
    int max_features_fixed = 0;    // used when rule == kFixed
    std::uint64_t random_state = 49;
    int jobs = 1;                  // tree-level parallelism

    /// Candidate features per split for dimensionality d: floor(sqrt(d)),
    /// d, or the fixed count, clamped to [1, d].
    std::size_t resolve_max_features(std::size_t d) const;
};

/// Internal node tests feature < -1 never; leaves have feature == -1 and
/// carry the class distribution of their training samples. x goes left
/// when x[feature] <= threshold.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> probs;  // leaves only; sums to 1

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

/// Records every candidate split evaluated at one node; lets tests check
/// the chosen gain is maximal.
struct SplitCandidate {
    std::size_t feature;
    double threshold;
    double gain;
};
struct NodeAudit {
    std::vector<SplitCandidate> evaluated;
    int chosen = -1;  // index into evaluated, -1 when the node became a leaf
};

struct ForestModel {
    std::vector<std::string> classes;  // index = class id
    ForestConfig config;
    std::vector<DecisionTree> trees;
    std::size_t n_features = 0;
    Aggregation aggregation = Aggregation::kMeanStd;
    std::uint64_t feature_schema = 0;
    std::optional<PcaModel> pca;  // applied before the trees when present
};

/// Fits the forest on X (n rows, d columns) with integer class labels in
/// [0, n_classes). Per-tree randomness derives from (random_state, tree
/// index) only, so results are reproducible regardless of jobs. audit, if
/// non-null, collects node evaluations (forces jobs = 1).
std::vector<DecisionTree> forest_fit(const std::vector<std::vector<double>>& X,
                                     const std::vector<int>& y, std::size_t n_classes,
                                     const ForestConfig& config,
                                     std::vector<NodeAudit>* audit = nullptr);

/// Mean of the leaf distributions over all trees (soft vote).
std::vector<double> forest_predict_proba(const ForestModel& model,
                                         std::span<const double> x);
std::vector<double> tree_predict_proba(const DecisionTree& tree,
                                       std::span<const double> x,
                                       std::size_t n_classes);

/// Argmax of predict_proba; ties resolve to the lowest class index.
int forest_predict(const ForestModel& model, std::span<const double> x);

/// Versioned text format, numbers at full double precision; retraining
/// with the same inputs reproduces the file byte for byte.
void write_model(const std::filesystem::path& path, const ForestModel& model);
ForestModel read_model(const std::filesystem::path& path);

}  // namespace mixmeter
