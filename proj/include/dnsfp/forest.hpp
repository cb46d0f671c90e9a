#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnsfp/featurizer.hpp"

namespace dnsfp {

// Internal nodes route value <= threshold left and value > threshold
// right; leaves hold the class counts of the training samples they absorb.
struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    std::vector<uint32_t> class_counts;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

enum class MaxFeatures { sqrt_total };

struct TrainConfig {
    int n_trees = 100;
    MaxFeatures max_features = MaxFeatures::sqrt_total;  // floor(sqrt(F)) per split
    int min_samples_split = 2;
    int max_depth = 0;  // 0 = unlimited
    bool bootstrap = true;
    uint64_t seed = 0;
};

struct Forest {
    std::vector<Tree> trees;
    int n_classes = 0;
    size_t n_features = 0;
    std::vector<double> feature_importances;  // sums to 1, or all zero
    uint64_t seed = 0;
    std::vector<uint64_t> per_tree_seeds;
    std::optional<double> oob_error;  // only when bootstrap sampling is on
};

// Entropy-split random forest: each tree sees a bootstrap sample and
// floor(sqrt(F)) candidate features per node. Deterministic in (X, y, cfg)
// regardless of n_threads.
Forest train(const FeatureMatrix& X, const std::vector<int>& y, const TrainConfig& cfg,
             int n_threads = 1);

// Mean of the trees' leaf class-frequency distributions; sums to 1.
std::vector<double> predict_proba(const Forest& f, std::span<const float> row);

// Majority vote over per-tree argmax classes; ties go to the lowest index.
int predict(const Forest& f, std::span<const float> row);

inline const std::vector<double>& importances(const Forest& f) {
    return f.feature_importances;
}

// k keys with the largest importance, descending, ties by key order.
std::vector<std::pair<NGramKey, double>> top_k_features(const Forest& f,
                                                        const FeatureSpace& space, size_t k);

std::string serialize_forest(const Forest& f);
Forest parse_forest(const std::string& text);
void save_forest(const Forest& f, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

// CSV keyed by serialized NGramKey, importance descending; top_k = 0 keeps
// every feature.
void export_importances_csv(const Forest& f, const FeatureSpace& space,
                            const std::filesystem::path& path, size_t top_k = 0);

}  // namespace dnsfp
