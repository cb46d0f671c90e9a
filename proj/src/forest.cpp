#include "dnsfp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnsfp/error.hpp"
#include "dnsfp/parallel.hpp"
#include "dnsfp/random.hpp"

namespace dnsfp {

namespace {

// Gains at or below this are treated as zero; a node only splits on
// strictly positive information gain.
constexpr double kMinGain = 1e-12;

// Cached x * log2(x) for integer x; entropy sweeps hit this constantly.
class XLog2Table {
public:
    explicit XLog2Table(size_t n) {
        values_.resize(n + 1);
        values_[0] = 0.0;
        for (size_t i = 1; i <= n; ++i) {
            values_[i] = static_cast<double>(i) * std::log2(static_cast<double>(i));
        }
    }
    double operator()(uint32_t x) const { return values_[x]; }

private:
    std::vector<double> values_;
};

struct SplitChoice {
    double gain = 0.0;
    int32_t feature = -1;
    double threshold = 0.0;
};

struct TreeResult {
    Tree tree;
    std::vector<std::pair<uint32_t, double>> split_gains;  // (feature, weighted gain)
    std::vector<char> in_bag;
};

class TreeTrainer {
public:
    TreeTrainer(const FeatureMatrix& X, const std::vector<int>& y, int n_classes,
                const TrainConfig& cfg, uint64_t tree_seed)
        : X_(X),
          y_(y),
          n_classes_(n_classes),
          cfg_(cfg),
          rng_(tree_seed),
          xlog_(X.rows()),
          n_candidates_(static_cast<size_t>(std::floor(std::sqrt(static_cast<double>(X.cols()))))) {}

    TreeResult run() {
        const size_t n = X_.rows();
        std::vector<uint32_t> samples;
        samples.reserve(n);
        result_.in_bag.assign(n, 0);
        if (cfg_.bootstrap) {
            for (size_t i = 0; i < n; ++i) {
                const auto pick = static_cast<uint32_t>(rng_.below(n));
                samples.push_back(pick);
                result_.in_bag[pick] = 1;
            }
        } else {
            for (size_t i = 0; i < n; ++i) samples.push_back(static_cast<uint32_t>(i));
            std::fill(result_.in_bag.begin(), result_.in_bag.end(), 1);
        }
        total_samples_ = samples.size();
        build(std::move(samples), 0);
        return std::move(result_);
    }

private:
    struct Pending {
        int32_t node;
        std::vector<uint32_t> samples;
        int depth;
    };

    // Depth-first construction with an explicit stack; recursion depth is
    // unbounded when max_depth is 0.
    void build(std::vector<uint32_t> root_samples, int root_depth) {
        auto& nodes = result_.tree.nodes;
        nodes.emplace_back();
        std::vector<Pending> stack;
        stack.push_back({0, std::move(root_samples), root_depth});

        std::vector<uint32_t> node_counts(n_classes_);
        while (!stack.empty()) {
            Pending item = std::move(stack.back());
            stack.pop_back();

            std::fill(node_counts.begin(), node_counts.end(), 0u);
            for (const uint32_t s : item.samples) ++node_counts[y_[s]];
            const auto n_node = static_cast<uint32_t>(item.samples.size());

            int present = 0;
            for (const uint32_t c : node_counts) present += c > 0;
            const bool depth_capped = cfg_.max_depth > 0 && item.depth >= cfg_.max_depth;
            SplitChoice best;
            if (present > 1 && n_node >= static_cast<uint32_t>(cfg_.min_samples_split) &&
                !depth_capped) {
                best = find_best_split(item.samples, node_counts, n_node);
            }

            if (best.feature < 0) {
                nodes[item.node].class_counts.assign(node_counts.begin(), node_counts.end());
                continue;
            }

            result_.split_gains.emplace_back(
                static_cast<uint32_t>(best.feature),
                best.gain * static_cast<double>(n_node) / static_cast<double>(total_samples_));

            std::vector<uint32_t> left_samples, right_samples;
            const auto col = X_.column(static_cast<size_t>(best.feature));
            for (const uint32_t s : item.samples) {
                if (static_cast<double>(col[s]) <= best.threshold) {
                    left_samples.push_back(s);
                } else {
                    right_samples.push_back(s);
                }
            }

            const auto left_index = static_cast<int32_t>(nodes.size());
            nodes.emplace_back();
            const auto right_index = static_cast<int32_t>(nodes.size());
            nodes.emplace_back();
            nodes[item.node].feature = best.feature;
            nodes[item.node].threshold = best.threshold;
            nodes[item.node].left = left_index;
            nodes[item.node].right = right_index;
            stack.push_back({right_index, std::move(right_samples), item.depth + 1});
            stack.push_back({left_index, std::move(left_samples), item.depth + 1});
        }
    }

    // Best information-gain split over floor(sqrt(F)) candidate features.
    // Candidate thresholds are midpoints between consecutive distinct
    // values; ties keep the lowest feature index, then lowest threshold.
    SplitChoice find_best_split(const std::vector<uint32_t>& samples,
                                const std::vector<uint32_t>& node_counts, uint32_t n_node) {
        const auto candidates = rng_.sample_indices(X_.cols(), n_candidates_);

        double node_slog = 0.0;
        for (const uint32_t c : node_counts) node_slog += xlog_(c);
        const double nd = static_cast<double>(n_node);
        const double node_entropy = std::log2(nd) - node_slog / nd;

        SplitChoice best;
        for (const uint32_t feature : candidates) {
            const auto col = X_.column(feature);

            // Counts are non-negative in trained matrices but rows are not
            // required to be, so zeros are merged into the sorted sweep as
            // their own block between negatives and positives.
            pairs_.clear();
            std::fill(zero_counts_.begin(), zero_counts_.end(), 0u);
            zero_counts_.resize(n_classes_, 0u);
            uint32_t n_zero = 0;
            for (const uint32_t s : samples) {
                const float v = col[s];
                if (v == 0.0f) {
                    ++zero_counts_[y_[s]];
                    ++n_zero;
                } else {
                    pairs_.emplace_back(v, y_[s]);
                }
            }
            if (pairs_.empty()) continue;  // single distinct value (all zero)
            if (n_zero == 0 && pairs_.size() == n_node) {
                const auto [mn, mx] = std::minmax_element(
                    pairs_.begin(), pairs_.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
                if (mn->first == mx->first) continue;
            }
            std::sort(pairs_.begin(), pairs_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            left_counts_.assign(n_classes_, 0u);
            right_counts_.assign(node_counts.begin(), node_counts.end());
            double slog_left = 0.0, slog_right = node_slog;
            uint32_t n_left = 0, n_right = n_node;

            auto move_to_left = [&](int cls, uint32_t delta) {
                slog_left += xlog_(left_counts_[cls] + delta) - xlog_(left_counts_[cls]);
                slog_right += xlog_(right_counts_[cls] - delta) - xlog_(right_counts_[cls]);
                left_counts_[cls] += delta;
                right_counts_[cls] -= delta;
                n_left += delta;
                n_right -= delta;
            };

            size_t i = 0;
            bool zeros_pending = n_zero > 0;
            while (true) {
                double group_value;
                if (zeros_pending && (i >= pairs_.size() || pairs_[i].first > 0.0f)) {
                    group_value = 0.0;
                    for (int c = 0; c < n_classes_; ++c) {
                        if (zero_counts_[c] > 0) move_to_left(c, zero_counts_[c]);
                    }
                    zeros_pending = false;
                } else if (i < pairs_.size()) {
                    const float v = pairs_[i].first;
                    group_value = static_cast<double>(v);
                    while (i < pairs_.size() && pairs_[i].first == v) {
                        move_to_left(pairs_[i].second, 1);
                        ++i;
                    }
                } else {
                    break;
                }

                double next_value;
                if (zeros_pending && (i >= pairs_.size() || pairs_[i].first > 0.0f)) {
                    next_value = 0.0;
                } else if (i < pairs_.size()) {
                    next_value = static_cast<double>(pairs_[i].first);
                } else {
                    break;  // everything is on the left; no threshold here
                }

                const double nl = static_cast<double>(n_left);
                const double nr = static_cast<double>(n_right);
                const double h_left = std::log2(nl) - slog_left / nl;
                const double h_right = std::log2(nr) - slog_right / nr;
                const double gain = node_entropy - (nl * h_left + nr * h_right) / nd;
                if (gain > best.gain && gain > kMinGain) {
                    best.gain = gain;
                    best.feature = static_cast<int32_t>(feature);
                    best.threshold = (group_value + next_value) / 2.0;
                }
            }
        }
        return best;
    }

    const FeatureMatrix& X_;
    const std::vector<int>& y_;
    int n_classes_;
    const TrainConfig& cfg_;
    Rng rng_;
    XLog2Table xlog_;
    size_t n_candidates_;
    size_t total_samples_ = 0;
    TreeResult result_;

    std::vector<std::pair<float, int>> pairs_;
    std::vector<uint32_t> zero_counts_;
    std::vector<uint32_t> left_counts_;
    std::vector<uint32_t> right_counts_;
};

const TreeNode& leaf_for(const Tree& tree, const FeatureMatrix& X, size_t row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        const double v = X(row, static_cast<size_t>(node->feature));
        node = &tree.nodes[v <= node->threshold ? node->left : node->right];
    }
    return *node;
}

const TreeNode& leaf_for(const Tree& tree, std::span<const float> row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        const double v = row[static_cast<size_t>(node->feature)];
        node = &tree.nodes[v <= node->threshold ? node->left : node->right];
    }
    return *node;
}

int leaf_argmax(const TreeNode& leaf) {
    int best = 0;
    for (size_t c = 1; c < leaf.class_counts.size(); ++c) {
        if (leaf.class_counts[c] > leaf.class_counts[best]) best = static_cast<int>(c);
    }
    return best;
}

void check_row_width(const Forest& f, size_t width) {
    if (width != f.n_features) {
        std::ostringstream os;
        os << "row has " << width << " features but the forest was trained on " << f.n_features;
        throw DataError(os.str());
    }
}

std::optional<double> out_of_bag_error(const FeatureMatrix& X, const std::vector<int>& y,
                                       int n_classes, const std::vector<TreeResult>& trees) {
    const size_t n = X.rows();
    std::vector<uint32_t> votes(n * static_cast<size_t>(n_classes), 0u);
    std::vector<char> covered(n, 0);
    for (const auto& t : trees) {
        for (size_t s = 0; s < n; ++s) {
            if (t.in_bag[s]) continue;
            const int cls = leaf_argmax(leaf_for(t.tree, X, s));
            ++votes[s * n_classes + cls];
            covered[s] = 1;
        }
    }
    size_t considered = 0, wrong = 0;
    for (size_t s = 0; s < n; ++s) {
        if (!covered[s]) continue;
        ++considered;
        int best = 0;
        for (int c = 1; c < n_classes; ++c) {
            if (votes[s * n_classes + c] > votes[s * n_classes + best]) best = c;
        }
        if (best != y[s]) ++wrong;
    }
    if (considered == 0) return std::nullopt;
    return static_cast<double>(wrong) / static_cast<double>(considered);
}

}  // namespace

Forest train(const FeatureMatrix& X, const std::vector<int>& y, const TrainConfig& cfg,
             int n_threads) {
    if (X.rows() == 0) throw DataError("cannot train on an empty matrix");
    if (X.rows() != y.size()) throw DataError("feature matrix and targets disagree in length");
    if (X.rows() < 2) throw DataError("training needs at least 2 samples");
    if (cfg.n_trees < 1) throw DataError("n_trees must be >= 1");
    if (cfg.min_samples_split < 2) throw DataError("min_samples_split must be >= 2");

    int n_classes = 0;
    for (const int cls : y) {
        if (cls < 0) throw DataError("negative class index");
        n_classes = std::max(n_classes, cls + 1);
    }
    std::vector<char> seen(n_classes, 0);
    for (const int cls : y) seen[cls] = 1;
    if (std::count(seen.begin(), seen.end(), 1) < 2) {
        throw DataError("degenerate training set: fewer than 2 distinct classes");
    }

    Forest f;
    f.n_classes = n_classes;
    f.n_features = X.cols();
    f.seed = cfg.seed;
    f.per_tree_seeds.reserve(cfg.n_trees);
    for (int i = 0; i < cfg.n_trees; ++i) {
        f.per_tree_seeds.push_back(mix_seed(cfg.seed, 0x7265e5u, static_cast<uint64_t>(i)));
    }

    std::vector<TreeResult> results(cfg.n_trees);
    parallel_for(static_cast<size_t>(cfg.n_trees), n_threads, [&](size_t i) {
        TreeTrainer trainer(X, y, n_classes, cfg, f.per_tree_seeds[i]);
        results[i] = trainer.run();
    });

    // Importances: per-split gains weighted by node sample fraction,
    // averaged over trees, normalized to sum 1 when any split exists.
    std::vector<double> importance(X.cols(), 0.0);
    for (const auto& r : results) {
        for (const auto& [feature, weighted_gain] : r.split_gains) {
            importance[feature] += weighted_gain;
        }
    }
    double total = 0.0;
    for (double& v : importance) {
        v /= static_cast<double>(cfg.n_trees);
        total += v;
    }
    if (total > 0.0) {
        for (double& v : importance) v /= total;
    }
    f.feature_importances = std::move(importance);

    if (cfg.bootstrap) f.oob_error = out_of_bag_error(X, y, n_classes, results);

    f.trees.reserve(results.size());
    for (auto& r : results) f.trees.push_back(std::move(r.tree));
    return f;
}

std::vector<double> predict_proba(const Forest& f, std::span<const float> row) {
    check_row_width(f, row.size());
    std::vector<double> proba(f.n_classes, 0.0);
    for (const auto& tree : f.trees) {
        const TreeNode& leaf = leaf_for(tree, row);
        uint64_t total = 0;
        for (const uint32_t c : leaf.class_counts) total += c;
        for (size_t c = 0; c < leaf.class_counts.size(); ++c) {
            proba[c] += static_cast<double>(leaf.class_counts[c]) / static_cast<double>(total);
        }
    }
    for (double& p : proba) p /= static_cast<double>(f.trees.size());
    return proba;
}

int predict(const Forest& f, std::span<const float> row) {
    check_row_width(f, row.size());
    std::vector<uint32_t> votes(f.n_classes, 0u);
    for (const auto& tree : f.trees) {
        ++votes[leaf_argmax(leaf_for(tree, row))];
    }
    int best = 0;
    for (int c = 1; c < f.n_classes; ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return best;
}

std::vector<std::pair<NGramKey, double>> top_k_features(const Forest& f,
                                                        const FeatureSpace& space, size_t k) {
    if (space.size() != f.n_features) {
        throw DataError("feature space size does not match the forest");
    }
    if (k < 1) throw DataError("top_k_features needs k >= 1");
    std::vector<std::pair<NGramKey, double>> ranked;
    ranked.reserve(space.size());
    for (size_t i = 0; i < space.size(); ++i) {
        ranked.emplace_back(space.keys()[i], f.feature_importances[i]);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kForestFormatVersion = 1;

}  // namespace

std::string serialize_forest(const Forest& f) {
    ordered_json j;
    j["format"] = "dnsfp-forest";
    j["version"] = kForestFormatVersion;
    j["n_classes"] = f.n_classes;
    j["n_features"] = f.n_features;
    j["seed"] = f.seed;
    j["per_tree_seeds"] = f.per_tree_seeds;
    j["feature_importances"] = f.feature_importances;
    if (f.oob_error) {
        j["oob_error"] = *f.oob_error;
    } else {
        j["oob_error"] = nullptr;
    }
    ordered_json trees = ordered_json::array();
    for (const auto& tree : f.trees) {
        ordered_json nodes = ordered_json::array();
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                nodes.push_back(ordered_json::array({-1, node.class_counts}));
            } else {
                nodes.push_back(
                    ordered_json::array({node.feature, node.threshold, node.left, node.right}));
            }
        }
        trees.push_back(ordered_json{{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

Forest parse_forest(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("invalid forest file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "dnsfp-forest") {
            throw DataError("not a dnsfp forest file");
        }
        if (j.at("version").get<int>() != kForestFormatVersion) {
            throw DataError("unsupported forest format version");
        }
        Forest f;
        f.n_classes = j.at("n_classes").get<int>();
        f.n_features = j.at("n_features").get<size_t>();
        f.seed = j.at("seed").get<uint64_t>();
        f.per_tree_seeds = j.at("per_tree_seeds").get<std::vector<uint64_t>>();
        f.feature_importances = j.at("feature_importances").get<std::vector<double>>();
        if (!j.at("oob_error").is_null()) f.oob_error = j.at("oob_error").get<double>();
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode node;
                if (jn.at(0).get<int>() == -1) {
                    node.class_counts = jn.at(1).get<std::vector<uint32_t>>();
                    if (node.class_counts.empty()) throw DataError("leaf without class counts");
                } else {
                    node.feature = jn.at(0).get<int32_t>();
                    node.threshold = jn.at(1).get<double>();
                    node.left = jn.at(2).get<int32_t>();
                    node.right = jn.at(3).get<int32_t>();
                }
                tree.nodes.push_back(std::move(node));
            }
            for (const auto& node : tree.nodes) {
                if (node.is_leaf()) continue;
                const auto size = static_cast<int32_t>(tree.nodes.size());
                if (node.left < 0 || node.left >= size || node.right < 0 || node.right >= size ||
                    node.feature >= static_cast<int32_t>(f.n_features)) {
                    throw DataError("forest file has out-of-range node references");
                }
            }
            if (tree.nodes.empty()) throw DataError("forest file has an empty tree");
            f.trees.push_back(std::move(tree));
        }
        if (f.trees.empty()) throw DataError("forest file has no trees");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed forest file: ") + e.what());
    }
}

void save_forest(const Forest& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << serialize_forest(f) << '\n';
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

Forest load_forest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_forest(buf.str());
}

void export_importances_csv(const Forest& f, const FeatureSpace& space,
                            const std::filesystem::path& path, size_t top_k) {
    const size_t k = top_k == 0 ? space.size() : std::min(top_k, space.size());
    const auto ranked = top_k_features(f, space, k);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << std::setprecision(17) << "feature,importance\n";
    for (const auto& [key, importance] : ranked) {
        out << key.to_string() << ',' << importance << '\n';
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

}  // namespace dnsfp
