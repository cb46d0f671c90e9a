#include "dnsfp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "dnsfp/error.hpp"

namespace dnsfp {

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) return {};
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

ConfusionMatrix confusion_over(const std::vector<std::string>& labels,
                               const std::vector<std::string>& truth,
                               const std::vector<std::string>& predicted) {
    ConfusionMatrix cm;
    cm.labels = labels;
    cm.counts.assign(labels.size(), std::vector<uint64_t>(labels.size(), 0));
    const auto index_of = [&](const std::string& label) {
        const auto it = std::lower_bound(labels.begin(), labels.end(), label);
        if (it == labels.end() || *it != label) throw DataError("label outside class set");
        return static_cast<size_t>(it - labels.begin());
    };
    for (size_t i = 0; i < truth.size(); ++i) {
        ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
    }
    return cm;
}

// Per-class sample positions split round-robin after a seeded shuffle, so
// fold sizes within a class differ by at most one.
std::vector<int> stratified_fold_of(const Dataset& d, int folds, uint64_t seed) {
    std::vector<std::vector<uint32_t>> by_class(d.classes.size());
    for (size_t i = 0; i < d.traces.size(); ++i) {
        by_class[d.class_index(d.traces[i].label)].push_back(static_cast<uint32_t>(i));
    }
    std::vector<int> fold_of(d.traces.size(), -1);
    for (size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.size() < static_cast<size_t>(folds)) {
            std::ostringstream os;
            os << "class \"" << d.classes[c] << "\" has " << members.size()
               << " samples; " << folds << "-fold cross-validation needs at least " << folds;
            throw DataError(os.str());
        }
        Rng rng(mix_seed(seed, 0xf01du, c));
        rng.shuffle(members);
        for (size_t i = 0; i < members.size(); ++i) {
            fold_of[members[i]] = static_cast<int>(i % folds);
        }
    }
    return fold_of;
}

}  // namespace

CrossValidationResult cross_validate(const Dataset& d, const TrainConfig& cfg, int folds,
                                     uint64_t seed, int n_threads) {
    if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
    const auto fold_of = stratified_fold_of(d, folds, seed);

    CrossValidationResult result;
    result.folds = folds;
    result.seed = seed;
    result.confusion.labels = d.classes;
    result.confusion.counts.assign(d.classes.size(),
                                   std::vector<uint64_t>(d.classes.size(), 0));

    const auto y_all = class_targets(d);
    std::vector<double> precisions, recalls, f1s;
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<Trace> train_traces;
        std::vector<int> y_train;
        std::vector<uint32_t> test_rows;
        for (size_t i = 0; i < d.traces.size(); ++i) {
            if (fold_of[i] == fold) {
                test_rows.push_back(static_cast<uint32_t>(i));
            } else {
                train_traces.push_back(d.traces[i]);
                y_train.push_back(y_all[i]);
            }
        }

        Dataset train_view;
        train_view.traces = std::move(train_traces);
        train_view.classes = d.classes;
        const FeatureSpace space = build_space(train_view);
        const FeatureMatrix X = vectorize_dataset(train_view, space);

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = mix_seed(seed, 0x0f0eu, static_cast<uint64_t>(fold));
        const Forest forest = train(X, y_train, fold_cfg, n_threads);

        std::vector<std::string> truth, predicted;
        truth.reserve(test_rows.size());
        predicted.reserve(test_rows.size());
        for (const uint32_t row : test_rows) {
            const auto features = vectorize(extract(d.traces[row]), space);
            truth.push_back(d.traces[row].label);
            predicted.push_back(d.classes[predict(forest, features)]);
        }

        const ConfusionMatrix fold_cm = confusion_over(d.classes, truth, predicted);
        for (size_t r = 0; r < d.classes.size(); ++r) {
            for (size_t c = 0; c < d.classes.size(); ++c) {
                result.confusion.counts[r][c] += fold_cm.counts[r][c];
            }
        }
        Metrics m = metrics_from_confusion(fold_cm);
        precisions.push_back(m.macro.precision);
        recalls.push_back(m.macro.recall);
        f1s.push_back(m.macro.f1);
        result.fold_metrics.push_back(std::move(m));
    }

    const auto p = mean_std(precisions), r = mean_std(recalls), f = mean_std(f1s);
    result.mean = {p.mean, r.mean, f.mean};
    result.stddev = {p.std, r.std, f.std};
    return result;
}

CrossDatasetResult cross_dataset(const Dataset& train_set, const Dataset& test_set,
                                 const TrainConfig& cfg, int n_threads) {
    bool overlap = false;
    for (const auto& label : test_set.classes) {
        if (train_set.class_index(label) >= 0) {
            overlap = true;
            break;
        }
    }
    if (!overlap) throw DataError("training and test datasets share no labels");

    const FeatureSpace space = build_space(train_set);
    const FeatureMatrix X = vectorize_dataset(train_set, space);
    const Forest forest = train(X, class_targets(train_set), cfg, n_threads);

    CrossDatasetResult result;
    std::vector<std::string> truth, predicted;
    for (const auto& t : test_set.traces) {
        if (train_set.class_index(t.label) < 0) {
            ++result.skipped;
            continue;
        }
        const auto features = vectorize(extract(t), space);
        truth.push_back(t.label);
        predicted.push_back(train_set.classes[predict(forest, features)]);
        ++result.evaluated;
    }
    result.coverage =
        static_cast<double>(result.evaluated) / static_cast<double>(test_set.traces.size());
    auto [metrics, confusion] = compute_metrics(truth, predicted);
    result.metrics = std::move(metrics);
    result.confusion = std::move(confusion);
    return result;
}

std::vector<double> default_threshold_sweep() {
    std::vector<double> t;
    for (int i = 0; i <= 9; ++i) t.push_back(static_cast<double>(i) / 10.0);
    t.push_back(0.99);
    return t;
}

void ForestScorer::fit(const FeatureMatrix& X, const std::vector<int>& y, int n_monitored,
                       uint64_t seed) {
    n_monitored_ = n_monitored;
    TrainConfig cfg = cfg_;
    cfg.seed = seed;
    forest_ = train(X, y, cfg, n_threads_);
}

double ForestScorer::monitored_score(std::span<const float> row) {
    const auto proba = predict_proba(*forest_, row);
    double best = 0.0;
    for (int c = 0; c < n_monitored_ && c < static_cast<int>(proba.size()); ++c) {
        best = std::max(best, proba[c]);
    }
    return best;
}

void UniformRandomScorer::fit(const FeatureMatrix&, const std::vector<int>&, int, uint64_t seed) {
    rng_.emplace(seed);
}

double UniformRandomScorer::monitored_score(std::span<const float>) { return rng_->real(); }

namespace {

struct FoldPools {
    std::vector<uint32_t> monitored_train, monitored_test;
    std::vector<uint32_t> unmonitored_train, seen_test, unseen_test;
    std::vector<std::string> monitored_labels;  // sorted; class index = position
};

FoldPools build_fold_pools(const Dataset& world, const std::vector<std::string>& monitored_pool,
                           size_t n_monitored, size_t n_training_classes, Rng& rng) {
    FoldPools pools;

    std::vector<std::string> candidates = monitored_pool;
    rng.shuffle(candidates);
    candidates.resize(n_monitored);
    std::sort(candidates.begin(), candidates.end());
    pools.monitored_labels = candidates;
    const std::set<std::string> monitored(candidates.begin(), candidates.end());

    std::vector<std::string> unmonitored;
    for (const auto& label : world.classes) {
        if (!monitored.count(label)) unmonitored.push_back(label);
    }
    rng.shuffle(unmonitored);
    const size_t n_seen = n_training_classes - n_monitored;
    const std::set<std::string> seen(unmonitored.begin(), unmonitored.begin() + n_seen);

    std::map<std::string, std::vector<uint32_t>> by_label;
    for (size_t i = 0; i < world.traces.size(); ++i) {
        by_label[world.traces[i].label].push_back(static_cast<uint32_t>(i));
    }

    for (const auto& label : pools.monitored_labels) {
        auto members = by_label.at(label);
        rng.shuffle(members);
        const size_t n_train = (members.size() + 1) / 2;
        pools.monitored_train.insert(pools.monitored_train.end(), members.begin(),
                                     members.begin() + n_train);
        pools.monitored_test.insert(pools.monitored_test.end(), members.begin() + n_train,
                                    members.end());
    }
    for (const auto& [label, members] : by_label) {
        if (monitored.count(label)) continue;
        auto& dest = seen.count(label) ? pools.unmonitored_train : pools.unseen_test;
        dest.insert(dest.end(), members.begin(), members.end());
    }

    // Balance the training sides; whatever the downsampling leaves over
    // stays available for testing.
    rng.shuffle(pools.monitored_train);
    rng.shuffle(pools.unmonitored_train);
    const size_t n_balanced = std::min(pools.monitored_train.size(), pools.unmonitored_train.size());
    pools.monitored_test.insert(pools.monitored_test.end(),
                                pools.monitored_train.begin() + n_balanced,
                                pools.monitored_train.end());
    pools.seen_test.assign(pools.unmonitored_train.begin() + n_balanced,
                           pools.unmonitored_train.end());
    pools.monitored_train.resize(n_balanced);
    pools.unmonitored_train.resize(n_balanced);

    rng.shuffle(pools.monitored_test);
    rng.shuffle(pools.seen_test);
    rng.shuffle(pools.unseen_test);
    return pools;
}

}  // namespace

OpenWorldResult open_world(const Dataset& d, const Dataset& extra_unmonitored,
                           const OpenWorldConfig& cfg, const TrainConfig& train_cfg,
                           int n_threads, OpenWorldScorer* scorer) {
    if (cfg.folds < 1) throw DataError("open-world evaluation needs at least 1 fold");
    for (const double t : cfg.thresholds) {
        if (t < 0.0 || t >= 1.0) throw DataError("thresholds must lie in [0, 1)");
    }
    if (cfg.monitored_fraction <= 0.0 || cfg.monitored_fraction > 1.0 ||
        cfg.training_class_fraction <= 0.0 || cfg.training_class_fraction > 1.0) {
        throw DataError("class fractions must lie in (0, 1]");
    }

    const Dataset world = merge_datasets(d, extra_unmonitored, "open-world");
    const size_t n_world = world.classes.size();
    const auto n_monitored =
        static_cast<size_t>(std::llround(cfg.monitored_fraction * static_cast<double>(n_world)));
    const auto n_training_classes = static_cast<size_t>(
        std::llround(cfg.training_class_fraction * static_cast<double>(n_world)));
    if (n_monitored < 1) {
        throw DataError("monitored_fraction yields zero monitored classes");
    }
    if (n_monitored > d.classes.size()) {
        throw DataError("monitored_fraction exceeds the monitored candidate pool");
    }
    if (n_training_classes <= n_monitored) {
        throw DataError("training_class_fraction leaves no unmonitored training classes");
    }

    ForestScorer default_scorer(train_cfg, n_threads);
    OpenWorldScorer& active = scorer ? *scorer : default_scorer;

    OpenWorldResult result;
    result.world_classes = n_world;
    result.monitored_classes = n_monitored;
    result.training_classes = n_training_classes;
    result.per_fold.resize(cfg.folds);

    for (int fold = 0; fold < cfg.folds; ++fold) {
        Rng rng(mix_seed(cfg.seed, 0x0a11u, static_cast<uint64_t>(fold)));
        FoldPools pools =
            build_fold_pools(world, d.classes, n_monitored, n_training_classes, rng);

        const size_t u_half = std::min({pools.seen_test.size(), pools.unseen_test.size(),
                                        pools.monitored_test.size() / 2});
        if (u_half == 0 || pools.monitored_train.empty()) {
            std::ostringstream os;
            os << "open-world fold " << fold << " has an empty train or test side; "
               << "the dataset is too small for the configured fractions";
            throw DataError(os.str());
        }

        // Training set: balanced monitored vs pooled-unmonitored samples.
        Dataset train_view;
        std::vector<int> y_train;
        const int background = static_cast<int>(pools.monitored_labels.size());
        for (const uint32_t idx : pools.monitored_train) {
            train_view.traces.push_back(world.traces[idx]);
            const auto it = std::lower_bound(pools.monitored_labels.begin(),
                                             pools.monitored_labels.end(),
                                             world.traces[idx].label);
            y_train.push_back(static_cast<int>(it - pools.monitored_labels.begin()));
        }
        for (const uint32_t idx : pools.unmonitored_train) {
            train_view.traces.push_back(world.traces[idx]);
            y_train.push_back(background);
        }
        const FeatureSpace space = build_space(train_view);
        const FeatureMatrix X = vectorize_dataset(train_view, space);
        active.fit(X, y_train, background, mix_seed(cfg.seed, 0x5c02eu, fold));

        // Balanced test set: monitored half, unmonitored half split evenly
        // between training-seen and unseen classes.
        std::vector<uint32_t> test_rows(pools.monitored_test.begin(),
                                        pools.monitored_test.begin() + 2 * u_half);
        test_rows.insert(test_rows.end(), pools.seen_test.begin(),
                         pools.seen_test.begin() + u_half);
        test_rows.insert(test_rows.end(), pools.unseen_test.begin(),
                         pools.unseen_test.begin() + u_half);

        std::vector<double> scores;
        std::vector<char> is_monitored;
        scores.reserve(test_rows.size());
        for (const uint32_t idx : test_rows) {
            const auto features = vectorize(extract(world.traces[idx]), space);
            scores.push_back(active.monitored_score(features));
            is_monitored.push_back(std::binary_search(pools.monitored_labels.begin(),
                                                      pools.monitored_labels.end(),
                                                      world.traces[idx].label));
        }

        auto& fold_points = result.per_fold[fold];
        fold_points.reserve(cfg.thresholds.size());
        OpenWorldFoldCounts counts;
        counts.test_monitored = 2 * u_half;
        counts.test_unmonitored = 2 * u_half;
        for (const double t : cfg.thresholds) {
            uint64_t tp = 0, fp = 0, fn = 0;
            for (size_t i = 0; i < scores.size(); ++i) {
                const bool predicted_monitored = scores[i] > t;
                if (predicted_monitored && is_monitored[i]) ++tp;
                if (predicted_monitored && !is_monitored[i]) ++fp;
                if (!predicted_monitored && is_monitored[i]) ++fn;
            }
            ClassMetrics m;
            m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
            m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
            m.f1 = m.precision + m.recall == 0.0
                       ? 0.0
                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
            fold_points.push_back(m);
            counts.true_positives.push_back(tp);
            counts.false_positives.push_back(fp);
        }
        result.fold_counts.push_back(std::move(counts));
    }

    for (size_t ti = 0; ti < cfg.thresholds.size(); ++ti) {
        std::vector<double> ps, rs, fs;
        for (const auto& fold_points : result.per_fold) {
            ps.push_back(fold_points[ti].precision);
            rs.push_back(fold_points[ti].recall);
            fs.push_back(fold_points[ti].f1);
        }
        const auto p = mean_std(ps), r = mean_std(rs), f = mean_std(fs);
        result.points.push_back(
            {cfg.thresholds[ti], p.mean, p.std, r.mean, r.std, f.mean, f.std});
    }
    return result;
}

void export_roc_csv(const OpenWorldResult& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << std::setprecision(17)
        << "threshold,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std\n";
    for (const auto& p : r.points) {
        out << p.threshold << ',' << p.precision_mean << ',' << p.precision_std << ','
            << p.recall_mean << ',' << p.recall_std << ',' << p.f1_mean << ',' << p.f1_std
            << '\n';
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

}  // namespace dnsfp
