#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnsfp/forest.hpp"
#include "dnsfp/metrics.hpp"
#include "dnsfp/random.hpp"
#include "dnsfp/trace.hpp"

namespace dnsfp {

struct CrossValidationResult {
    std::vector<Metrics> fold_metrics;
    ClassMetrics mean;    // macro precision/recall/f1 averaged over folds
    ClassMetrics stddev;  // population standard deviation over folds
    ConfusionMatrix confusion;  // summed over folds
    int folds = 0;
    uint64_t seed = 0;
};

// Stratified k-fold cross-validation. The feature space is rebuilt from
// each fold's training split only. Every class needs at least `folds`
// samples.
CrossValidationResult cross_validate(const Dataset& d, const TrainConfig& cfg, int folds = 10,
                                     uint64_t seed = 0, int n_threads = 1);

struct CrossDatasetResult {
    Metrics metrics;
    ConfusionMatrix confusion;
    double coverage = 0.0;  // fraction of test traces whose label the model can name
    size_t evaluated = 0;
    size_t skipped = 0;
};

// Trains on all of `train`, evaluates the `test` traces whose labels exist
// in the training class set. Label sets must overlap.
CrossDatasetResult cross_dataset(const Dataset& train, const Dataset& test,
                                 const TrainConfig& cfg, int n_threads = 1);

std::vector<double> default_threshold_sweep();  // 0.0 .. 0.9 step 0.1, then 0.99

struct OpenWorldConfig {
    double monitored_fraction = 0.01;
    double training_class_fraction = 0.10;
    std::vector<double> thresholds = default_threshold_sweep();
    int folds = 10;
    uint64_t seed = 0;
};

// Produces a monitored-vs-unmonitored score per test trace. Classes
// [0, n_monitored) of the training targets are the monitored websites;
// index n_monitored is the pooled unmonitored background class.
class OpenWorldScorer {
public:
    virtual ~OpenWorldScorer() = default;
    virtual void fit(const FeatureMatrix& X, const std::vector<int>& y, int n_monitored,
                     uint64_t seed) = 0;
    virtual double monitored_score(std::span<const float> row) = 0;
};

// Random forest over monitored classes plus the background class; the
// score is the largest predicted probability among monitored classes.
class ForestScorer : public OpenWorldScorer {
public:
    explicit ForestScorer(TrainConfig cfg, int n_threads = 1)
        : cfg_(cfg), n_threads_(n_threads) {}
    void fit(const FeatureMatrix& X, const std::vector<int>& y, int n_monitored,
             uint64_t seed) override;
    double monitored_score(std::span<const float> row) override;

private:
    TrainConfig cfg_;
    int n_threads_;
    int n_monitored_ = 0;
    std::optional<Forest> forest_;
};

// Baseline that ignores the data and scores uniformly at random in [0, 1);
// its precision should match the monitored prevalence of the test set.
class UniformRandomScorer : public OpenWorldScorer {
public:
    void fit(const FeatureMatrix&, const std::vector<int>&, int, uint64_t seed) override;
    double monitored_score(std::span<const float>) override;

private:
    std::optional<Rng> rng_;
};

struct ROCPoint {
    double threshold = 0.0;
    double precision_mean = 0.0, precision_std = 0.0;
    double recall_mean = 0.0, recall_std = 0.0;
    double f1_mean = 0.0, f1_std = 0.0;
};

struct OpenWorldFoldCounts {
    size_t test_monitored = 0;
    size_t test_unmonitored = 0;
    std::vector<uint64_t> true_positives;   // per threshold
    std::vector<uint64_t> false_positives;  // per threshold
};

struct OpenWorldResult {
    std::vector<ROCPoint> points;                     // one per threshold
    std::vector<std::vector<ClassMetrics>> per_fold;  // [fold][threshold]
    std::vector<OpenWorldFoldCounts> fold_counts;
    size_t world_classes = 0;
    size_t monitored_classes = 0;
    size_t training_classes = 0;
};

// Monitored/unmonitored evaluation with the threshold rule: a trace is
// labeled monitored iff its monitored score is strictly greater than t.
// Every fold redraws the class partition; training is balanced between
// monitored and unmonitored samples and the test set is balanced between
// them too, with its unmonitored half split evenly between classes seen
// in training and unseen classes.
OpenWorldResult open_world(const Dataset& d, const Dataset& extra_unmonitored,
                           const OpenWorldConfig& cfg, const TrainConfig& train_cfg,
                           int n_threads = 1, OpenWorldScorer* scorer = nullptr);

// threshold,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std
void export_roc_csv(const OpenWorldResult& r, const std::filesystem::path& path);

}  // namespace dnsfp
