#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dnsfp {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Per-class one-vs-all scores plus their unweighted (macro) mean. F1 is
// the harmonic mean of precision and recall, 0 when both are 0.
struct Metrics {
    std::map<std::string, ClassMetrics> per_class;
    ClassMetrics macro;
    std::map<std::string, size_t> support;  // true-label counts
};

// Square matrix over `labels`; rows are true labels, columns predictions.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<uint64_t>> counts;

    uint64_t at(const std::string& truth, const std::string& predicted) const;
    bool operator==(const ConfusionMatrix&) const = default;
};

// Labels of the matrix are the sorted union of true and predicted labels.
std::pair<Metrics, ConfusionMatrix> compute_metrics(const std::vector<std::string>& truth,
                                                    const std::vector<std::string>& predicted);

// Same scores recomputed from an existing matrix.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

enum class ConfusionFormat { csv, dot };

// csv: full matrix with a label header column/row. dot: directed graph
// with one edge per nonzero off-diagonal cell, weight = count.
void export_confusion(const ConfusionMatrix& cm, const std::filesystem::path& path,
                      ConfusionFormat format);

ConfusionMatrix import_confusion_csv(const std::filesystem::path& path);

}  // namespace dnsfp
