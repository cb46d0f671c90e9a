#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dnsfp {

// TLS record ceiling; no single record can exceed this many bytes.
inline constexpr int32_t kMaxRecordSize = 65536;

// One page load's encrypted-DNS exchange as signed TLS record sizes in
// arrival order. Positive = client to resolver, negative = resolver to
// client. Records are never zero.
struct Trace {
    std::vector<int32_t> records;
    std::string label;
    std::string sample_id;
    std::optional<double> collected_at;

    bool operator==(const Trace&) const = default;
};

// Immutable collection of traces. `classes` is exactly the set of labels
// occurring in `traces`, sorted lexicographically so class indices are
// stable across runs.
struct Dataset {
    std::vector<Trace> traces;
    std::vector<std::string> classes;
    std::string name;

    size_t size() const { return traces.size(); }
    // Index into `classes`, or -1 if the label is absent.
    int class_index(const std::string& label) const;
};

enum class FileFormat { jsonl, csv };

// .jsonl -> jsonl, .csv -> csv; anything else is a DataError.
FileFormat format_from_path(const std::filesystem::path& path);

// Throws DataError on zero records, |size| > kMaxRecordSize, or an empty
// record sequence.
void validate_trace(const Trace& t);

// Validates every trace, rejects duplicate sample_ids and derives the
// class list.
Dataset make_dataset(std::vector<Trace> traces, std::string name);

Dataset load_dataset(const std::filesystem::path& path, FileFormat format);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

// Parameters of the synthetic-trace generator. Each class gets a fixed
// signature of (query, response) size pairs; samples replay the signature
// as alternating outgoing/incoming records with optional per-record jitter.
struct SynthProfile {
    int n_classes = 0;
    int samples_per_class = 0;
    int resources_min = 1;
    int resources_max = 1;
    std::vector<int32_t> size_alphabet;
    double noise_rate = 0.0;
    uint64_t seed = 0;
    std::string label_prefix = "site";
};

// Deterministic in `p`: per-class signatures depend only on (seed, class
// index) and per-sample jitter only on (seed, class index, sample index),
// so regenerating with more samples per class keeps existing traces.
Dataset generate_synthetic(const SynthProfile& p);

// First min(l, length) records; label and sample_id are kept. l >= 1.
Trace prefix(const Trace& t, size_t l);

// Per-trace class indices into d.classes.
std::vector<int> class_targets(const Dataset& d);

// Merge for multi-dataset experiments; duplicate sample_ids across the
// inputs are rejected.
Dataset merge_datasets(const Dataset& a, const Dataset& b, std::string name);

}  // namespace dnsfp
