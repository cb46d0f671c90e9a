#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnsfp/trace.hpp"

namespace dnsfp {

enum class NGramKind : uint8_t { size = 0, burst = 1 };

// Key of one n-gram feature: uni- or bi-grams over TLS record sizes or over
// burst lengths. Keys are ordered by (kind, arity, values), so size and
// burst n-grams with equal values never collide.
struct NGramKey {
    NGramKind kind = NGramKind::size;
    uint8_t arity = 1;
    std::array<int64_t, 2> values{0, 0};  // values[1] is 0 when arity == 1

    friend auto operator<=>(const NGramKey&, const NGramKey&) = default;

    static NGramKey size_uni(int64_t v) { return {NGramKind::size, 1, {v, 0}}; }
    static NGramKey size_bi(int64_t a, int64_t b) { return {NGramKind::size, 2, {a, b}}; }
    static NGramKey burst_uni(int64_t v) { return {NGramKind::burst, 1, {v, 0}}; }
    static NGramKey burst_bi(int64_t a, int64_t b) { return {NGramKind::burst, 2, {a, b}}; }

    // "size:1:-64", "burst:2:-64|121"
    std::string to_string() const;
};

// Sparse count vector; absent keys count zero and stored counts are
// strictly positive.
struct FeatureVector {
    std::map<NGramKey, int64_t> counts;

    int64_t count(const NGramKey& k) const {
        const auto it = counts.find(k);
        return it == counts.end() ? 0 : it->second;
    }
};

// Fixed, deterministically ordered feature dictionary built from training
// data only. Keys absent from the space are dropped at vectorization time.
class FeatureSpace {
public:
    FeatureSpace() = default;
    explicit FeatureSpace(std::vector<NGramKey> sorted_keys);

    const std::vector<NGramKey>& keys() const { return keys_; }
    size_t size() const { return keys_.size(); }
    std::optional<size_t> index_of(const NGramKey& k) const;

private:
    std::vector<NGramKey> keys_;
};

// Maximal same-direction runs, each summed into one signed length. Output
// signs alternate and absolute values sum to the trace's absolute total.
std::vector<int64_t> bursts(const Trace& t);

// Uni- and bi-grams of record sizes plus uni- and bi-grams of burst
// lengths, counted over sliding windows of width 1 and 2, stride 1.
FeatureVector extract(const Trace& t);

FeatureSpace build_space(const Dataset& training);

// Dense count row over space.keys(); out-of-vocabulary keys are dropped.
std::vector<float> vectorize(const FeatureVector& fv, const FeatureSpace& space);

// Dense column-major matrix of feature counts; one row per trace.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(size_t rows, size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    float operator()(size_t r, size_t c) const { return data_[c * rows_ + r]; }
    float& operator()(size_t r, size_t c) { return data_[c * rows_ + r]; }
    std::span<const float> column(size_t c) const {
        return {data_.data() + c * rows_, rows_};
    }
    std::vector<float> row(size_t r) const;
    void set_row(size_t r, std::span<const float> row);

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<float> data_;
};

FeatureMatrix vectorize_dataset(const Dataset& d, const FeatureSpace& space);

// CSV with columns sample_id,label,<serialized keys...> and raw counts.
void export_feature_matrix_csv(const Dataset& d, const FeatureSpace& space,
                               const std::filesystem::path& path);

}  // namespace dnsfp
