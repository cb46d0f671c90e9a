#include "dnsfp/featurizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dnsfp/error.hpp"

namespace dnsfp {

std::string NGramKey::to_string() const {
    std::ostringstream os;
    os << (kind == NGramKind::size ? "size" : "burst") << ':' << int(arity) << ':' << values[0];
    if (arity == 2) os << '|' << values[1];
    return os.str();
}

FeatureSpace::FeatureSpace(std::vector<NGramKey> sorted_keys) : keys_(std::move(sorted_keys)) {
    if (!std::is_sorted(keys_.begin(), keys_.end()) ||
        std::adjacent_find(keys_.begin(), keys_.end()) != keys_.end()) {
        throw DataError("feature space keys must be sorted and distinct");
    }
}

std::optional<size_t> FeatureSpace::index_of(const NGramKey& k) const {
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    if (it == keys_.end() || *it != k) return std::nullopt;
    return static_cast<size_t>(it - keys_.begin());
}

std::vector<int64_t> bursts(const Trace& t) {
    std::vector<int64_t> out;
    int64_t run = 0;
    for (const int32_t r : t.records) {
        if (run != 0 && (run > 0) == (r > 0)) {
            run += r;
        } else {
            if (run != 0) out.push_back(run);
            run = r;
        }
    }
    if (run != 0) out.push_back(run);
    return out;
}

FeatureVector extract(const Trace& t) {
    FeatureVector fv;
    const auto& rec = t.records;
    for (size_t i = 0; i < rec.size(); ++i) {
        ++fv.counts[NGramKey::size_uni(rec[i])];
        if (i + 1 < rec.size()) ++fv.counts[NGramKey::size_bi(rec[i], rec[i + 1])];
    }
    const auto b = bursts(t);
    for (size_t i = 0; i < b.size(); ++i) {
        ++fv.counts[NGramKey::burst_uni(b[i])];
        if (i + 1 < b.size()) ++fv.counts[NGramKey::burst_bi(b[i], b[i + 1])];
    }
    return fv;
}

FeatureSpace build_space(const Dataset& training) {
    if (training.traces.empty()) throw DataError("cannot build a feature space from an empty dataset");
    std::set<NGramKey> keys;
    for (const auto& t : training.traces) {
        for (const auto& [key, count] : extract(t).counts) keys.insert(key);
    }
    return FeatureSpace(std::vector<NGramKey>(keys.begin(), keys.end()));
}

std::vector<float> vectorize(const FeatureVector& fv, const FeatureSpace& space) {
    std::vector<float> row(space.size(), 0.0f);
    for (const auto& [key, count] : fv.counts) {
        if (const auto idx = space.index_of(key)) row[*idx] = static_cast<float>(count);
    }
    return row;
}

std::vector<float> FeatureMatrix::row(size_t r) const {
    std::vector<float> out(cols_);
    for (size_t c = 0; c < cols_; ++c) out[c] = (*this)(r, c);
    return out;
}

void FeatureMatrix::set_row(size_t r, std::span<const float> row) {
    for (size_t c = 0; c < cols_; ++c) (*this)(r, c) = row[c];
}

FeatureMatrix vectorize_dataset(const Dataset& d, const FeatureSpace& space) {
    FeatureMatrix X(d.traces.size(), space.size());
    for (size_t i = 0; i < d.traces.size(); ++i) {
        for (const auto& [key, count] : extract(d.traces[i]).counts) {
            if (const auto idx = space.index_of(key)) {
                X(i, *idx) = static_cast<float>(count);
            }
        }
    }
    return X;
}

void export_feature_matrix_csv(const Dataset& d, const FeatureSpace& space,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << "sample_id,label";
    for (const auto& k : space.keys()) out << ',' << k.to_string();
    out << '\n';
    for (const auto& t : d.traces) {
        out << t.sample_id << ',' << t.label;
        const auto row = vectorize(extract(t), space);
        for (const float v : row) out << ',' << static_cast<int64_t>(v);
        out << '\n';
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

}  // namespace dnsfp
