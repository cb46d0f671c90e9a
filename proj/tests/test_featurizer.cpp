#include <doctest.h>

#include <map>

#include "dnsfp/error.hpp"
#include "dnsfp/featurizer.hpp"
#include "dnsfp/random.hpp"
#include "test_util.hpp"

using namespace dnsfp;
using dnsfp::test::TempDir;
using dnsfp::test::make_trace;
using dnsfp::test::read_file;

namespace {

// Independent oracle: enumerate maximal same-sign runs directly.
std::vector<int64_t> burst_oracle(const std::vector<int32_t>& records) {
    std::vector<int64_t> out;
    size_t i = 0;
    while (i < records.size()) {
        const bool positive = records[i] > 0;
        int64_t sum = 0;
        while (i < records.size() && (records[i] > 0) == positive) sum += records[i++];
        out.push_back(sum);
    }
    return out;
}

// Independent oracle: count every width-1 and width-2 window one by one.
FeatureVector extract_oracle(const Trace& t) {
    FeatureVector fv;
    for (size_t i = 0; i < t.records.size(); ++i) {
        ++fv.counts[NGramKey::size_uni(t.records[i])];
    }
    for (size_t i = 0; i + 1 < t.records.size(); ++i) {
        ++fv.counts[NGramKey::size_bi(t.records[i], t.records[i + 1])];
    }
    const auto b = burst_oracle(t.records);
    for (size_t i = 0; i < b.size(); ++i) ++fv.counts[NGramKey::burst_uni(b[i])];
    for (size_t i = 0; i + 1 < b.size(); ++i) ++fv.counts[NGramKey::burst_bi(b[i], b[i + 1])];
    return fv;
}

Trace random_trace(Rng& rng, size_t max_len = 200, int32_t max_size = 2000) {
    const size_t len = 1 + rng.below(max_len);
    std::vector<int32_t> records(len);
    for (auto& r : records) {
        const auto magnitude = static_cast<int32_t>(rng.range(1, max_size));
        r = rng.bernoulli(0.5) ? magnitude : -magnitude;
    }
    return dnsfp::test::make_trace(std::move(records));
}

}  // namespace

TEST_CASE("worked example: bursts") {
    CHECK(bursts(make_trace({-64, 88, 33, -33})) == std::vector<int64_t>{-64, 121, -33});
    CHECK(bursts(make_trace({5})) == std::vector<int64_t>{5});
    CHECK(bursts(make_trace({3, 4, -2, -2, 7})) == std::vector<int64_t>{7, -4, 7});
}

TEST_CASE("worked example: n-gram counts") {
    const FeatureVector fv = extract(make_trace({-64, 88, 33, -33}));

    CHECK(fv.count(NGramKey::size_uni(-64)) == 1);
    CHECK(fv.count(NGramKey::size_uni(88)) == 1);
    CHECK(fv.count(NGramKey::size_uni(33)) == 1);
    CHECK(fv.count(NGramKey::size_uni(-33)) == 1);

    CHECK(fv.count(NGramKey::size_bi(-64, 88)) == 1);
    CHECK(fv.count(NGramKey::size_bi(88, 33)) == 1);
    CHECK(fv.count(NGramKey::size_bi(33, -33)) == 1);

    CHECK(fv.count(NGramKey::burst_uni(-64)) == 1);
    CHECK(fv.count(NGramKey::burst_uni(121)) == 1);
    CHECK(fv.count(NGramKey::burst_uni(-33)) == 1);
    CHECK(fv.count(NGramKey::burst_bi(-64, 121)) == 1);
    CHECK(fv.count(NGramKey::burst_bi(121, -33)) == 1);

    // 4 size-uni + 3 size-bi + 3 burst-uni + 2 burst-bi distinct keys
    CHECK(fv.counts.size() == 12);
}

TEST_CASE("repeated sizes fold into counts") {
    const FeatureVector fv = extract(make_trace({5, 5, 5}));
    CHECK(fv.count(NGramKey::size_uni(5)) == 3);
    CHECK(fv.count(NGramKey::size_bi(5, 5)) == 2);
    CHECK(fv.count(NGramKey::burst_uni(15)) == 1);
    // single burst: no burst bi-grams
    for (const auto& [key, count] : fv.counts) {
        CHECK(!(key.kind == NGramKind::burst && key.arity == 2));
    }
}

TEST_CASE("extract matches the window-counting oracle on random traces") {
    Rng rng(42);
    for (int i = 0; i < 300; ++i) {
        const Trace t = random_trace(rng);
        CHECK(extract(t).counts == extract_oracle(t).counts);
        CHECK(bursts(t) == burst_oracle(t.records));
    }
}

TEST_CASE("burst properties hold on random traces") {
    Rng rng(1337);
    for (int i = 0; i < 300; ++i) {
        const Trace t = random_trace(rng);
        const auto b = bursts(t);
        int64_t burst_abs = 0, record_abs = 0;
        for (size_t k = 0; k < b.size(); ++k) {
            CHECK(b[k] != 0);
            if (k > 0) CHECK((b[k] > 0) != (b[k - 1] > 0));
            burst_abs += std::abs(b[k]);
        }
        for (const int32_t r : t.records) record_abs += std::abs(r);
        CHECK(burst_abs == record_abs);
    }
}

TEST_CASE("per-kind totals match trace and burst lengths") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        const Trace t = random_trace(rng, 60);
        const auto fv = extract(t);
        int64_t size_uni = 0, size_bi = 0, burst_uni = 0;
        for (const auto& [key, count] : fv.counts) {
            if (key.kind == NGramKind::size && key.arity == 1) size_uni += count;
            if (key.kind == NGramKind::size && key.arity == 2) size_bi += count;
            if (key.kind == NGramKind::burst && key.arity == 1) burst_uni += count;
        }
        CHECK(size_uni == static_cast<int64_t>(t.records.size()));
        CHECK(size_bi == std::max<int64_t>(0, static_cast<int64_t>(t.records.size()) - 1));
        CHECK(burst_uni == static_cast<int64_t>(bursts(t).size()));
    }
}

TEST_CASE("feature space keys for a single trace") {
    const Dataset d = make_dataset({make_trace({-64, 88}, "a", "s1")}, "x");
    const FeatureSpace space = build_space(d);
    const std::vector<NGramKey> expected = [] {
        std::vector<NGramKey> keys = {NGramKey::size_uni(-64),      NGramKey::size_uni(88),
                                      NGramKey::size_bi(-64, 88),   NGramKey::burst_uni(-64),
                                      NGramKey::burst_uni(88),      NGramKey::burst_bi(-64, 88)};
        std::sort(keys.begin(), keys.end());
        return keys;
    }();
    CHECK(space.keys() == expected);
}

TEST_CASE("identical datasets build identical spaces") {
    SynthProfile p;
    p.n_classes = 3;
    p.samples_per_class = 3;
    p.resources_min = 2;
    p.resources_max = 5;
    p.size_alphabet = {64, 100, 160};
    p.noise_rate = 0.4;
    p.seed = 21;
    const FeatureSpace a = build_space(generate_synthetic(p));
    const FeatureSpace b = build_space(generate_synthetic(p));
    CHECK(a.keys() == b.keys());
}

TEST_CASE("vectorize drops out-of-vocabulary keys") {
    const Dataset d = make_dataset({make_trace({-64, 88}, "a", "s1")}, "x");
    const FeatureSpace space = build_space(d);

    FeatureVector known = extract(make_trace({-64, 88}));
    const auto base = vectorize(known, space);

    FeatureVector with_unknown = known;
    with_unknown.counts[NGramKey::size_uni(999)] = 5;
    CHECK(vectorize(with_unknown, space) == base);

    const FeatureVector empty;
    const auto zeros = vectorize(empty, space);
    for (const float v : zeros) CHECK(v == 0.0f);
    CHECK(zeros.size() == space.size());
}

TEST_CASE("vectorize is linear in counts for in-vocabulary keys") {
    const Dataset d =
        make_dataset({make_trace({-64, 88, 33, -33}, "a", "s1"), make_trace({5, 5, 5}, "b", "s2")},
                     "x");
    const FeatureSpace space = build_space(d);
    const FeatureVector f1 = extract(make_trace({-64, 88}));
    const FeatureVector f2 = extract(make_trace({5, 5}));
    FeatureVector sum = f1;
    for (const auto& [key, count] : f2.counts) sum.counts[key] += count;

    const auto v1 = vectorize(f1, space);
    const auto v2 = vectorize(f2, space);
    const auto vs = vectorize(sum, space);
    for (size_t i = 0; i < space.size(); ++i) CHECK(vs[i] == v1[i] + v2[i]);
}

TEST_CASE("key serialization") {
    CHECK(NGramKey::size_uni(-64).to_string() == "size:1:-64");
    CHECK(NGramKey::burst_bi(-64, 121).to_string() == "burst:2:-64|121");
}

TEST_CASE("feature matrix CSV export") {
    const Dataset d = make_dataset({make_trace({-64, 88}, "a", "s1")}, "x");
    const FeatureSpace space = build_space(d);
    TempDir dir;
    export_feature_matrix_csv(d, space, dir.file("f.csv"));
    const std::string text = read_file(dir.file("f.csv"));
    CHECK(text.find("sample_id,label,") == 0);
    CHECK(text.find("size:1:-64") != std::string::npos);
    CHECK(text.find("burst:2:-64|88") != std::string::npos);
    CHECK(text.find("s1,a,") != std::string::npos);
}
