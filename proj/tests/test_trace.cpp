#include <doctest.h>

#include <set>

#include "dnsfp/error.hpp"
#include "dnsfp/random.hpp"
#include "dnsfp/trace.hpp"
#include "test_util.hpp"

using namespace dnsfp;
using dnsfp::test::TempDir;
using dnsfp::test::make_trace;
using dnsfp::test::read_file;
using dnsfp::test::write_file;

TEST_CASE("jsonl line deserializes the worked trace") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path, R"({"label":"example.com","sample_id":"s1","records":[-64,88,33,-33]})"
                     "\n");
    const Dataset d = load_dataset(path, FileFormat::jsonl);
    REQUIRE(d.traces.size() == 1);
    CHECK(d.traces[0].records == std::vector<int32_t>{-64, 88, 33, -33});
    CHECK(d.traces[0].label == "example.com");
    CHECK(d.traces[0].sample_id == "s1");
    CHECK(!d.traces[0].collected_at.has_value());
    CHECK(d.classes == std::vector<std::string>{"example.com"});
}

TEST_CASE("zero record size is rejected with its index") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path, R"({"label":"a","sample_id":"s1","records":[0,5]})"
                     "\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, FileFormat::jsonl),
                         doctest::Contains("zero record size at index 0"), DataError);
}

TEST_CASE("duplicate sample_id is rejected") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path,
               R"({"label":"a","sample_id":"s1","records":[1]})"
               "\n"
               R"({"label":"b","sample_id":"s1","records":[2]})"
               "\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, FileFormat::jsonl),
                         doctest::Contains("duplicate sample_id"), DataError);
}

TEST_CASE("empty file is an empty dataset error") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path, "");
    CHECK_THROWS_WITH_AS(load_dataset(path, FileFormat::jsonl),
                         doctest::Contains("empty dataset"), DataError);
}

TEST_CASE("malformed jsonl names the line number") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path,
               R"({"label":"a","sample_id":"s1","records":[1]})"
               "\n"
               "not json\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, FileFormat::jsonl), doctest::Contains(":2:"),
                         DataError);
}

TEST_CASE("record sizes beyond the TLS ceiling are rejected") {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    write_file(path, R"({"label":"a","sample_id":"s1","records":[65537]})"
                     "\n");
    CHECK_THROWS_AS(load_dataset(path, FileFormat::jsonl), DataError);
}

TEST_CASE("round-trip preserves both formats") {
    std::vector<Trace> traces;
    traces.push_back(make_trace({-64, 88, 33, -33}, "alpha.com", "a1"));
    traces.push_back(make_trace({5, -7}, "beta.com", "b1"));
    Trace with_time = make_trace({1, -2, 3}, "alpha.com", "a2");
    with_time.collected_at = 1234.5;
    traces.push_back(with_time);
    const Dataset d = make_dataset(traces, "fixture");

    TempDir dir;
    for (const auto format : {FileFormat::jsonl, FileFormat::csv}) {
        const auto path =
            dir.file(format == FileFormat::jsonl ? std::string("d.jsonl") : std::string("d.csv"));
        save_dataset(d, path, format);
        const Dataset back = load_dataset(path, format);
        REQUIRE(back.traces.size() == d.traces.size());
        for (size_t i = 0; i < d.traces.size(); ++i) {
            CHECK(back.traces[i].records == d.traces[i].records);
            CHECK(back.traces[i].label == d.traces[i].label);
            CHECK(back.traces[i].sample_id == d.traces[i].sample_id);
        }
        CHECK(back.classes == d.classes);
    }

    // collected_at survives jsonl
    const auto jsonl = dir.file("t.jsonl");
    save_dataset(d, jsonl, FileFormat::jsonl);
    const Dataset back = load_dataset(jsonl, FileFormat::jsonl);
    CHECK(back.traces[2].collected_at == with_time.collected_at);
}

TEST_CASE("csv and jsonl agree on records") {
    const Dataset d = make_dataset({make_trace({-64, 88, 33, -33}, "a.com", "s1")}, "x");
    TempDir dir;
    save_dataset(d, dir.file("d.csv"), FileFormat::csv);
    save_dataset(d, dir.file("d.jsonl"), FileFormat::jsonl);
    const Dataset from_csv = load_dataset(dir.file("d.csv"), FileFormat::csv);
    const Dataset from_jsonl = load_dataset(dir.file("d.jsonl"), FileFormat::jsonl);
    CHECK(from_csv.traces[0].records == from_jsonl.traces[0].records);
}

TEST_CASE("saving an empty dataset is refused") {
    Dataset d;
    TempDir dir;
    CHECK_THROWS_WITH_AS(save_dataset(d, dir.file("d.jsonl"), FileFormat::jsonl),
                         doctest::Contains("refusing to write empty dataset"), DataError);
}

TEST_CASE("csv loader reports the header and line numbers") {
    TempDir dir;
    const auto path = dir.file("d.csv");
    write_file(path, "label,sample_id,records\na.com,s1,-64 88 bad\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, FileFormat::csv), doctest::Contains(":2:"),
                         DataError);
    write_file(path, "wrong,header\n");
    CHECK_THROWS_AS(load_dataset(path, FileFormat::csv), DataError);
}

TEST_CASE("synthetic generation is deterministic") {
    SynthProfile p;
    p.n_classes = 4;
    p.samples_per_class = 3;
    p.resources_min = 2;
    p.resources_max = 5;
    p.size_alphabet = {80, 120, 200, 300};
    p.noise_rate = 0.3;
    p.seed = 7;

    const Dataset a = generate_synthetic(p);
    const Dataset b = generate_synthetic(p);
    REQUIRE(a.traces.size() == b.traces.size());
    for (size_t i = 0; i < a.traces.size(); ++i) CHECK(a.traces[i] == b.traces[i]);

    TempDir dir;
    save_dataset(a, dir.file("a.jsonl"), FileFormat::jsonl);
    save_dataset(b, dir.file("b.jsonl"), FileFormat::jsonl);
    CHECK(read_file(dir.file("a.jsonl")) == read_file(dir.file("b.jsonl")));
}

TEST_CASE("noise-free classes emit identical samples") {
    SynthProfile p;
    p.n_classes = 3;
    p.samples_per_class = 4;
    p.resources_min = 2;
    p.resources_max = 4;
    p.size_alphabet = {70, 90, 150};
    p.noise_rate = 0.0;
    p.seed = 11;
    const Dataset d = generate_synthetic(p);
    for (const auto& label : d.classes) {
        const Trace* first = nullptr;
        for (const auto& t : d.traces) {
            if (t.label != label) continue;
            if (!first) {
                first = &t;
            } else {
                CHECK(t.records == first->records);
            }
        }
    }
}

TEST_CASE("generated traces alternate directions") {
    SynthProfile p;
    p.n_classes = 5;
    p.samples_per_class = 2;
    p.resources_min = 1;
    p.resources_max = 6;
    p.size_alphabet = {60, 100, 180, 240};
    p.noise_rate = 1.0;
    p.seed = 3;
    const Dataset d = generate_synthetic(p);
    CHECK(d.traces.size() == 10);
    for (const auto& t : d.traces) {
        bool has_out = false, has_in = false;
        for (const int32_t r : t.records) {
            (r > 0 ? has_out : has_in) = true;
            CHECK(r != 0);
        }
        CHECK(has_out);
        CHECK(has_in);
    }
}

TEST_CASE("signatures are stable when samples_per_class grows") {
    SynthProfile p;
    p.n_classes = 3;
    p.samples_per_class = 2;
    p.resources_min = 2;
    p.resources_max = 4;
    p.size_alphabet = {64, 96, 128};
    p.noise_rate = 0.2;
    p.seed = 9;
    const Dataset small = generate_synthetic(p);
    p.samples_per_class = 5;
    const Dataset large = generate_synthetic(p);
    for (const auto& t : small.traces) {
        bool found = false;
        for (const auto& u : large.traces) {
            if (u.sample_id == t.sample_id) {
                found = true;
                CHECK(u.records == t.records);
            }
        }
        CHECK(found);
    }
}

TEST_CASE("prefix truncates, saturates and composes") {
    const Trace t = make_trace({-64, 88, 33, -33}, "a", "s");
    CHECK(prefix(t, 2).records == std::vector<int32_t>{-64, 88});
    CHECK(prefix(t, 4).records == t.records);
    CHECK(prefix(t, 1000000).records == t.records);
    CHECK(prefix(t, 2).label == t.label);
    CHECK(prefix(t, 2).sample_id == t.sample_id);

    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const size_t a = 1 + rng.below(6);
        const size_t b = 1 + rng.below(6);
        CHECK(prefix(prefix(t, a), b).records == prefix(t, std::min(a, b)).records);
    }
}

TEST_CASE("class list is the sorted set of labels") {
    const Dataset d = make_dataset({make_trace({1}, "zz", "1"), make_trace({1}, "aa", "2"),
                                    make_trace({1}, "mm", "3"), make_trace({1}, "aa", "4")},
                                   "x");
    CHECK(d.classes == std::vector<std::string>{"aa", "mm", "zz"});
    CHECK(d.class_index("aa") == 0);
    CHECK(d.class_index("zz") == 2);
    CHECK(d.class_index("nope") == -1);
    CHECK(class_targets(d) == std::vector<int>{2, 0, 1, 0});
}

TEST_CASE("merge rejects colliding sample ids") {
    const Dataset a = make_dataset({make_trace({1}, "a", "s1")}, "a");
    const Dataset b = make_dataset({make_trace({2}, "b", "s1")}, "b");
    CHECK_THROWS_AS(merge_datasets(a, b, "m"), DataError);
    const Dataset c = make_dataset({make_trace({2}, "b", "s2")}, "b");
    const Dataset m = merge_datasets(a, c, "m");
    CHECK(m.traces.size() == 2);
    CHECK(m.classes == std::vector<std::string>{"a", "b"});
}
