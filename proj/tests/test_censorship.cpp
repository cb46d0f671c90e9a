#include <doctest.h>

#include "dnsfp/censorship.hpp"
#include "dnsfp/error.hpp"
#include "dnsfp/uniqueness.hpp"
#include "test_util.hpp"

using namespace dnsfp;
using dnsfp::test::TempDir;
using dnsfp::test::read_file;
using dnsfp::test::write_file;

namespace {

RankingList ranking_of(const std::vector<std::string>& domains) {
    std::vector<RankingEntry> entries;
    for (size_t i = 0; i < domains.size(); ++i) {
        entries.push_back({static_cast<uint32_t>(i + 1), domains[i]});
    }
    return make_ranking(std::move(entries));
}

}  // namespace

TEST_CASE("domain length counts the full string") {
    CHECK(domain_length("google.com") == 10);
    // the full-string convention: 6 characters, dots included
    CHECK(domain_length("ft.com") == 6);
    CHECK(domain_length("a.b") == 3);
    CHECK_THROWS_AS(domain_length(""), DataError);
}

TEST_CASE("single blacklisted domain with no same-length neighbours") {
    const RankingList r = ranking_of({"aa.com", "bbb.com", "c.com"});
    const Blacklist b = make_blacklist({"bbb.com"}, "tiny");
    const BlockingReport report = analyze(r, b);
    REQUIRE(report.per_length.count(7) == 1);
    CHECK(report.per_length.at(7).gain == 1);
    CHECK(report.per_length.at(7).collateral == 0);
    CHECK(!report.per_length.at(7).rank_stats.has_value());
    CHECK(report.coverage == 1.0);
    REQUIRE(report.most_popular_length.has_value());
    CHECK(*report.most_popular_length == 7);
}

TEST_CASE("five-domain fixture exercises gain and collateral sides") {
    // lengths: aa.com=6 bb.com=6 ccc.com=7 dddd.com=8 eeeee.com=9
    const RankingList r = ranking_of({"aa.com", "bb.com", "ccc.com", "dddd.com", "eeeee.com"});
    // one blacklisted domain inside the ranking (bb.com) and one absent
    // (zz.net, length 6): gains count the blacklist, collateral the ranking
    const Blacklist b = make_blacklist({"bb.com", "zz.net"}, "fixture");
    const BlockingReport report = analyze(r, b);

    REQUIRE(report.per_length.size() == 1);  // only length 6 occurs in the blacklist
    const LengthStats& l6 = report.per_length.at(6);
    CHECK(l6.gain == 2);        // both blacklisted domains have length 6
    CHECK(l6.collateral == 1);  // aa.com only; bb.com is a target, not damage
    REQUIRE(l6.rank_stats.has_value());
    CHECK(l6.rank_stats->min == 1);
    CHECK(l6.rank_stats->median == 1.0);
    CHECK(l6.rank_stats->max == 1);
    CHECK(report.coverage == 0.5);
    CHECK(report.min_collateral_length == 6);
    CHECK(report.max_gain_length == 6);
    REQUIRE(report.most_popular_length.has_value());
    CHECK(*report.most_popular_length == 6);
}

TEST_CASE("strategy tie-breaking picks smaller lengths and collateral") {
    //   length 5: gain 1, collateral 0
    //   length 6: gain 2, collateral 2
    //   length 7: gain 2, collateral 1  -> max gain resolves here
    const RankingList r = ranking_of(
        {"aaaaa", "k.com", "l.com", "x.net", "mm.com", "nn.com"});
    //  5        5        5        5        6         6
    const Blacklist b = make_blacklist({"aaaaa", "oo.com", "pp.com", "qqq.com", "rrr.com"},
                                       "ties");
    // blacklist lengths: 5 (aaaaa), 6 (oo,pp), 7 (qqq,rrr)
    const BlockingReport report = analyze(r, b);
    CHECK(report.per_length.at(5).gain == 1);
    CHECK(report.per_length.at(5).collateral == 3);
    CHECK(report.per_length.at(6).gain == 2);
    CHECK(report.per_length.at(6).collateral == 2);
    CHECK(report.per_length.at(7).gain == 2);
    CHECK(report.per_length.at(7).collateral == 0);
    CHECK(report.max_gain_length == 7);        // gain tie, smaller collateral
    CHECK(report.min_collateral_length == 7);  // collateral 0
}

TEST_CASE("blacklist set semantics deduplicate") {
    const RankingList r = ranking_of({"aa.com", "bbb.com"});
    const Blacklist once = make_blacklist({"bbb.com"}, "x");
    const Blacklist twice = make_blacklist({"bbb.com", "BBB.com", " bbb.com "}, "x");
    CHECK(twice.domains.size() == 1);
    const BlockingReport a = analyze(r, once);
    const BlockingReport c = analyze(r, twice);
    CHECK(a.per_length.at(7).gain == c.per_length.at(7).gain);
    CHECK(a.coverage == c.coverage);
}

TEST_CASE("fully absent blacklist is flagged, not an error") {
    const RankingList r = ranking_of({"aa.com"});
    const Blacklist b = make_blacklist({"zzzzzz.org"}, "absent");
    const BlockingReport report = analyze(r, b);
    CHECK(report.coverage == 0.0);
    CHECK(!report.most_popular_length.has_value());
}

TEST_CASE("length histogram partitions the ranking") {
    const RankingList r = ranking_of({"aa.com", "bb.com", "c.org"});
    const auto histogram = length_histogram(r);
    CHECK(histogram.at(6) == 2);
    CHECK(histogram.at(5) == 1);
    uint64_t total = 0;
    for (const auto& [length, count] : histogram) total += count;
    CHECK(total == r.entries.size());

    const auto single = length_histogram(ranking_of({"only.one"}));
    CHECK(single.size() == 1);
    CHECK(single.at(8) == 1);
}

TEST_CASE("report is invariant under entry reordering") {
    std::vector<RankingEntry> forward = {{1, "aa.com"}, {2, "bbb.com"}, {3, "cc.com"}};
    std::vector<RankingEntry> backward = {{3, "cc.com"}, {1, "aa.com"}, {2, "bbb.com"}};
    const Blacklist b = make_blacklist({"aa.com"}, "x");
    const BlockingReport fa = analyze(make_ranking(forward), b);
    const BlockingReport ba = analyze(make_ranking(backward), b);
    CHECK(fa.per_length.at(6).collateral == ba.per_length.at(6).collateral);
    CHECK(fa.per_length.at(6).rank_stats->median == ba.per_length.at(6).rank_stats->median);
}

TEST_CASE("blocking decision matches blacklist lengths and is monotone") {
    const Blacklist b = make_blacklist({"google.com"}, "x");
    CHECK(blocking_decision(10, b) == BlockingDecision::block);
    CHECK(blocking_decision(11, b) == BlockingDecision::allow);

    const Blacklist wider = make_blacklist({"google.com", "youtube.com"}, "x");
    for (size_t length = 1; length <= 20; ++length) {
        if (blocking_decision(length, b) == BlockingDecision::block) {
            CHECK(blocking_decision(length, wider) == BlockingDecision::block);
        }
    }
}

TEST_CASE("fourth-record estimate composes with blocking") {
    // the first-party query at position 4 encodes a 10-character domain
    const Trace t = dnsfp::test::make_trace({33, -33, -170, 61, -400});
    const auto estimate = fourth_record_domain_length(t);
    REQUIRE(estimate.has_value());
    CHECK(*estimate == 10);
    CHECK(blocking_decision(*estimate, make_blacklist({"google.com"}, "x")) ==
          BlockingDecision::block);
}

TEST_CASE("ranking and blacklist files load with comments and case folding") {
    TempDir dir;
    write_file(dir.file("rank.csv"), "rank,domain\n1,Google.com\n2,ft.com\n");
    const RankingList r = load_ranking(dir.file("rank.csv"));
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].domain == "google.com");

    write_file(dir.file("bad.csv"), "1,a.com\none,b.com\n");
    CHECK_THROWS_WITH_AS(load_ranking(dir.file("bad.csv")), doctest::Contains(":2:"), DataError);

    write_file(dir.file("list.txt"), "# comment\n\nFT.com\n  spaced.org  \n");
    const Blacklist b = load_blacklist(dir.file("list.txt"));
    CHECK(b.domains == std::set<std::string>{"ft.com", "spaced.org"});

    write_file(dir.file("empty.txt"), "# nothing\n");
    CHECK_THROWS_AS(load_blacklist(dir.file("empty.txt")), DataError);

    write_file(dir.file("dup.csv"), "1,a.com\n1,b.com\n");
    CHECK_THROWS_AS(load_ranking(dir.file("dup.csv")), DataError);
}

TEST_CASE("blocking report serializes to JSON and CSV") {
    const RankingList r = ranking_of({"aa.com", "bb.com", "ccc.com"});
    const Blacklist b = make_blacklist({"bb.com"}, "x");
    const BlockingReport report = analyze(r, b);

    const std::string json = blocking_report_to_json(report);
    CHECK(json.find("\"min_collateral\"") != std::string::npos);
    CHECK(json.find("\"coverage\"") != std::string::npos);

    TempDir dir;
    export_blocking_csv(report, dir.file("table.csv"));
    const std::string csv = read_file(dir.file("table.csv"));
    CHECK(csv.find("length,gain,collateral,rank_min,rank_median,rank_max\n") == 0);
    CHECK(csv.find("6,1,1,") != std::string::npos);
}
