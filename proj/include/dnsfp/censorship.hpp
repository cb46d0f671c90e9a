#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dnsfp {

struct RankingEntry {
    uint32_t rank = 0;
    std::string domain;
};

// Popularity ranking; entries sorted by strictly increasing rank, domains
// unique and lowercase.
struct RankingList {
    std::vector<RankingEntry> entries;
};

struct Blacklist {
    std::set<std::string> domains;  // lowercase
    std::string name;
};

// CSV rank,domain (an optional "rank,domain" header line is accepted).
RankingList load_ranking(const std::filesystem::path& path);
RankingList make_ranking(std::vector<RankingEntry> entries);

// One domain per line; blank lines and '#' comments are skipped.
Blacklist load_blacklist(const std::filesystem::path& path);
Blacklist make_blacklist(std::vector<std::string> domains, std::string name);

// Character count of the full domain string, dots included.
size_t domain_length(const std::string& domain);

struct RankStats {
    uint32_t min = 0;
    double median = 0.0;
    uint32_t max = 0;
};

struct LengthStats {
    uint64_t gain = 0;        // blacklisted domains of this length
    uint64_t collateral = 0;  // non-blacklisted ranking domains of this length
    std::optional<RankStats> rank_stats;  // over the collateral domains' ranks
};

// Collateral damage and censor gain per domain length occurring in the
// blacklist, plus the three blocking strategies.
struct BlockingReport {
    std::map<size_t, LengthStats> per_length;
    size_t min_collateral_length = 0;  // ties: smaller length
    size_t max_gain_length = 0;        // ties: smaller collateral, then smaller length
    std::optional<size_t> most_popular_length;  // unset when no blacklisted domain is ranked
    double coverage = 0.0;  // fraction of the blacklist present in the ranking
};

BlockingReport analyze(const RankingList& r, const Blacklist& b);

std::map<size_t, uint64_t> length_histogram(const RankingList& r);

enum class BlockingDecision { block, allow };

// Block iff some blacklisted domain has exactly this length; composes with
// the fourth-record domain-length estimate for block-on-first-query.
BlockingDecision blocking_decision(size_t estimated_length, const Blacklist& b);

std::string blocking_report_to_json(const BlockingReport& report);

// length,gain,collateral,rank_min,rank_median,rank_max
void export_blocking_csv(const BlockingReport& report, const std::filesystem::path& path);

}  // namespace dnsfp
