#include "dnsfp/censorship.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnsfp/error.hpp"

namespace dnsfp {

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trimmed(const std::string& s) {
    size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

}  // namespace

RankingList make_ranking(std::vector<RankingEntry> entries) {
    if (entries.empty()) throw DataError("ranking list is empty");
    for (auto& e : entries) {
        e.domain = lowercase(e.domain);
        if (e.domain.empty()) throw DataError("ranking contains an empty domain");
        if (e.rank < 1) throw DataError("ranking contains rank " + std::to_string(e.rank));
    }
    std::sort(entries.begin(), entries.end(),
              [](const RankingEntry& a, const RankingEntry& b) { return a.rank < b.rank; });
    std::set<std::string> seen;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].rank == entries[i - 1].rank) {
            throw DataError("duplicate rank " + std::to_string(entries[i].rank));
        }
        if (!seen.insert(entries[i].domain).second) {
            throw DataError("duplicate domain \"" + entries[i].domain + "\" in ranking");
        }
    }
    RankingList r;
    r.entries = std::move(entries);
    return r;
}

RankingList load_ranking(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    std::vector<RankingEntry> entries;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "rank,domain") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected rank,domain");
        }
        RankingEntry e;
        try {
            size_t pos = 0;
            const unsigned long rank = std::stoul(line.substr(0, comma), &pos);
            if (pos != comma) throw std::invalid_argument(line);
            e.rank = static_cast<uint32_t>(rank);
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad rank \"" +
                            line.substr(0, comma) + "\"");
        }
        e.domain = trimmed(line.substr(comma + 1));
        entries.push_back(std::move(e));
    }
    return make_ranking(std::move(entries));
}

Blacklist make_blacklist(std::vector<std::string> domains, std::string name) {
    Blacklist b;
    b.name = std::move(name);
    for (auto& d : domains) {
        const std::string domain = lowercase(trimmed(d));
        if (!domain.empty()) b.domains.insert(domain);
    }
    if (b.domains.empty()) throw DataError("blacklist \"" + b.name + "\" is empty");
    return b;
}

Blacklist load_blacklist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    std::vector<std::string> domains;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string entry = trimmed(line);
        if (entry.empty() || entry[0] == '#') continue;
        domains.push_back(entry);
    }
    return make_blacklist(std::move(domains), path.filename().string());
}

size_t domain_length(const std::string& domain) {
    if (domain.empty()) throw DataError("cannot take the length of an empty domain");
    return domain.size();
}

BlockingReport analyze(const RankingList& r, const Blacklist& b) {
    BlockingReport report;

    std::set<size_t> blacklist_lengths;
    for (const auto& domain : b.domains) blacklist_lengths.insert(domain_length(domain));
    for (const size_t length : blacklist_lengths) report.per_length[length] = {};
    for (const auto& domain : b.domains) ++report.per_length[domain_length(domain)].gain;

    size_t blacklisted_in_ranking = 0;
    std::optional<uint32_t> most_popular_rank;
    std::map<size_t, std::vector<uint32_t>> collateral_ranks;
    for (const auto& entry : r.entries) {
        const bool blacklisted = b.domains.count(entry.domain) > 0;
        if (blacklisted) {
            ++blacklisted_in_ranking;
            if (!most_popular_rank || entry.rank < *most_popular_rank) {
                most_popular_rank = entry.rank;
                report.most_popular_length = domain_length(entry.domain);
            }
            continue;
        }
        const size_t length = domain_length(entry.domain);
        if (blacklist_lengths.count(length)) {
            ++report.per_length[length].collateral;
            collateral_ranks[length].push_back(entry.rank);
        }
    }

    for (auto& [length, ranks] : collateral_ranks) {
        std::sort(ranks.begin(), ranks.end());
        RankStats stats;
        stats.min = ranks.front();
        stats.max = ranks.back();
        const size_t n = ranks.size();
        stats.median = n % 2 == 1 ? static_cast<double>(ranks[n / 2])
                                  : (static_cast<double>(ranks[n / 2 - 1]) +
                                     static_cast<double>(ranks[n / 2])) /
                                        2.0;
        report.per_length[length].rank_stats = stats;
    }

    bool first = true;
    for (const auto& [length, stats] : report.per_length) {
        if (first || stats.collateral < report.per_length[report.min_collateral_length].collateral) {
            report.min_collateral_length = length;
        }
        if (first) {
            report.max_gain_length = length;
        } else {
            const LengthStats& best = report.per_length[report.max_gain_length];
            if (stats.gain > best.gain ||
                (stats.gain == best.gain && stats.collateral < best.collateral)) {
                report.max_gain_length = length;
            }
        }
        first = false;
    }

    report.coverage =
        static_cast<double>(blacklisted_in_ranking) / static_cast<double>(b.domains.size());
    return report;
}

std::map<size_t, uint64_t> length_histogram(const RankingList& r) {
    std::map<size_t, uint64_t> histogram;
    for (const auto& entry : r.entries) ++histogram[domain_length(entry.domain)];
    return histogram;
}

BlockingDecision blocking_decision(size_t estimated_length, const Blacklist& b) {
    for (const auto& domain : b.domains) {
        if (domain_length(domain) == estimated_length) return BlockingDecision::block;
    }
    return BlockingDecision::allow;
}

std::string blocking_report_to_json(const BlockingReport& report) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json lengths = nlohmann::ordered_json::array();
    for (const auto& [length, stats] : report.per_length) {
        nlohmann::ordered_json entry;
        entry["length"] = length;
        entry["gain"] = stats.gain;
        entry["collateral"] = stats.collateral;
        if (stats.rank_stats) {
            entry["rank_min"] = stats.rank_stats->min;
            entry["rank_median"] = stats.rank_stats->median;
            entry["rank_max"] = stats.rank_stats->max;
        } else {
            entry["rank_min"] = nullptr;
            entry["rank_median"] = nullptr;
            entry["rank_max"] = nullptr;
        }
        lengths.push_back(std::move(entry));
    }
    j["per_length"] = std::move(lengths);
    j["strategies"] = {{"min_collateral", report.min_collateral_length},
                       {"max_gain", report.max_gain_length},
                       {"most_popular", report.most_popular_length
                                            ? nlohmann::ordered_json(*report.most_popular_length)
                                            : nlohmann::ordered_json(nullptr)}};
    j["coverage"] = report.coverage;
    return j.dump(2);
}

void export_blocking_csv(const BlockingReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << std::setprecision(17) << "length,gain,collateral,rank_min,rank_median,rank_max\n";
    for (const auto& [length, stats] : report.per_length) {
        out << length << ',' << stats.gain << ',' << stats.collateral << ',';
        if (stats.rank_stats) {
            out << stats.rank_stats->min << ',' << stats.rank_stats->median << ','
                << stats.rank_stats->max;
        } else {
            out << ",,";
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

}  // namespace dnsfp
