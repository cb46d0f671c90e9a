#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "dnsfp/trace.hpp"

namespace dnsfp {

// Multiset of websites compatible with one observed prefix, with the
// number of that class's traces sharing the prefix as multiplicity.
struct AnonymitySet {
    std::vector<std::pair<int, uint32_t>> members;  // (class index, multiplicity)
    uint32_t size = 0;                              // sum of multiplicities
};

struct AnonymitySetIndex {
    size_t prefix_length = 0;
    size_t total_traces = 0;
    std::map<std::vector<int32_t>, AnonymitySet> by_prefix;
};

// Groups traces by exact equality of their first-l records (shorter traces
// contribute their whole sequence). Requires the same sample count for
// every class so the uniform-prior posterior stays a simple ratio.
AnonymitySetIndex build_index(const Dataset& d, size_t l);

// H(W|S_l) in bits: expectation over observed prefixes of the Shannon
// entropy of the posterior m_o(w) / |A(o)|.
double conditional_entropy(const Dataset& d, size_t l);

struct EntropyPoint {
    size_t l = 0;
    double mean_bits = 0.0;
    double std_bits = 0.0;
};

struct EntropyReport {
    size_t world_size = 0;
    std::vector<EntropyPoint> per_l;            // l = 1..l_max
    std::optional<size_t> horizon_1bit;         // smallest l with mean < 1 bit
    std::optional<double> horizon_fraction;     // horizon / mean trace length
    double mean_trace_length = 0.0;
    size_t resamples = 0;
};

// For each world size, averages the entropy curve over `resamples` class
// subsets drawn uniformly without replacement.
std::vector<EntropyReport> entropy_curve(const Dataset& d, const std::vector<size_t>& world_sizes,
                                         size_t l_max, size_t resamples = 3, uint64_t seed = 0);

// world_size,l,entropy_mean_bits,entropy_std_bits
void export_entropy_csv(const std::vector<EntropyReport>& reports,
                        const std::filesystem::path& path);

// Size of the first outgoing record at 1-based position >= 4, minus the
// header overhead: the likely first-party domain-name length. Records
// whose |size| matches a control-message size (HTTP/2 acks by default)
// are skipped. Returns nothing when no candidate has a positive payload.
std::optional<int32_t> fourth_record_domain_length(
    const Trace& t, int32_t header_overhead = 51,
    const std::vector<int32_t>& control_sizes = {33}, size_t min_position = 4);

}  // namespace dnsfp
