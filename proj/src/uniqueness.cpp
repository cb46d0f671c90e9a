#include "dnsfp/uniqueness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "dnsfp/error.hpp"
#include "dnsfp/random.hpp"

namespace dnsfp {

namespace {

void check_equal_sample_counts(const Dataset& d) {
    std::vector<size_t> counts(d.classes.size(), 0);
    for (const auto& t : d.traces) ++counts[d.class_index(t.label)];
    const size_t expected = counts.empty() ? 0 : counts[0];
    std::vector<std::string> offenders;
    for (size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] != expected) offenders.push_back(d.classes[c]);
    }
    if (!offenders.empty()) {
        std::ostringstream os;
        os << "anonymity-set analysis needs the same sample count for every class; "
           << "deviating classes:";
        for (const auto& label : offenders) os << " \"" << label << "\"";
        throw DataError(os.str());
    }
}

std::vector<double> mean_std_rows(const std::vector<std::vector<double>>& rows, size_t col) {
    std::vector<double> out;
    for (const auto& row : rows) out.push_back(row[col]);
    return out;
}

}  // namespace

AnonymitySetIndex build_index(const Dataset& d, size_t l) {
    if (l < 1) throw DataError("prefix length must be >= 1");
    if (d.traces.empty()) throw DataError("cannot index an empty dataset");
    check_equal_sample_counts(d);

    AnonymitySetIndex index;
    index.prefix_length = l;
    index.total_traces = d.traces.size();

    std::map<std::vector<int32_t>, std::map<int, uint32_t>> grouped;
    for (const auto& t : d.traces) {
        std::vector<int32_t> key(t.records.begin(),
                                 t.records.begin() + std::min(l, t.records.size()));
        ++grouped[std::move(key)][d.class_index(t.label)];
    }
    for (auto& [prefix, members] : grouped) {
        AnonymitySet set;
        for (const auto& [cls, multiplicity] : members) {
            set.members.emplace_back(cls, multiplicity);
            set.size += multiplicity;
        }
        index.by_prefix.emplace(prefix, std::move(set));
    }
    return index;
}

double conditional_entropy(const Dataset& d, size_t l) {
    const AnonymitySetIndex index = build_index(d, l);
    const double total = static_cast<double>(index.total_traces);
    double entropy = 0.0;
    for (const auto& [prefix, set] : index.by_prefix) {
        const double pr_observation = static_cast<double>(set.size) / total;
        double h = 0.0;
        for (const auto& [cls, multiplicity] : set.members) {
            const double posterior =
                static_cast<double>(multiplicity) / static_cast<double>(set.size);
            h -= posterior * std::log2(posterior);
        }
        entropy += pr_observation * h;
    }
    return entropy;
}

std::vector<EntropyReport> entropy_curve(const Dataset& d, const std::vector<size_t>& world_sizes,
                                         size_t l_max, size_t resamples, uint64_t seed) {
    if (l_max < 1) throw DataError("l_max must be >= 1");
    if (resamples < 1) throw DataError("resamples must be >= 1");
    check_equal_sample_counts(d);

    double mean_length = 0.0;
    for (const auto& t : d.traces) mean_length += static_cast<double>(t.records.size());
    mean_length /= static_cast<double>(d.traces.size());

    std::vector<std::vector<uint32_t>> by_class(d.classes.size());
    for (size_t i = 0; i < d.traces.size(); ++i) {
        by_class[d.class_index(d.traces[i].label)].push_back(static_cast<uint32_t>(i));
    }

    std::vector<EntropyReport> reports;
    for (const size_t world : world_sizes) {
        if (world < 1 || world > d.classes.size()) {
            std::ostringstream os;
            os << "world size " << world << " exceeds the " << d.classes.size()
               << " classes available";
            throw DataError(os.str());
        }
        EntropyReport report;
        report.world_size = world;
        report.resamples = resamples;
        report.mean_trace_length = mean_length;

        std::vector<std::vector<double>> per_resample;  // [resample][l-1]
        for (size_t r = 0; r < resamples; ++r) {
            Rng rng(mix_seed(seed, 0xe27u + world, r));
            const auto chosen = rng.sample_indices(d.classes.size(), world);
            Dataset subset;
            for (const uint32_t c : chosen) {
                for (const uint32_t idx : by_class[c]) subset.traces.push_back(d.traces[idx]);
            }
            std::set<std::string> labels;
            for (const auto& t : subset.traces) labels.insert(t.label);
            subset.classes.assign(labels.begin(), labels.end());

            std::vector<double> curve;
            for (size_t l = 1; l <= l_max; ++l) curve.push_back(conditional_entropy(subset, l));
            per_resample.push_back(std::move(curve));
        }

        for (size_t l = 1; l <= l_max; ++l) {
            const auto values = mean_std_rows(per_resample, l - 1);
            double sum = 0.0;
            for (const double v : values) sum += v;
            const double mean = sum / static_cast<double>(values.size());
            double var = 0.0;
            for (const double v : values) var += (v - mean) * (v - mean);
            report.per_l.push_back({l, mean, std::sqrt(var / static_cast<double>(values.size()))});
            if (!report.horizon_1bit && mean < 1.0) {
                report.horizon_1bit = l;
                report.horizon_fraction = static_cast<double>(l) / mean_length;
            }
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

void export_entropy_csv(const std::vector<EntropyReport>& reports,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << std::setprecision(17) << "world_size,l,entropy_mean_bits,entropy_std_bits\n";
    for (const auto& report : reports) {
        for (const auto& point : report.per_l) {
            out << report.world_size << ',' << point.l << ',' << point.mean_bits << ','
                << point.std_bits << '\n';
        }
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

std::optional<int32_t> fourth_record_domain_length(const Trace& t, int32_t header_overhead,
                                                   const std::vector<int32_t>& control_sizes,
                                                   size_t min_position) {
    for (size_t i = 0; i < t.records.size(); ++i) {
        if (i + 1 < min_position) continue;  // positions are 1-based
        const int32_t r = t.records[i];
        if (r <= 0) continue;
        if (std::find(control_sizes.begin(), control_sizes.end(), r) != control_sizes.end()) {
            continue;
        }
        const int32_t payload = r - header_overhead;
        if (payload > 0) return payload;
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace dnsfp
