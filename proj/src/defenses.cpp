#include "dnsfp/defenses.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnsfp/error.hpp"

namespace dnsfp {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string mode_name(PaddingMode m) {
    switch (m) {
        case PaddingMode::block: return "block";
        case PaddingMode::constant: return "constant";
        case PaddingMode::cell: return "cell";
    }
    return "block";
}

PaddingMode mode_from_name(const std::string& name) {
    if (name == "block") return PaddingMode::block;
    if (name == "constant") return PaddingMode::constant;
    if (name == "cell") return PaddingMode::cell;
    throw DataError("unknown padding mode \"" + name + "\"");
}

int32_t pad_block(int32_t size, int32_t sign, int32_t block, int32_t header_overhead,
                  const std::string& sample_id, size_t index) {
    const int32_t magnitude = std::abs(size);
    if (magnitude <= header_overhead) {
        std::ostringstream os;
        os << "trace \"" << sample_id << "\": record " << size << " at index " << index
           << " is not larger than the header overhead of " << header_overhead;
        throw DataError(os.str());
    }
    const int32_t payload = magnitude - header_overhead;
    const int32_t padded = (payload + block - 1) / block * block;
    if (padded + header_overhead > kMaxRecordSize) {
        std::ostringstream os;
        os << "trace \"" << sample_id << "\": record " << size << " at index " << index
           << " would exceed the TLS record ceiling after padding";
        throw DataError(os.str());
    }
    return sign * (padded + header_overhead);
}

}  // namespace

void PaddingPolicy::validate() const {
    if (header_overhead < 0) throw DataError("padding policy: negative header overhead");
    switch (mode) {
        case PaddingMode::block:
            if (!query_block && !response_block) {
                throw DataError("padding policy: block mode needs at least one block size");
            }
            if ((query_block && *query_block < 1) || (response_block && *response_block < 1)) {
                throw DataError("padding policy: block sizes must be positive");
            }
            break;
        case PaddingMode::constant:
            if (!constant_size || *constant_size < 1 || *constant_size > kMaxRecordSize) {
                throw DataError("padding policy: constant mode needs a constant_size in [1, 65536]");
            }
            break;
        case PaddingMode::cell:
            if (cell_size < 1 || cell_size > kMaxRecordSize) {
                throw DataError("padding policy: cell_size must be in [1, 65536]");
            }
            break;
    }
}

PaddingPolicy PaddingPolicy::edns0_128() {
    PaddingPolicy p;
    p.mode = PaddingMode::block;
    p.query_block = 128;
    p.response_block = 128;
    return p;
}

PaddingPolicy PaddingPolicy::edns0_468() {
    PaddingPolicy p;
    p.mode = PaddingMode::block;
    p.query_block = 128;
    p.response_block = 468;
    return p;
}

PaddingPolicy PaddingPolicy::perfect(int32_t size) {
    PaddingPolicy p;
    p.mode = PaddingMode::constant;
    p.constant_size = size;
    return p;
}

PaddingPolicy PaddingPolicy::tor_cells(int32_t cell_size) {
    PaddingPolicy p;
    p.mode = PaddingMode::cell;
    p.cell_size = cell_size;
    return p;
}

PaddingPolicy parse_policy_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("invalid policy JSON: ") + e.what());
    }
    PaddingPolicy p;
    try {
        p.mode = mode_from_name(j.at("mode").get<std::string>());
        if (j.contains("query_block") && !j.at("query_block").is_null()) {
            p.query_block = j.at("query_block").get<int32_t>();
        }
        if (j.contains("response_block") && !j.at("response_block").is_null()) {
            p.response_block = j.at("response_block").get<int32_t>();
        }
        if (j.contains("header_overhead")) p.header_overhead = j.at("header_overhead").get<int32_t>();
        if (j.contains("constant_size") && !j.at("constant_size").is_null()) {
            p.constant_size = j.at("constant_size").get<int32_t>();
        }
        if (j.contains("cell_size")) p.cell_size = j.at("cell_size").get<int32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed policy: ") + e.what());
    }
    p.validate();
    return p;
}

PaddingPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_policy_json(buf.str());
}

std::string policy_to_json(const PaddingPolicy& p) {
    ordered_json j;
    j["mode"] = mode_name(p.mode);
    j["query_block"] = p.query_block ? ordered_json(*p.query_block) : ordered_json(nullptr);
    j["response_block"] = p.response_block ? ordered_json(*p.response_block) : ordered_json(nullptr);
    j["header_overhead"] = p.header_overhead;
    j["constant_size"] = p.constant_size ? ordered_json(*p.constant_size) : ordered_json(nullptr);
    j["cell_size"] = p.cell_size;
    return j.dump();
}

Trace apply_padding(const Trace& t, const PaddingPolicy& p) {
    p.validate();
    Trace out = t;
    out.records.clear();
    switch (p.mode) {
        case PaddingMode::block:
            out.records.reserve(t.records.size());
            for (size_t i = 0; i < t.records.size(); ++i) {
                const int32_t r = t.records[i];
                const auto& block = r > 0 ? p.query_block : p.response_block;
                if (!block) {
                    out.records.push_back(r);
                } else {
                    out.records.push_back(
                        pad_block(r, r > 0 ? 1 : -1, *block, p.header_overhead, t.sample_id, i));
                }
            }
            break;
        case PaddingMode::constant:
            out.records.reserve(t.records.size());
            for (const int32_t r : t.records) {
                out.records.push_back(r > 0 ? *p.constant_size : -*p.constant_size);
            }
            break;
        case PaddingMode::cell:
            for (const int32_t r : t.records) {
                const int32_t cells = (std::abs(r) + p.cell_size - 1) / p.cell_size;
                for (int32_t c = 0; c < cells; ++c) {
                    out.records.push_back(r > 0 ? p.cell_size : -p.cell_size);
                }
            }
            break;
    }
    return out;
}

std::pair<Dataset, OverheadReport> apply_to_dataset(const Dataset& d, const PaddingPolicy& p) {
    p.validate();
    OverheadReport report;
    std::vector<Trace> defended;
    defended.reserve(d.traces.size());
    for (const auto& t : d.traces) {
        Trace padded = apply_padding(t, p);
        for (const int32_t r : t.records) report.baseline_bytes += std::abs(r);
        for (const int32_t r : padded.records) report.defended_bytes += std::abs(r);
        defended.push_back(std::move(padded));
    }
    report.ratio = report.baseline_bytes == 0
                       ? 0.0
                       : static_cast<double>(report.defended_bytes) /
                             static_cast<double>(report.baseline_bytes);
    Dataset out;
    out.traces = std::move(defended);
    out.classes = d.classes;
    out.name = d.name;
    return {std::move(out), report};
}

int32_t derive_constant(const Dataset& d) {
    if (d.traces.empty()) throw DataError("cannot derive a constant from an empty dataset");
    int32_t best = 0;
    for (const auto& t : d.traces) {
        for (const int32_t r : t.records) best = std::max(best, std::abs(r));
    }
    return best;
}

}  // namespace dnsfp
