#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dnsfp/trace.hpp"

namespace dnsfp {

enum class PaddingMode { block, constant, cell };

// Trace-level padding simulation. Block mode models EDNS0 padding applied
// to the DNS payload under a fixed per-record header; constant mode models
// perfect padding; cell mode approximates constant-size cell transports
// such as DNS over Tor (cells only, no latency or multiplexing effects).
struct PaddingPolicy {
    PaddingMode mode = PaddingMode::block;
    std::optional<int32_t> query_block;     // client -> resolver records
    std::optional<int32_t> response_block;  // resolver -> client records
    int32_t header_overhead = 51;           // bytes of HTTPS framing per record
    std::optional<int32_t> constant_size;   // for mode == constant
    int32_t cell_size = 512;                // for mode == cell

    void validate() const;  // throws DataError on inconsistent fields

    static PaddingPolicy edns0_128();      // Cloudflare's observed 128/128
    static PaddingPolicy edns0_468();      // recommended client 128 / resolver 468
    static PaddingPolicy perfect(int32_t size);
    static PaddingPolicy tor_cells(int32_t cell_size = 512);
};

PaddingPolicy parse_policy_json(const std::string& text);
PaddingPolicy load_policy(const std::filesystem::path& path);
std::string policy_to_json(const PaddingPolicy& p);

struct OverheadReport {
    uint64_t baseline_bytes = 0;
    uint64_t defended_bytes = 0;
    double ratio = 0.0;  // defended / baseline
};

// Applies the policy to one trace. Block mode pads the inferred payload
// (|size| - header_overhead) up to the next multiple of the direction's
// block, leaving sides without a block untouched; sizes already on a
// multiple stay as they are. Sign order is always preserved.
Trace apply_padding(const Trace& t, const PaddingPolicy& p);

std::pair<Dataset, OverheadReport> apply_to_dataset(const Dataset& d, const PaddingPolicy& p);

// Maximum absolute record size in the dataset; the perfect-padding constant.
int32_t derive_constant(const Dataset& d);

}  // namespace dnsfp
