#include "dnsfp/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dnsfp/error.hpp"
#include "dnsfp/random.hpp"

namespace dnsfp {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string quote_str(const std::string& s) { return "\"" + s + "\""; }

void fail_line(const std::filesystem::path& path, size_t line_no, const std::string& reason) {
    std::ostringstream os;
    os << path.string() << ":" << line_no << ": " << reason;
    throw DataError(os.str());
}

Trace trace_from_json_line(const std::filesystem::path& path, size_t line_no,
                           const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        fail_line(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail_line(path, line_no, "expected a JSON object");
    Trace t;
    try {
        t.label = j.at("label").get<std::string>();
        t.sample_id = j.at("sample_id").get<std::string>();
        if (!j.at("records").is_array()) fail_line(path, line_no, "records must be an array");
        for (const auto& v : j.at("records")) {
            if (!v.is_number_integer()) fail_line(path, line_no, "records must be integers");
            const int64_t r = v.get<int64_t>();
            if (r < INT32_MIN || r > INT32_MAX) {
                fail_line(path, line_no, "record size " + std::to_string(r) + " out of range");
            }
            t.records.push_back(static_cast<int32_t>(r));
        }
        if (j.contains("collected_at") && !j.at("collected_at").is_null()) {
            t.collected_at = j.at("collected_at").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        fail_line(path, line_no, std::string("bad trace object: ") + e.what());
    }
    return t;
}

Trace trace_from_csv_line(const std::filesystem::path& path, size_t line_no,
                          const std::string& line) {
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) fail_line(path, line_no, "expected label,sample_id,records");
    Trace t;
    t.label = line.substr(0, c1);
    t.sample_id = line.substr(c1 + 1, c2 - c1 - 1);
    std::istringstream rec(line.substr(c2 + 1));
    std::string tok;
    while (rec >> tok) {
        try {
            size_t pos = 0;
            long long v = std::stoll(tok, &pos);
            if (pos != tok.size() || v < INT32_MIN || v > INT32_MAX) {
                throw std::invalid_argument(tok);
            }
            t.records.push_back(static_cast<int32_t>(v));
        } catch (const std::exception&) {
            fail_line(path, line_no, "bad record size " + quote_str(tok));
        }
    }
    return t;
}

void check_record_bounds(const std::filesystem::path& path, size_t line_no, const Trace& t) {
    for (size_t i = 0; i < t.records.size(); ++i) {
        if (t.records[i] == 0) {
            std::ostringstream os;
            os << "zero record size at index " << i;
            fail_line(path, line_no, os.str());
        }
        if (std::abs(static_cast<int64_t>(t.records[i])) > kMaxRecordSize) {
            std::ostringstream os;
            os << "record size " << t.records[i] << " at index " << i
               << " exceeds the TLS ceiling of " << kMaxRecordSize;
            fail_line(path, line_no, os.str());
        }
    }
    if (t.records.empty()) fail_line(path, line_no, "empty records");
}

}  // namespace

int Dataset::class_index(const std::string& label) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label) return -1;
    return static_cast<int>(it - classes.begin());
}

FileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".jsonl") return FileFormat::jsonl;
    if (ext == ".csv") return FileFormat::csv;
    throw DataError("cannot infer file format from " + quote_str(path.string()) +
                    "; expected a .jsonl or .csv extension");
}

void validate_trace(const Trace& t) {
    if (t.records.empty()) {
        throw DataError("trace " + quote_str(t.sample_id) + " has no records");
    }
    for (size_t i = 0; i < t.records.size(); ++i) {
        if (t.records[i] == 0) {
            std::ostringstream os;
            os << "trace " << quote_str(t.sample_id) << ": zero record size at index " << i;
            throw DataError(os.str());
        }
        if (std::abs(static_cast<int64_t>(t.records[i])) > kMaxRecordSize) {
            std::ostringstream os;
            os << "trace " << quote_str(t.sample_id) << ": record size " << t.records[i]
               << " at index " << i << " exceeds the TLS ceiling of " << kMaxRecordSize;
            throw DataError(os.str());
        }
    }
}

Dataset make_dataset(std::vector<Trace> traces, std::string name) {
    std::unordered_set<std::string> ids;
    std::set<std::string> labels;
    for (const auto& t : traces) {
        validate_trace(t);
        if (!ids.insert(t.sample_id).second) {
            throw DataError("duplicate sample_id " + quote_str(t.sample_id));
        }
        labels.insert(t.label);
    }
    Dataset d;
    d.traces = std::move(traces);
    d.classes.assign(labels.begin(), labels.end());
    d.name = std::move(name);
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + quote_str(path.string()));

    std::vector<Trace> traces;
    std::string line;
    size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (format == FileFormat::csv && !saw_header) {
            if (line != "label,sample_id,records") {
                fail_line(path, line_no, "expected header \"label,sample_id,records\"");
            }
            saw_header = true;
            continue;
        }
        Trace t = format == FileFormat::jsonl ? trace_from_json_line(path, line_no, line)
                                              : trace_from_csv_line(path, line_no, line);
        check_record_bounds(path, line_no, t);
        traces.push_back(std::move(t));
    }
    if (traces.empty()) throw DataError(path.string() + ": empty dataset");

    std::unordered_set<std::string> ids;
    for (const auto& t : traces) {
        if (!ids.insert(t.sample_id).second) {
            throw DataError(path.string() + ": duplicate sample_id " + quote_str(t.sample_id));
        }
    }
    return make_dataset(std::move(traces), path.filename().string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format) {
    if (d.traces.empty()) throw DataError("refusing to write empty dataset");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + quote_str(path.string()));

    if (format == FileFormat::csv) {
        out << "label,sample_id,records\n";
        for (const auto& t : d.traces) {
            if (t.label.find(',') != std::string::npos ||
                t.sample_id.find(',') != std::string::npos) {
                throw DataError("trace " + quote_str(t.sample_id) +
                                ": labels and sample_ids with commas cannot be written as CSV");
            }
            out << t.label << ',' << t.sample_id << ',';
            for (size_t i = 0; i < t.records.size(); ++i) {
                if (i) out << ' ';
                out << t.records[i];
            }
            out << '\n';
        }
    } else {
        for (const auto& t : d.traces) {
            ordered_json j;
            j["label"] = t.label;
            j["sample_id"] = t.sample_id;
            j["records"] = t.records;
            if (t.collected_at) j["collected_at"] = *t.collected_at;
            out << j.dump() << '\n';
        }
    }
    if (!out) throw DataError("write failed for " + quote_str(path.string()));
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    save_dataset(d, path, format_from_path(path));
}

namespace {

std::string padded_number(uint64_t v, int width) {
    std::string s = std::to_string(v);
    if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
    return s;
}

int32_t jitter_size(int32_t size, Rng& rng, double noise_rate) {
    if (noise_rate <= 0.0 || !rng.bernoulli(noise_rate)) return size;
    const int32_t magnitude = static_cast<int32_t>(rng.range(1, 8));
    const int32_t delta = rng.bernoulli(0.5) ? magnitude : -magnitude;
    return std::max(1, size + delta);  // never crosses zero
}

}  // namespace

Dataset generate_synthetic(const SynthProfile& p) {
    if (p.n_classes < 1) throw DataError("synthetic profile: n_classes must be positive");
    if (p.samples_per_class < 1) {
        throw DataError("synthetic profile: samples_per_class must be positive");
    }
    if (p.resources_min < 1 || p.resources_min > p.resources_max) {
        throw DataError("synthetic profile: need 1 <= resources_min <= resources_max");
    }
    if (p.size_alphabet.empty()) throw DataError("synthetic profile: empty size_alphabet");
    for (int32_t s : p.size_alphabet) {
        if (s < 1 || s > kMaxRecordSize) {
            throw DataError("synthetic profile: alphabet sizes must be in [1, 65536]");
        }
    }
    if (p.noise_rate < 0.0 || p.noise_rate > 1.0) {
        throw DataError("synthetic profile: noise_rate must be in [0, 1]");
    }

    std::vector<Trace> traces;
    traces.reserve(static_cast<size_t>(p.n_classes) * p.samples_per_class);
    for (int c = 0; c < p.n_classes; ++c) {
        Rng class_rng(mix_seed(p.seed, 0x10c1a55u, c));
        const int n_resources =
            static_cast<int>(class_rng.range(p.resources_min, p.resources_max));
        std::vector<std::pair<int32_t, int32_t>> signature;
        signature.reserve(n_resources);
        for (int r = 0; r < n_resources; ++r) {
            const int32_t query = p.size_alphabet[class_rng.below(p.size_alphabet.size())];
            const int32_t response = p.size_alphabet[class_rng.below(p.size_alphabet.size())];
            signature.emplace_back(query, response);
        }

        const std::string label = p.label_prefix + padded_number(c, 5);
        for (int s = 0; s < p.samples_per_class; ++s) {
            Rng sample_rng(mix_seed(p.seed, 0x5a3b1eu + c, s));
            Trace t;
            t.label = label;
            t.sample_id = label + "#" + padded_number(s, 4);
            t.records.reserve(2 * signature.size());
            for (const auto& [query, response] : signature) {
                t.records.push_back(jitter_size(query, sample_rng, p.noise_rate));
                t.records.push_back(-jitter_size(response, sample_rng, p.noise_rate));
            }
            traces.push_back(std::move(t));
        }
    }
    return make_dataset(std::move(traces), "synthetic");
}

Trace prefix(const Trace& t, size_t l) {
    if (l < 1) throw DataError("prefix length must be >= 1");
    Trace out = t;
    if (out.records.size() > l) out.records.resize(l);
    return out;
}

std::vector<int> class_targets(const Dataset& d) {
    std::vector<int> y;
    y.reserve(d.traces.size());
    for (const auto& t : d.traces) y.push_back(d.class_index(t.label));
    return y;
}

Dataset merge_datasets(const Dataset& a, const Dataset& b, std::string name) {
    std::vector<Trace> traces = a.traces;
    traces.insert(traces.end(), b.traces.begin(), b.traces.end());
    return make_dataset(std::move(traces), std::move(name));
}

}  // namespace dnsfp
