// dnsfp: encrypted-DNS traffic-analysis toolkit.
//
// Every subcommand is a thin adapter over the library: it resolves flags,
// calls the corresponding operations, writes the outputs named by flags and
// drops a <out>.manifest.json describing the run. Exit codes: 0 success,
// 1 usage error, 2 data error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dnsfp/censorship.hpp"
#include "dnsfp/defenses.hpp"
#include "dnsfp/error.hpp"
#include "dnsfp/evaluation.hpp"
#include "dnsfp/featurizer.hpp"
#include "dnsfp/forest.hpp"
#include "dnsfp/metrics.hpp"
#include "dnsfp/trace.hpp"
#include "dnsfp/uniqueness.hpp"

namespace {

using dnsfp::DataError;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "dnsfp 0.1.0";

uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    uint64_t hash = 1469598103934665603ULL;
    char buffer[1 << 15];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ULL;
        }
    }
    return hash;
}

std::string hex64(uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::optional<std::filesystem::path> path_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
}

class ManifestBuilder {
public:
    explicit ManifestBuilder(std::string subcommand) {
        manifest_["subcommand"] = std::move(subcommand);
        manifest_["config"] = ordered_json::object();
        manifest_["seeds"] = ordered_json::object();
        manifest_["input_digests"] = ordered_json::object();
        manifest_["tool_version"] = kToolVersion;
    }

    template <class T>
    void config(const std::string& key, const T& value) {
        manifest_["config"][key] = value;
    }
    template <class T>
    void seed(const std::string& key, const T& value) {
        manifest_["seeds"][key] = value;
    }
    void input(const std::filesystem::path& path) {
        manifest_["input_digests"][path.string()] = "fnv1a:" + hex64(fnv1a_file(path));
    }

    // Written next to the subcommand's primary output.
    void write(const std::filesystem::path& primary_output) const {
        const auto path = primary_output.string() + ".manifest.json";
        std::ofstream out(path);
        if (!out) throw DataError("cannot write \"" + path + "\"");
        out << manifest_.dump(2) << '\n';
    }

private:
    ordered_json manifest_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    out << text;
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

ordered_json class_metrics_json(const dnsfp::ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ordered_json per_class_json(const dnsfp::Metrics& m) {
    ordered_json per_class = ordered_json::object();
    for (const auto& [label, scores] : m.per_class) {
        ordered_json entry = class_metrics_json(scores);
        entry["support"] = m.support.at(label);
        per_class[label] = std::move(entry);
    }
    return per_class;
}

dnsfp::ConfusionFormat confusion_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return dnsfp::ConfusionFormat::csv;
    if (ext == ".dot") return dnsfp::ConfusionFormat::dot;
    throw DataError("confusion output must end in .csv or .dot");
}

int run_synth(const dnsfp::SynthProfile& profile, const std::filesystem::path& out) {
    const dnsfp::Dataset d = dnsfp::generate_synthetic(profile);
    dnsfp::save_dataset(d, out);

    ManifestBuilder manifest("synth");
    manifest.config("classes", profile.n_classes);
    manifest.config("samples", profile.samples_per_class);
    manifest.config("resources_min", profile.resources_min);
    manifest.config("resources_max", profile.resources_max);
    manifest.config("alphabet", profile.size_alphabet);
    manifest.config("noise", profile.noise_rate);
    manifest.config("label_prefix", profile.label_prefix);
    manifest.config("out", out.string());
    manifest.seed("seed", profile.seed);
    manifest.write(out);
    std::cout << "wrote " << d.traces.size() << " traces over " << d.classes.size()
              << " classes to " << out.string() << "\n";
    return 0;
}

int run_convert(const std::filesystem::path& data, const std::filesystem::path& out) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);
    dnsfp::save_dataset(d, out);
    ManifestBuilder manifest("convert");
    manifest.config("data", data.string());
    manifest.config("out", out.string());
    manifest.input(data);
    manifest.write(out);
    std::cout << "converted " << d.traces.size() << " traces to " << out.string() << "\n";
    return 0;
}

int run_inspect(const std::filesystem::path& data, const std::optional<std::filesystem::path>& out,
                const std::optional<std::filesystem::path>& features_csv) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);

    size_t min_len = SIZE_MAX, max_len = 0;
    uint64_t total_records = 0, total_bytes = 0;
    std::vector<double> per_trace_bytes;
    per_trace_bytes.reserve(d.traces.size());
    for (const auto& t : d.traces) {
        min_len = std::min(min_len, t.records.size());
        max_len = std::max(max_len, t.records.size());
        total_records += t.records.size();
        double bytes = 0;
        for (const int32_t r : t.records) bytes += std::abs(r);
        total_bytes += static_cast<uint64_t>(bytes);
        per_trace_bytes.push_back(bytes);
    }
    double mean_bytes = 0;
    for (const double b : per_trace_bytes) mean_bytes += b;
    mean_bytes /= static_cast<double>(per_trace_bytes.size());
    double var = 0;
    for (const double b : per_trace_bytes) var += (b - mean_bytes) * (b - mean_bytes);
    const double std_bytes = std::sqrt(var / static_cast<double>(per_trace_bytes.size()));

    std::map<std::string, size_t> samples_per_class;
    for (const auto& t : d.traces) ++samples_per_class[t.label];
    size_t min_samples = SIZE_MAX, max_samples = 0;
    for (const auto& [label, count] : samples_per_class) {
        min_samples = std::min(min_samples, count);
        max_samples = std::max(max_samples, count);
    }

    ordered_json j;
    j["dataset"] = d.name;
    j["traces"] = d.traces.size();
    j["classes"] = d.classes.size();
    j["samples_per_class"] = {{"min", min_samples}, {"max", max_samples}};
    j["trace_length"] = {{"min", min_len},
                         {"max", max_len},
                         {"mean", static_cast<double>(total_records) /
                                      static_cast<double>(d.traces.size())}};
    j["total_bytes"] = total_bytes;
    j["trace_bytes"] = {{"mean", mean_bytes}, {"std", std_bytes}};

    if (features_csv) {
        const dnsfp::FeatureSpace space = dnsfp::build_space(d);
        dnsfp::export_feature_matrix_csv(d, space, *features_csv);
        j["feature_space"] = space.size();
    }

    const std::string text = j.dump(2) + "\n";
    if (out) {
        write_text(*out, text);
        ManifestBuilder manifest("inspect");
        manifest.config("data", data.string());
        manifest.input(data);
        manifest.write(*out);
    } else {
        std::cout << text;
    }
    return 0;
}

int run_cv(const std::filesystem::path& data, int folds, uint64_t seed, int trees, int threads,
           const std::filesystem::path& out, const std::optional<std::filesystem::path>& confusion,
           const std::optional<std::filesystem::path>& importances, size_t top,
           const std::optional<std::filesystem::path>& per_class_csv) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);
    dnsfp::TrainConfig cfg;
    cfg.n_trees = trees;
    const dnsfp::CrossValidationResult r = dnsfp::cross_validate(d, cfg, folds, seed, threads);

    ordered_json j;
    j["dataset"] = {{"name", d.name}, {"traces", d.traces.size()}, {"classes", d.classes.size()}};
    j["config"] = {{"folds", folds}, {"trees", trees}, {"seed", seed}};
    j["macro"] = {{"precision", {{"mean", r.mean.precision}, {"std", r.stddev.precision}}},
                  {"recall", {{"mean", r.mean.recall}, {"std", r.stddev.recall}}},
                  {"f1", {{"mean", r.mean.f1}, {"std", r.stddev.f1}}}};
    ordered_json folds_json = ordered_json::array();
    for (const auto& fold : r.fold_metrics) folds_json.push_back(class_metrics_json(fold.macro));
    j["per_fold"] = std::move(folds_json);
    j["per_class"] = per_class_json(dnsfp::metrics_from_confusion(r.confusion));
    write_text(out, j.dump(2) + "\n");

    if (confusion) {
        dnsfp::export_confusion(r.confusion, *confusion, confusion_format_for(*confusion));
    }
    if (per_class_csv) {
        const dnsfp::Metrics totals = dnsfp::metrics_from_confusion(r.confusion);
        std::ostringstream csv;
        csv << std::setprecision(17) << "label,precision,recall,f1,support\n";
        for (const auto& [label, scores] : totals.per_class) {
            csv << label << ',' << scores.precision << ',' << scores.recall << ',' << scores.f1
                << ',' << totals.support.at(label) << '\n';
        }
        write_text(*per_class_csv, csv.str());
    }
    if (importances) {
        // importances come from a forest over the full dataset
        const dnsfp::FeatureSpace space = dnsfp::build_space(d);
        const dnsfp::FeatureMatrix X = dnsfp::vectorize_dataset(d, space);
        dnsfp::TrainConfig full_cfg = cfg;
        full_cfg.seed = seed;
        const dnsfp::Forest forest = dnsfp::train(X, dnsfp::class_targets(d), full_cfg, threads);
        dnsfp::export_importances_csv(forest, space, *importances, top);
    }

    ManifestBuilder manifest("cv");
    manifest.config("data", data.string());
    manifest.config("folds", folds);
    manifest.config("trees", trees);
    manifest.config("threads", threads);
    manifest.seed("seed", seed);
    manifest.input(data);
    manifest.write(out);
    std::cout << "cv f1 " << r.mean.f1 << " +/- " << r.stddev.f1 << " over " << folds
              << " folds\n";
    return 0;
}

int run_cross(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
              uint64_t seed, int trees, int threads, const std::filesystem::path& out) {
    const dnsfp::Dataset train_set = dnsfp::load_dataset(train_path);
    const dnsfp::Dataset test_set = dnsfp::load_dataset(test_path);
    dnsfp::TrainConfig cfg;
    cfg.n_trees = trees;
    cfg.seed = seed;
    const dnsfp::CrossDatasetResult r = dnsfp::cross_dataset(train_set, test_set, cfg, threads);

    ordered_json j;
    j["train"] = {{"name", train_set.name}, {"classes", train_set.classes.size()}};
    j["test"] = {{"name", test_set.name}, {"traces", test_set.traces.size()}};
    j["coverage"] = r.coverage;
    j["evaluated"] = r.evaluated;
    j["skipped"] = r.skipped;
    j["macro"] = class_metrics_json(r.metrics.macro);
    j["per_class"] = per_class_json(r.metrics);
    write_text(out, j.dump(2) + "\n");

    ManifestBuilder manifest("cross");
    manifest.config("train", train_path.string());
    manifest.config("test", test_path.string());
    manifest.config("trees", trees);
    manifest.config("threads", threads);
    manifest.seed("seed", seed);
    manifest.input(train_path);
    manifest.input(test_path);
    manifest.write(out);
    std::cout << "cross-dataset f1 " << r.metrics.macro.f1 << " (coverage " << r.coverage
              << ")\n";
    return 0;
}

int run_openworld(const std::filesystem::path& data, const std::filesystem::path& extra,
                  double monitored_fraction, double train_fraction, int folds, uint64_t seed,
                  int trees, int threads, bool stub, const std::filesystem::path& out,
                  const std::optional<std::filesystem::path>& report) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);
    const dnsfp::Dataset extra_set = dnsfp::load_dataset(extra);

    dnsfp::OpenWorldConfig cfg;
    cfg.monitored_fraction = monitored_fraction;
    cfg.training_class_fraction = train_fraction;
    cfg.folds = folds;
    cfg.seed = seed;
    dnsfp::TrainConfig train_cfg;
    train_cfg.n_trees = trees;

    dnsfp::UniformRandomScorer uniform;
    const dnsfp::OpenWorldResult r =
        dnsfp::open_world(d, extra_set, cfg, train_cfg, threads, stub ? &uniform : nullptr);
    dnsfp::export_roc_csv(r, out);

    if (report) {
        ordered_json j;
        j["world_classes"] = r.world_classes;
        j["monitored_classes"] = r.monitored_classes;
        j["training_classes"] = r.training_classes;
        j["config"] = {{"monitored_fraction", monitored_fraction},
                       {"training_class_fraction", train_fraction},
                       {"folds", folds},
                       {"trees", trees},
                       {"scorer", stub ? "uniform-stub" : "forest"},
                       {"seed", seed}};
        ordered_json points = ordered_json::array();
        for (const auto& p : r.points) {
            points.push_back({{"threshold", p.threshold},
                              {"precision", {{"mean", p.precision_mean}, {"std", p.precision_std}}},
                              {"recall", {{"mean", p.recall_mean}, {"std", p.recall_std}}},
                              {"f1", {{"mean", p.f1_mean}, {"std", p.f1_std}}}});
        }
        j["points"] = std::move(points);
        write_text(*report, j.dump(2) + "\n");
    }

    ManifestBuilder manifest("openworld");
    manifest.config("data", data.string());
    manifest.config("extra", extra.string());
    manifest.config("monitored_fraction", monitored_fraction);
    manifest.config("training_class_fraction", train_fraction);
    manifest.config("folds", folds);
    manifest.config("trees", trees);
    manifest.config("threads", threads);
    manifest.config("scorer", stub ? "uniform-stub" : "forest");
    manifest.seed("seed", seed);
    manifest.input(data);
    manifest.input(extra);
    manifest.write(out);
    std::cout << "open-world ROC written to " << out.string() << "\n";
    return 0;
}

int run_defend(const std::filesystem::path& data, dnsfp::PaddingPolicy policy, bool derive,
               const std::filesystem::path& out,
               const std::optional<std::filesystem::path>& report_path) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);
    if (derive) {
        policy.mode = dnsfp::PaddingMode::constant;
        policy.constant_size = dnsfp::derive_constant(d);
    }
    policy.validate();
    const auto [defended, report] = dnsfp::apply_to_dataset(d, policy);
    dnsfp::save_dataset(defended, out);

    ordered_json j;
    j["policy"] = ordered_json::parse(dnsfp::policy_to_json(policy));
    j["baseline_bytes"] = report.baseline_bytes;
    j["defended_bytes"] = report.defended_bytes;
    j["ratio"] = report.ratio;
    if (policy.mode == dnsfp::PaddingMode::cell) {
        j["note"] = "cell mode approximates constant-size cell transports only; "
                    "latency and cell multiplexing are not modeled";
    }
    if (report_path) write_text(*report_path, j.dump(2) + "\n");

    ManifestBuilder manifest("defend");
    manifest.config("data", data.string());
    manifest.config("policy", ordered_json::parse(dnsfp::policy_to_json(policy)));
    manifest.config("out", out.string());
    manifest.input(data);
    manifest.write(out);
    std::cout << "overhead ratio " << report.ratio << "\n";
    return 0;
}

int run_entropy(const std::filesystem::path& data, std::vector<size_t> worlds, size_t lmax,
                size_t resamples, uint64_t seed, const std::filesystem::path& out,
                const std::optional<std::filesystem::path>& report_path) {
    const dnsfp::Dataset d = dnsfp::load_dataset(data);
    if (worlds.empty()) worlds = {d.classes.size()};
    const auto reports = dnsfp::entropy_curve(d, worlds, lmax, resamples, seed);
    dnsfp::export_entropy_csv(reports, out);

    if (report_path) {
        ordered_json j = ordered_json::array();
        for (const auto& r : reports) {
            ordered_json entry;
            entry["world_size"] = r.world_size;
            entry["resamples"] = r.resamples;
            entry["mean_trace_length"] = r.mean_trace_length;
            entry["horizon_1bit"] =
                r.horizon_1bit ? ordered_json(*r.horizon_1bit) : ordered_json(nullptr);
            entry["horizon_fraction"] =
                r.horizon_fraction ? ordered_json(*r.horizon_fraction) : ordered_json(nullptr);
            entry["priors"] = "uniform";
            j.push_back(std::move(entry));
        }
        write_text(*report_path, j.dump(2) + "\n");
    }

    ManifestBuilder manifest("entropy");
    manifest.config("data", data.string());
    manifest.config("worlds", worlds);
    manifest.config("lmax", lmax);
    manifest.config("resamples", resamples);
    manifest.seed("seed", seed);
    manifest.input(data);
    manifest.write(out);
    std::cout << "entropy curves written to " << out.string() << "\n";
    return 0;
}

int run_censor(const std::filesystem::path& ranking_path,
               const std::filesystem::path& blacklist_path, const std::filesystem::path& out,
               const std::optional<std::filesystem::path>& table,
               const std::optional<size_t>& decide_length) {
    const dnsfp::RankingList ranking = dnsfp::load_ranking(ranking_path);
    const dnsfp::Blacklist blacklist = dnsfp::load_blacklist(blacklist_path);
    const dnsfp::BlockingReport report = dnsfp::analyze(ranking, blacklist);

    write_text(out, dnsfp::blocking_report_to_json(report) + "\n");
    if (table) dnsfp::export_blocking_csv(report, *table);

    if (decide_length) {
        const auto decision = dnsfp::blocking_decision(*decide_length, blacklist);
        std::cout << "length " << *decide_length << ": "
                  << (decision == dnsfp::BlockingDecision::block ? "block" : "allow") << "\n";
    }

    ManifestBuilder manifest("censor");
    manifest.config("ranking", ranking_path.string());
    manifest.config("blacklist", blacklist_path.string());
    manifest.input(ranking_path);
    manifest.input(blacklist_path);
    manifest.write(out);
    std::cout << "coverage " << report.coverage << ", min-collateral length "
              << report.min_collateral_length << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Website-identifiability analysis for encrypted DNS traffic"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic dataset");
    dnsfp::SynthProfile profile;
    profile.n_classes = 50;
    profile.samples_per_class = 20;
    profile.resources_min = 6;
    profile.resources_max = 12;
    profile.size_alphabet = {66, 74, 83, 91, 99, 108, 120, 134, 150, 170, 196, 230, 266, 301};
    profile.noise_rate = 0.1;
    std::string synth_out;
    synth->add_option("--classes", profile.n_classes, "Number of websites");
    synth->add_option("--samples", profile.samples_per_class, "Samples per website");
    synth->add_option("--resources-min", profile.resources_min, "Minimum resources per page");
    synth->add_option("--resources-max", profile.resources_max, "Maximum resources per page");
    synth->add_option("--alphabet", profile.size_alphabet, "Candidate record sizes")
        ->delimiter(',');
    synth->add_option("--noise", profile.noise_rate, "Per-record jitter probability");
    synth->add_option("--seed", profile.seed, "RNG seed");
    synth->add_option("--label-prefix", profile.label_prefix, "Class label prefix");
    synth->add_option("--out,-o", synth_out, "Output dataset (.jsonl or .csv)")->required();

    auto* convert = app.add_subcommand("convert", "Convert a dataset between jsonl and csv");
    std::string convert_data, convert_out;
    convert->add_option("--data", convert_data, "Input dataset")->required();
    convert->add_option("--out,-o", convert_out, "Output dataset")->required();

    auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
    std::string inspect_data, inspect_out, inspect_features;
    inspect->add_option("--data", inspect_data, "Input dataset")->required();
    inspect->add_option("--out,-o", inspect_out, "Write the JSON stats here instead of stdout");
    inspect->add_option("--features-csv", inspect_features,
                        "Also export the n-gram count matrix as CSV");

    auto* cv = app.add_subcommand("cv", "Closed-world stratified cross-validation");
    std::string cv_data, cv_out, cv_confusion, cv_importances, cv_per_class;
    int cv_folds = 10, cv_trees = 100, cv_threads = 1;
    uint64_t cv_seed = 0;
    size_t cv_top = 0;
    cv->add_option("--data", cv_data, "Input dataset")->required();
    cv->add_option("--folds", cv_folds, "Number of folds");
    cv->add_option("--seed", cv_seed, "RNG seed");
    cv->add_option("--trees", cv_trees, "Trees per forest");
    cv->add_option("--threads", cv_threads, "Worker threads");
    cv->add_option("--out,-o", cv_out, "JSON report path")->required();
    cv->add_option("--confusion", cv_confusion, "Summed confusion matrix (.csv or .dot)");
    cv->add_option("--importances", cv_importances,
                   "Feature importances CSV from a full-dataset forest");
    cv->add_option("--top", cv_top, "Keep only the top-k importances (0 = all)");
    cv->add_option("--per-class-csv", cv_per_class, "Per-class precision/recall/F1 CSV");

    auto* cross = app.add_subcommand("cross", "Train on one dataset, test on another");
    std::string cross_train, cross_test, cross_out;
    int cross_trees = 100, cross_threads = 1;
    uint64_t cross_seed = 0;
    cross->add_option("--train", cross_train, "Training dataset")->required();
    cross->add_option("--test", cross_test, "Test dataset")->required();
    cross->add_option("--trees", cross_trees, "Trees per forest");
    cross->add_option("--seed", cross_seed, "RNG seed");
    cross->add_option("--threads", cross_threads, "Worker threads");
    cross->add_option("--out,-o", cross_out, "JSON report path")->required();

    auto* openworld = app.add_subcommand("openworld", "Monitored/unmonitored threshold sweep");
    std::string ow_data, ow_extra, ow_out, ow_report;
    double ow_monitored = 0.01, ow_train_fraction = 0.10;
    int ow_folds = 10, ow_trees = 100, ow_threads = 1;
    uint64_t ow_seed = 0;
    bool ow_stub = false;
    openworld->add_option("--data", ow_data, "Monitored-candidate dataset")->required();
    openworld->add_option("--extra", ow_extra, "Extra unmonitored dataset")->required();
    openworld->add_option("--monitored-fraction", ow_monitored, "Monitored class fraction");
    openworld->add_option("--train-class-fraction", ow_train_fraction,
                          "Fraction of classes seen in training");
    openworld->add_option("--folds", ow_folds, "Evaluation folds");
    openworld->add_option("--seed", ow_seed, "RNG seed");
    openworld->add_option("--trees", ow_trees, "Trees per forest");
    openworld->add_option("--threads", ow_threads, "Worker threads");
    openworld->add_flag("--stub", ow_stub, "Replace the classifier with the uniform-random stub");
    openworld->add_option("--out,-o", ow_out, "ROC CSV path")->required();
    openworld->add_option("--report", ow_report, "Optional JSON report path");

    auto* defend = app.add_subcommand("defend", "Apply a padding defense to a dataset");
    std::string defend_data, defend_out, defend_policy, defend_mode, defend_report;
    int defend_query_block = 0, defend_response_block = 0, defend_header = 51;
    int defend_constant = 0, defend_cell = 512;
    bool defend_derive = false;
    defend->add_option("--data", defend_data, "Input dataset")->required();
    defend->add_option("--policy", defend_policy, "Padding policy JSON file");
    defend->add_option("--mode", defend_mode, "block, constant or cell (alternative to --policy)");
    defend->add_option("--query-block", defend_query_block, "Block size for outgoing records");
    defend->add_option("--response-block", defend_response_block,
                       "Block size for incoming records");
    defend->add_option("--header-overhead", defend_header, "Per-record header bytes");
    defend->add_option("--constant", defend_constant, "Constant record size (mode=constant)");
    defend->add_flag("--derive-constant", defend_derive,
                     "Perfect padding with the dataset's maximum record size");
    defend->add_option("--cell", defend_cell, "Cell size (mode=cell)");
    defend->add_option("--out,-o", defend_out, "Defended dataset path")->required();
    defend->add_option("--report", defend_report, "Overhead report JSON path");

    auto* entropy = app.add_subcommand("entropy", "Conditional entropy of partial traces");
    std::string entropy_data, entropy_out, entropy_report;
    std::vector<size_t> entropy_worlds;
    size_t entropy_lmax = 20, entropy_resamples = 3;
    uint64_t entropy_seed = 0;
    entropy->add_option("--data", entropy_data, "Input dataset")->required();
    entropy->add_option("--worlds", entropy_worlds, "World sizes (default: all classes)")
        ->delimiter(',');
    entropy->add_option("--lmax", entropy_lmax, "Largest prefix length");
    entropy->add_option("--resamples", entropy_resamples, "Class subsets per world size");
    entropy->add_option("--seed", entropy_seed, "RNG seed");
    entropy->add_option("--out,-o", entropy_out, "Curve CSV path")->required();
    entropy->add_option("--report", entropy_report, "Optional JSON report path");

    auto* censor = app.add_subcommand("censor", "Domain-length blocking analysis");
    std::string censor_ranking, censor_blacklist, censor_out, censor_table;
    size_t censor_decide = 0;
    bool censor_has_decide = false;
    censor->add_option("--ranking", censor_ranking, "Popularity ranking CSV")->required();
    censor->add_option("--blacklist", censor_blacklist, "Blacklist file")->required();
    censor->add_option("--out,-o", censor_out, "JSON report path")->required();
    censor->add_option("--table", censor_table, "Per-length CSV table");
    censor->add_option("--decide", censor_decide, "Print block/allow for this estimated length")
        ->each([&](const std::string&) { censor_has_decide = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) return run_synth(profile, synth_out);
        if (*convert) return run_convert(convert_data, convert_out);
        if (*inspect) return run_inspect(inspect_data, path_opt(inspect_out),
                                         path_opt(inspect_features));
        if (*cv) {
            return run_cv(cv_data, cv_folds, cv_seed, cv_trees, cv_threads, cv_out,
                          path_opt(cv_confusion), path_opt(cv_importances), cv_top,
                          path_opt(cv_per_class));
        }
        if (*cross) {
            return run_cross(cross_train, cross_test, cross_seed, cross_trees, cross_threads,
                             cross_out);
        }
        if (*openworld) {
            return run_openworld(ow_data, ow_extra, ow_monitored, ow_train_fraction, ow_folds,
                                 ow_seed, ow_trees, ow_threads, ow_stub, ow_out,
                                 path_opt(ow_report));
        }
        if (*defend) {
            dnsfp::PaddingPolicy policy;
            if (!defend_policy.empty()) {
                policy = dnsfp::load_policy(defend_policy);
            } else if (!defend_mode.empty() || defend_derive) {
                if (defend_mode == "block") {
                    policy.mode = dnsfp::PaddingMode::block;
                    if (defend_query_block > 0) policy.query_block = defend_query_block;
                    if (defend_response_block > 0) policy.response_block = defend_response_block;
                } else if (defend_mode == "constant" || (defend_mode.empty() && defend_derive)) {
                    policy.mode = dnsfp::PaddingMode::constant;
                    if (defend_constant > 0) policy.constant_size = defend_constant;
                } else if (defend_mode == "cell") {
                    policy.mode = dnsfp::PaddingMode::cell;
                    policy.cell_size = defend_cell;
                } else {
                    throw DataError("unknown --mode \"" + defend_mode + "\"");
                }
                policy.header_overhead = defend_header;
            } else {
                throw DataError("defend needs --policy, --mode, or --derive-constant");
            }
            return run_defend(defend_data, policy, defend_derive, defend_out,
                              path_opt(defend_report));
        }
        if (*entropy) {
            return run_entropy(entropy_data, entropy_worlds, entropy_lmax, entropy_resamples,
                               entropy_seed, entropy_out, path_opt(entropy_report));
        }
        if (*censor) {
            return run_censor(censor_ranking, censor_blacklist, censor_out, path_opt(censor_table),
                              censor_has_decide ? std::optional<size_t>(censor_decide)
                                                : std::nullopt);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
