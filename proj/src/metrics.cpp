#include "dnsfp/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dnsfp/error.hpp"

namespace dnsfp {

uint64_t ConfusionMatrix::at(const std::string& truth, const std::string& predicted) const {
    const auto row = std::lower_bound(labels.begin(), labels.end(), truth);
    const auto col = std::lower_bound(labels.begin(), labels.end(), predicted);
    if (row == labels.end() || *row != truth || col == labels.end() || *col != predicted) {
        throw DataError("label not present in confusion matrix");
    }
    return counts[row - labels.begin()][col - labels.begin()];
}

std::pair<Metrics, ConfusionMatrix> compute_metrics(const std::vector<std::string>& truth,
                                                    const std::vector<std::string>& predicted) {
    if (truth.empty()) throw DataError("compute_metrics needs at least one sample");
    if (truth.size() != predicted.size()) {
        throw DataError("true and predicted label lists differ in length");
    }

    std::set<std::string> label_set(truth.begin(), truth.end());
    label_set.insert(predicted.begin(), predicted.end());

    ConfusionMatrix cm;
    cm.labels.assign(label_set.begin(), label_set.end());
    cm.counts.assign(cm.labels.size(), std::vector<uint64_t>(cm.labels.size(), 0));

    const auto index_of = [&](const std::string& label) {
        return static_cast<size_t>(
            std::lower_bound(cm.labels.begin(), cm.labels.end(), label) - cm.labels.begin());
    };
    for (size_t i = 0; i < truth.size(); ++i) {
        ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
    }
    return {metrics_from_confusion(cm), std::move(cm)};
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
    const size_t n = cm.labels.size();
    Metrics m;
    double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    for (size_t c = 0; c < n; ++c) {
        uint64_t tp = cm.counts[c][c];
        uint64_t row_sum = 0, col_sum = 0;
        for (size_t k = 0; k < n; ++k) {
            row_sum += cm.counts[c][k];
            col_sum += cm.counts[k][c];
        }
        ClassMetrics cls;
        cls.precision = col_sum == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col_sum);
        cls.recall = row_sum == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(row_sum);
        cls.f1 = cls.precision + cls.recall == 0.0
                     ? 0.0
                     : 2.0 * cls.precision * cls.recall / (cls.precision + cls.recall);
        m.per_class[cm.labels[c]] = cls;
        m.support[cm.labels[c]] = row_sum;
        precision_sum += cls.precision;
        recall_sum += cls.recall;
        f1_sum += cls.f1;
    }
    const double dn = static_cast<double>(n);
    m.macro = {precision_sum / dn, recall_sum / dn, f1_sum / dn};
    return m;
}

void export_confusion(const ConfusionMatrix& cm, const std::filesystem::path& path,
                      ConfusionFormat format) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write \"" + path.string() + "\"");
    if (format == ConfusionFormat::csv) {
        out << "label";
        for (const auto& l : cm.labels) out << ',' << l;
        out << '\n';
        for (size_t r = 0; r < cm.labels.size(); ++r) {
            out << cm.labels[r];
            for (const uint64_t c : cm.counts[r]) out << ',' << c;
            out << '\n';
        }
    } else {
        out << "digraph confusion {\n";
        for (size_t r = 0; r < cm.labels.size(); ++r) {
            for (size_t c = 0; c < cm.labels.size(); ++c) {
                if (r == c || cm.counts[r][c] == 0) continue;
                out << "  \"" << cm.labels[r] << "\" -> \"" << cm.labels[c]
                    << "\" [weight=" << cm.counts[r][c] << ", label=" << cm.counts[r][c] << "];\n";
            }
        }
        out << "}\n";
    }
    if (!out) throw DataError("write failed for \"" + path.string() + "\"");
}

ConfusionMatrix import_confusion_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path.string() + "\"");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty confusion file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    ConfusionMatrix cm;
    {
        std::istringstream header(line);
        std::string cell;
        bool first = true;
        while (std::getline(header, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            cm.labels.push_back(cell);
        }
    }
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<uint64_t> counts;
        bool first = true;
        while (std::getline(row, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            try {
                counts.push_back(std::stoull(cell));
            } catch (const std::exception&) {
                throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": bad count \"" + cell + "\"");
            }
        }
        if (counts.size() != cm.labels.size()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": row width does not match header");
        }
        cm.counts.push_back(std::move(counts));
    }
    if (cm.counts.size() != cm.labels.size()) {
        throw DataError(path.string() + ": confusion matrix is not square");
    }
    return cm;
}

}  // namespace dnsfp
