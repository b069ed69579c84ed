#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degrade/label.hpp"

namespace degrade::metrics {

/// Identifies one assessment cell: either the unaltered baseline or one
/// (operation, severity index) rung. Rendered as "unaltered" or "op@idx".
struct CellRef {
    std::string op;
    int severity = 0;
    bool unaltered = false;

    static CellRef make_unaltered() { return CellRef{"unaltered", 0, true}; }
    static CellRef make(std::string op_name, int severity_index) {
        return CellRef{std::move(op_name), severity_index, false};
    }
    static CellRef parse(std::string_view text);

    std::string str() const;

    bool operator==(const CellRef&) const = default;
    bool operator<(const CellRef& other) const;
};

struct PredictionRecord {
    std::string item_id;
    CellRef cell;
    Label label = Label::real;
    double score = 0.0;  // in [0,1], higher = more likely fake
};

/// Probability that a random fake outscores a random real, ties at half
/// credit; computed as trapezoidal area under the tie-grouped ROC curve.
double auc(std::span<const PredictionRecord> records);

/// Fraction of records where (score >= threshold) matches (label == fake).
double accuracy(std::span<const PredictionRecord> records, double threshold = 0.5);

struct F1Result {
    double value = 0.0;
    bool degenerate = false;  // no predicted and no actual positives
};

F1Result f1_score(std::span<const PredictionRecord> records, double threshold = 0.5);

inline double f1(std::span<const PredictionRecord> records, double threshold = 0.5) {
    return f1_score(records, threshold).value;
}

struct MetricsCell {
    CellRef cell;
    long n_real = 0;
    long n_fake = 0;
    std::optional<double> acc;
    std::optional<double> auc;  // null when a class is missing
    std::optional<double> f1;
    bool f1_degenerate = false;
    std::string error;  // per-cell failure note; metrics above stay null
};

/// Groups records by cell and computes per-cell metrics. The unaltered cell
/// comes first, the rest sorted by (op kind, severity index). Per-cell
/// failures are recorded in the cell, not thrown.
std::vector<MetricsCell> aggregate(std::span<const PredictionRecord> records);

// Score-record files: tab-separated, one header row, UTF-8.
// Columns: item_id, cell_id, label, score. '#'-prefixed preamble lines carry
// key: value metadata.
void write_records(std::span<const PredictionRecord> records, const std::filesystem::path& path,
                   const std::map<std::string, std::string>& preamble = {});
std::vector<PredictionRecord> read_records(const std::filesystem::path& path,
                                           std::map<std::string, std::string>* preamble = nullptr);

}  // namespace degrade::metrics
