#pragma once

#include <string>
#include <vector>

#include "degrade/metrics.hpp"

namespace degrade::report {

/// Per-detector metric grid over all assessment cells, unaltered first.
struct MetricsReport {
    std::string detector_id;
    std::string plan_digest;
    std::string generated_at;  // ISO-8601 UTC
    std::vector<metrics::MetricsCell> cells;
};

MetricsReport make_report(std::string detector_id, std::string plan_digest,
                          std::vector<metrics::MetricsCell> cells, std::string generated_at = {});

std::string now_timestamp();

enum class TableFormat { plain_grid, markdown, delimited };

/// One column per cell; AUC/ACC/F1 rows as percentages with two decimals,
/// undefined values rendered as "-". The delimited form adds count rows and
/// re-parses to identical values.
std::string emit_table(const MetricsReport& report, TableFormat format);

/// Long-format rows (op, severity, metric, value) for plotting severity
/// curves; one series per operation family.
std::string emit_curves(const MetricsReport& report);

/// Inverse of emit_table(…, delimited); emit -> parse -> emit is a fixed
/// point.
MetricsReport parse_delimited(const std::string& text);

}  // namespace degrade::report
