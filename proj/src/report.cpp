#include "degrade/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

namespace degrade::report {

namespace {

std::string format_metric(const std::optional<double>& value) {
    if (!value) return "-";
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << (*value * 100.0);
    return out.str();
}

std::optional<double> parse_metric(const std::string& text) {
    if (text == "-") return std::nullopt;
    try {
        return std::stod(text) / 100.0;
    } catch (const std::exception&) {
        raise(Errc::schema_error, "bad metric value '" + text + "'");
    }
}

struct GridRows {
    std::vector<std::string> header;       // "metric", then cell ids
    std::vector<std::vector<std::string>> rows;
};

GridRows build_grid(const MetricsReport& report, bool with_counts) {
    GridRows grid;
    grid.header.push_back("metric");
    for (const auto& cell : report.cells) grid.header.push_back(cell.cell.str());

    auto metric_row = [&](const std::string& name, auto getter) {
        std::vector<std::string> row{name};
        for (const auto& cell : report.cells) row.push_back(getter(cell));
        grid.rows.push_back(std::move(row));
    };
    metric_row("auc", [](const metrics::MetricsCell& c) { return format_metric(c.auc); });
    metric_row("acc", [](const metrics::MetricsCell& c) { return format_metric(c.acc); });
    metric_row("f1", [](const metrics::MetricsCell& c) { return format_metric(c.f1); });
    if (with_counts) {
        metric_row("n_real",
                   [](const metrics::MetricsCell& c) { return std::to_string(c.n_real); });
        metric_row("n_fake",
                   [](const metrics::MetricsCell& c) { return std::to_string(c.n_fake); });
    }
    return grid;
}

}  // namespace

MetricsReport make_report(std::string detector_id, std::string plan_digest,
                          std::vector<metrics::MetricsCell> cells, std::string generated_at) {
    MetricsReport report;
    report.detector_id = std::move(detector_id);
    report.plan_digest = std::move(plan_digest);
    report.generated_at = generated_at.empty() ? now_timestamp() : std::move(generated_at);
    report.cells = std::move(cells);
    std::sort(report.cells.begin(), report.cells.end(),
              [](const metrics::MetricsCell& a, const metrics::MetricsCell& b) {
                  return a.cell < b.cell;
              });
    return report;
}

std::string now_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string emit_table(const MetricsReport& report, TableFormat format) {
    std::ostringstream out;
    if (format == TableFormat::delimited) {
        out << "# detector: " << report.detector_id << "\n";
        out << "# plan: " << report.plan_digest << "\n";
        out << "# generated: " << report.generated_at << "\n";
        GridRows grid = build_grid(report, /*with_counts=*/true);
        for (std::size_t i = 0; i < grid.header.size(); ++i) {
            out << (i ? "\t" : "") << grid.header[i];
        }
        out << "\n";
        for (const auto& row : grid.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
            out << "\n";
        }
        return out.str();
    }

    GridRows grid = build_grid(report, /*with_counts=*/false);
    if (format == TableFormat::markdown) {
        out << "detector: `" << report.detector_id << "`  plan: `" << report.plan_digest
            << "`  generated: " << report.generated_at << "\n\n";
        out << "|";
        for (const auto& h : grid.header) out << " " << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < grid.header.size(); ++i) out << " --- |";
        out << "\n";
        for (const auto& row : grid.rows) {
            out << "|";
            for (const auto& v : row) out << " " << v << " |";
            out << "\n";
        }
        return out.str();
    }

    // plain grid: fixed-width columns
    std::vector<std::size_t> widths(grid.header.size());
    for (std::size_t i = 0; i < grid.header.size(); ++i) widths[i] = grid.header[i].size();
    for (const auto& row : grid.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    out << "detector: " << report.detector_id << "  plan: " << report.plan_digest
        << "  generated: " << report.generated_at << "\n";
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2) << row[i];
        }
        out << "\n";
    };
    emit_row(grid.header);
    for (const auto& row : grid.rows) emit_row(row);
    return out.str();
}

std::string emit_curves(const MetricsReport& report) {
    std::ostringstream out;
    out << "op\tseverity\tmetric\tvalue\n";
    for (const auto& cell : report.cells) {
        const std::string op = cell.cell.unaltered ? "unaltered" : cell.cell.op;
        out << op << '\t' << cell.cell.severity << '\t' << "auc" << '\t' << format_metric(cell.auc)
            << "\n";
        out << op << '\t' << cell.cell.severity << '\t' << "acc" << '\t' << format_metric(cell.acc)
            << "\n";
        out << op << '\t' << cell.cell.severity << '\t' << "f1" << '\t' << format_metric(cell.f1)
            << "\n";
    }
    return out.str();
}

MetricsReport parse_delimited(const std::string& text) {
    MetricsReport report;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> cell_ids;
    std::map<std::string, std::vector<std::string>> rows;
    bool header_seen = false;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto parse_meta = [&](const std::string& key) -> std::optional<std::string> {
                std::string prefix = "# " + key + ": ";
                if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
                return std::nullopt;
            };
            if (auto v = parse_meta("detector")) report.detector_id = *v;
            if (auto v = parse_meta("plan")) report.plan_digest = *v;
            if (auto v = parse_meta("generated")) report.generated_at = *v;
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream fs(line);
        std::string field;
        while (std::getline(fs, field, '\t')) fields.push_back(field);
        if (fields.empty()) continue;
        if (!header_seen) {
            if (fields[0] != "metric") {
                raise(Errc::schema_error, "delimited table must start with a 'metric' header");
            }
            cell_ids.assign(fields.begin() + 1, fields.end());
            header_seen = true;
            continue;
        }
        if (fields.size() != cell_ids.size() + 1) {
            raise(Errc::schema_error, "row '" + fields[0] + "' has wrong column count");
        }
        rows[fields[0]] = std::vector<std::string>(fields.begin() + 1, fields.end());
    }
    if (!header_seen) raise(Errc::schema_error, "missing header row in delimited table");
    for (const char* required : {"auc", "acc", "f1", "n_real", "n_fake"}) {
        if (!rows.count(required)) {
            raise(Errc::schema_error, std::string("missing row '") + required + "'");
        }
    }

    for (std::size_t i = 0; i < cell_ids.size(); ++i) {
        metrics::MetricsCell cell;
        cell.cell = metrics::CellRef::parse(cell_ids[i]);
        cell.auc = parse_metric(rows["auc"][i]);
        cell.acc = parse_metric(rows["acc"][i]);
        cell.f1 = parse_metric(rows["f1"][i]);
        try {
            cell.n_real = std::stol(rows["n_real"][i]);
            cell.n_fake = std::stol(rows["n_fake"][i]);
        } catch (const std::exception&) {
            raise(Errc::schema_error, "bad count in column '" + cell_ids[i] + "'");
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

}  // namespace degrade::report
