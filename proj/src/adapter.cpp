#include "degrade/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "degrade/subprocess.hpp"

namespace degrade::adapter {

namespace {

metrics::CellRef cell_for_row(const severity::ManifestRow& row) {
    if (row.op_name == "unaltered") return metrics::CellRef::make_unaltered();
    return metrics::CellRef::make(row.op_name, row.severity_index);
}

double parse_score_line(const std::string& line, const std::string& context) {
    std::string trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.pop_back();
    std::size_t consumed = 0;
    double score = 0.0;
    try {
        score = std::stod(trimmed, &consumed);
    } catch (const std::exception&) {
        raise(Errc::protocol_violation, context + ": non-numeric score '" + line + "'");
    }
    if (consumed != trimmed.size()) {
        raise(Errc::protocol_violation, context + ": trailing junk in score '" + line + "'");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
        raise(Errc::protocol_violation, context + ": score out of [0,1]: " + trimmed);
    }
    return score;
}

std::vector<metrics::PredictionRecord> score_with_subprocess(const DetectorHandle& handle,
                                                             const severity::Manifest& manifest,
                                                             const std::filesystem::path& dir) {
    proc::Child child = proc::Child::spawn(handle.command);
    std::vector<metrics::PredictionRecord> records;
    records.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        std::filesystem::path image_path = std::filesystem::absolute(dir / row.output_path);
        const std::string context = "detector response for " + row.item_id + "/" +
                                    cell_for_row(row).str();
        try {
            child.write_line(image_path.string());
        } catch (const Error& e) {
            if (e.code() == Errc::protocol_violation) {
                raise(Errc::protocol_violation, context + ": detector exited before reading request");
            }
            throw;
        }
        auto line = child.read_line(handle.timeout_seconds);
        if (!line) {
            raise(Errc::protocol_violation,
                  context + ": detector exited after " + std::to_string(records.size()) + " of " +
                      std::to_string(manifest.rows.size()) + " responses");
        }
        metrics::PredictionRecord record;
        record.item_id = row.item_id;
        record.cell = cell_for_row(row);
        record.label = row.label;
        record.score = parse_score_line(*line, context);
        records.push_back(std::move(record));
    }
    child.close_stdin();
    child.wait();
    return records;
}

std::vector<metrics::PredictionRecord> score_from_file(const DetectorHandle& handle,
                                                       const severity::Manifest& manifest) {
    std::ifstream in(handle.score_path);
    if (!in) raise(Errc::io_error, "cannot open score file " + handle.score_path.string());

    // (item id, cell id) -> score
    std::map<std::pair<std::string, std::string>, double> scores;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::string item_id, cell_id, score_text;
        if (!std::getline(fields, item_id, '\t') || !std::getline(fields, cell_id, '\t') ||
            !std::getline(fields, score_text)) {
            raise(Errc::protocol_violation, handle.score_path.string() + ":" +
                                                std::to_string(line_no) +
                                                ": expected 3 tab-separated columns");
        }
        double score = parse_score_line(
            score_text, handle.score_path.string() + ":" + std::to_string(line_no));
        scores[{item_id, cell_id}] = score;
    }

    std::vector<metrics::PredictionRecord> records;
    records.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        metrics::CellRef cell = cell_for_row(row);
        auto it = scores.find({row.item_id, cell.str()});
        if (it == scores.end()) {
            raise(Errc::missing_score,
                  "no score for item '" + row.item_id + "' cell '" + cell.str() + "'");
        }
        records.push_back({row.item_id, cell, row.label, it->second});
    }
    return records;
}

}  // namespace

DetectorHandle DetectorHandle::parse(const std::string& spec, double timeout) {
    if (spec == "mock") return make_mock();
    if (spec.starts_with("cmd:")) {
        auto command = spec.substr(4);
        if (command.empty()) raise(Errc::invalid_parameter, "empty detector command");
        return make_subprocess(command, timeout);
    }
    if (spec.starts_with("scores:")) {
        auto path = spec.substr(7);
        if (path.empty()) raise(Errc::invalid_parameter, "empty score file path");
        return make_score_file(path);
    }
    raise(Errc::invalid_parameter,
          "detector must be 'mock', 'cmd:<command>' or 'scores:<path>', got '" + spec + "'");
}

std::string DetectorHandle::id() const {
    switch (mode) {
        case Mode::mock: return "mock";
        case Mode::subprocess: return "cmd:" + command;
        case Mode::score_file: return "scores:" + score_path.string();
    }
    return "unknown";
}

double mock_score(const Image& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<double> luma(static_cast<std::size_t>(w) * h);
    const std::uint8_t* data = img.data();
    for (std::size_t p = 0; p < luma.size(); ++p) {
        luma[p] = 0.299 * data[3 * p] + 0.587 * data[3 * p + 1] + 0.114 * data[3 * p + 2];
    }
    auto at = [&](int x, int y) {
        return luma[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y);
            sum += std::abs(lap);
        }
    }
    double s = sum / (static_cast<double>(w) * h) / 16.0;
    return s / (1.0 + s);
}

std::vector<metrics::PredictionRecord> score_corpus(const DetectorHandle& handle,
                                                    const severity::Manifest& manifest,
                                                    const std::filesystem::path& manifest_dir) {
    switch (handle.mode) {
        case DetectorHandle::Mode::mock: {
            std::vector<metrics::PredictionRecord> records;
            records.reserve(manifest.rows.size());
            for (const auto& row : manifest.rows) {
                Image img = load_image(manifest_dir / row.output_path);
                records.push_back(
                    {row.item_id, cell_for_row(row), row.label, mock_score(img)});
            }
            return records;
        }
        case DetectorHandle::Mode::subprocess:
            return score_with_subprocess(handle, manifest, manifest_dir);
        case DetectorHandle::Mode::score_file:
            return score_from_file(handle, manifest);
    }
    raise(Errc::invalid_parameter, "unhandled detector mode");
}

}  // namespace degrade::adapter
