#include "degrade/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace degrade::metrics {

namespace {

// Canonical column order for reports: baseline first, then the registry
// families, then anything exotic alphabetically.
int op_rank(const CellRef& cell) {
    if (cell.unaltered) return 0;
    static constexpr std::array<std::string_view, 13> order = {
        "jpeg", "dlcomp", "gnoise", "pgnoise", "gblur", "median", "average",
        "gamma", "linear", "lowres", "gn+gb", "jpeg+gn", "jpeg+lr",
    };
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (cell.op == order[i]) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(order.size()) + 1;
}

long count_label(std::span<const PredictionRecord> records, Label label) {
    return std::count_if(records.begin(), records.end(),
                         [&](const PredictionRecord& r) { return r.label == label; });
}

}  // namespace

std::string CellRef::str() const {
    if (unaltered) return "unaltered";
    return op + "@" + std::to_string(severity);
}

CellRef CellRef::parse(std::string_view text) {
    if (text == "unaltered") return make_unaltered();
    auto at = text.rfind('@');
    if (at == std::string_view::npos || at == 0 || at + 1 >= text.size()) {
        raise(Errc::schema_error, "bad cell id '" + std::string(text) + "'");
    }
    int severity = 0;
    auto digits = text.substr(at + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), severity);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || severity < 0) {
        raise(Errc::schema_error, "bad severity index in cell id '" + std::string(text) + "'");
    }
    return make(std::string(text.substr(0, at)), severity);
}

bool CellRef::operator<(const CellRef& other) const {
    return std::tuple(op_rank(*this), op, severity) <
           std::tuple(op_rank(other), other.op, other.severity);
}

double auc(std::span<const PredictionRecord> records) {
    const long n_fake = count_label(records, Label::fake);
    const long n_real = count_label(records, Label::real);
    if (n_fake == 0 || n_real == 0) {
        raise(Errc::degenerate_class_balance,
              "AUC needs at least one real and one fake record");
    }

    std::vector<std::pair<double, Label>> scored;
    scored.reserve(records.size());
    for (const auto& r : records) scored.emplace_back(r.score, r.label);
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    // Walk tie groups from the highest score; each group contributes one
    // trapezoid under the ROC curve.
    double area = 0.0;
    double cum_tp = 0.0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        double tp = 0.0;
        double fp = 0.0;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            if (scored[j].second == Label::fake) {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            ++j;
        }
        area += fp * (cum_tp + tp / 2.0);
        cum_tp += tp;
        i = j;
    }
    return area / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

double accuracy(std::span<const PredictionRecord> records, double threshold) {
    if (records.empty()) raise(Errc::empty_input, "accuracy over zero records");
    long correct = 0;
    for (const auto& r : records) {
        bool predicted_fake = r.score >= threshold;
        if (predicted_fake == (r.label == Label::fake)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

F1Result f1_score(std::span<const PredictionRecord> records, double threshold) {
    if (records.empty()) raise(Errc::empty_input, "f1 over zero records");
    long tp = 0;
    long fp = 0;
    long fn = 0;
    for (const auto& r : records) {
        bool predicted_fake = r.score >= threshold;
        bool is_fake = r.label == Label::fake;
        if (predicted_fake && is_fake) ++tp;
        if (predicted_fake && !is_fake) ++fp;
        if (!predicted_fake && is_fake) ++fn;
    }
    F1Result result;
    if (tp + fp == 0 && tp + fn == 0) {
        result.degenerate = true;  // nothing predicted fake, nothing is fake
        return result;
    }
    double denom = 2.0 * tp + fp + fn;
    result.value = denom > 0.0 ? (2.0 * tp) / denom : 0.0;
    return result;
}

std::vector<MetricsCell> aggregate(std::span<const PredictionRecord> records) {
    std::map<std::string, std::vector<PredictionRecord>> groups;
    std::map<std::string, CellRef> refs;
    for (const auto& r : records) {
        groups[r.cell.str()].push_back(r);
        refs.emplace(r.cell.str(), r.cell);
    }

    std::vector<MetricsCell> cells;
    cells.reserve(groups.size());
    for (auto& [key, group] : groups) {
        MetricsCell cell;
        cell.cell = refs.at(key);
        cell.n_real = count_label(group, Label::real);
        cell.n_fake = count_label(group, Label::fake);
        try {
            cell.acc = accuracy(group);
            F1Result f = f1_score(group);
            cell.f1 = f.value;
            cell.f1_degenerate = f.degenerate;
            if (cell.n_real >= 1 && cell.n_fake >= 1) {
                cell.auc = auc(group);
            }
        } catch (const Error& e) {
            cell.error = e.message();
        }
        cells.push_back(std::move(cell));
    }
    std::sort(cells.begin(), cells.end(),
              [](const MetricsCell& a, const MetricsCell& b) { return a.cell < b.cell; });
    return cells;
}

void write_records(std::span<const PredictionRecord> records, const std::filesystem::path& path,
                   const std::map<std::string, std::string>& preamble) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    for (const auto& [key, value] : preamble) {
        out << "# " << key << ": " << value << "\n";
    }
    out << "item_id\tcell_id\tlabel\tscore\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.item_id << '\t' << r.cell.str() << '\t' << label_name(r.label) << '\t' << r.score
            << '\n';
    }
    if (!out) raise(Errc::io_error, "write failed for " + path.string());
}

std::vector<PredictionRecord> read_records(const std::filesystem::path& path,
                                           std::map<std::string, std::string>* preamble) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());

    std::vector<PredictionRecord> records;
    std::set<std::string> seen;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (preamble) {
                auto body = line.substr(1);
                auto colon = body.find(':');
                if (colon != std::string::npos) {
                    auto trim = [](std::string s) {
                        auto begin = s.find_first_not_of(" \t");
                        auto end = s.find_last_not_of(" \t");
                        return begin == std::string::npos ? std::string{}
                                                          : s.substr(begin, end - begin + 1);
                    };
                    (*preamble)[trim(body.substr(0, colon))] = trim(body.substr(colon + 1));
                }
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;  // first non-comment row is the header
            continue;
        }
        std::istringstream fields(line);
        std::string item_id, cell_id, label_text, score_text;
        if (!std::getline(fields, item_id, '\t') || !std::getline(fields, cell_id, '\t') ||
            !std::getline(fields, label_text, '\t') || !std::getline(fields, score_text)) {
            raise(Errc::schema_error,
                  path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated columns");
        }
        PredictionRecord r;
        r.item_id = item_id;
        r.cell = CellRef::parse(cell_id);
        r.label = parse_label(label_text);
        try {
            r.score = std::stod(score_text);
        } catch (const std::exception&) {
            raise(Errc::schema_error,
                  path.string() + ":" + std::to_string(line_no) + ": bad score '" + score_text + "'");
        }
        if (!(r.score >= 0.0 && r.score <= 1.0)) {
            raise(Errc::schema_error, path.string() + ":" + std::to_string(line_no) +
                                          ": score out of [0,1]: " + score_text);
        }
        if (!seen.insert(item_id + "\x1f" + cell_id).second) {
            raise(Errc::schema_error, path.string() + ":" + std::to_string(line_no) +
                                          ": duplicate (item, cell) pair " + item_id + ", " + cell_id);
        }
        records.push_back(std::move(r));
    }
    if (!header_seen) {
        raise(Errc::schema_error, path.string() + ": missing header row");
    }
    return records;
}

}  // namespace degrade::metrics
