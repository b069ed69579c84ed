#include "degrade/severity.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "degrade/image.hpp"
#include "degrade/rng.hpp"

namespace degrade::severity {

using nlohmann::json;
using ops::DegradationOp;
using ops::OpKind;

namespace {

DegradationOp leaf(OpKind kind, ops::OpParams params) {
    DegradationOp op;
    op.kind = kind;
    op.params = std::move(params);
    return op;
}

DegradationOp mixture(std::vector<DegradationOp> steps) {
    DegradationOp op;
    op.kind = OpKind::compose;
    op.params = ops::ComposeParams{};
    op.steps = std::move(steps);
    return op;
}

/// Step templates for the three built-in mixtures: middle rung of each
/// component ladder, applied in the order the mixture name reads.
std::optional<std::vector<DegradationOp>> builtin_mixture_steps(std::string_view name) {
    if (name == "gn+gb") {
        return std::vector<DegradationOp>{leaf(OpKind::gaussian_noise, ops::NoiseParams{30.0}),
                                          leaf(OpKind::gaussian_blur, ops::KernelParams{7})};
    }
    if (name == "jpeg+gn") {
        return std::vector<DegradationOp>{leaf(OpKind::jpeg, ops::JpegParams{60}),
                                          leaf(OpKind::gaussian_noise, ops::NoiseParams{30.0})};
    }
    if (name == "jpeg+lr") {
        return std::vector<DegradationOp>{leaf(OpKind::jpeg, ops::JpegParams{60}),
                                          leaf(OpKind::downscale, ops::DownscaleParams{8})};
    }
    return std::nullopt;
}

/// Validates an op template; stochastic seeds are injected per row later, so
/// missing seeds are not an error here.
void validate_template(const DegradationOp& op) {
    DegradationOp probe = op;
    if (ops::op_is_stochastic(probe.kind) && !probe.seed) probe.seed = 0;
    for (auto& step : probe.steps) {
        if (ops::op_is_stochastic(step.kind) && !step.seed) step.seed = 0;
    }
    ops::validate(probe);
}

}  // namespace

AssessmentPlan builtin_plan() {
    AssessmentPlan plan;

    PlanCell jpeg{"jpeg", {}, true};
    for (int q : {95, 60, 30}) jpeg.rungs.push_back(leaf(OpKind::jpeg, ops::JpegParams{q}));
    plan.cells.push_back(std::move(jpeg));

    PlanCell dlcomp{"dlcomp", {}, false};  // needs a configured codec command
    for (const char* level : {"high", "med", "low"}) {
        dlcomp.rungs.push_back(leaf(OpKind::external_codec, ops::ExternalCodecParams{"", level}));
    }
    plan.cells.push_back(std::move(dlcomp));

    PlanCell gnoise{"gnoise", {}, true};
    for (double sigma : {5.0, 30.0, 50.0}) {
        gnoise.rungs.push_back(leaf(OpKind::gaussian_noise, ops::NoiseParams{sigma}));
    }
    plan.cells.push_back(std::move(gnoise));

    PlanCell pgnoise{"pgnoise", {}, true};
    pgnoise.rungs.push_back(leaf(OpKind::poisson_gaussian_noise, ops::PoissonGaussianParams{}));
    plan.cells.push_back(std::move(pgnoise));

    PlanCell gblur{"gblur", {}, true};
    for (int k : {3, 7, 11}) gblur.rungs.push_back(leaf(OpKind::gaussian_blur, ops::KernelParams{k}));
    plan.cells.push_back(std::move(gblur));

    PlanCell gamma{"gamma", {}, true};
    for (double g : {0.1, 0.75, 1.3, 2.5}) {
        gamma.rungs.push_back(leaf(OpKind::gamma_correct, ops::GammaParams{g}));
    }
    plan.cells.push_back(std::move(gamma));

    PlanCell lowres{"lowres", {}, true};
    for (int f : {4, 8, 16}) lowres.rungs.push_back(leaf(OpKind::downscale, ops::DownscaleParams{f}));
    plan.cells.push_back(std::move(lowres));

    for (const char* name : {"gn+gb", "jpeg+gn", "jpeg+lr"}) {
        plan.cells.push_back(PlanCell{name, {mixture(*builtin_mixture_steps(name))}, true});
    }
    return plan;
}

namespace {

json rung_to_json(const DegradationOp& op) {
    return json::parse(ops::params_to_json(op));
}

DegradationOp rung_from_json(const std::string& cell_op, const json& merged) {
    auto kind = ops::op_kind_from_name(cell_op);
    if (kind) {
        return ops::op_from_json(*kind, merged.dump());
    }
    // Named mixture: explicit steps, or a built-in mixture alias.
    if (merged.contains("steps")) {
        return ops::op_from_json(OpKind::compose, merged.dump());
    }
    if (auto steps = builtin_mixture_steps(cell_op)) {
        return mixture(std::move(*steps));
    }
    raise(Errc::unknown_operation, cell_op);
}

/// Scalar shorthand in "severities": the op's primary parameter.
json expand_scalar_severity(const std::string& cell_op, const json& value) {
    auto kind = ops::op_kind_from_name(cell_op);
    if (!kind) {
        raise(Errc::unknown_operation, cell_op);
    }
    json obj = json::object();
    switch (*kind) {
        case OpKind::jpeg: obj["quality"] = value; break;
        case OpKind::external_codec: obj["level"] = value; break;
        case OpKind::gaussian_blur:
        case OpKind::median_filter:
        case OpKind::average_filter: obj["kernel"] = value; break;
        case OpKind::gaussian_noise: obj["sigma"] = value; break;
        case OpKind::gamma_correct: obj["gamma"] = value; break;
        case OpKind::downscale: obj["factor"] = value; break;
        case OpKind::linear_adjust: obj["alpha"] = value; break;
        default:
            raise(Errc::schema_error,
                  "cell '" + cell_op + "': operation has no scalar severity shorthand");
    }
    return obj;
}

}  // namespace

AssessmentPlan parse_plan(const std::string& config_text) {
    json doc;
    try {
        doc = json::parse(config_text);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("plan config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) raise(Errc::schema_error, "plan config must be a JSON object");

    AssessmentPlan plan;
    try {
        plan.master_seed = doc.value("master_seed", std::uint64_t{0});
        if (doc.contains("codec_command")) {
            plan.codec_command = doc.at("codec_command").get<std::string>();
        }
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("bad plan field: ") + e.what());
    }

    if (!doc.contains("cells") || !doc.at("cells").is_array() || doc.at("cells").empty()) {
        raise(Errc::schema_error, "plan config requires a non-empty 'cells' array");
    }

    std::set<std::string> seen_ops;
    for (std::size_t ci = 0; ci < doc.at("cells").size(); ++ci) {
        const json& jcell = doc.at("cells")[ci];
        const std::string where = "cells[" + std::to_string(ci) + "]";
        if (!jcell.is_object() || !jcell.contains("op")) {
            raise(Errc::schema_error, where + ": each cell needs an 'op' field");
        }
        PlanCell cell;
        cell.op_name = jcell.at("op").get<std::string>();
        if (cell.op_name == "unaltered") {
            raise(Errc::schema_error,
                  where + ": the unaltered baseline is implicit and cannot be configured");
        }
        if (!seen_ops.insert(cell.op_name).second) {
            raise(Errc::schema_error, where + ": duplicate cell for op '" + cell.op_name + "'");
        }

        json fixed = jcell.value("params", json::object());
        json severities = jcell.value("severities", json::array());
        if (!severities.is_array() || severities.empty()) {
            // Built-in mixture aliases may omit severities entirely.
            if (builtin_mixture_steps(cell.op_name) && !ops::op_kind_from_name(cell.op_name)) {
                severities = json::array({json::object()});
            } else {
                raise(Errc::schema_error, where + ": 'severities' must be a non-empty array");
            }
        }

        for (std::size_t si = 0; si < severities.size(); ++si) {
            json entry = severities[si];
            if (!entry.is_object()) entry = expand_scalar_severity(cell.op_name, entry);
            json merged = fixed;
            merged.update(entry);
            DegradationOp op;
            try {
                op = rung_from_json(cell.op_name, merged);
                validate_template(op);
            } catch (const Error& e) {
                if (e.code() == Errc::unknown_operation || e.code() == Errc::schema_error) throw;
                raise(Errc::invalid_parameter,
                      where + ".severities[" + std::to_string(si) + "]: " + e.message());
            }
            cell.rungs.push_back(std::move(op));
        }

        cell.active = true;
        if (cell.op_name == "dlcomp" ||
            std::any_of(cell.rungs.begin(), cell.rungs.end(), [](const DegradationOp& op) {
                return op.kind == OpKind::external_codec;
            })) {
            cell.active = plan.codec_command.has_value();
        }
        plan.cells.push_back(std::move(cell));
    }
    return plan;
}

std::string serialize_plan(const AssessmentPlan& plan) {
    json doc;
    doc["master_seed"] = plan.master_seed;
    if (plan.codec_command) doc["codec_command"] = *plan.codec_command;
    json cells = json::array();
    for (const auto& cell : plan.cells) {
        json jcell;
        jcell["op"] = cell.op_name;
        json severities = json::array();
        for (const auto& rung : cell.rungs) severities.push_back(rung_to_json(rung));
        jcell["severities"] = std::move(severities);
        cells.push_back(std::move(jcell));
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2);
}

std::string plan_digest(const AssessmentPlan& plan) {
    std::uint64_t h = rng::hash_bytes(serialize_plan(plan));
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view item_id,
                          std::string_view op_name, int severity_index) {
    std::uint64_t h = rng::mix64(master_seed);
    h = rng::hash_combine(h, rng::hash_bytes(item_id));
    h = rng::hash_combine(h, rng::hash_bytes(op_name));
    h = rng::hash_combine(h, static_cast<std::uint64_t>(severity_index));
    return h;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out << "item_id\tsource_path\toutput_path\top\tparams\tseverity\tseed\tlabel\n";
    for (const auto& row : manifest.rows) {
        out << row.item_id << '\t' << row.source_path << '\t' << row.output_path << '\t'
            << row.op_name << '\t' << row.params_json << '\t' << row.severity_index << '\t'
            << row.seed << '\t' << label_name(row.label) << '\n';
    }
    if (!out) raise(Errc::io_error, "write failed for " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());
    Manifest manifest;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::array<std::string, 8> col;
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (!std::getline(fields, col[i], i + 1 < col.size() ? '\t' : '\n')) {
                raise(Errc::schema_error, path.string() + ":" + std::to_string(line_no) +
                                              ": expected 8 tab-separated columns");
            }
        }
        ManifestRow row;
        row.item_id = col[0];
        row.source_path = col[1];
        row.output_path = col[2];
        row.op_name = col[3];
        row.params_json = col[4];
        try {
            row.severity_index = std::stoi(col[5]);
            row.seed = std::stoull(col[6]);
        } catch (const std::exception&) {
            raise(Errc::schema_error,
                  path.string() + ":" + std::to_string(line_no) + ": bad numeric column");
        }
        row.label = parse_label(col[7]);
        manifest.rows.push_back(std::move(row));
    }
    if (!header_seen) raise(Errc::schema_error, path.string() + ": missing header row");
    return manifest;
}

namespace {

struct WorkItem {
    ManifestRow row;
    const DegradationOp* op_template;  // null for the unaltered row
};

void check_item_id(const std::string& id) {
    if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
        id.find("..") != std::string::npos || id.find('\t') != std::string::npos) {
        raise(Errc::invalid_parameter, "item id not usable as a path component: '" + id + "'");
    }
}

/// Injects the row seed into a rung template: top-level stochastic ops take
/// the seed directly; stochastic compose members take hash(seed, step index).
DegradationOp concretize(const DegradationOp& tmpl, std::uint64_t seed) {
    DegradationOp op = tmpl;
    if (ops::op_is_stochastic(op.kind) && !op.seed) op.seed = seed;
    for (std::size_t i = 0; i < op.steps.size(); ++i) {
        if (ops::op_is_stochastic(op.steps[i].kind) && !op.steps[i].seed) {
            op.steps[i].seed = rng::hash_combine(seed, i);
        }
    }
    return op;
}

}  // namespace

GenerateResult generate_corpus(const AssessmentPlan& plan, const std::filesystem::path& out_dir,
                               int jobs) {
    if (jobs < 1) jobs = 1;

    std::set<std::string> ids;
    for (const auto& input : plan.inputs) {
        check_item_id(input.id);
        if (!ids.insert(input.id).second) {
            raise(Errc::invalid_parameter, "duplicate item id '" + input.id + "'");
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) raise(Errc::io_error, "cannot create " + out_dir.string() + ": " + ec.message());

    // Materialize cell templates with the codec command attached.
    std::vector<PlanCell> cells = plan.cells;
    for (auto& cell : cells) {
        for (auto& rung : cell.rungs) {
            if (rung.kind == OpKind::external_codec && plan.codec_command) {
                std::get<ops::ExternalCodecParams>(rung.params).command = *plan.codec_command;
            }
        }
    }

    std::vector<WorkItem> work;
    for (const auto& input : plan.inputs) {
        std::filesystem::create_directories(out_dir / input.id, ec);
        if (ec) raise(Errc::io_error, "cannot create item directory for '" + input.id + "'");

        ManifestRow base;
        base.item_id = input.id;
        base.source_path = input.path.string();
        base.label = input.label;

        ManifestRow unaltered = base;
        unaltered.op_name = "unaltered";
        unaltered.params_json = "{}";
        unaltered.severity_index = 0;
        unaltered.seed = derive_seed(plan.master_seed, input.id, "unaltered", 0);
        unaltered.output_path = input.id + "/unaltered.png";
        work.push_back({std::move(unaltered), nullptr});

        for (const auto& cell : cells) {
            if (!cell.active) continue;
            for (std::size_t si = 0; si < cell.rungs.size(); ++si) {
                ManifestRow row = base;
                row.op_name = cell.op_name;
                row.params_json = ops::params_to_json(cell.rungs[si]);
                row.severity_index = static_cast<int>(si);
                row.seed = derive_seed(plan.master_seed, input.id, cell.op_name,
                                       static_cast<int>(si));
                row.output_path = input.id + "/" + cell.op_name + "_" + std::to_string(si) + ".png";
                work.push_back({std::move(row), &cell.rungs[si]});
            }
        }
    }

    std::vector<std::optional<std::string>> row_errors(work.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= work.size()) break;
            const WorkItem& item = work[i];
            try {
                Image source = load_image(item.row.source_path);
                Image result = item.op_template
                                   ? ops::apply(concretize(*item.op_template, item.row.seed), source)
                                   : std::move(source);
                save_image(result, out_dir / item.row.output_path, ImageFormat::png());
            } catch (const std::exception& e) {
                row_errors[i] = e.what();
            }
        }
    };

    if (jobs == 1 || work.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(jobs, static_cast<int>(work.size()));
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    GenerateResult result;
    for (std::size_t i = 0; i < work.size(); ++i) {
        if (row_errors[i]) {
            result.failures.push_back({work[i].row, *row_errors[i]});
        } else {
            result.manifest.rows.push_back(work[i].row);
        }
    }

    auto row_key = [](const ManifestRow& row) {
        // Unaltered row leads each item block; the rest sort by name.
        return std::tuple(row.item_id, row.op_name == "unaltered" ? 0 : 1, row.op_name,
                          row.severity_index);
    };
    std::sort(result.manifest.rows.begin(), result.manifest.rows.end(),
              [&](const ManifestRow& a, const ManifestRow& b) { return row_key(a) < row_key(b); });

    write_manifest(result.manifest, out_dir / "manifest.tsv");
    return result;
}

}  // namespace degrade::severity
