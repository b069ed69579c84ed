#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "degrade/adapter.hpp"
#include "degrade/augment.hpp"
#include "degrade/error.hpp"
#include "degrade/image.hpp"
#include "degrade/metrics.hpp"
#include "degrade/report.hpp"
#include "degrade/rng.hpp"
#include "degrade/severity.hpp"

namespace fs = std::filesystem;
using namespace degrade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

bool verbose_logging() {
    const char* env = std::getenv("DEGRADE_LOG");
    return env && *env && std::string_view(env) != "0" && std::string_view(env) != "off";
}

void log_note(const std::string& message) {
    if (verbose_logging()) std::cerr << "[degrade] " << message << "\n";
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out << text;
    if (!out) raise(Errc::io_error, "write failed for " + path.string());
}

/// Images in a directory, sorted by filename so item order never depends on
/// directory enumeration order. Item id = file stem.
std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) raise(Errc::invalid_parameter, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) raise(Errc::invalid_parameter, "no PNG/JPEG images in " + dir.string());
    return files;
}

/// Labels sidecar: one "item_id<TAB>real|fake" pair per line, '#' comments.
std::map<std::string, Label> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open labels file " + path.string());
    std::map<std::string, Label> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            raise(Errc::schema_error, path.string() + ":" + std::to_string(line_no) +
                                          ": expected 'item_id<TAB>label'");
        }
        labels[line.substr(0, tab)] = parse_label(line.substr(tab + 1));
    }
    return labels;
}

severity::AssessmentPlan load_plan(const std::string& plan_arg) {
    if (plan_arg == "builtin") return severity::builtin_plan();
    return severity::parse_plan(read_text_file(plan_arg));
}

int run_generate(const std::string& plan_arg, const fs::path& in_dir, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed, const std::string& labels_path, int jobs) {
    severity::AssessmentPlan plan = load_plan(plan_arg);
    if (seed) plan.master_seed = *seed;

    auto labels = read_labels(labels_path);
    for (const auto& file : list_images(in_dir)) {
        severity::PlanInput input;
        input.id = file.stem().string();
        input.path = file;
        auto it = labels.find(input.id);
        if (it == labels.end()) {
            raise(Errc::invalid_parameter,
                  "labels file has no entry for item '" + input.id + "'");
        }
        input.label = it->second;
        plan.inputs.push_back(std::move(input));
    }

    log_note("generating " + std::to_string(plan.inputs.size()) + " items into " +
             out_dir.string());
    severity::GenerateResult result = severity::generate_corpus(plan, out_dir, jobs);
    std::cout << "wrote " << result.manifest.rows.size() << " corpus files and "
              << (out_dir / "manifest.tsv").string() << "\n";
    if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " row(s) failed:\n";
        for (const auto& failure : result.failures) {
            std::cerr << "  " << failure.row.item_id << " " << failure.row.op_name << "@"
                      << failure.row.severity_index << ": " << failure.message << "\n";
        }
        return kExitPartial;
    }
    return kExitOk;
}

int run_augment(const fs::path& in_dir, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                const std::string& config_path, int jobs) {
    augment::AugmentationChainConfig cfg;
    if (!config_path.empty()) cfg = augment::parse_chain_config(read_text_file(config_path));
    if (seed) cfg.seed = *seed;

    auto files = list_images(in_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise(Errc::io_error, "cannot create " + out_dir.string());

    // Row-parallel over items; the draw key is the item-id hash, so results
    // do not depend on scheduling or directory order.
    struct Row {
        std::string id;
        fs::path source;
        std::string draw_json;
        std::string error;
    };
    std::vector<Row> rows(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= files.size()) break;
            Row& row = rows[i];
            row.id = files[i].stem().string();
            row.source = files[i];
            try {
                std::uint64_t draw_key = rng::hash_bytes(row.id);
                Image img = load_image(files[i]);
                augment::ChainDraw draw = augment::sample_chain(cfg, draw_key);
                Image out = draw.steps.empty() ? std::move(img) : ops::compose(img, draw.steps);
                save_image(out, out_dir / (row.id + ".png"), ImageFormat::png());
                row.draw_json = augment::serialize_draw(draw);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(jobs, static_cast<int>(files.size())); ++t) {
            pool.emplace_back(worker);
        }
        for (auto& thread : pool) thread.join();
    }

    std::ofstream log(out_dir / "draws.tsv", std::ios::trunc);
    log << "item_id\tchain\n";
    long failures = 0;
    for (const auto& row : rows) {
        if (!row.error.empty()) {
            std::cerr << row.id << ": " << row.error << "\n";
            ++failures;
            continue;
        }
        log << row.id << '\t' << row.draw_json << '\n';
    }
    std::cout << "augmented " << (rows.size() - failures) << " image(s) into " << out_dir.string()
              << "\n";
    return failures ? kExitPartial : kExitOk;
}

int run_score(const fs::path& manifest_path, const std::string& detector_spec,
              const fs::path& out_path, double timeout) {
    severity::Manifest manifest = severity::read_manifest(manifest_path);
    adapter::DetectorHandle handle = adapter::DetectorHandle::parse(detector_spec, timeout);
    auto records = adapter::score_corpus(handle, manifest, manifest_path.parent_path());

    std::map<std::string, std::string> preamble;
    preamble["detector"] = handle.id();
    preamble["manifest"] = manifest_path.string();
    {
        std::ostringstream digest;
        digest << std::hex << std::setw(16) << std::setfill('0')
               << rng::hash_bytes(read_text_file(manifest_path));
        preamble["manifest_digest"] = digest.str();
    }
    metrics::write_records(records, out_path, preamble);
    std::cout << "wrote " << records.size() << " prediction record(s) to " << out_path.string()
              << "\n";
    return kExitOk;
}

int run_report(const fs::path& records_path, const std::string& format_name,
               const std::string& out_path) {
    std::map<std::string, std::string> preamble;
    auto records = metrics::read_records(records_path, &preamble);
    auto cells = metrics::aggregate(records);
    auto detector = preamble.count("detector") ? preamble["detector"] : "unknown";
    auto plan_id = preamble.count("manifest_digest") ? preamble["manifest_digest"]
                   : preamble.count("manifest")      ? preamble["manifest"]
                                                     : "unknown";
    report::MetricsReport rep = report::make_report(detector, plan_id, std::move(cells));

    std::string text;
    if (format_name == "grid" || format_name == "plain-grid") {
        text = report::emit_table(rep, report::TableFormat::plain_grid);
    } else if (format_name == "markdown") {
        text = report::emit_table(rep, report::TableFormat::markdown);
    } else if (format_name == "delimited") {
        text = report::emit_table(rep, report::TableFormat::delimited);
    } else if (format_name == "curves") {
        text = report::emit_curves(rep);
    } else {
        raise(Errc::invalid_parameter, "unknown format '" + format_name + "'");
    }

    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
        std::cout << "wrote report to " << out_path << "\n";
    }
    return kExitOk;
}

int run_plan_show(const std::string& plan_arg) {
    std::cout << severity::serialize_plan(load_plan(plan_arg)) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"degrade: graded image-degradation corpora, detector scoring and robustness reports"};
    app.require_subcommand(1);

    // generate
    std::string gen_plan = "builtin";
    fs::path gen_in, gen_out;
    std::uint64_t gen_seed = 0;
    std::string gen_labels;
    int gen_jobs = 1;
    auto* generate = app.add_subcommand("generate", "degrade a test corpus over every plan cell");
    generate->add_option("--plan", gen_plan, "'builtin' or a plan config JSON path");
    generate->add_option("--in", gen_in, "input image directory")->required();
    generate->add_option("--out", gen_out, "output corpus directory")->required();
    auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "master seed (overrides the plan's)");
    generate->add_option("--labels", gen_labels, "labels file: item_id<TAB>real|fake")->required();
    generate->add_option("--jobs", gen_jobs, "worker threads");

    // augment
    fs::path aug_in, aug_out;
    std::uint64_t aug_seed = 0;
    std::string aug_config;
    int aug_jobs = 1;
    auto* augment_cmd = app.add_subcommand("augment", "apply the training augmentation chain");
    augment_cmd->add_option("--in", aug_in, "input image directory")->required();
    augment_cmd->add_option("--out", aug_out, "output directory")->required();
    auto* aug_seed_opt =
        augment_cmd->add_option("--seed", aug_seed, "chain seed (overrides the config's)");
    augment_cmd->add_option("--config", aug_config, "chain config JSON path (defaults built in)");
    augment_cmd->add_option("--jobs", aug_jobs, "worker threads");

    // score
    fs::path score_in, score_out;
    std::string score_detector = "mock";
    double score_timeout = 30.0;
    auto* score = app.add_subcommand("score", "run a detector over a generated corpus");
    score->add_option("--in", score_in, "manifest.tsv path")->required();
    score->add_option("--detector", score_detector, "mock | cmd:<command> | scores:<path>");
    score->add_option("--out", score_out, "records output path")->required();
    score->add_option("--timeout", score_timeout, "per-response timeout, seconds");

    // report
    fs::path report_in;
    std::string report_format = "grid";
    std::string report_out;
    auto* report_cmd = app.add_subcommand("report", "aggregate records into a metric grid");
    report_cmd->add_option("--in", report_in, "records file path")->required();
    report_cmd->add_option("--format", report_format, "grid | markdown | delimited | curves");
    report_cmd->add_option("--out", report_out, "output path (stdout when omitted)");

    // plan-show
    std::string plan_show_arg = "builtin";
    auto* plan_show = app.add_subcommand("plan-show", "print a normalized plan config");
    plan_show->add_option("--plan", plan_show_arg, "'builtin' or a plan config JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            return app.exit(e);
        }
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            std::optional<std::uint64_t> seed;
            if (gen_seed_opt->count() > 0) seed = gen_seed;
            return run_generate(gen_plan, gen_in, gen_out, seed, gen_labels, gen_jobs);
        }
        if (augment_cmd->parsed()) {
            std::optional<std::uint64_t> seed;
            if (aug_seed_opt->count() > 0) seed = aug_seed;
            return run_augment(aug_in, aug_out, seed, aug_config, aug_jobs);
        }
        if (score->parsed()) {
            return run_score(score_in, score_detector, score_out, score_timeout);
        }
        if (report_cmd->parsed()) {
            return run_report(report_in, report_format, report_out);
        }
        if (plan_show->parsed()) {
            return run_plan_show(plan_show_arg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        bool config_error = e.code() == Errc::schema_error || e.code() == Errc::unknown_operation ||
                            e.code() == Errc::invalid_parameter ||
                            e.code() == Errc::invalid_quality || e.code() == Errc::invalid_kernel ||
                            e.code() == Errc::invalid_gamma || e.code() == Errc::invalid_alpha;
        return config_error ? kExitUsage : kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitUsage;
}
