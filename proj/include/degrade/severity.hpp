#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "degrade/label.hpp"
#include "degrade/ops.hpp"

namespace degrade::severity {

/// One registry entry: an operation (or named mixture) with its ordered
/// severity rungs, mildest first. Inactive cells stay in the plan but are
/// skipped by the generator (external-codec cells without a codec command).
struct PlanCell {
    std::string op_name;
    std::vector<ops::DegradationOp> rungs;
    bool active = true;
};

struct PlanInput {
    std::string id;
    std::filesystem::path path;
    Label label = Label::real;
};

struct AssessmentPlan {
    std::uint64_t master_seed = 0;
    std::optional<std::string> codec_command;
    std::vector<PlanCell> cells;
    std::vector<PlanInput> inputs;  // attached at generation time, not part of the config text
};

/// The built-in plan: unaltered baseline, JPEG 95/60/30, Gaussian blur
/// 3/7/11, Gaussian noise sigma 5/30/50, the default Poisson-Gaussian model,
/// gamma 0.1/0.75/1.3/2.5, downscale x4/x8/x16, the three mixtures
/// (gn+gb, jpeg+gn, jpeg+lr), and inactive external-codec rungs high/med/low.
AssessmentPlan builtin_plan();

/// Parses the JSON plan config (schema in the README). Unknown operations and
/// invalid parameters are rejected with typed errors.
AssessmentPlan parse_plan(const std::string& config_text);

/// Normalized JSON for a plan; parse_plan(serialize_plan(p)) round-trips.
std::string serialize_plan(const AssessmentPlan& plan);

/// Stable hex digest of the normalized plan config.
std::string plan_digest(const AssessmentPlan& plan);

/// Per-row seed, a pure function of its inputs: reordering work never changes
/// any output file.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view item_id,
                          std::string_view op_name, int severity_index);

struct ManifestRow {
    std::string item_id;
    std::string source_path;
    std::string output_path;  // relative to the manifest's directory
    std::string op_name;      // "unaltered" for the baseline row
    std::string params_json;
    int severity_index = 0;
    std::uint64_t seed = 0;
    Label label = Label::real;
};

struct Manifest {
    std::vector<ManifestRow> rows;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

struct RowFailure {
    ManifestRow row;
    std::string message;
};

struct GenerateResult {
    Manifest manifest;  // successful rows only, sorted canonically
    std::vector<RowFailure> failures;
};

/// Writes every degraded variant (and the unaltered copy) as PNG under
/// out_dir, persists out_dir/manifest.tsv, and returns the manifest.
/// Per-row failures are collected, not fail-fast. Generation may run
/// row-parallel; results are byte-identical for any job count.
GenerateResult generate_corpus(const AssessmentPlan& plan, const std::filesystem::path& out_dir,
                               int jobs = 1);

}  // namespace degrade::severity
