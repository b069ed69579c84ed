#include <doctest.h>

#include <filesystem>
#include <set>

#include "degrade/severity.hpp"
#include "helpers.hpp"

using namespace degrade;
using namespace degrade::severity;
namespace fs = std::filesystem;

namespace {

const PlanCell* find_cell(const AssessmentPlan& plan, std::string_view name) {
    for (const auto& cell : plan.cells) {
        if (cell.op_name == name) return &cell;
    }
    return nullptr;
}

/// Three small natural-ish inputs on disk; returns a plan with them attached.
AssessmentPlan plan_with_inputs(const fs::path& dir, std::uint64_t master_seed) {
    AssessmentPlan plan = builtin_plan();
    plan.master_seed = master_seed;
    fs::create_directories(dir);
    for (int i = 0; i < 3; ++i) {
        Image img = testutil::random_image(24, 20, 1000 + static_cast<std::uint64_t>(i));
        auto path = dir / ("img" + std::to_string(i) + ".png");
        save_image(img, path, ImageFormat::png());
        plan.inputs.push_back({"img" + std::to_string(i), path,
                               i % 2 == 0 ? Label::real : Label::fake});
    }
    return plan;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files[fs::relative(entry.path(), root).string()] =
                testutil::read_file_bytes(entry.path());
        }
    }
    return files;
}

}  // namespace

TEST_CASE("builtin plan carries the expected severity ladders") {
    AssessmentPlan plan = builtin_plan();

    const PlanCell* jpeg = find_cell(plan, "jpeg");
    REQUIRE(jpeg);
    std::vector<int> qualities;
    for (const auto& rung : jpeg->rungs) {
        qualities.push_back(std::get<ops::JpegParams>(rung.params).quality);
    }
    CHECK(qualities == std::vector<int>{95, 60, 30});

    const PlanCell* gamma = find_cell(plan, "gamma");
    REQUIRE(gamma);
    std::vector<double> gammas;
    for (const auto& rung : gamma->rungs) {
        gammas.push_back(std::get<ops::GammaParams>(rung.params).gamma);
    }
    CHECK(gammas == std::vector<double>{0.1, 0.75, 1.3, 2.5});

    const PlanCell* gblur = find_cell(plan, "gblur");
    REQUIRE(gblur);
    std::vector<int> kernels;
    for (const auto& rung : gblur->rungs) {
        kernels.push_back(std::get<ops::KernelParams>(rung.params).kernel);
    }
    CHECK(kernels == std::vector<int>{3, 7, 11});

    const PlanCell* gnoise = find_cell(plan, "gnoise");
    REQUIRE(gnoise);
    std::vector<double> sigmas;
    for (const auto& rung : gnoise->rungs) {
        sigmas.push_back(std::get<ops::NoiseParams>(rung.params).sigma);
    }
    CHECK(sigmas == std::vector<double>{5.0, 30.0, 50.0});

    const PlanCell* lowres = find_cell(plan, "lowres");
    REQUIRE(lowres);
    std::vector<int> factors;
    for (const auto& rung : lowres->rungs) {
        factors.push_back(std::get<ops::DownscaleParams>(rung.params).factor);
    }
    CHECK(factors == std::vector<int>{4, 8, 16});

    const PlanCell* dlcomp = find_cell(plan, "dlcomp");
    REQUIRE(dlcomp);
    CHECK(!dlcomp->active);  // no codec command configured
    CHECK(dlcomp->rungs.size() == 3);

    for (const char* name : {"gn+gb", "jpeg+gn", "jpeg+lr"}) {
        const PlanCell* mix = find_cell(plan, name);
        REQUIRE(mix);
        CHECK(mix->rungs.size() == 1);
        CHECK(mix->rungs[0].kind == ops::OpKind::compose);
        CHECK(mix->rungs[0].steps.size() == 2);
    }

    std::size_t active_rungs = 0;
    for (const auto& cell : plan.cells) {
        if (cell.active) active_rungs += cell.rungs.size();
    }
    CHECK(active_rungs == 20);
}

TEST_CASE("plan parsing rejects malformed configs with typed errors") {
    try {
        parse_plan(R"({"master_seed": 1, "cells": []})");
        FAIL("expected SchemaError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::schema_error);
    }

    try {
        parse_plan(R"({"cells": [{"op": "gblur", "severities": [4]}]})");
        FAIL("expected InvalidParameter");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_parameter);
    }

    try {
        parse_plan(R"({"cells": [{"op": "sharpen", "severities": [1]}]})");
        FAIL("expected UnknownOperation");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_operation);
    }

    CHECK_THROWS_AS(parse_plan("not json at all"), Error);
    CHECK_THROWS_AS(parse_plan(R"({"cells": [{"severities": [1]}]})"), Error);
    CHECK_THROWS_AS(parse_plan(R"({"cells": [{"op": "unaltered", "severities": [1]}]})"), Error);
}

TEST_CASE("scalar severities expand to full parameter records") {
    auto shorthand = parse_plan(R"({"cells": [{"op": "jpeg", "severities": [95, 60, 30]}]})");
    auto longhand = parse_plan(
        R"({"cells": [{"op": "jpeg",
                       "severities": [{"quality": 95}, {"quality": 60}, {"quality": 30}]}]})");
    CHECK(shorthand.cells[0].rungs == longhand.cells[0].rungs);
}

TEST_CASE("serialize(parse(x)) is a normalization fixed point") {
    std::vector<std::string> configs{
        R"({"master_seed": 9, "cells": [{"op": "jpeg", "severities": [95, 30]}]})",
        R"({"cells": [{"op": "gblur", "severities": [3, 11]},
                      {"op": "median", "severities": [{"kernel": 5}]}]})",
        R"({"cells": [{"op": "gnoise", "severities": [5.0, 50.0]},
                      {"op": "pgnoise", "severities": [{"a": 0.02, "b": 0.0001}]}]})",
        R"({"cells": [{"op": "gn+gb"}]})",
        R"({"master_seed": 3, "codec_command": "cat", "cells": [
              {"op": "dlcomp", "severities": ["high", "low"]}]})",
        R"({"cells": [{"op": "mix", "severities": [
              {"steps": [{"op": "gamma", "gamma": 0.5}, {"op": "lowres", "factor": 4}]}]}]})",
    };
    for (const auto& config : configs) {
        std::string normalized = serialize_plan(parse_plan(config));
        CHECK(serialize_plan(parse_plan(normalized)) == normalized);
    }

    std::string builtin_text = serialize_plan(builtin_plan());
    CHECK(serialize_plan(parse_plan(builtin_text)) == builtin_text);
}

TEST_CASE("dlcomp cells activate only when a codec command is configured") {
    auto inactive = parse_plan(R"({"cells": [{"op": "dlcomp", "severities": ["high"]}]})");
    CHECK(!inactive.cells[0].active);

    auto active = parse_plan(
        R"({"codec_command": "cat", "cells": [{"op": "dlcomp", "severities": ["high"]}]})");
    CHECK(active.cells[0].active);
}

TEST_CASE("seed derivation is stable and sensitive to every input") {
    auto s = derive_seed(1, "item", "jpeg", 0);
    CHECK(s == derive_seed(1, "item", "jpeg", 0));
    CHECK(s != derive_seed(2, "item", "jpeg", 0));
    CHECK(s != derive_seed(1, "item2", "jpeg", 0));
    CHECK(s != derive_seed(1, "item", "gnoise", 0));
    CHECK(s != derive_seed(1, "item", "jpeg", 1));
}

TEST_CASE("generate_corpus: manifest shape and determinism") {
    testutil::TempDir tmp;
    auto in_dir = tmp.path() / "in";
    AssessmentPlan plan = plan_with_inputs(in_dir, 7);

    auto out_a = tmp.path() / "out_a";
    GenerateResult result = generate_corpus(plan, out_a, 1);
    CHECK(result.failures.empty());

    // 20 active degraded rungs + the unaltered copy, per item
    CHECK(result.manifest.rows.size() == 3 * 21);

    std::set<std::string> outputs;
    long unaltered_rows = 0;
    for (const auto& row : result.manifest.rows) {
        CHECK(outputs.insert(row.output_path).second);  // unique output paths
        CHECK(fs::exists(out_a / row.output_path));
        if (row.op_name == "unaltered") ++unaltered_rows;
    }
    CHECK(unaltered_rows == 3);

    Manifest reread = read_manifest(out_a / "manifest.tsv");
    REQUIRE(reread.rows.size() == result.manifest.rows.size());
    CHECK(reread.rows[0].item_id == result.manifest.rows[0].item_id);
    CHECK(reread.rows[0].seed == result.manifest.rows[0].seed);

    // same master seed -> byte-identical tree
    auto out_b = tmp.path() / "out_b";
    generate_corpus(plan, out_b, 1);
    CHECK(tree_bytes(out_a) == tree_bytes(out_b));

    // any job count -> byte-identical tree
    auto out_c = tmp.path() / "out_c";
    generate_corpus(plan, out_c, 4);
    CHECK(tree_bytes(out_a) == tree_bytes(out_c));
}

TEST_CASE("master seed changes stochastic cells and nothing else") {
    testutil::TempDir tmp;
    auto in_dir = tmp.path() / "in";
    AssessmentPlan plan = plan_with_inputs(in_dir, 7);

    auto out_a = tmp.path() / "seed7";
    generate_corpus(plan, out_a, 1);

    plan.master_seed = 8;
    auto out_b = tmp.path() / "seed8";
    generate_corpus(plan, out_b, 1);

    auto a = tree_bytes(out_a);
    auto b = tree_bytes(out_b);
    std::set<std::string> stochastic_ops{"gnoise", "pgnoise", "gn+gb", "jpeg+gn"};
    for (const auto& [rel, bytes] : a) {
        if (rel == "manifest.tsv") continue;  // seed column differs by design
        std::string fname = rel.substr(rel.find('/') + 1);
        fname = fname.substr(0, fname.find('.'));
        auto us = fname.find_last_of('_');
        std::string op = us == std::string::npos ? fname : fname.substr(0, us);
        bool stochastic = stochastic_ops.count(op) > 0;
        if (stochastic) {
            CHECK(b.at(rel) != bytes);
        } else {
            CHECK(b.at(rel) == bytes);
        }
    }
}

TEST_CASE("generate_corpus collects per-row failures without aborting") {
    testutil::TempDir tmp;
    auto in_dir = tmp.path() / "in";
    AssessmentPlan plan = plan_with_inputs(in_dir, 7);
    plan.inputs.push_back({"ghost", tmp.path() / "in" / "missing.png", Label::real});

    auto out = tmp.path() / "out";
    GenerateResult result = generate_corpus(plan, out, 2);
    CHECK(result.failures.size() == 21);  // all rows of the missing item
    CHECK(result.manifest.rows.size() == 3 * 21);
    for (const auto& failure : result.failures) {
        CHECK(failure.row.item_id == "ghost");
        CHECK(!failure.message.empty());
    }
}

TEST_CASE("generate_corpus validates item ids") {
    testutil::TempDir tmp;
    AssessmentPlan plan = builtin_plan();
    plan.inputs.push_back({"a/b", tmp.path() / "x.png", Label::real});
    CHECK_THROWS_AS(generate_corpus(plan, tmp.path() / "out", 1), Error);

    plan.inputs.clear();
    plan.inputs.push_back({"dup", tmp.path() / "x.png", Label::real});
    plan.inputs.push_back({"dup", tmp.path() / "y.png", Label::real});
    CHECK_THROWS_AS(generate_corpus(plan, tmp.path() / "out", 1), Error);
}

TEST_CASE("cell-level params merge into every severity rung") {
    auto plan = parse_plan(
        R"({"cells": [{"op": "pgnoise", "params": {"b": 0.0005},
                       "severities": [{"a": 0.01}, {"a": 0.05}]}]})");
    REQUIRE(plan.cells.size() == 1);
    REQUIRE(plan.cells[0].rungs.size() == 2);
    auto p0 = std::get<ops::PoissonGaussianParams>(plan.cells[0].rungs[0].params);
    auto p1 = std::get<ops::PoissonGaussianParams>(plan.cells[0].rungs[1].params);
    CHECK(p0.a == doctest::Approx(0.01));
    CHECK(p0.b == doctest::Approx(0.0005));
    CHECK(p1.a == doctest::Approx(0.05));
    CHECK(p1.b == doctest::Approx(0.0005));
}

TEST_CASE("generate_corpus drives external-codec cells through the subprocess") {
    testutil::TempDir tmp;
    auto in_dir = tmp.path() / "in";
    fs::create_directories(in_dir);
    Image img = testutil::random_image(16, 12, 321);
    save_image(img, in_dir / "one.png", ImageFormat::png());

    AssessmentPlan plan = parse_plan(
        R"({"codec_command": "cat", "cells": [{"op": "dlcomp", "severities": ["high", "low"]}]})");
    plan.master_seed = 5;
    plan.inputs.push_back({"one", in_dir / "one.png", Label::real});

    auto out = tmp.path() / "out";
    GenerateResult result = generate_corpus(plan, out, 1);
    REQUIRE(result.failures.empty());
    CHECK(result.manifest.rows.size() == 3);  // unaltered + two codec rungs

    // identity codec: reconstructed files carry the same pixels
    CHECK(load_image(out / "one" / "dlcomp_0.png") == img);
    CHECK(load_image(out / "one" / "dlcomp_1.png") == img);
}

TEST_CASE("plan digest tracks plan content") {
    AssessmentPlan a = builtin_plan();
    AssessmentPlan b = builtin_plan();
    CHECK(plan_digest(a) == plan_digest(b));
    b.master_seed = 99;
    CHECK(plan_digest(a) != plan_digest(b));
}
