#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "degrade/ops.hpp"

namespace degrade::augment {

/// Training-time degradation chain: enhancement, smoothing, additive Gaussian
/// noise, then JPEG compression, each stage fired independently at its own
/// probability with parameters drawn uniformly from the configured ranges.
struct AugmentationChainConfig {
    double p_enhance = 0.5;
    std::array<double, 2> enhance_factor_range{0.5, 1.5};
    double p_smooth = 0.5;
    std::array<int, 2> smooth_kernel_range{3, 15};  // odd endpoints; only odd sizes drawn
    double p_noise = 0.3;
    std::array<double, 2> noise_sigma_range{0.0, 50.0};
    double p_jpeg = 0.7;
    std::array<int, 2> jpeg_quality_range{10, 95};
    std::uint64_t seed = 0;

    bool operator==(const AugmentationChainConfig&) const = default;
};

void validate_config(const AugmentationChainConfig& cfg);

/// The concrete steps one draw applies, possibly empty, always in stage
/// order. Steps are self-contained DegradationOps, so applying the draw
/// equals composing them manually.
struct ChainDraw {
    std::vector<ops::DegradationOp> steps;

    bool operator==(const ChainDraw&) const = default;
};

/// Deterministic in (cfg.seed, draw_key); each stage uses its own sub-key, so
/// toggling one stage's probability never shifts another stage's draws.
ChainDraw sample_chain(const AugmentationChainConfig& cfg, std::uint64_t draw_key);

Image apply_chain(const Image& img, const AugmentationChainConfig& cfg, std::uint64_t draw_key);

/// JSON array of the draw's steps, for draw logs.
std::string serialize_draw(const ChainDraw& draw);

AugmentationChainConfig parse_chain_config(const std::string& json_text);
std::string serialize_chain_config(const AugmentationChainConfig& cfg);

}  // namespace degrade::augment
