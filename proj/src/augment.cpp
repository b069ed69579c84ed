#include "degrade/augment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "degrade/rng.hpp"

namespace degrade::augment {

using nlohmann::json;
using ops::DegradationOp;
using ops::OpKind;

namespace {

enum Stage : std::uint64_t { kEnhance = 0, kSmooth = 1, kNoise = 2, kJpeg = 3 };

std::uint64_t stage_key(const AugmentationChainConfig& cfg, std::uint64_t draw_key, Stage stage) {
    return rng::hash_combine(rng::hash_combine(cfg.seed, draw_key), static_cast<std::uint64_t>(stage));
}

double uniform_in(std::uint64_t key, std::uint64_t counter, double lo, double hi) {
    return lo + rng::uniform_at(key, counter) * (hi - lo);
}

int uniform_int_in(std::uint64_t key, std::uint64_t counter, int lo, int hi) {
    int span = hi - lo + 1;
    int v = lo + static_cast<int>(rng::uniform_at(key, counter) * span);
    return std::min(v, hi);
}

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        raise(Errc::invalid_parameter, std::string(name) + " must be in [0,1]");
    }
}

}  // namespace

void validate_config(const AugmentationChainConfig& cfg) {
    check_probability(cfg.p_enhance, "p_enhance");
    check_probability(cfg.p_smooth, "p_smooth");
    check_probability(cfg.p_noise, "p_noise");
    check_probability(cfg.p_jpeg, "p_jpeg");
    if (cfg.enhance_factor_range[0] > cfg.enhance_factor_range[1] ||
        cfg.enhance_factor_range[0] <= 0.0) {
        raise(Errc::invalid_parameter, "enhance_factor_range must be a positive interval");
    }
    if (cfg.smooth_kernel_range[0] > cfg.smooth_kernel_range[1] ||
        cfg.smooth_kernel_range[0] < 3 || cfg.smooth_kernel_range[0] % 2 == 0 ||
        cfg.smooth_kernel_range[1] % 2 == 0) {
        raise(Errc::invalid_parameter,
              "smooth_kernel_range endpoints must be odd and >= 3, low <= high");
    }
    if (cfg.noise_sigma_range[0] > cfg.noise_sigma_range[1] || cfg.noise_sigma_range[0] < 0.0) {
        raise(Errc::invalid_parameter, "noise_sigma_range must be a non-negative interval");
    }
    if (cfg.jpeg_quality_range[0] > cfg.jpeg_quality_range[1] || cfg.jpeg_quality_range[0] < 1 ||
        cfg.jpeg_quality_range[1] > 100) {
        raise(Errc::invalid_parameter, "jpeg_quality_range must lie within [1,100]");
    }
}

ChainDraw sample_chain(const AugmentationChainConfig& cfg, std::uint64_t draw_key) {
    validate_config(cfg);
    ChainDraw draw;

    {
        std::uint64_t key = stage_key(cfg, draw_key, kEnhance);
        if (rng::uniform_at(key, 0) < cfg.p_enhance) {
            bool brightness = rng::uniform_at(key, 1) < 0.5;
            double factor =
                uniform_in(key, 2, cfg.enhance_factor_range[0], cfg.enhance_factor_range[1]);
            DegradationOp op;
            if (brightness) {
                op.kind = OpKind::gamma_correct;
                op.params = ops::GammaParams{factor};
            } else {
                op.kind = OpKind::linear_adjust;
                ops::LinearParams p;
                p.alpha = factor;
                p.anchor = ops::LinearParams::Anchor::channel_mean;
                op.params = p;
            }
            draw.steps.push_back(std::move(op));
        }
    }
    {
        std::uint64_t key = stage_key(cfg, draw_key, kSmooth);
        if (rng::uniform_at(key, 0) < cfg.p_smooth) {
            bool gaussian = rng::uniform_at(key, 1) < 0.5;
            int odd_count = (cfg.smooth_kernel_range[1] - cfg.smooth_kernel_range[0]) / 2 + 1;
            int pick = std::min(static_cast<int>(rng::uniform_at(key, 2) * odd_count),
                                odd_count - 1);
            int kernel = cfg.smooth_kernel_range[0] + 2 * pick;
            DegradationOp op;
            op.kind = gaussian ? OpKind::gaussian_blur : OpKind::average_filter;
            op.params = ops::KernelParams{kernel};
            draw.steps.push_back(std::move(op));
        }
    }
    {
        std::uint64_t key = stage_key(cfg, draw_key, kNoise);
        if (rng::uniform_at(key, 0) < cfg.p_noise) {
            double sigma = uniform_in(key, 1, cfg.noise_sigma_range[0], cfg.noise_sigma_range[1]);
            DegradationOp op;
            op.kind = OpKind::gaussian_noise;
            op.params = ops::NoiseParams{sigma};
            op.seed = rng::hash_combine(key, 2);
            draw.steps.push_back(std::move(op));
        }
    }
    {
        std::uint64_t key = stage_key(cfg, draw_key, kJpeg);
        if (rng::uniform_at(key, 0) < cfg.p_jpeg) {
            int quality =
                uniform_int_in(key, 1, cfg.jpeg_quality_range[0], cfg.jpeg_quality_range[1]);
            DegradationOp op;
            op.kind = OpKind::jpeg;
            op.params = ops::JpegParams{quality};
            draw.steps.push_back(std::move(op));
        }
    }
    return draw;
}

Image apply_chain(const Image& img, const AugmentationChainConfig& cfg, std::uint64_t draw_key) {
    ChainDraw draw = sample_chain(cfg, draw_key);
    if (draw.steps.empty()) return img;
    return ops::compose(img, draw.steps);
}

std::string serialize_draw(const ChainDraw& draw) {
    json arr = json::array();
    for (const auto& step : draw.steps) {
        json j = json::parse(ops::params_to_json(step));
        j["op"] = std::string(ops::op_kind_name(step.kind));
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

AugmentationChainConfig parse_chain_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("chain config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) raise(Errc::schema_error, "chain config must be a JSON object");

    AugmentationChainConfig cfg;
    try {
        cfg.p_enhance = doc.value("p_enhance", cfg.p_enhance);
        cfg.p_smooth = doc.value("p_smooth", cfg.p_smooth);
        cfg.p_noise = doc.value("p_noise", cfg.p_noise);
        cfg.p_jpeg = doc.value("p_jpeg", cfg.p_jpeg);
        cfg.enhance_factor_range = doc.value("enhance_factor_range", cfg.enhance_factor_range);
        cfg.smooth_kernel_range = doc.value("smooth_kernel_range", cfg.smooth_kernel_range);
        cfg.noise_sigma_range = doc.value("noise_sigma_range", cfg.noise_sigma_range);
        cfg.jpeg_quality_range = doc.value("jpeg_quality_range", cfg.jpeg_quality_range);
        cfg.seed = doc.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("bad chain config field: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

std::string serialize_chain_config(const AugmentationChainConfig& cfg) {
    json doc;
    doc["p_enhance"] = cfg.p_enhance;
    doc["enhance_factor_range"] = cfg.enhance_factor_range;
    doc["p_smooth"] = cfg.p_smooth;
    doc["smooth_kernel_range"] = cfg.smooth_kernel_range;
    doc["p_noise"] = cfg.p_noise;
    doc["noise_sigma_range"] = cfg.noise_sigma_range;
    doc["p_jpeg"] = cfg.p_jpeg;
    doc["jpeg_quality_range"] = cfg.jpeg_quality_range;
    doc["seed"] = cfg.seed;
    return doc.dump(2);
}

}  // namespace degrade::augment
