#include "degrade/ops.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "degrade/rng.hpp"
#include "degrade/subprocess.hpp"

namespace degrade::ops {

using nlohmann::json;

namespace {

void check_kernel(int kernel) {
    if (kernel < 3 || kernel % 2 == 0) {
        raise(Errc::invalid_kernel,
              "kernel size must be odd and >= 3, got " + std::to_string(kernel));
    }
}

std::vector<double> to_double(const Image& img) {
    std::vector<double> out(img.sample_count());
    const std::uint8_t* src = img.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i];
    return out;
}

Image from_double(std::span<const double> buf, int width, int height) {
    Image out(width, height);
    std::uint8_t* dst = out.data();
    for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = quantize_sample(buf[i]);
    return out;
}

/// Separable convolution with replicate padding; quantizes once after both
/// passes so intermediate precision is kept.
Image separable_filter(const Image& img, const std::vector<double>& taps) {
    const int w = img.width();
    const int h = img.height();
    const int r = static_cast<int>(taps.size()) / 2;
    std::vector<double> src = to_double(img);
    std::vector<double> tmp(src.size());
    std::vector<double> dst(src.size());

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j) {
                    int xx = std::clamp(x + j, 0, w - 1);
                    acc += taps[j + r] * src[(static_cast<std::size_t>(y) * w + xx) * 3 + c];
                }
                tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j) {
                    int yy = std::clamp(y + j, 0, h - 1);
                    acc += taps[j + r] * tmp[(static_cast<std::size_t>(yy) * w + x) * 3 + c];
                }
                dst[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
            }
        }
    }
    return from_double(dst, w, h);
}

/// Bilinear resample on double samples; coordinates use the pixel-center
/// convention src = (dst + 0.5) * scale - 0.5.
std::vector<double> bilinear_resize(const std::vector<double>& src, int sw, int sh, int dw,
                                    int dh) {
    std::vector<double> dst(static_cast<std::size_t>(dw) * dh * 3);
    const double x_scale = static_cast<double>(sw) / dw;
    const double y_scale = static_cast<double>(sh) / dh;
    for (int dy = 0; dy < dh; ++dy) {
        double sy = (dy + 0.5) * y_scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(sh - 1));
        int y0 = static_cast<int>(std::floor(sy));
        int y1 = std::min(y0 + 1, sh - 1);
        double fy = sy - y0;
        for (int dx = 0; dx < dw; ++dx) {
            double sx = (dx + 0.5) * x_scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(sw - 1));
            int x0 = static_cast<int>(std::floor(sx));
            int x1 = std::min(x0 + 1, sw - 1);
            double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                auto at = [&](int x, int y) {
                    return src[(static_cast<std::size_t>(y) * sw + x) * 3 + c];
                };
                double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                dst[(static_cast<std::size_t>(dy) * dw + dx) * 3 + c] =
                    top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    return dst;
}

Image map_lut(const Image& img, const std::array<std::uint8_t, 256>& lut) {
    Image out(img.width(), img.height());
    const std::uint8_t* src = img.data();
    std::uint8_t* dst = out.data();
    for (std::size_t i = 0; i < img.sample_count(); ++i) dst[i] = lut[src[i]];
    return out;
}

}  // namespace

double gaussian_sigma_for_kernel(int kernel) {
    check_kernel(kernel);
    return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8;
}

std::vector<double> gaussian_kernel_taps(int kernel) {
    const double sigma = gaussian_sigma_for_kernel(kernel);
    const int center = kernel / 2;
    std::vector<double> taps(kernel);
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        double d = i - center;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

Image jpeg_transcode(const Image& img, int quality) {
    auto bytes = encode_jpeg(img, quality);
    return decode_image(bytes, "<jpeg transcode>");
}

Image external_codec_transcode(const Image& img, const std::string& codec_command,
                               const std::string& level) {
    if (codec_command.empty()) {
        raise(Errc::invalid_parameter, "codec command is empty");
    }
    std::string command = codec_command;
    const std::string token = "{level}";
    for (std::size_t pos = command.find(token); pos != std::string::npos;
         pos = command.find(token, pos)) {
        command.replace(pos, token.size(), level);
        pos += level.size();
    }

    proc::Child child = proc::Child::spawn(command, {{"DEGRADE_CODEC_LEVEL", level}});
    bool input_rejected = false;
    try {
        child.write_all(encode_png(img));
    } catch (const Error& e) {
        if (e.code() != Errc::protocol_violation) throw;
        input_rejected = true;
    }
    child.close_stdin();
    auto output = child.read_all();
    int status = child.wait();

    if (status == 127) {
        raise(Errc::codec_spawn_failure, "codec command not found: " + command);
    }
    if (status != 0) {
        raise(Errc::codec_nonzero_exit,
              "codec exited with status " + std::to_string(status) + ": " + command);
    }
    if (input_rejected) {
        raise(Errc::codec_protocol_violation, "codec closed its input before reading the image");
    }

    Image reconstructed;
    try {
        reconstructed = decode_image(output, "<codec output>");
    } catch (const Error& e) {
        raise(Errc::codec_protocol_violation,
              "codec output is not a decodable image (" + e.message() + ")");
    }
    if (reconstructed.width() != img.width() || reconstructed.height() != img.height()) {
        raise(Errc::codec_protocol_violation,
              "codec changed dimensions from " + std::to_string(img.width()) + "x" +
                  std::to_string(img.height()) + " to " + std::to_string(reconstructed.width()) +
                  "x" + std::to_string(reconstructed.height()));
    }
    return reconstructed;
}

Image gaussian_blur(const Image& img, int kernel) {
    return separable_filter(img, gaussian_kernel_taps(kernel));
}

Image average_filter(const Image& img, int kernel) {
    check_kernel(kernel);
    std::vector<double> taps(kernel, 1.0 / kernel);
    return separable_filter(img, taps);
}

Image median_filter(const Image& img, int kernel) {
    check_kernel(kernel);
    const int w = img.width();
    const int h = img.height();
    const int r = kernel / 2;
    Image out(w, h);
    std::vector<std::uint8_t> window(static_cast<std::size_t>(kernel) * kernel);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                std::size_t n = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        int xx = std::clamp(x + dx, 0, w - 1);
                        window[n++] = img.at(xx, yy, c);
                    }
                }
                auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
                std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
                out.set(x, y, c, *mid);
            }
        }
    }
    return out;
}

Image awgn(const Image& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) raise(Errc::invalid_parameter, "noise sigma must be >= 0");
    if (sigma == 0.0) return img;
    Image out(img.width(), img.height());
    const std::uint8_t* src = img.data();
    std::uint8_t* dst = out.data();
    for (std::size_t i = 0; i < img.sample_count(); ++i) {
        dst[i] = quantize_sample(src[i] + sigma * rng::normal_at(seed, i));
    }
    return out;
}

Image poisson_gaussian_noise(const Image& img, double a, double b, std::uint64_t seed) {
    if (a < 0.0 || b < 0.0) {
        raise(Errc::invalid_parameter, "noise model coefficients must be >= 0");
    }
    if (a == 0.0 && b == 0.0) return img;
    Image out(img.width(), img.height());
    const std::uint8_t* src = img.data();
    std::uint8_t* dst = out.data();
    for (std::size_t i = 0; i < img.sample_count(); ++i) {
        double y = src[i] / 255.0;
        double stddev = std::sqrt(a * y + b);
        double z = y + stddev * rng::normal_at(seed, i);
        dst[i] = quantize_sample(255.0 * z);
    }
    return out;
}

Image linear_adjust(const Image& img, double alpha, double beta) {
    if (alpha <= 0.0) raise(Errc::invalid_alpha, "alpha must be > 0");
    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v) lut[v] = quantize_sample(alpha * v + beta);
    return map_lut(img, lut);
}

Image contrast_about_mean(const Image& img, double alpha) {
    if (alpha <= 0.0) raise(Errc::invalid_alpha, "alpha must be > 0");
    PixelStats stats = compute_stats(img);
    Image out(img.width(), img.height());
    const std::uint8_t* src = img.data();
    std::uint8_t* dst = out.data();
    std::array<std::array<std::uint8_t, 256>, 3> lut;
    for (int c = 0; c < 3; ++c) {
        for (int v = 0; v < 256; ++v) {
            lut[c][v] = quantize_sample(stats.mean[c] + alpha * (v - stats.mean[c]));
        }
    }
    for (std::size_t i = 0; i < img.sample_count(); ++i) {
        dst[i] = lut[i % 3][src[i]];
    }
    return out;
}

Image gamma_correct(const Image& img, double gamma) {
    if (gamma <= 0.0) raise(Errc::invalid_gamma, "gamma must be > 0");
    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v) {
        lut[v] = quantize_sample(255.0 * std::pow(v / 255.0, gamma));
    }
    return map_lut(img, lut);
}

Image downscale(const Image& img, int factor) {
    if (factor < 2) raise(Errc::invalid_parameter, "downscale factor must be an integer >= 2");
    if (img.width() < factor || img.height() < factor) {
        raise(Errc::factor_too_large,
              "factor " + std::to_string(factor) + " exceeds image dimensions " +
                  std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    const int w = img.width();
    const int h = img.height();
    const int dw = w / factor;
    const int dh = h / factor;
    std::vector<double> src = to_double(img);
    std::vector<double> small = bilinear_resize(src, w, h, dw, dh);
    std::vector<double> restored = bilinear_resize(small, dw, dh, w, h);
    return from_double(restored, w, h);
}

// ---------------------------------------------------------------------------
// Operation records
// ---------------------------------------------------------------------------

namespace {
struct KindName {
    OpKind kind;
    std::string_view name;
};
constexpr KindName kKindNames[] = {
    {OpKind::jpeg, "jpeg"},
    {OpKind::external_codec, "dlcomp"},
    {OpKind::gaussian_blur, "gblur"},
    {OpKind::median_filter, "median"},
    {OpKind::average_filter, "average"},
    {OpKind::gaussian_noise, "gnoise"},
    {OpKind::poisson_gaussian_noise, "pgnoise"},
    {OpKind::linear_adjust, "linear"},
    {OpKind::gamma_correct, "gamma"},
    {OpKind::downscale, "lowres"},
    {OpKind::compose, "compose"},
};
}  // namespace

std::string_view op_kind_name(OpKind kind) {
    for (const auto& entry : kKindNames) {
        if (entry.kind == kind) return entry.name;
    }
    return "unknown";
}

std::optional<OpKind> op_kind_from_name(std::string_view name) {
    for (const auto& entry : kKindNames) {
        if (entry.name == name) return entry.kind;
    }
    return std::nullopt;
}

bool op_is_stochastic(OpKind kind) {
    return kind == OpKind::gaussian_noise || kind == OpKind::poisson_gaussian_noise;
}

void validate(const DegradationOp& op) {
    switch (op.kind) {
        case OpKind::jpeg: {
            if (!std::holds_alternative<JpegParams>(op.params)) {
                raise(Errc::invalid_parameter, "jpeg op carries wrong parameter record");
            }
            int q = std::get<JpegParams>(op.params).quality;
            if (q < 1 || q > 100) {
                raise(Errc::invalid_quality, "JPEG quality must be in [1,100], got " + std::to_string(q));
            }
            break;
        }
        case OpKind::external_codec: {
            if (!std::holds_alternative<ExternalCodecParams>(op.params)) {
                raise(Errc::invalid_parameter, "dlcomp op carries wrong parameter record");
            }
            break;
        }
        case OpKind::gaussian_blur:
        case OpKind::median_filter:
        case OpKind::average_filter: {
            if (!std::holds_alternative<KernelParams>(op.params)) {
                raise(Errc::invalid_parameter, "filter op carries wrong parameter record");
            }
            check_kernel(std::get<KernelParams>(op.params).kernel);
            break;
        }
        case OpKind::gaussian_noise: {
            if (!std::holds_alternative<NoiseParams>(op.params)) {
                raise(Errc::invalid_parameter, "gnoise op carries wrong parameter record");
            }
            if (std::get<NoiseParams>(op.params).sigma < 0.0) {
                raise(Errc::invalid_parameter, "noise sigma must be >= 0");
            }
            if (!op.seed) raise(Errc::invalid_parameter, "stochastic op requires a seed");
            break;
        }
        case OpKind::poisson_gaussian_noise: {
            if (!std::holds_alternative<PoissonGaussianParams>(op.params)) {
                raise(Errc::invalid_parameter, "pgnoise op carries wrong parameter record");
            }
            auto p = std::get<PoissonGaussianParams>(op.params);
            if (p.a < 0.0 || p.b < 0.0) {
                raise(Errc::invalid_parameter, "noise model coefficients must be >= 0");
            }
            if (!op.seed) raise(Errc::invalid_parameter, "stochastic op requires a seed");
            break;
        }
        case OpKind::linear_adjust: {
            if (!std::holds_alternative<LinearParams>(op.params)) {
                raise(Errc::invalid_parameter, "linear op carries wrong parameter record");
            }
            if (std::get<LinearParams>(op.params).alpha <= 0.0) {
                raise(Errc::invalid_alpha, "alpha must be > 0");
            }
            break;
        }
        case OpKind::gamma_correct: {
            if (!std::holds_alternative<GammaParams>(op.params)) {
                raise(Errc::invalid_parameter, "gamma op carries wrong parameter record");
            }
            if (std::get<GammaParams>(op.params).gamma <= 0.0) {
                raise(Errc::invalid_gamma, "gamma must be > 0");
            }
            break;
        }
        case OpKind::downscale: {
            if (!std::holds_alternative<DownscaleParams>(op.params)) {
                raise(Errc::invalid_parameter, "lowres op carries wrong parameter record");
            }
            if (std::get<DownscaleParams>(op.params).factor < 2) {
                raise(Errc::invalid_parameter, "downscale factor must be an integer >= 2");
            }
            break;
        }
        case OpKind::compose: {
            if (op.steps.empty()) {
                raise(Errc::invalid_parameter, "compose requires a non-empty step list");
            }
            for (const auto& step : op.steps) {
                if (step.kind == OpKind::compose) {
                    raise(Errc::invalid_parameter, "compose steps must not nest compose");
                }
                validate(step);
            }
            break;
        }
    }
}

Image apply(const DegradationOp& op, const Image& img) {
    validate(op);
    switch (op.kind) {
        case OpKind::jpeg:
            return jpeg_transcode(img, std::get<JpegParams>(op.params).quality);
        case OpKind::external_codec: {
            const auto& p = std::get<ExternalCodecParams>(op.params);
            return external_codec_transcode(img, p.command, p.level);
        }
        case OpKind::gaussian_blur:
            return gaussian_blur(img, std::get<KernelParams>(op.params).kernel);
        case OpKind::median_filter:
            return median_filter(img, std::get<KernelParams>(op.params).kernel);
        case OpKind::average_filter:
            return average_filter(img, std::get<KernelParams>(op.params).kernel);
        case OpKind::gaussian_noise:
            return awgn(img, std::get<NoiseParams>(op.params).sigma, *op.seed);
        case OpKind::poisson_gaussian_noise: {
            const auto& p = std::get<PoissonGaussianParams>(op.params);
            return poisson_gaussian_noise(img, p.a, p.b, *op.seed);
        }
        case OpKind::linear_adjust: {
            const auto& p = std::get<LinearParams>(op.params);
            if (p.anchor == LinearParams::Anchor::channel_mean) {
                return contrast_about_mean(img, p.alpha);
            }
            return linear_adjust(img, p.alpha, p.beta);
        }
        case OpKind::gamma_correct:
            return gamma_correct(img, std::get<GammaParams>(op.params).gamma);
        case OpKind::downscale:
            return downscale(img, std::get<DownscaleParams>(op.params).factor);
        case OpKind::compose:
            return compose(img, op.steps);
    }
    raise(Errc::invalid_parameter, "unhandled op kind");
}

Image compose(const Image& img, std::span<const DegradationOp> steps) {
    if (steps.empty()) {
        raise(Errc::invalid_parameter, "compose requires a non-empty step list");
    }
    Image current = img;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        try {
            current = apply(steps[i], current);
        } catch (const Error& e) {
            raise(e.code(), "step " + std::to_string(i) + " (" +
                                std::string(op_kind_name(steps[i].kind)) + "): " + e.message());
        }
    }
    return current;
}

namespace {

json step_to_json(const DegradationOp& op);

json params_json(const DegradationOp& op) {
    json j = json::object();
    switch (op.kind) {
        case OpKind::jpeg:
            j["quality"] = std::get<JpegParams>(op.params).quality;
            break;
        case OpKind::external_codec:
            j["level"] = std::get<ExternalCodecParams>(op.params).level;
            break;
        case OpKind::gaussian_blur:
        case OpKind::median_filter:
        case OpKind::average_filter:
            j["kernel"] = std::get<KernelParams>(op.params).kernel;
            break;
        case OpKind::gaussian_noise:
            j["sigma"] = std::get<NoiseParams>(op.params).sigma;
            break;
        case OpKind::poisson_gaussian_noise:
            j["a"] = std::get<PoissonGaussianParams>(op.params).a;
            j["b"] = std::get<PoissonGaussianParams>(op.params).b;
            break;
        case OpKind::linear_adjust: {
            const auto& p = std::get<LinearParams>(op.params);
            j["alpha"] = p.alpha;
            if (p.anchor == LinearParams::Anchor::channel_mean) {
                j["anchor"] = "channel_mean";
            } else {
                j["beta"] = p.beta;
            }
            break;
        }
        case OpKind::gamma_correct:
            j["gamma"] = std::get<GammaParams>(op.params).gamma;
            break;
        case OpKind::downscale:
            j["factor"] = std::get<DownscaleParams>(op.params).factor;
            break;
        case OpKind::compose: {
            json steps = json::array();
            for (const auto& step : op.steps) steps.push_back(step_to_json(step));
            j["steps"] = std::move(steps);
            break;
        }
    }
    if (op.seed && op.kind != OpKind::compose) j["seed"] = *op.seed;
    return j;
}

json step_to_json(const DegradationOp& op) {
    json j = params_json(op);
    j["op"] = std::string(op_kind_name(op.kind));
    return j;
}

DegradationOp op_from_json_object(OpKind kind, const json& j) {
    DegradationOp op;
    op.kind = kind;
    switch (kind) {
        case OpKind::jpeg:
            op.params = JpegParams{j.at("quality").get<int>()};
            break;
        case OpKind::external_codec:
            op.params = ExternalCodecParams{j.value("command", std::string{}),
                                            j.at("level").get<std::string>()};
            break;
        case OpKind::gaussian_blur:
        case OpKind::median_filter:
        case OpKind::average_filter:
            op.params = KernelParams{j.at("kernel").get<int>()};
            break;
        case OpKind::gaussian_noise:
            op.params = NoiseParams{j.at("sigma").get<double>()};
            break;
        case OpKind::poisson_gaussian_noise:
            op.params = PoissonGaussianParams{j.at("a").get<double>(), j.at("b").get<double>()};
            break;
        case OpKind::linear_adjust: {
            LinearParams p;
            p.alpha = j.at("alpha").get<double>();
            if (j.value("anchor", std::string("absolute")) == "channel_mean") {
                p.anchor = LinearParams::Anchor::channel_mean;
            } else {
                p.beta = j.value("beta", 0.0);
            }
            op.params = p;
            break;
        }
        case OpKind::gamma_correct:
            op.params = GammaParams{j.at("gamma").get<double>()};
            break;
        case OpKind::downscale:
            op.params = DownscaleParams{j.at("factor").get<int>()};
            break;
        case OpKind::compose: {
            op.params = ComposeParams{};
            for (const auto& step : j.at("steps")) {
                auto name = step.at("op").get<std::string>();
                auto step_kind = op_kind_from_name(name);
                if (!step_kind) raise(Errc::unknown_operation, name);
                op.steps.push_back(op_from_json_object(*step_kind, step));
            }
            break;
        }
    }
    if (j.contains("seed")) op.seed = j.at("seed").get<std::uint64_t>();
    return op;
}

}  // namespace

std::string params_to_json(const DegradationOp& op) {
    return params_json(op).dump();
}

DegradationOp op_from_json(OpKind kind, const std::string& params_text) {
    json j;
    try {
        j = json::parse(params_text);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("bad op parameter JSON: ") + e.what());
    }
    try {
        return op_from_json_object(kind, j);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, std::string("bad op parameter record: ") + e.what());
    }
}

}  // namespace degrade::ops
