#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "degrade/image.hpp"

namespace degrade::ops {

// ---------------------------------------------------------------------------
// Plain transforms. All are pure: same inputs (seed included) give
// bit-identical output.
// ---------------------------------------------------------------------------

/// Baseline JPEG round-trip (4:2:0 chroma subsampling) at the given quality
/// factor. Dimensions are unchanged; only the compression loss remains.
Image jpeg_transcode(const Image& img, int quality);

/// Pipes the image as PNG bytes through an external codec command and decodes
/// the reconstructed PNG from its output stream. `level` replaces every
/// "{level}" token in the command and is exported as DEGRADE_CODEC_LEVEL.
Image external_codec_transcode(const Image& img, const std::string& codec_command,
                               const std::string& level);

Image gaussian_blur(const Image& img, int kernel);
Image median_filter(const Image& img, int kernel);
Image average_filter(const Image& img, int kernel);

/// Adds N(0, sigma^2) per sample, drawn from the counter stream keyed by
/// (seed, sample index).
Image awgn(const Image& img, double sigma, std::uint64_t seed);

/// Signal-dependent noise on intensities normalized to [0,1]:
/// z = y + N(0, a*y + b), written back as clamp(round(255*z)).
Image poisson_gaussian_noise(const Image& img, double a, double b, std::uint64_t seed);

Image linear_adjust(const Image& img, double alpha, double beta);

/// Linear scaling about each channel's mean: out = mean + alpha*(in - mean).
Image contrast_about_mean(const Image& img, double alpha);

Image gamma_correct(const Image& img, double gamma);

/// Bilinear downscale by an integer factor, then bilinear restore to the
/// original dimensions, so resolution loss is the only change.
Image downscale(const Image& img, int factor);

/// Conversion sigma for a given odd kernel size.
double gaussian_sigma_for_kernel(int kernel);

/// Normalized 1-D taps used by gaussian_blur (length == kernel).
std::vector<double> gaussian_kernel_taps(int kernel);

// ---------------------------------------------------------------------------
// Parameterized operation records.
// ---------------------------------------------------------------------------

enum class OpKind {
    jpeg,
    external_codec,
    gaussian_blur,
    median_filter,
    average_filter,
    gaussian_noise,
    poisson_gaussian_noise,
    linear_adjust,
    gamma_correct,
    downscale,
    compose,
};

std::string_view op_kind_name(OpKind kind);
std::optional<OpKind> op_kind_from_name(std::string_view name);
bool op_is_stochastic(OpKind kind);

struct JpegParams {
    int quality = 95;
    bool operator==(const JpegParams&) const = default;
};
struct ExternalCodecParams {
    std::string command;
    std::string level;
    bool operator==(const ExternalCodecParams&) const = default;
};
struct KernelParams {
    int kernel = 3;
    bool operator==(const KernelParams&) const = default;
};
struct NoiseParams {
    double sigma = 0.0;
    bool operator==(const NoiseParams&) const = default;
};
struct PoissonGaussianParams {
    double a = 0.01;
    double b = 0.0002;
    bool operator==(const PoissonGaussianParams&) const = default;
};
struct LinearParams {
    enum class Anchor { absolute, channel_mean };
    double alpha = 1.0;
    double beta = 0.0;
    Anchor anchor = Anchor::absolute;
    bool operator==(const LinearParams&) const = default;
};
struct GammaParams {
    double gamma = 1.0;
    bool operator==(const GammaParams&) const = default;
};
struct DownscaleParams {
    int factor = 2;
    bool operator==(const DownscaleParams&) const = default;
};
struct ComposeParams {
    bool operator==(const ComposeParams&) const = default;
};

using OpParams = std::variant<JpegParams, ExternalCodecParams, KernelParams, NoiseParams,
                              PoissonGaussianParams, LinearParams, GammaParams, DownscaleParams,
                              ComposeParams>;

/// A named operation plus concrete parameters; the unit the plan registry,
/// corpus generator and augmentation chain all hand around.
struct DegradationOp {
    OpKind kind = OpKind::gamma_correct;
    OpParams params = GammaParams{};
    std::optional<std::uint64_t> seed;  // required iff the op is stochastic
    std::vector<DegradationOp> steps;   // compose only: ordered, non-empty, non-compose members

    bool operator==(const DegradationOp&) const = default;
};

/// Throws the matching typed error if parameters violate the operation's
/// invariants (even kernel, gamma <= 0, nested compose, missing seed, ...).
void validate(const DegradationOp& op);

/// Applies one operation record. Stochastic ops read their seed slot.
Image apply(const DegradationOp& op, const Image& img);

/// Left-to-right application of `steps`; equals manual chaining. Errors from
/// a member are rethrown with the step index attached.
Image compose(const Image& img, std::span<const DegradationOp> steps);

/// Compact JSON for manifests and draw logs, e.g. {"quality":60}.
std::string params_to_json(const DegradationOp& op);
DegradationOp op_from_json(OpKind kind, const std::string& params_json);

}  // namespace degrade::ops
