#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "degrade/error.hpp"

namespace degrade {

/// 8-bit RGB raster, interleaved row-major. Immutable by convention once
/// built: all transforms return fresh images, so values can be shared freely
/// across workers.
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;

    Image(int width, int height)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(check_dims(width, height)) * kChannels, 0) {}

    Image(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width_) * height_ * kChannels) {
            raise(Errc::invalid_parameter, "pixel buffer size does not match dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * height_;
    }
    std::size_t sample_count() const noexcept { return data_.size(); }

    std::uint8_t at(int x, int y, int c) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
    }
    void set(int x, int y, int c, std::uint8_t v) {
        data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c] = v;
    }

    std::uint8_t* data() noexcept { return data_.data(); }
    const std::uint8_t* data() const noexcept { return data_.data(); }
    std::span<const std::uint8_t> samples() const noexcept { return data_; }

    bool operator==(const Image& other) const = default;

private:
    static std::size_t check_dims(int width, int height) {
        if (width < 1 || height < 1) {
            raise(Errc::invalid_parameter, "image dimensions must be at least 1x1");
        }
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Rounds half away from zero and clamps into the 8-bit sample range. Every
/// operation quantizes through this single rule on final write-back.
inline std::uint8_t quantize_sample(double v) {
    double r = (v >= 0.0) ? std::floor(v + 0.5) : std::ceil(v - 0.5);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

struct PixelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> variance{};
    std::optional<double> mse_vs_reference;
};

PixelStats compute_stats(const Image& img, const Image* reference = nullptr);

/// Mean squared channel difference over all samples. Zero iff bit-identical.
double mse(const Image& a, const Image& b);

struct ImageFormat {
    enum class Kind { png, jpeg };
    Kind kind = Kind::png;
    int jpeg_quality = 95;

    static ImageFormat png() { return {Kind::png, 0}; }
    static ImageFormat jpeg(int quality) { return {Kind::jpeg, quality}; }
};

Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format);

// In-memory codec entry points, shared by the transforms and the subprocess
// plug points.
std::vector<std::uint8_t> encode_png(const Image& img);
std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality);
Image decode_image(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

}  // namespace degrade
