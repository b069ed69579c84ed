#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <sys/stat.h>

#include "degrade/image.hpp"
#include "degrade/metrics.hpp"
#include "degrade/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;
using degrade::Image;

inline Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.set(x, y, 0, r);
            img.set(x, y, 1, g);
            img.set(x, y, 2, b);
        }
    }
    return img;
}

/// Single white pixel centered in a black field.
inline Image impulse(int size) {
    Image img(size, size);
    int c = size / 2;
    for (int ch = 0; ch < 3; ++ch) img.set(c, c, ch, 255);
    return img;
}

inline Image checkerboard(int size) {
    Image img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            std::uint8_t v = ((x + y) % 2 == 0) ? 255 : 0;
            for (int ch = 0; ch < 3; ++ch) img.set(x, y, ch, v);
        }
    }
    return img;
}

/// Horizontal ramp covering every 8-bit value, `rows` tall.
inline Image ramp(int rows) {
    Image img(256, rows);
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < 256; ++x) {
            for (int ch = 0; ch < 3; ++ch) img.set(x, y, ch, static_cast<std::uint8_t>(x));
        }
    }
    return img;
}

/// Deterministic pseudo-random image (counter-based, so identical everywhere).
inline Image random_image(int w, int h, std::uint64_t key) {
    Image img(w, h);
    std::uint8_t* data = img.data();
    for (std::size_t i = 0; i < img.sample_count(); ++i) {
        data[i] = static_cast<std::uint8_t>(degrade::rng::bits_at(key, i) & 0xFF);
    }
    return img;
}

inline fs::path test_data_dir() {
    return fs::path(DEGRADE_TEST_DATA_DIR);
}

inline Image load_test_photo() {
    return degrade::load_image(test_data_dir() / "photo.png");
}

/// Self-cleaning temp directory under the system temp root.
class TempDir {
public:
    TempDir() {
        auto base = fs::temp_directory_path() / "degrade_test_XXXXXX";
        std::string templ = base.string();
        if (!mkdtemp(templ.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = templ;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline fs::path write_script(const fs::path& dir, const std::string& name,
                             const std::string& body) {
    fs::path path = dir / name;
    {
        std::ofstream out(path);
        out << "#!/bin/sh\n" << body;
    }
    ::chmod(path.c_str(), 0755);
    return path;
}

inline std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// O(pos * neg) pairwise estimator; the independent oracle the fast AUC is
/// checked against.
inline double brute_force_auc(const std::vector<degrade::metrics::PredictionRecord>& records) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (const auto& r : records) {
        (r.label == degrade::Label::fake ? pos : neg).push_back(r.score);
    }
    double wins = 0.0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) {
                wins += 1.0;
            } else if (p == n) {
                wins += 0.5;
            }
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Reference k x k median with replicate padding, evaluated window by window.
inline Image brute_force_median(const Image& img, int kernel) {
    const int r = kernel / 2;
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                std::vector<std::uint8_t> window;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        int xx = std::clamp(x + dx, 0, img.width() - 1);
                        int yy = std::clamp(y + dy, 0, img.height() - 1);
                        window.push_back(img.at(xx, yy, c));
                    }
                }
                std::sort(window.begin(), window.end());
                out.set(x, y, c, window[window.size() / 2]);
            }
        }
    }
    return out;
}

/// Mean and standard deviation of signed sample deltas between two images.
struct DeltaStats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline DeltaStats delta_stats(const Image& before, const Image& after) {
    DeltaStats stats;
    const std::uint8_t* a = before.data();
    const std::uint8_t* b = after.data();
    const std::size_t n = before.sample_count();
    for (std::size_t i = 0; i < n; ++i) {
        stats.mean += static_cast<double>(b[i]) - static_cast<double>(a[i]);
    }
    stats.mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = (static_cast<double>(b[i]) - static_cast<double>(a[i])) - stats.mean;
        stats.stddev += d * d;
    }
    stats.stddev = std::sqrt(stats.stddev / static_cast<double>(n));
    return stats;
}

}  // namespace testutil
