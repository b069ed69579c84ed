#include "degrade/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

namespace degrade {

namespace {

// ---------------------------------------------------------------------------
// PNG, in-memory
// ---------------------------------------------------------------------------

struct PngReadState {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t count) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->offset + count > st->size) {
        png_error(png, "unexpected end of stream");
    }
    std::memcpy(out, st->data + st->offset, count);
    st->offset += count;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_mem_flush(png_structp) {}

Image decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(Errc::io_error, "png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(Errc::io_error, "png info allocation failed");
    }

    PngReadState state{bytes.data(), bytes.size(), 0};
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(Errc::corrupt_stream, "failed to decode PNG from " + origin);
    }

    png_set_read_fn(png, &state, png_mem_read);
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    // Normalize everything to 8-bit RGB or RGBA.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 3 && channels != 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(Errc::unsupported_format,
              "PNG channel layout not supported in " + origin);
    }

    raw.resize(static_cast<std::size_t>(width) * height * channels);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = raw.data() + static_cast<std::size_t>(y) * width * channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(width), static_cast<int>(height));
    if (channels == 3) {
        std::memcpy(img.data(), raw.data(), raw.size());
    } else {
        // Composite over black: scale color by alpha.
        const std::uint8_t* src = raw.data();
        std::uint8_t* dst = img.data();
        for (std::size_t p = 0; p < img.pixel_count(); ++p) {
            double a = src[4 * p + 3] / 255.0;
            for (int c = 0; c < 3; ++c) {
                dst[3 * p + c] = quantize_sample(src[4 * p + c] * a);
            }
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// JPEG, in-memory
// ---------------------------------------------------------------------------

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf unwind;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_on_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->unwind, 1);
}

// Corrupt-data warnings (truncated stream, bad markers) fail the decode
// instead of yielding silently patched pixels.
void jpeg_on_message(j_common_ptr cinfo, int msg_level) {
    if (msg_level < 0) jpeg_on_error(cinfo);
}

Image decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_on_error;
    err.pub.emit_message = jpeg_on_message;

    std::vector<std::uint8_t> raw;

    if (setjmp(err.unwind)) {
        std::string message = err.message;
        jpeg_destroy_decompress(&cinfo);
        raise(Errc::corrupt_stream, "failed to decode JPEG from " + origin + " (" + message + ")");
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);

    if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
        jpeg_destroy_decompress(&cinfo);
        raise(Errc::unsupported_format, "CMYK JPEG not supported in " + origin);
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    raw.resize(stride * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = raw.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return Image(width, height, std::move(raw));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(Errc::io_error, "png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(Errc::io_error, "png info allocation failed");
    }

    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(img.height());

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(Errc::io_error, "failed to encode PNG");
    }

    png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::uint8_t* data = img.data();
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * img.width() * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
    if (quality < 1 || quality > 100) {
        raise(Errc::invalid_quality, "JPEG quality must be in [1,100], got " + std::to_string(quality));
    }

    jpeg_compress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_on_error;

    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;

    if (setjmp(err.unwind)) {
        std::string message = err.message;
        jpeg_destroy_compress(&cinfo);
        if (buffer) std::free(buffer);
        raise(Errc::io_error, std::string("failed to encode JPEG (") + message + ")");
    }

    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);

    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);  // baseline sequential, 4:2:0 sampling for YCbCr
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);

    const std::uint8_t* data = img.data();
    const std::size_t stride = static_cast<std::size_t>(img.width()) * 3;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(data + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    std::vector<std::uint8_t> out(buffer, buffer + buffer_size);
    std::free(buffer);
    return out;
}

Image decode_image(std::span<const std::uint8_t> bytes, const std::string& origin) {
    static const std::uint8_t png_magic[4] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), png_magic, 4) == 0) {
        return decode_png(bytes, origin);
    }
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
        return decode_jpeg(bytes, origin);
    }
    raise(Errc::unsupported_format, "not a PNG or JPEG stream: " + origin);
}

Image load_image(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        raise(Errc::file_not_found, path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) raise(Errc::io_error, "read failed for " + path.string());
    return decode_image(bytes, path.string());
}

void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format) {
    std::vector<std::uint8_t> bytes;
    if (format.kind == ImageFormat::Kind::png) {
        bytes = encode_png(img);
    } else {
        bytes = encode_jpeg(img, format.jpeg_quality);
    }

    auto parent = path.parent_path();
    std::error_code ec;
    if (!parent.empty() && !std::filesystem::exists(parent, ec)) {
        raise(Errc::io_error, "parent directory does not exist: " + parent.string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(Errc::io_error, "write failed for " + path.string());
}

double mse(const Image& a, const Image& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        raise(Errc::dimension_mismatch, "mse requires equal dimensions");
    }
    const std::uint8_t* pa = a.data();
    const std::uint8_t* pb = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.sample_count(); ++i) {
        double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.sample_count());
}

PixelStats compute_stats(const Image& img, const Image* reference) {
    PixelStats stats;
    const std::size_t n = img.pixel_count();
    const std::uint8_t* data = img.data();
    for (std::size_t p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) stats.mean[c] += data[3 * p + c];
    }
    for (int c = 0; c < 3; ++c) stats.mean[c] /= static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) {
            double d = data[3 * p + c] - stats.mean[c];
            stats.variance[c] += d * d;
        }
    }
    for (int c = 0; c < 3; ++c) stats.variance[c] /= static_cast<double>(n);
    if (reference) stats.mse_vs_reference = mse(img, *reference);
    return stats;
}

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::file_not_found: return "FileNotFound";
        case Errc::unsupported_format: return "UnsupportedFormat";
        case Errc::corrupt_stream: return "CorruptStream";
        case Errc::io_error: return "IoError";
        case Errc::invalid_quality: return "InvalidQuality";
        case Errc::invalid_kernel: return "InvalidKernel";
        case Errc::invalid_gamma: return "InvalidGamma";
        case Errc::invalid_alpha: return "InvalidAlpha";
        case Errc::invalid_parameter: return "InvalidParameter";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::factor_too_large: return "FactorTooLarge";
        case Errc::schema_error: return "SchemaError";
        case Errc::unknown_operation: return "UnknownOperation";
        case Errc::codec_spawn_failure: return "CodecSpawnFailure";
        case Errc::codec_protocol_violation: return "CodecProtocolViolation";
        case Errc::codec_nonzero_exit: return "CodecNonzeroExit";
        case Errc::detector_timeout: return "DetectorTimeout";
        case Errc::protocol_violation: return "ProtocolViolation";
        case Errc::missing_score: return "MissingScore";
        case Errc::degenerate_class_balance: return "DegenerateClassBalance";
        case Errc::empty_input: return "EmptyInput";
    }
    return "Error";
}

}  // namespace degrade
