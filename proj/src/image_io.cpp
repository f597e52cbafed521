#include "fclm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace fclm::io {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw ImageIoError("cannot open " + path.string());
    }
    return f;
}

enum class Target { gray, rgb };

// Everything libpng touches lives here so that a longjmp out of libpng skips
// no destructors.
struct RawImage {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* raw = static_cast<RawImage*>(png_get_error_ptr(png));
    std::snprintf(raw->message, sizeof(raw->message), "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

bool decode(std::FILE* file, Target target, RawImage& raw) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &raw, on_png_error,
                                             on_png_warning);
    if (png == nullptr) {
        std::snprintf(raw.message, sizeof(raw.message), "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, file);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    png_set_expand(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    if (target == Target::gray) {
        if (color_type & PNG_COLOR_MASK_COLOR) {
            png_set_rgb_to_gray(png, 1, -1.0, -1.0);
        }
    } else {
        png_set_strip_16(png);
        if (!(color_type & PNG_COLOR_MASK_COLOR)) {
            png_set_gray_to_rgb(png);
        }
    }
    png_read_update_info(png, info);

    raw.width = png_get_image_width(png, info);
    raw.height = png_get_image_height(png, info);
    raw.channels = png_get_channels(png, info);
    raw.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.bytes.resize(stride * raw.height);
    raw.rows.resize(raw.height);
    for (png_uint_32 y = 0; y < raw.height; ++y) {
        raw.rows[y] = raw.bytes.data() + y * stride;
    }
    png_read_image(png, raw.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

RawImage load(const std::filesystem::path& path, Target target) {
    auto file = open_file(path, "rb");
    png_byte signature[8] = {};
    if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw ImageIoError(path.string() + ": not a PNG file");
    }
    std::rewind(file.get());
    RawImage raw;
    if (!decode(file.get(), target, raw)) {
        throw ImageIoError(path.string() + ": " + raw.message);
    }
    return raw;
}

struct EncodeJob {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int color_type = PNG_COLOR_TYPE_GRAY;
    int bit_depth = 8;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    char message[256] = {};
};

void on_write_error(png_structp png, png_const_charp msg) {
    auto* job = static_cast<EncodeJob*>(png_get_error_ptr(png));
    std::snprintf(job->message, sizeof(job->message), "%s", msg);
    png_longjmp(png, 1);
}

bool encode(std::FILE* file, EncodeJob& job) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &job, on_write_error,
                                              on_png_warning);
    if (png == nullptr) {
        std::snprintf(job.message, sizeof(job.message), "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, job.width, job.height, job.bit_depth, job.color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, job.rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

void save(const std::filesystem::path& path, EncodeJob& job) {
    if (job.width == 0 || job.height == 0) {
        throw ImageIoError(path.string() + ": cannot write an empty image");
    }
    const std::size_t stride = job.bytes.size() / job.height;
    job.rows.resize(job.height);
    for (png_uint_32 y = 0; y < job.height; ++y) {
        job.rows[y] = job.bytes.data() + y * stride;
    }
    auto file = open_file(path, "wb");
    if (!encode(file.get(), job)) {
        throw ImageIoError(path.string() + ": " + job.message);
    }
}

}  // namespace

AlphaMatte read_gray(const std::filesystem::path& path) {
    const RawImage raw = load(path, Target::gray);
    AlphaMatte out(raw.width, raw.height);
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    if (raw.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = (unsigned{raw.bytes[2 * i]} << 8) | raw.bytes[2 * i + 1];
            out[i] = v / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = raw.bytes[i] / 255.0;
        }
    }
    return out;
}

BinaryMask read_mask(const std::filesystem::path& path) {
    return binarize(read_gray(path));
}

DepthMap read_depth(const std::filesystem::path& path) {
    const AlphaMatte g = read_gray(path);
    return DepthMap(g.width(), g.height(), std::vector<double>(g.values().begin(), g.values().end()));
}

RgbImage read_rgb(const std::filesystem::path& path) {
    RawImage raw = load(path, Target::rgb);
    if (raw.channels != 3 || raw.bit_depth != 8) {
        throw ImageIoError(path.string() + ": unsupported pixel layout");
    }
    return RgbImage(raw.width, raw.height, std::vector<std::uint8_t>(raw.bytes.begin(), raw.bytes.end()));
}

void write_gray8(const std::filesystem::path& path, const AlphaMatte& image) {
    EncodeJob job;
    job.width = static_cast<png_uint_32>(image.width());
    job.height = static_cast<png_uint_32>(image.height());
    job.bytes.resize(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        job.bytes[i] = static_cast<png_byte>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
    }
    save(path, job);
}

void write_gray16(const std::filesystem::path& path, const AlphaMatte& image) {
    EncodeJob job;
    job.width = static_cast<png_uint_32>(image.width());
    job.height = static_cast<png_uint_32>(image.height());
    job.bit_depth = 16;
    job.bytes.resize(image.size() * 2);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const long v = std::lround(std::clamp(image[i], 0.0, 1.0) * 65535.0);
        job.bytes[2 * i] = static_cast<png_byte>(v >> 8);
        job.bytes[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    }
    save(path, job);
}

void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
    EncodeJob job;
    job.width = static_cast<png_uint_32>(image.width());
    job.height = static_cast<png_uint_32>(image.height());
    job.color_type = PNG_COLOR_TYPE_RGB;
    job.bytes.assign(image.data().begin(), image.data().end());
    save(path, job);
}

}  // namespace fclm::io
