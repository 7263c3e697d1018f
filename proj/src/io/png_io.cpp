#include "hough6d/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <vector>

#include "hough6d/core/errors.hpp"

namespace hough6d {

namespace {

struct PngWriter {
    FILE* file = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::string tmpPath;
    std::string finalPath;

    PngWriter(const std::string& path, int width, int height, int bitDepth, int colorType)
        : tmpPath(path + ".tmp"), finalPath(path) {
        file = std::fopen(tmpPath.c_str(), "wb");
        if (!file) throw IoFailure("cannot open for write: " + tmpPath);
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (!png || !info || setjmp(png_jmpbuf(png))) {
            cleanup();
            throw IoFailure("png write setup failed: " + finalPath);
        }
        png_init_io(png, file);
        png_set_IHDR(png, info, width, height, bitDepth, colorType, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        if (bitDepth == 16) png_set_swap(png);  // stored big-endian
    }

    void finish(std::vector<png_bytep>& rows) {
        if (setjmp(png_jmpbuf(png))) {
            cleanup();
            throw IoFailure("png write failed: " + finalPath);
        }
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
        png = nullptr;
        std::fclose(file);
        file = nullptr;
        std::error_code ec;
        std::filesystem::rename(tmpPath, finalPath, ec);
        if (ec) throw IoFailure("rename failed: " + finalPath);
    }

    ~PngWriter() { cleanup(); }

    void cleanup() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        png = nullptr;
        info = nullptr;
        if (file) {
            std::fclose(file);
            file = nullptr;
            std::error_code ec;
            std::filesystem::remove(tmpPath, ec);
        }
    }
};

struct PngReader {
    FILE* file = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    explicit PngReader(const std::string& path) {
        file = std::fopen(path.c_str(), "rb");
        if (!file) throw IoFailure("cannot open: " + path);
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (!png || !info || setjmp(png_jmpbuf(png))) {
            cleanup();
            throw IoFailure("png read setup failed: " + path);
        }
        png_init_io(png, file);
        png_read_info(png, info);
    }

    ~PngReader() { cleanup(); }

    void cleanup() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        png = nullptr;
        info = nullptr;
        if (file) {
            std::fclose(file);
            file = nullptr;
        }
    }
};

}  // namespace

void writePngRgb8(const std::string& path, const std::array<ImageU8, 3>& rgb) {
    const int h = static_cast<int>(rgb[0].rows()), w = static_cast<int>(rgb[0].cols());
    std::vector<uint8_t> interleaved(static_cast<size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                interleaved[(static_cast<size_t>(y) * w + x) * 3 + c] = rgb[c](y, x);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = interleaved.data() + static_cast<size_t>(y) * w * 3;

    PngWriter writer(path, w, h, 8, PNG_COLOR_TYPE_RGB);
    writer.finish(rows);
}

std::array<ImageU8, 3> readPngRgb8(const std::string& path) {
    PngReader reader(path);
    if (setjmp(png_jmpbuf(reader.png))) throw IoFailure("png read failed: " + path);
    const int w = png_get_image_width(reader.png, reader.info);
    const int h = png_get_image_height(reader.png, reader.info);
    if (png_get_bit_depth(reader.png, reader.info) != 8 ||
        png_get_color_type(reader.png, reader.info) != PNG_COLOR_TYPE_RGB)
        throw IoFailure("expected 8-bit RGB png: " + path);

    std::vector<uint8_t> interleaved(static_cast<size_t>(h) * w * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = interleaved.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(reader.png, rows.data());

    std::array<ImageU8, 3> rgb;
    for (auto& p : rgb) p = ImageU8::Zero(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                rgb[c](y, x) = interleaved[(static_cast<size_t>(y) * w + x) * 3 + c];
    return rgb;
}

void writePngGray16(const std::string& path, const ImageU16& image) {
    const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
    std::vector<png_bytep> rows(h);
    // Row pointers into the matrix; png_set_swap handles endianness.
    ImageU16 copy = image;
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(copy.data() + static_cast<size_t>(y) * w);
    PngWriter writer(path, w, h, 16, PNG_COLOR_TYPE_GRAY);
    writer.finish(rows);
}

ImageU16 readPngGray16(const std::string& path) {
    PngReader reader(path);
    if (setjmp(png_jmpbuf(reader.png))) throw IoFailure("png read failed: " + path);
    const int w = png_get_image_width(reader.png, reader.info);
    const int h = png_get_image_height(reader.png, reader.info);
    if (png_get_bit_depth(reader.png, reader.info) != 16 ||
        png_get_color_type(reader.png, reader.info) != PNG_COLOR_TYPE_GRAY)
        throw IoFailure("expected 16-bit grayscale png: " + path);
    png_set_swap(reader.png);

    ImageU16 image = ImageU16::Zero(h, w);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(image.data() + static_cast<size_t>(y) * w);
    png_read_image(reader.png, rows.data());
    return image;
}

void writePngGray8(const std::string& path, const ImageU8& image) {
    const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
    ImageU8 copy = image;
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = copy.data() + static_cast<size_t>(y) * w;
    PngWriter writer(path, w, h, 8, PNG_COLOR_TYPE_GRAY);
    writer.finish(rows);
}

}  // namespace hough6d
