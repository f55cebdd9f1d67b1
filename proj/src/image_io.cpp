#include "palletscope/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace palletscope {

namespace {

// ---- png plumbing ----

struct MemReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

extern "C" void mem_read_fn(png_structp png, png_bytep out, png_size_t n) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + n > r->size) png_error(png, "truncated stream");
    std::memcpy(out, r->data + r->pos, n);
    r->pos += n;
}

extern "C" void mem_write_fn(png_structp png, png_bytep data, png_size_t n) {
    auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    v->insert(v->end(), data, data + n);
}

extern "C" void mem_flush_fn(png_structp) {}

bool looks_like_png(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
    // Buffers live outside the setjmp window so unwinding stays well defined.
    RgbImage out;
    std::vector<png_bytep> rows;
    MemReader reader{bytes.data(), bytes.size(), 0};

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCode::DecodeError, "png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::DecodeError, "png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::DecodeError, "corrupt png stream");
    }
    png_set_read_fn(png, &reader, mem_read_fn);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3)
        png_error(png, "unexpected row layout");

    out = RgbImage(static_cast<int>(w), static_cast<int>(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = out.pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

std::vector<std::uint8_t> encode_png_impl(const std::uint8_t* data, int width,
                                          int height, int channels) {
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(
            data + static_cast<std::size_t>(y) * width * channels);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) raise(ErrorCode::IoError, "png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::IoError, "png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "png encode failed");
    }
    png_set_write_fn(png, &out, mem_write_fn, mem_flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // No timestamp or text chunks: identical input bytes in, identical file
    // bytes out.
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

// ---- pnm plumbing ----

struct PnmCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    bool eof() const { return pos >= size; }
    int peek() const { return eof() ? -1 : data[pos]; }
    int get() { return eof() ? -1 : data[pos++]; }

    // Skips whitespace and '#' comments (comment runs to end of line).
    void skip_separators() {
        while (!eof()) {
            const int c = peek();
            if (std::isspace(c)) {
                ++pos;
            } else if (c == '#') {
                while (!eof() && get() != '\n') {
                }
            } else {
                break;
            }
        }
    }

    long next_int() {
        skip_separators();
        if (eof() || !std::isdigit(peek()))
            raise(ErrorCode::DecodeError, "pnm header: expected integer");
        long v = 0;
        while (!eof() && std::isdigit(peek())) {
            v = v * 10 + (get() - '0');
            if (v > 1'000'000'000)
                raise(ErrorCode::DecodeError, "pnm header: value out of range");
        }
        return v;
    }
};

RgbImage decode_pnm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P')
        raise(ErrorCode::DecodeError, "not a pnm stream");
    const char kind = static_cast<char>(bytes[1]);
    const bool ascii = kind == '2' || kind == '3';
    const bool color = kind == '3' || kind == '6';
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        raise(ErrorCode::DecodeError, "unsupported pnm variant");

    PnmCursor cur{bytes.data(), bytes.size(), 2};
    const long w = cur.next_int();
    const long h = cur.next_int();
    const long maxval = cur.next_int();
    if (w <= 0 || h <= 0 || w > 1 << 20 || h > 1 << 20)
        raise(ErrorCode::DecodeError, "pnm header: bad dimensions");
    if (maxval <= 0 || maxval > 65535)
        raise(ErrorCode::DecodeError, "pnm header: bad maxval");

    const int channels = color ? 3 : 1;
    const std::size_t samples =
        static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    RgbImage out(static_cast<int>(w), static_cast<int>(h));

    auto emit = [&](std::size_t i, long v) {
        if (v < 0 || v > maxval)
            raise(ErrorCode::DecodeError, "pnm sample out of range");
        const auto v8 = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
        const std::size_t px = i / channels;
        if (color) {
            out.pixels[px * 3 + i % 3] = v8;
        } else {
            out.pixels[px * 3] = v8;
            out.pixels[px * 3 + 1] = v8;
            out.pixels[px * 3 + 2] = v8;
        }
    };

    if (ascii) {
        for (std::size_t i = 0; i < samples; ++i) emit(i, cur.next_int());
    } else {
        // Exactly one separator byte between maxval and the raster.
        if (cur.eof() || !std::isspace(cur.peek()))
            raise(ErrorCode::DecodeError, "pnm: missing raster separator");
        cur.get();
        const int bytes_per = maxval > 255 ? 2 : 1;
        if (cur.size - cur.pos < samples * bytes_per)
            raise(ErrorCode::DecodeError, "pnm: truncated raster");
        for (std::size_t i = 0; i < samples; ++i) {
            long v = cur.get();
            if (bytes_per == 2) v = (v << 8) | cur.get();
            emit(i, v);
        }
    }
    return out;
}

}  // namespace

RgbImage decode_image(const std::vector<std::uint8_t>& bytes) {
    if (looks_like_png(bytes)) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
    raise(ErrorCode::DecodeError, "unrecognized image format");
}

GrayImage to_gray(const RgbImage& rgb) {
    GrayImage out(rgb.width, rgb.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const std::uint8_t* p = rgb.pixels.data() + i * 3;
        const double lum = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
        out.pixels[i] = static_cast<float>(std::clamp(lum, 0.0, 1.0));
    }
    return out;
}

GrayImage to_gray(const std::vector<std::uint8_t>& file_contents) {
    return to_gray(decode_image(file_contents));
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    return encode_png_impl(img.pixels.data(), img.width, img.height, 3);
}

std::vector<std::uint8_t> encode_png_gray(const GrayImage& img) {
    std::vector<std::uint8_t> gray8(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
        gray8[i] = static_cast<std::uint8_t>(v * 255.0f + 0.5f);
    }
    return encode_png_impl(gray8.data(), img.width, img.height, 1);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) raise(ErrorCode::IoError, "read failed: " + path);
    return bytes;
}

void write_file_atomic(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(ErrorCode::IoError, "cannot open " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) raise(ErrorCode::IoError, "write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        raise(ErrorCode::IoError, "rename failed: " + path);
    }
}

RgbImage load_image(const std::string& path) {
    return decode_image(read_file(path));
}

GrayImage load_gray(const std::string& path) {
    return to_gray(load_image(path));
}

void save_png(const std::string& path, const RgbImage& img) {
    write_file_atomic(path, encode_png(img));
}

void save_png(const std::string& path, const GrayImage& img) {
    write_file_atomic(path, encode_png_gray(img));
}

BinaryImage load_mask(const std::string& path) {
    const GrayImage g = load_gray(path);
    BinaryImage out(g.width, g.height);
    for (std::size_t i = 0; i < g.pixels.size(); ++i)
        out.bits[i] = g.pixels[i] > 0.0f ? 1 : 0;
    return out;
}

}  // namespace palletscope
