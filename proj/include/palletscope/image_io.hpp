#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palletscope/raster.hpp"

namespace palletscope {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t* px(int x, int y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

// ---- decoding ----

// Sniffs PNG vs PNM by magic bytes and decodes to RGB. Grayscale, palette,
// and 16-bit inputs are widened/narrowed to 8-bit RGB; alpha is dropped.
// Undecodable content raises DecodeError.
RgbImage decode_image(const std::vector<std::uint8_t>& bytes);

// Per-pixel luminance (0.299 R + 0.587 G + 0.114 B) / 255.
GrayImage to_gray(const RgbImage& rgb);

// decode_image + to_gray on in-memory file contents.
GrayImage to_gray(const std::vector<std::uint8_t>& file_contents);

// ---- encoding ----

std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_png_gray(const GrayImage& img);

// ---- files ----

// Whole-file read; missing/unreadable path raises IoError.
std::vector<std::uint8_t> read_file(const std::string& path);

// Writes to a sibling temp file and renames over the target, so readers
// never observe a half-written file. Failures raise IoError.
void write_file_atomic(const std::string& path,
                       const std::vector<std::uint8_t>& bytes);

RgbImage load_image(const std::string& path);
GrayImage load_gray(const std::string& path);
void save_png(const std::string& path, const RgbImage& img);
void save_png(const std::string& path, const GrayImage& img);

// Mask file: any nonzero luminance counts as on.
BinaryImage load_mask(const std::string& path);

}  // namespace palletscope
