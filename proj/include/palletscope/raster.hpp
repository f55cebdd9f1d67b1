#pragma once

#include <cstdint>
#include <vector>

#include "palletscope/error.hpp"
#include "palletscope/geometry.hpp"

namespace palletscope {

// Row-major grayscale raster with intensities in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    float at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    float& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

// Row-major bitmap; one byte per pixel, 0 = off, 1 = on.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryImage() = default;
    BinaryImage(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    bool test(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const;
    bool same_size(const BinaryImage& o) const {
        return width == o.width && height == o.height;
    }
};

// Instance mask: a bitmap plus the tight bounding box of its on-pixels
// (inclusive pixel coordinates; every border row/column holds >= 1 on-pixel).
struct InstanceMask {
    BinaryImage image;
    int x0 = 0, y0 = 0;  // top-left on-pixel bound
    int x1 = 0, y1 = 0;  // bottom-right on-pixel bound (inclusive)

    // Scans for on-pixels and records the tight box; a mask without any
    // on-pixel is rejected (DegenerateMask).
    static InstanceMask from_binary(BinaryImage img);

    int box_width() const { return x1 - x0 + 1; }
    int box_height() const { return y1 - y0 + 1; }
    BBox bbox() const {
        return BBox{Point2{static_cast<double>(x0), static_cast<double>(y0)},
                    Point2{static_cast<double>(x1), static_cast<double>(y1)}};
    }
};

enum class EdgeOrientation {
    VerticalEdges,    // horizontal derivative; fires on vertical structures
    HorizontalEdges,  // vertical derivative; fires on horizontal structures
};

enum class EdgeKernel { Sobel, Prewitt, Scharr };

// Absolute oriented-derivative response, normalized by the kernel's maximum
// possible response so the output stays in [0,1]. Border pixels are 0.
GrayImage edge_filter(const GrayImage& img, EdgeOrientation orientation,
                      EdgeKernel kernel = EdgeKernel::Sobel);

// Bit set iff intensity >= threshold; threshold must lie in (0,1].
BinaryImage binarize(const GrayImage& img, double threshold);

// Between-class-variance maximizer over a 256-bin histogram. Returns a
// threshold suitable for binarize(); falls back to 0.5 on a flat histogram.
double otsu_threshold(const GrayImage& img);

// Morphological erosion with a square (Chebyshev) structuring element of the
// given radius; pixels outside the image count as off.
BinaryImage erode(const BinaryImage& img, int radius);

// Keeps bits that fall inside the mask eroded by erosion_px. Dimension
// mismatch between image and mask raises DimensionMismatch.
BinaryImage restrict_to_mask(const BinaryImage& img, const InstanceMask& mask,
                             int erosion_px = 2);

// Sets every pixel whose integer coordinate lies inside or on the convex
// polygon (closed rule, matching the quad rasterization used elsewhere).
void fill_convex_polygon(BinaryImage& img, std::span<const Point2> poly);

}  // namespace palletscope
