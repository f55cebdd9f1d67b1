#include "palletscope/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace palletscope {

namespace {

struct KernelSpec {
    std::array<int, 3> smooth;  // perpendicular smoothing column
    int max_response;           // sum of positive taps; normalizer
};

KernelSpec kernel_spec(EdgeKernel k) {
    switch (k) {
        case EdgeKernel::Prewitt: return {{1, 1, 1}, 3};
        case EdgeKernel::Scharr: return {{3, 10, 3}, 16};
        case EdgeKernel::Sobel: default: return {{1, 2, 1}, 4};
    }
}

}  // namespace

std::size_t BinaryImage::count() const {
    return static_cast<std::size_t>(
        std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

InstanceMask InstanceMask::from_binary(BinaryImage img) {
    int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!img.test(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) raise(ErrorCode::DegenerateMask, "mask has no on-pixels");
    InstanceMask m;
    m.image = std::move(img);
    m.x0 = x0;
    m.y0 = y0;
    m.x1 = x1;
    m.y1 = y1;
    return m;
}

GrayImage edge_filter(const GrayImage& img, EdgeOrientation orientation,
                      EdgeKernel kernel) {
    if (img.width < 3 || img.height < 3)
        raise(ErrorCode::ImageTooSmall, "edge_filter needs at least 3x3");
    const KernelSpec spec = kernel_spec(kernel);
    const float inv_max = 1.0f / static_cast<float>(spec.max_response);
    GrayImage out(img.width, img.height, 0.0f);
    // Separable form: derivative [-1,0,1] along the gradient axis, smoothing
    // taps across it. VerticalEdges differentiates along x.
    const bool ddx = orientation == EdgeOrientation::VerticalEdges;
    for (int y = 1; y + 1 < img.height; ++y) {
        for (int x = 1; x + 1 < img.width; ++x) {
            float acc = 0.0f;
            for (int t = -1; t <= 1; ++t) {
                const float w = static_cast<float>(spec.smooth[t + 1]);
                if (ddx)
                    acc += w * (img.at(x + 1, y + t) - img.at(x - 1, y + t));
                else
                    acc += w * (img.at(x + t, y + 1) - img.at(x + t, y - 1));
            }
            out.at(x, y) = std::min(1.0f, std::abs(acc) * inv_max);
        }
    }
    return out;
}

BinaryImage binarize(const GrayImage& img, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        raise(ErrorCode::ConfigError, "binarize threshold must be in (0,1]");
    BinaryImage out(img.width, img.height);
    const float t = static_cast<float>(threshold);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.bits[i] = img.pixels[i] >= t ? 1 : 0;
    return out;
}

double otsu_threshold(const GrayImage& img) {
    constexpr int kBins = 256;
    std::array<std::size_t, kBins> hist{};
    for (float v : img.pixels) {
        int b = static_cast<int>(v * (kBins - 1) + 0.5f);
        hist[std::clamp(b, 0, kBins - 1)]++;
    }
    const double total = static_cast<double>(img.pixels.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += b * static_cast<double>(hist[b]);

    std::array<double, kBins> var{};
    double best_var = -1.0;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b + 1 < kBins; ++b) {
        w0 += static_cast<double>(hist[b]);
        sum0 += b * static_cast<double>(hist[b]);
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        var[b] = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        best_var = std::max(best_var, var[b]);
    }
    if (best_var <= 0.0) return 0.5;  // flat histogram: nothing to separate
    // The maximum is a plateau when the modes are well separated; split in
    // the middle of it rather than hugging one mode.
    const double cut = best_var * (1.0 - 1e-12);
    int lo = -1, hi = -1;
    for (int b = 0; b + 1 < kBins; ++b) {
        if (var[b] < cut) continue;
        if (lo < 0) lo = b;
        hi = b;
    }
    // Split lands between bin and bin+1; map to a >= threshold.
    return ((lo + hi) / 2 + 0.5) / (kBins - 1);
}

BinaryImage erode(const BinaryImage& img, int radius) {
    if (radius <= 0) return img;
    // Square structuring element is separable: run length-(2r+1) min filters
    // along rows then columns. Out-of-bounds counts as off.
    BinaryImage horiz(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        int run = 0;  // consecutive on-pixels ending at x
        for (int x = 0; x < img.width; ++x) {
            run = img.test(x, y) ? run + 1 : 0;
            const int cx = x - radius;  // window [cx-r, cx+r] ends at x
            if (cx >= 0 && run >= 2 * radius + 1) horiz.set(cx, y, true);
        }
    }
    BinaryImage out(img.width, img.height);
    for (int x = 0; x < img.width; ++x) {
        int run = 0;
        for (int y = 0; y < img.height; ++y) {
            run = horiz.test(x, y) ? run + 1 : 0;
            const int cy = y - radius;
            if (cy >= 0 && run >= 2 * radius + 1) out.set(x, cy, true);
        }
    }
    return out;
}

BinaryImage restrict_to_mask(const BinaryImage& img, const InstanceMask& mask,
                             int erosion_px) {
    if (!img.same_size(mask.image))
        raise(ErrorCode::DimensionMismatch,
              "image and mask dimensions differ");
    if (erosion_px < 0)
        raise(ErrorCode::ConfigError, "erosion_px must be nonnegative");
    const BinaryImage region = erode(mask.image, erosion_px);
    BinaryImage out(img.width, img.height);
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = (img.bits[i] & region.bits[i]);
    return out;
}

void fill_convex_polygon(BinaryImage& img, std::span<const Point2> poly) {
    if (poly.size() < 3) return;
    double ymin = poly[0].y, ymax = poly[0].y;
    for (const Point2& p : poly) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::ceil(ymin - 1e-9)));
    const int y1 = std::min(img.height - 1,
                            static_cast<int>(std::floor(ymax + 1e-9)));
    const int n = static_cast<int>(poly.size());
    for (int y = y0; y <= y1; ++y) {
        // Convex: the row meets the boundary in one interval, bounded by the
        // extreme edge crossings (horizontal edges contribute endpoints).
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (int i = 0; i < n; ++i) {
            const Point2 a = poly[i];
            const Point2 b = poly[(i + 1) % n];
            if ((a.y - y) * (b.y - y) > 0.0) continue;
            double xa, xb;
            if (a.y == b.y) {
                xa = a.x;
                xb = b.x;
            } else {
                xa = xb = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            }
            if (!any) {
                lo = std::min(xa, xb);
                hi = std::max(xa, xb);
                any = true;
            } else {
                lo = std::min(lo, std::min(xa, xb));
                hi = std::max(hi, std::max(xa, xb));
            }
        }
        if (!any) continue;
        const int xi0 = std::max(0, static_cast<int>(std::ceil(lo - 1e-9)));
        const int xi1 = std::min(img.width - 1,
                                 static_cast<int>(std::floor(hi + 1e-9)));
        for (int x = xi0; x <= xi1; ++x) img.set(x, y, true);
    }
}

}  // namespace palletscope
