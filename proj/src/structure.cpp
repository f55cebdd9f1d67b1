#include "palletscope/structure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "palletscope/error.hpp"

namespace palletscope {

namespace {

// Counts whose ratio misses an integer by more than this are suspect.
constexpr double kResidualGuard = 0.35;
// Profile peaks within this fraction of the extent of either edge are the
// face outline, not interior divisions.
constexpr double kBorderFrac = 0.02;

double edge_len(const Quad& q, int i) {
    return distance(q.c[i], q.c[(i + 1) % 4]);
}

// Canonical corner order is top-left first, clockwise: edges 0/2 run
// horizontally, edges 1/3 vertically.
double mean_horizontal(const Quad& q) {
    return 0.5 * (edge_len(q, 0) + edge_len(q, 2));
}

double mean_vertical(const Quad& q) {
    return 0.5 * (edge_len(q, 1) + edge_len(q, 3));
}

struct AxisCount {
    int count = 1;
    bool suspect = false;
};

AxisCount round_ratio(double target, double mean) {
    const double ratio = target / mean;
    const long nearest = std::lround(ratio);
    AxisCount out;
    out.suspect = std::abs(ratio - static_cast<double>(nearest)) >
                  kResidualGuard;
    out.count = static_cast<int>(std::max(1L, nearest));
    return out;
}

}  // namespace

const char* to_string(PackageClass cls) {
    return cls == PackageClass::KLT ? "KLT" : "Tray";
}

PackageClass parse_package_class(std::string_view name) {
    if (name == "KLT") return PackageClass::KLT;
    if (name == "Tray") return PackageClass::Tray;
    raise(ErrorCode::SchemaError,
          "unknown package class \"" + std::string(name) + "\"");
}

Rectification rectify_face(const Quad& face, int target_h) {
    if (target_h < 1)
        raise(ErrorCode::ConfigError, "rectification height must be >= 1");

    const double horizontal = mean_horizontal(face);
    const double vertical = mean_vertical(face);
    const long width = std::lround(target_h * horizontal / vertical);

    Rectification r;
    r.target_h = target_h;
    r.target_w = static_cast<int>(std::max(1L, width));

    const double w = static_cast<double>(r.target_w);
    const double h = static_cast<double>(r.target_h);
    const std::array<Point2, 4> rect{Point2{0.0, 0.0}, Point2{w, 0.0},
                                     Point2{w, h}, Point2{0.0, h}};
    r.to_rect = homography_from_correspondences(face.c, rect);
    return r;
}

FaceAssignment assign_packages_to_face(
    const std::vector<PackageDetection>& dets, const Quad& face) {
    std::vector<PackageDetection> inside;
    for (const PackageDetection& d : dets)
        if (face.contains(d.quad.centroid())) inside.push_back(d);

    std::size_t klt = 0;
    for (const PackageDetection& d : inside)
        if (d.cls == PackageClass::KLT) ++klt;

    FaceAssignment out;
    out.cls = 2 * klt >= inside.size() ? PackageClass::KLT
                                       : PackageClass::Tray;
    for (const PackageDetection& d : inside)
        (d.cls == out.cls ? out.kept : out.flagged).push_back(d);
    return out;
}

FaceStructure count_grid(const Quad& face,
                         const std::vector<PackageDetection>& dets,
                         int target_h) {
    if (dets.empty())
        raise(ErrorCode::NoPackagesOnFace,
              "cannot derive a grid without package detections");

    const Rectification r = rectify_face(face, target_h);

    double sum_w = 0.0;
    double sum_h = 0.0;
    std::size_t klt = 0;
    for (const PackageDetection& d : dets) {
        const Quad m = r.to_rect.map(d.quad);
        sum_w += mean_horizontal(m);
        sum_h += mean_vertical(m);
        if (d.cls == PackageClass::KLT) ++klt;
    }

    FaceStructure fs;
    fs.mean_w = sum_w / static_cast<double>(dets.size());
    fs.mean_h = sum_h / static_cast<double>(dets.size());
    fs.cls = 2 * klt >= dets.size() ? PackageClass::KLT : PackageClass::Tray;

    const AxisCount cols = round_ratio(r.target_w, fs.mean_w);
    const AxisCount rows = round_ratio(r.target_h, fs.mean_h);
    fs.cols = cols.count;
    fs.rows = rows.count;
    fs.low_confidence = cols.suspect || rows.suspect;
    return fs;
}

int count_by_line_frequency(const BinaryImage& rectified_edges,
                            CountAxis axis, double prominence_frac) {
    if (!(prominence_frac > 0.0) || prominence_frac > 1.0)
        raise(ErrorCode::ConfigError,
              "prominence fraction must lie in (0, 1]");
    if (rectified_edges.width < 1 || rectified_edges.height < 1)
        raise(ErrorCode::FrequencyInconclusive, "empty edge image");

    // Divisions stack along the counted axis, so the profile is indexed by
    // it: row divisions accumulate whole image rows, column divisions whole
    // columns.
    const bool by_rows = axis == CountAxis::Rows;
    const int n = by_rows ? rectified_edges.height : rectified_edges.width;
    std::vector<long> profile(static_cast<std::size_t>(n), 0);
    for (int y = 0; y < rectified_edges.height; ++y)
        for (int x = 0; x < rectified_edges.width; ++x)
            if (rectified_edges.test(x, y)) ++profile[by_rows ? y : x];

    const long peak = *std::max_element(profile.begin(), profile.end());
    if (peak <= 0)
        raise(ErrorCode::FrequencyInconclusive,
              "edge image has no on-pixels");

    // Runs of bins at or above the threshold collapse to one peak each so a
    // division smeared over adjacent bins is not counted twice.
    const double thresh = prominence_frac * static_cast<double>(peak);
    const double border = kBorderFrac * n;
    int interior = 0;
    int i = 0;
    while (i < n) {
        if (static_cast<double>(profile[i]) < thresh) {
            ++i;
            continue;
        }
        int best = i;
        while (i < n && static_cast<double>(profile[i]) >= thresh) {
            if (profile[i] > profile[best]) best = i;
            ++i;
        }
        if (static_cast<double>(best) >= border &&
            static_cast<double>(best) <= static_cast<double>(n - 1) - border)
            ++interior;
    }
    return interior + 1;
}

PackagingStructure consolidate(const FaceStructure& left,
                               const FaceStructure& right) {
    if (left.rows != right.rows)
        raise(ErrorCode::LayerMismatch,
              "left face has " + std::to_string(left.rows) +
                  " layers, right face " + std::to_string(right.rows));
    if (left.cls != right.cls)
        raise(ErrorCode::ClassMismatch,
              std::string("left face holds ") + to_string(left.cls) +
                  ", right face " + to_string(right.cls));

    PackagingStructure ps;
    ps.left = left;
    ps.right = right;
    ps.layers = left.rows;
    ps.total = ps.layers * left.cols * right.cols;
    return ps;
}

}  // namespace palletscope
