#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "palletscope/geometry.hpp"
#include "palletscope/raster.hpp"

namespace palletscope {

// Grid-structure recovery for a segmented unit: package detections are
// assigned to side faces, each face is rectified to a fronto-parallel frame,
// and the per-face row/column grid plus the overall package total are
// derived from the rectified geometry.

enum class PackageClass { KLT, Tray };

const char* to_string(PackageClass cls);
// Raises SchemaError for anything other than "KLT" or "Tray".
PackageClass parse_package_class(std::string_view name);

struct PackageDetection {
    Quad quad;
    PackageClass cls = PackageClass::KLT;
    double score = 1.0;  // detector confidence in [0, 1]
};

// Detections whose centroid lies on a face, split into the majority class
// (kept) and the minority class (flagged for the caller to report).
struct FaceAssignment {
    std::vector<PackageDetection> kept;
    std::vector<PackageDetection> flagged;
    PackageClass cls = PackageClass::KLT;
};

// Row/column grid of one side face. mean_w / mean_h are the mean package
// width and height in the rectified frame, in pixels.
struct FaceStructure {
    int rows = 0;
    int cols = 0;
    PackageClass cls = PackageClass::KLT;
    double mean_w = 0.0;
    double mean_h = 0.0;
    // Set when a rounded row or column ratio missed an integer by more than
    // the guard band; the counts are still the nearest fit.
    bool low_confidence = false;
};

// Full unit structure: layers * left.cols * right.cols packages.
struct PackagingStructure {
    FaceStructure left;
    FaceStructure right;
    int layers = 0;
    int total = 0;
    std::string pallet;  // carrier label passed through untouched; may be empty
};

// Homography taking face pixels to an axis-aligned target_w x target_h frame
// whose top-left corner is the origin.
struct Rectification {
    Homography to_rect;
    int target_w = 0;
    int target_h = 0;
};

// Maps the face quad onto an upright rectangle of the given height. The
// width preserves the quad's aspect as the ratio of its mean horizontal to
// mean vertical edge length (at least 1 px). Corners reproject onto the
// rectangle's corners to < 1e-6 px. Raises ConfigError when target_h < 1 and
// DegenerateCorrespondence when three face corners are collinear.
Rectification rectify_face(const Quad& face, int target_h = 400);

// Keeps the detections whose quad centroid lies inside the face (boundary
// included); of those, the majority class is kept and the rest are flagged.
// Ties go to KLT.
FaceAssignment assign_packages_to_face(
    const std::vector<PackageDetection>& dets, const Quad& face);

// Rectifies the face, maps every detection into the rectified frame, and
// rounds target extent / mean package extent to the nearest count on each
// axis (never below 1). Flags low confidence when a pre-rounding ratio is
// off its nearest integer by more than 0.35. The face class is the majority
// detection class. Raises NoPackagesOnFace on an empty detection list.
FaceStructure count_grid(const Quad& face,
                         const std::vector<PackageDetection>& dets,
                         int target_h = 400);

enum class CountAxis { Rows, Cols };

// Counts grid divisions in a rectified edge image from its projection
// profile: on-pixel totals are binned along the counted axis, bins at or
// above prominence_frac * peak merge into peaks, and peaks farther than 2%
// of the extent from both borders are interior. The count is interior peaks
// + 1. Raises FrequencyInconclusive when the image is blank or empty and
// ConfigError when prominence_frac is outside (0, 1].
int count_by_line_frequency(const BinaryImage& rectified_edges,
                            CountAxis axis, double prominence_frac = 0.3);

// Combines the two face grids into the unit structure. Raises LayerMismatch
// when the row counts disagree and ClassMismatch when the classes do.
PackagingStructure consolidate(const FaceStructure& left,
                               const FaceStructure& right);

}  // namespace palletscope
