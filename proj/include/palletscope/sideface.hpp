#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "palletscope/geometry.hpp"
#include "palletscope/hough.hpp"
#include "palletscope/raster.hpp"

namespace palletscope {

struct ImageFrame {
    double width = 0.0;
    double height = 0.0;

    double diag() const { return std::hypot(width, height); }
    Point2 center() const { return Point2{width / 2.0, height / 2.0}; }
};

// Where pairwise line intersections are allowed to seed a vanishing point:
// lateral VPs live outside the image, the vertical VP below it.
enum class SeedRegion { Below, Left, Right, Unconstrained };

struct VPConfig {
    int iterations = 4;
    double init_dist_frac = 0.25;  // of the image diagonal
    double decay = 0.5;            // threshold shrink per iteration
    int min_support = 3;
    double parallel_spread_px = 1e5;  // beyond this, the pencil is parallel
};

struct VanishingPointEstimate {
    HomogeneousPoint point;
    std::vector<int> support;  // indices into the caller's line list
    std::vector<PolarLine> supporting_lines;
    double mean_residual = 0.0;   // px; angle * diag when at infinity
    double final_threshold = 0.0;  // tau of the last iteration, px
    // Survivor index sets after each filtering pass (monotone by
    // construction; the last entry equals `support`).
    std::vector<std::vector<int>> history;
};

// A detected line together with the segments that back it.
struct TrackedLine {
    PolarLine line;
    std::vector<LineSegment> segments;
};

struct SideFacePair {
    Quad left;
    Quad right;
    LineSegment shared_edge;
};

struct SceneValidation {
    bool ok = true;
    std::string reason;
};

struct SideFaceConfig {
    EdgeKernel kernel = EdgeKernel::Sobel;
    double binarize_threshold = 0.25;
    bool auto_threshold = false;  // use Otsu instead of the fixed threshold
    int mask_erosion_px = 2;
    HoughParams hough;
    SegmentParams segments;
    double vertical_tol = kPi / 9.0;
    double horizontal_tol = kPi / 3.0;
    VPConfig vp;
    int min_mask_px = 1000;
    double face_span_pad_px = 3.0;   // slack when gating verticals to a face
    double shared_edge_tol_px = 5.0;
    double corner_clamp_factor = 1.1;  // of the mask bounding box
};

struct SideFaceResult {
    SideFacePair faces;
    VanishingPointEstimate vertical_vp;
    VanishingPointEstimate left_vp;
    VanishingPointEstimate right_vp;
    std::vector<TrackedLine> vertical_lines;
    std::vector<TrackedLine> horizontal_lines;
    // Which tracked horizontal lines back each face (indices into
    // horizontal_lines), after the disjoint split.
    std::vector<int> left_face_lines;
    std::vector<int> right_face_lines;
    BinaryImage vertical_edges;    // binarized + mask-restricted
    BinaryImage horizontal_edges;
    std::vector<std::string> warnings;
};

// Distance of a line from a vanishing point: perpendicular distance for a
// finite point; angular deviation scaled by the diagonal for one at infinity,
// so the same pixel thresholds apply to both.
double vp_line_distance(const HomogeneousPoint& vp, const PolarLine& line,
                        double diag);

// Mean-and-filter estimation: pairwise intersections restricted to the seed
// region give the first guess; each round drops lines farther than
// tau_i = init_dist_frac * diag * decay^(i-1) and re-averages. If the kept
// intersections spread wider than parallel_spread_px (or there are none),
// the pencil is parallel and the result is the point at infinity along the
// lines' mean direction. Support falling under min_support raises
// InsufficientSupport.
VanishingPointEstimate estimate_vp(const std::vector<PolarLine>& lines,
                                   SeedRegion seed, const VPConfig& cfg,
                                   const ImageFrame& frame);

// Left and right lateral vanishing points from one horizontal line set.
// Each line backs at most one of them (the nearer, within that side's final
// threshold); both sides are re-estimated from their disjoint supports.
// A side starved below min_support raises OneSideNotVisible.
std::pair<VanishingPointEstimate, VanishingPointEstimate>
assign_horizontal_vps(const std::vector<PolarLine>& horizontal,
                      const VPConfig& cfg, const ImageFrame& frame);

// Least-squares line constrained to pass through `through`: for a finite
// point the angle about it is optimized in closed form; for a point at
// infinity the direction is fixed and the offset is the mean of the
// endpoints' perpendicular offsets. Empty input raises NoEndpoints.
PolarLine regress_boundary(const std::vector<Point2>& endpoints,
                           const HomogeneousPoint& through);

// Flags a vertical vanishing point closer than 3x the image height to the
// image center: that much convergence means the verticals are far from
// parallel to the image borders and results degrade.
SceneValidation validate_scene(const VanishingPointEstimate& vertical_vp,
                               const ImageFrame& frame);

// Full stage: oriented edge images -> binarization -> mask restriction ->
// Hough per orientation -> vanishing points -> boundary regression ->
// corner intersection, yielding the two side-face quads and the shared
// vertical edge between them.
SideFaceResult segment_side_faces(const GrayImage& gray,
                                  const InstanceMask& mask,
                                  const SideFaceConfig& cfg = {});

}  // namespace palletscope
