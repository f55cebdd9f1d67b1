#pragma once

#include <utility>
#include <vector>

#include "palletscope/geometry.hpp"
#include "palletscope/raster.hpp"

namespace palletscope {

struct HoughParams {
    double rho_res = 1.0;            // px per distance cell
    double theta_res = kPi / 360.0;  // rad per angle cell
    double peak_threshold_frac = 0.4;  // relative to max accumulator score
    double nms_rho = 5.0;            // px
    double nms_theta = kPi / 36.0;   // rad
    int max_lines = 64;
};

struct SegmentParams {
    double min_length_frac = 0.05;  // fraction of image diagonal
    double max_gap_px = 3.0;        // bridged missing-pixel span
    double on_band_px = 1.5;        // distance for a pixel to count as on-line
};

// Vote accumulation over (rho, theta) with theta in [0,pi) and
// rho in [-diag, diag], followed by thresholding at
// peak_threshold_frac * max and greedy non-maximum suppression in
// (nms_rho, nms_theta) windows (theta wraps: (rho, theta) ~ (-rho, theta+pi)).
// Lines come back strongest first, at most max_lines of them.
// Fewer than two on-pixels raises NotEnoughEvidence.
std::vector<PolarLine> hough_lines(const BinaryImage& img,
                                   const HoughParams& p = {});

// Recounts the accumulator votes of the cell the given line falls in,
// using the same quantization as hough_lines.
int hough_votes(const BinaryImage& img, const PolarLine& line,
                const HoughParams& p = {});

// Walks the line across the image in 1 px steps, grabbing the nearest
// on-pixel within on_band_px at each step. Consecutive hits form runs; a run
// ends when more than max_gap_px of the walk goes unmatched. Runs whose
// endpoint span is shorter than min_length_frac * diagonal are dropped.
// Endpoints are pixel centers of the run's extreme hits.
std::vector<LineSegment> extract_segments(const PolarLine& line,
                                          const BinaryImage& img,
                                          const SegmentParams& p = {});

// Buckets segments by direction: within vertical_tol of the vertical image
// axis -> vertical; else within horizontal_tol of the horizontal axis ->
// horizontal; else dropped. Vertical wins if the bands overlap, so the two
// lists never share a segment. The horizontal band is wide by default
// because side-face top/bottom edges foreshorten steeply.
std::pair<std::vector<LineSegment>, std::vector<LineSegment>>
split_by_orientation(const std::vector<LineSegment>& segments,
                     double vertical_tol = kPi / 9.0,
                     double horizontal_tol = kPi / 3.0);

}  // namespace palletscope
