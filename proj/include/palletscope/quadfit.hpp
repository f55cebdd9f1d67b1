#pragma once

#include <vector>

#include "palletscope/geometry.hpp"
#include "palletscope/raster.hpp"

namespace palletscope {

struct QuadFitConfig {
    // Corner move sizes in px, tried largest to smallest. Strictly
    // decreasing, all positive.
    std::vector<int> step_schedule{16, 8, 4, 2, 1};
    int max_sweeps_per_step = 20;
    // Approximate sample count along the longer image axis for the overlap
    // objective. 0 keeps the mask's native pixel grid; smaller values
    // subsample (the grid stays anchored on integer pixels, so counts stay
    // exact). Values at or above the image size are clamped to native.
    int iou_resolution = 0;
};

struct QuadFit {
    Quad quad;
    double iou = 0.0;
    // Objective value for the seed quad followed by one entry per accepted
    // move. Non-decreasing by construction.
    std::vector<double> trace;
};

// Minimum-area rotated rectangle of the mask's convex hull (rotating
// calipers over hull edges). Raises DegenerateMask when the on-pixels do not
// span two dimensions.
Quad initial_quad(const InstanceMask& mask);

// Pixel-count IoU between the mask and the quad's closed rasterization.
// Pixels of the quad falling outside the image still count toward the union.
double quad_mask_iou(const InstanceMask& mask, const Quad& quad,
                     int iou_resolution = 0);

// Greedy corner refinement: sweep the four corners, trying the eight
// axis/diagonal moves at each step size and keeping the best strict IoU
// improvement; a step size is exhausted when a full sweep leaves the quad
// unchanged. Moves that would break the cycle's simplicity are rejected, so
// the result is always a valid quad with iou >= that of initial_quad.
QuadFit fit_quad_to_mask(const InstanceMask& mask,
                         const QuadFitConfig& cfg = {});

}  // namespace palletscope
