#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palletscope/geometry.hpp"
#include "palletscope/raster.hpp"

namespace palletscope {

// Synthetic stack scenes with exact ground truth.
//
// World frame: right-handed, Z up, ground plane z = 0. The pallet footprint
// is centered on the XY origin with its deck top at z = pallet_dims.h; the
// package stack sits on the deck, also centered in XY, and grows along +Z.
// Packages tile X in strides of package_dims.w (na columns) and Y in
// strides of package_dims.d (nb columns); each layer is package_dims.h
// tall.
//
// Camera: at zero yaw/pitch/roll the camera looks along +Y with +X to the
// right of the image and +Z up (image y runs down). Yaw rotates about world
// Z and turns the view toward +X; pitch rotates about the camera's right
// axis, positive looking down; roll rotates about the optical axis. A world
// point q (camera-relative) projects to
//   u = focal_px * (right . q) / (forward . q) + principal.x
//   v = focal_px * (down  . q) / (forward . q) + principal.y

struct Size3 {
    double w = 0.0;
    double d = 0.0;
    double h = 0.0;
};

struct CameraSpec {
    double x = 2.0, y = -2.0, z = 1.1;  // position, meters
    double yaw = -kPi / 4.0;            // radians
    double pitch = 0.23;
    double roll = 0.0;
    double focal_px = 800.0;
    Point2 principal{320.0, 240.0};
};

struct NoiseSpec {
    double edge_dropout = 0.0;      // probability a grid edge span is skipped
    double corner_jitter_px = 0.0;  // sigma of lattice-point displacement
};

struct SceneSpec {
    int na = 2;  // packages per layer along X
    int nb = 2;  // packages per layer along Y
    int layers = 3;
    Size3 package_dims{0.6, 0.4, 0.147};  // KLT-family footprint
    Size3 pallet_dims{1.2, 0.8, 0.144};
    bool render_pallet = false;
    CameraSpec camera;
    int image_width = 640;
    int image_height = 480;
    NoiseSpec noise;
    std::uint64_t seed = 0;
};

// One side face of the unit: its quad, the projected per-package quads in
// row-major order (row 0 is the top layer, column 0 sits at the smaller
// world coordinate along the face axis), and the grid shape.
struct FaceTruth {
    Quad quad;
    std::vector<Quad> packages;  // rows * cols entries
    int rows = 0;
    int cols = 0;
    std::string package_class = "KLT";
};

struct SceneGroundTruth {
    InstanceMask mask;  // silhouette of the package stack (convex hull)
    FaceTruth left;     // by image position
    FaceTruth right;
    HomogeneousPoint vertical_vp;
    HomogeneousPoint left_vp;  // VP of the left face's horizontal edges
    HomogeneousPoint right_vp;
    int total = 0;  // layers * na * nb
};

struct RenderedScene {
    GrayImage image;
    SceneGroundTruth truth;
};

// Projects the stack through the pinhole camera and renders bright package
// grid edges (1.0) over per-face mid-gray fills (top 0.2, left 0.45, right
// 0.55), with edge dropout and lattice jitter drawn from spec.seed. Ground
// truth is computed before noise. Raises ConfigError when the spec breaks
// its invariants: counts >= 1, dims > 0, |pitch| <= 15 deg, |roll| <= 5
// deg, both side faces visible and each subtending >= 15 deg horizontally.
// Raises SceneOutOfFrame when any stack corner (or pallet corner, when the
// pallet is rendered) projects outside the image or behind the camera.
RenderedScene project_scene(const SceneSpec& spec);

}  // namespace palletscope
