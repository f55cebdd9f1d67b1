#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "palletscope/error.hpp"

namespace palletscope {

inline constexpr double kPi = 3.14159265358979323846;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point2& a, const Point2& b) { return norm(a - b); }
// Perpendicular, rotated +90 degrees in image coordinates (y down).
inline Point2 perp(const Point2& a) { return {-a.y, a.x}; }

// Projective point. hw == 0 encodes a direction (point at infinity); the three
// components are never all zero.
struct HomogeneousPoint {
  double hx = 0.0;
  double hy = 0.0;
  double hw = 1.0;

  // A point counts as infinite when hw vanishes relative to the spatial part.
  bool is_infinite(double rel_eps = 1e-12) const {
    return std::abs(hw) <= rel_eps * std::max(std::abs(hx), std::abs(hy));
  }
  Point2 dehomogenized() const;  // raises InfinitePoint when is_infinite()
  // Unit direction for infinite points, canonical sign (y >= 0; x > 0 if y == 0).
  Point2 direction() const;

  static HomogeneousPoint finite(const Point2& p) { return {p.x, p.y, 1.0}; }
  static HomogeneousPoint at_infinity(const Point2& dir);
};

// Line in normal form: x*cos(theta) + y*sin(theta) = rho, theta in [0, pi).
struct PolarLine {
  double rho = 0.0;
  double theta = 0.0;

  Point2 normal() const { return {std::cos(theta), std::sin(theta)}; }
  Point2 direction() const { return {-std::sin(theta), std::cos(theta)}; }
  // Signed distance of a point from the line.
  double eval(const Point2& p) const { return dot(p, normal()) - rho; }

  // Wraps theta into [0, pi), flipping the sign of rho as needed.
  static PolarLine normalized(double rho, double theta);
  static PolarLine through(const Point2& p, const Point2& dir);
  static PolarLine from_points(const Point2& a, const Point2& b);
};

struct LineSegment {
  Point2 p0;
  Point2 p1;  // p0 != p1

  double length() const { return distance(p0, p1); }
  Point2 midpoint() const { return (p0 + p1) * 0.5; }
  Point2 direction() const { return p1 - p0; }
  PolarLine line() const { return PolarLine::from_points(p0, p1); }
};

struct BBox {
  Point2 min;
  Point2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  BBox expanded(double factor) const;  // scaled about the center
  bool contains(const Point2& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

// Simple quadrilateral. Corners run clockwise (image coordinates, y down)
// starting from the top-left-most corner: smallest x+y, ties broken by
// smaller y. Signed area under that winding is positive.
struct Quad {
  std::array<Point2, 4> c;

  // Canonicalizes the corner cycle; nullopt when the cycle is not a simple
  // polygon with nonzero area.
  static std::optional<Quad> make(const std::array<Point2, 4>& corners);
  static Quad make_or_raise(const std::array<Point2, 4>& corners, ErrorCode code,
                            const std::string& context);

  bool is_convex() const;
  bool contains(const Point2& p) const;  // boundary counts as inside
  BBox bbox() const;
  Point2 centroid() const;

  // Validity of a raw corner cycle without reordering. Used by the quad
  // optimizer, which must keep corner identity stable across moves.
  static bool cycle_is_simple(const std::array<Point2, 4>& corners);
};

// 3x3 projective transform, row-major. Canonical form: Frobenius norm 1 and
// the largest-magnitude entry positive (first such entry on ties).
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  // Normalizes; raises DegenerateCorrespondence when the matrix is singular.
  static Homography from_raw(const std::array<double, 9>& raw);

  Homography inverse() const;
  HomogeneousPoint map(const Point2& p) const;
  Quad map(const Quad& q) const;

  bool operator==(const Homography& o) const { return m == o.m; }
};

// Intersection of two lines as a homogeneous point. Parallel distinct lines
// give hw == 0 with (hx, hy) along the shared direction. Identical lines
// raise IdenticalLines.
HomogeneousPoint intersect_lines(const PolarLine& a, const PolarLine& b);

// Perpendicular distance from a finite point to a line; raises InfinitePoint.
double point_line_distance(const HomogeneousPoint& p, const PolarLine& line);

// Positive area of the quad (shoelace; canonical winding makes it positive).
double polygon_area(const Quad& q);
// Absolute shoelace area of an arbitrary polygon.
double polygon_area(std::span<const Point2> poly);

// Intersection-over-union of two quads. Exact convex clipping when both are
// convex, common-grid rasterization otherwise. Symmetric by construction.
double quad_iou(const Quad& a, const Quad& b, int raster_resolution = 1024);
// Grid-sampled IoU over the joint bounding box, resolution cells per axis.
double quad_iou_raster(const Quad& a, const Quad& b, int resolution);

// Subject polygon clipped against a convex quad (Sutherland-Hodgman).
std::vector<Point2> convex_clip(std::span<const Point2> subject, const Quad& clip);

// Monotone-chain convex hull with strict turns: collinear points are
// dropped, so degenerate inputs come back with fewer than 3 vertices.
// Starts at the lexicographically smallest point, clockwise in image
// coordinates (y down).
std::vector<Point2> convex_hull(std::vector<Point2> pts);

// Direct linear transform from exactly four correspondences, src -> dst.
// Raises DegenerateCorrespondence when any three of either set are collinear.
Homography homography_from_correspondences(const std::array<Point2, 4>& src,
                                           const std::array<Point2, 4>& dst);

// Maps a point; raises MapsToInfinity when |mapped hw| < 1e-12.
Point2 apply_homography(const Homography& h, const Point2& p);

// Closed row spans of a simple quad: x intervals whose integer (or sampled)
// points lie inside or on the quad at height y. At most two intervals.
struct RowSpans {
  int count = 0;
  std::array<std::pair<double, double>, 2> span;
};
RowSpans quad_row_spans(const Quad& q, double y);

}  // namespace palletscope
