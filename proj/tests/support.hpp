// Shared helpers for the test suites. Oracles here are written independently
// of the library code paths they check: membership tests use sign/parity
// logic, areas come from sampling, rectangles from orientation scans.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "palletscope/geometry.hpp"

namespace testsupport {

using palletscope::Point2;
using palletscope::Quad;

// Even-odd membership with an explicit boundary-exclusion guarantee only at
// generic sample points; callers should avoid sampling exactly on edges.
inline bool point_in_polygon_oracle(const std::vector<Point2>& poly, double x,
                                    double y) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
      const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

inline bool point_in_quad_oracle(const Quad& q, double x, double y) {
  return point_in_polygon_oracle({q.c.begin(), q.c.end()}, x, y);
}

// Monte-Carlo-style area estimate: grid-sample the bounding box and count.
inline double sampled_area_oracle(const Quad& q, int resolution) {
  const palletscope::BBox bb = q.bbox();
  const double sx = bb.width() / resolution;
  const double sy = bb.height() / resolution;
  long hits = 0;
  for (int i = 0; i < resolution; ++i) {
    const double y = bb.min.y + (i + 0.5) * sy;
    for (int j = 0; j < resolution; ++j) {
      const double x = bb.min.x + (j + 0.5) * sx;
      if (point_in_quad_oracle(q, x, y)) ++hits;
    }
  }
  return static_cast<double>(hits) / resolution / resolution * bb.width() *
         bb.height();
}

// Convex quad from four well-separated points on a circle. The minimum
// angular gap keeps slivers out so rasterized cross-checks stay tight.
inline Quad random_convex_quad(std::mt19937_64& rng, Point2 center,
                               double radius, double min_gap = 0.5) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::array<double, 4> a;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (double& v : a) v = angle(rng);
    std::sort(a.begin(), a.end());
    double gap = 2.0 * M_PI - (a[3] - a[0]);
    for (int i = 1; i < 4; ++i) gap = std::min(gap, a[i] - a[i - 1]);
    if (gap >= min_gap) break;
  }
  std::array<Point2, 4> c;
  for (int i = 0; i < 4; ++i)
    c[i] = {center.x + radius * std::cos(a[i]),
            center.y + radius * std::sin(a[i])};
  return *Quad::make(c);
}

// Smallest enclosing rectangle area over a dense orientation scan.
inline double min_area_rect_oracle(const std::vector<Point2>& pts, int steps,
                                   double* side_a = nullptr,
                                   double* side_b = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    const double t = k * (M_PI / 2) / steps;
    const double c = std::cos(t), s = std::sin(t);
    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    for (const Point2& p : pts) {
      const double u = c * p.x + s * p.y;
      const double v = -s * p.x + c * p.y;
      ulo = std::min(ulo, u);
      uhi = std::max(uhi, u);
      vlo = std::min(vlo, v);
      vhi = std::max(vhi, v);
    }
    const double area = (uhi - ulo) * (vhi - vlo);
    if (area < best) {
      best = area;
      if (side_a) *side_a = uhi - ulo;
      if (side_b) *side_b = vhi - vlo;
    }
  }
  return best;
}

}  // namespace testsupport
