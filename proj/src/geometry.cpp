#include "palletscope/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace palletscope {

namespace {

// Twice the signed shoelace area. Positive for clockwise winding in image
// coordinates (y down).
double shoelace2(std::span<const Point2> poly) {
  double s = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    s += p.x * q.y - q.x * p.y;
  }
  return s;
}

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return cross(b - a, c - a);
}

bool on_segment_collinear(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Inclusive segment intersection test; touching endpoints count.
bool segments_intersect(const Point2& a0, const Point2& a1, const Point2& b0,
                        const Point2& b1) {
  const double d1 = orient(b0, b1, a0);
  const double d2 = orient(b0, b1, a1);
  const double d3 = orient(a0, a1, b0);
  const double d4 = orient(a0, a1, b1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment_collinear(b0, b1, a0)) return true;
  if (d2 == 0 && on_segment_collinear(b0, b1, a1)) return true;
  if (d3 == 0 && on_segment_collinear(a0, a1, b0)) return true;
  if (d4 == 0 && on_segment_collinear(a0, a1, b1)) return true;
  return false;
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

// Closed row interval of a convex, positively wound polygon. Returns false
// when the row misses the polygon.
bool convex_row_span(std::span<const Point2> poly, double y, double* lo,
                     double* hi) {
  double a = -std::numeric_limits<double>::infinity();
  double b = std::numeric_limits<double>::infinity();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    const double dy = q.y - p.y;
    const double dx = q.x - p.x;
    // Interior of edge p->q: dx*(y - p.y) - dy*(x - p.x) >= 0.
    const double c0 = dx * (y - p.y) + dy * p.x;
    if (dy > 0) {
      b = std::min(b, c0 / dy);
    } else if (dy < 0) {
      a = std::max(a, c0 / dy);
    } else if (c0 < 0) {
      return false;
    }
  }
  if (a > b) return false;
  *lo = a;
  *hi = b;
  return true;
}

int reflex_corner(const std::array<Point2, 4>& c) {
  for (int i = 0; i < 4; ++i) {
    const Point2& a = c[(i + 3) % 4];
    const Point2& b = c[i];
    const Point2& d = c[(i + 1) % 4];
    if (cross(b - a, d - b) < 0) return i;
  }
  return -1;
}

// Count of sample columns j in [0, res) whose center x0 + (j + 0.5) * sx lies
// in the closed interval [lo, hi].
long cells_in_span(double lo, double hi, double x0, double sx, int res) {
  if (!(hi >= lo)) return 0;
  long jlo = static_cast<long>(std::ceil((lo - x0) / sx - 0.5));
  long jhi = static_cast<long>(std::floor((hi - x0) / sx - 0.5));
  jlo = std::max(jlo, 0L);
  jhi = std::min(jhi, static_cast<long>(res) - 1);
  return jhi >= jlo ? jhi - jlo + 1 : 0;
}

bool lex_less(const Quad& a, const Quad& b) {
  for (int i = 0; i < 4; ++i) {
    if (a.c[i].x != b.c[i].x) return a.c[i].x < b.c[i].x;
    if (a.c[i].y != b.c[i].y) return a.c[i].y < b.c[i].y;
  }
  return false;
}

Eigen::Matrix3d to_eigen(const std::array<double, 9>& m) {
  Eigen::Matrix3d e;
  e << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
  return e;
}

std::array<double, 9> from_eigen(const Eigen::Matrix3d& e) {
  return {e(0, 0), e(0, 1), e(0, 2), e(1, 0), e(1, 1),
          e(1, 2), e(2, 0), e(2, 1), e(2, 2)};
}

}  // namespace

Point2 HomogeneousPoint::dehomogenized() const {
  if (is_infinite())
    raise(ErrorCode::InfinitePoint, "cannot dehomogenize a point at infinity");
  return {hx / hw, hy / hw};
}

Point2 HomogeneousPoint::direction() const {
  const double n = std::hypot(hx, hy);
  Point2 d{hx / n, hy / n};
  if (d.y < 0 || (d.y == 0 && d.x < 0)) d = d * -1.0;
  return d;
}

HomogeneousPoint HomogeneousPoint::at_infinity(const Point2& dir) {
  HomogeneousPoint p{dir.x, dir.y, 0.0};
  const Point2 d = p.direction();
  return {d.x, d.y, 0.0};
}

PolarLine PolarLine::normalized(double rho, double theta) {
  double t = std::fmod(theta, 2.0 * kPi);
  if (t < 0) t += 2.0 * kPi;
  double r = rho;
  if (t >= kPi) {
    t -= kPi;
    r = -r;
  }
  if (t >= kPi) t = 0.0;  // guard fmod landing exactly on pi
  return {r, t};
}

PolarLine PolarLine::through(const Point2& p, const Point2& dir) {
  const double n = norm(dir);
  if (n == 0.0)
    raise(ErrorCode::DegenerateCorrespondence, "zero direction for line");
  const Point2 nv = perp({dir.x / n, dir.y / n});
  return normalized(dot(p, nv), std::atan2(nv.y, nv.x));
}

PolarLine PolarLine::from_points(const Point2& a, const Point2& b) {
  return through(a, b - a);
}

BBox BBox::expanded(double factor) const {
  const Point2 c = (min + max) * 0.5;
  const Point2 h = (max - min) * (0.5 * factor);
  return {c - h, c + h};
}

std::optional<Quad> Quad::make(const std::array<Point2, 4>& corners) {
  std::array<Point2, 4> c = corners;
  if (shoelace2(c) < 0) std::swap(c[1], c[3]);  // reverse the cycle
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    const double si = c[i].x + c[i].y;
    const double sb = c[best].x + c[best].y;
    if (si < sb || (si == sb && c[i].y < c[best].y)) best = i;
  }
  std::rotate(c.begin(), c.begin() + best, c.end());
  if (!cycle_is_simple(c)) return std::nullopt;
  if (shoelace2(c) <= 0.0) return std::nullopt;
  return Quad{c};
}

Quad Quad::make_or_raise(const std::array<Point2, 4>& corners, ErrorCode code,
                         const std::string& context) {
  auto q = make(corners);
  if (!q) raise(code, context + ": corners do not form a simple quad");
  return *q;
}

bool Quad::cycle_is_simple(const std::array<Point2, 4>& c) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (c[i] == c[j]) return false;
  // Opposite edges share no vertices, so any contact is a crossing.
  if (segments_intersect(c[0], c[1], c[2], c[3])) return false;
  if (segments_intersect(c[1], c[2], c[3], c[0])) return false;
  return true;
}

bool Quad::is_convex() const { return reflex_corner(c) < 0; }

bool Quad::contains(const Point2& p) const {
  const double scale = std::max({1.0, std::abs(p.x), std::abs(p.y)});
  for (int i = 0; i < 4; ++i)
    if (point_segment_distance(p, c[i], c[(i + 1) % 4]) <= 1e-9 * scale)
      return true;
  bool inside = false;
  for (int i = 0; i < 4; ++i) {
    const Point2& a = c[i];
    const Point2& b = c[(i + 1) % 4];
    if ((a.y <= p.y && p.y < b.y) || (b.y <= p.y && p.y < a.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

BBox Quad::bbox() const {
  BBox b{c[0], c[0]};
  for (int i = 1; i < 4; ++i) {
    b.min.x = std::min(b.min.x, c[i].x);
    b.min.y = std::min(b.min.y, c[i].y);
    b.max.x = std::max(b.max.x, c[i].x);
    b.max.y = std::max(b.max.y, c[i].y);
  }
  return b;
}

Point2 Quad::centroid() const {
  return (c[0] + c[1] + c[2] + c[3]) * 0.25;
}

Homography Homography::from_raw(const std::array<double, 9>& raw) {
  double fro = 0.0;
  for (double v : raw) fro += v * v;
  fro = std::sqrt(fro);
  if (!(fro > 0.0) || !std::isfinite(fro))
    raise(ErrorCode::DegenerateCorrespondence, "homography norm is not positive");
  std::array<double, 9> m;
  for (int i = 0; i < 9; ++i) m[i] = raw[i] / fro;
  int imax = 0;
  for (int i = 1; i < 9; ++i)
    if (std::abs(m[i]) > std::abs(m[imax])) imax = i;
  if (m[imax] < 0)
    for (double& v : m) v = -v;
  if (std::abs(to_eigen(m).determinant()) < 1e-12)
    raise(ErrorCode::DegenerateCorrespondence, "homography is singular");
  return Homography{m};
}

Homography Homography::inverse() const {
  return from_raw(from_eigen(to_eigen(m).inverse()));
}

HomogeneousPoint Homography::map(const Point2& p) const {
  return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5],
          m[6] * p.x + m[7] * p.y + m[8]};
}

Quad Homography::map(const Quad& q) const {
  std::array<Point2, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = apply_homography(*this, q.c[i]);
  return Quad::make_or_raise(out, ErrorCode::DegenerateCorrespondence,
                             "mapped quad");
}

HomogeneousPoint intersect_lines(const PolarLine& a, const PolarLine& b) {
  const double ca = std::cos(a.theta), sa = std::sin(a.theta);
  const double cb = std::cos(b.theta), sb = std::sin(b.theta);
  // Cross product of the homogeneous line vectors (c, s, -rho).
  const HomogeneousPoint p{a.rho * sb - b.rho * sa, b.rho * ca - a.rho * cb,
                           ca * sb - sa * cb};
  const double scale = 1.0 + std::abs(a.rho) + std::abs(b.rho);
  if (std::abs(p.hx) <= 1e-9 * scale && std::abs(p.hy) <= 1e-9 * scale &&
      std::abs(p.hw) <= 1e-9)
    raise(ErrorCode::IdenticalLines, "lines coincide, no unique intersection");
  return p;
}

double point_line_distance(const HomogeneousPoint& p, const PolarLine& line) {
  if (p.is_infinite())
    raise(ErrorCode::InfinitePoint, "distance from a point at infinity");
  return std::abs(line.eval(p.dehomogenized()));
}

double polygon_area(const Quad& q) { return 0.5 * shoelace2(q.c); }

double polygon_area(std::span<const Point2> poly) {
  if (poly.size() < 3) return 0.0;
  return 0.5 * std::abs(shoelace2(poly));
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return pts;
  auto turn = [](const Point2& o, const Point2& a, const Point2& b) {
    return cross(a - o, b - o);
  };
  std::vector<Point2> hull(2 * static_cast<size_t>(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Point2> convex_clip(std::span<const Point2> subject,
                                const Quad& clip) {
  std::vector<Point2> poly(subject.begin(), subject.end());
  for (int e = 0; e < 4 && !poly.empty(); ++e) {
    const Point2& p = clip.c[e];
    const Point2& q = clip.c[(e + 1) % 4];
    const Point2 d = q - p;
    std::vector<Point2> out;
    out.reserve(poly.size() + 2);
    for (size_t i = 0; i < poly.size(); ++i) {
      const Point2& s = poly[i];
      const Point2& t = poly[(i + 1) % poly.size()];
      const double ds = cross(d, s - p);
      const double dt = cross(d, t - p);
      if (ds >= 0) out.push_back(s);
      if ((ds >= 0) != (dt >= 0)) out.push_back(s + (t - s) * (ds / (ds - dt)));
    }
    poly = std::move(out);
  }
  return poly;
}

RowSpans quad_row_spans(const Quad& q, double y) {
  RowSpans out;
  const int r = reflex_corner(q.c);
  if (r < 0) {
    double lo, hi;
    if (convex_row_span(q.c, y, &lo, &hi)) out.span[out.count++] = {lo, hi};
    return out;
  }
  // One reflex corner: the diagonal from it splits the quad into two
  // positively wound triangles.
  const std::array<Point2, 3> t0{q.c[r], q.c[(r + 1) % 4], q.c[(r + 2) % 4]};
  const std::array<Point2, 3> t1{q.c[r], q.c[(r + 2) % 4], q.c[(r + 3) % 4]};
  double lo, hi;
  if (convex_row_span(t0, y, &lo, &hi)) out.span[out.count++] = {lo, hi};
  if (convex_row_span(t1, y, &lo, &hi)) {
    if (out.count == 1 && lo <= out.span[0].second && out.span[0].first <= hi) {
      out.span[0] = {std::min(out.span[0].first, lo),
                     std::max(out.span[0].second, hi)};
    } else {
      out.span[out.count++] = {lo, hi};
      if (out.count == 2 && out.span[0].first > out.span[1].first)
        std::swap(out.span[0], out.span[1]);
    }
  }
  return out;
}

double quad_iou_raster(const Quad& a, const Quad& b, int resolution) {
  const BBox ba = a.bbox();
  const BBox bb = b.bbox();
  const BBox joint{{std::min(ba.min.x, bb.min.x), std::min(ba.min.y, bb.min.y)},
                   {std::max(ba.max.x, bb.max.x), std::max(ba.max.y, bb.max.y)}};
  const double sx = joint.width() / resolution;
  const double sy = joint.height() / resolution;
  if (!(sx > 0) || !(sy > 0)) return 0.0;
  long inter = 0, uni = 0;
  for (int i = 0; i < resolution; ++i) {
    const double y = joint.min.y + (i + 0.5) * sy;
    const RowSpans ra = quad_row_spans(a, y);
    const RowSpans rb = quad_row_spans(b, y);
    long ca = 0, cb = 0, ci = 0;
    for (int k = 0; k < ra.count; ++k)
      ca += cells_in_span(ra.span[k].first, ra.span[k].second, joint.min.x, sx,
                          resolution);
    for (int k = 0; k < rb.count; ++k)
      cb += cells_in_span(rb.span[k].first, rb.span[k].second, joint.min.x, sx,
                          resolution);
    for (int k = 0; k < ra.count; ++k)
      for (int l = 0; l < rb.count; ++l) {
        const double lo = std::max(ra.span[k].first, rb.span[l].first);
        const double hi = std::min(ra.span[k].second, rb.span[l].second);
        ci += cells_in_span(lo, hi, joint.min.x, sx, resolution);
      }
    inter += ci;
    uni += ca + cb - ci;
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double quad_iou(const Quad& a, const Quad& b, int raster_resolution) {
  // Canonical argument order: iou(a, b) and iou(b, a) run the same clip.
  const Quad* first = &a;
  const Quad* second = &b;
  if (lex_less(*second, *first)) std::swap(first, second);
  if (first->is_convex() && second->is_convex()) {
    const std::vector<Point2> clipped =
        convex_clip(std::span<const Point2>(first->c.data(), 4), *second);
    const double inter = polygon_area(clipped);
    const double uni = polygon_area(*first) + polygon_area(*second) - inter;
    if (!(uni > 0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
  }
  return quad_iou_raster(*first, *second, raster_resolution);
}

Homography homography_from_correspondences(const std::array<Point2, 4>& src,
                                           const std::array<Point2, 4>& dst) {
  auto check_not_collinear = [](const std::array<Point2, 4>& pts,
                                const char* which) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) {
          const Point2 u = pts[j] - pts[i];
          const Point2 v = pts[k] - pts[i];
          if (std::abs(cross(u, v)) <= 1e-9 * std::max(1.0, norm(u) * norm(v)))
            raise(ErrorCode::DegenerateCorrespondence,
                  std::string("three collinear points in ") + which);
        }
  };
  check_not_collinear(src, "source");
  check_not_collinear(dst, "destination");

  // Similarity normalization keeps the DLT well conditioned at pixel scale.
  auto normalizer = [](const std::array<Point2, 4>& pts) {
    Point2 mu{0, 0};
    for (const Point2& p : pts) mu = mu + p;
    mu = mu * 0.25;
    double mean_dist = 0.0;
    for (const Point2& p : pts) mean_dist += distance(p, mu);
    mean_dist *= 0.25;
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * mu.x, 0, s, -s * mu.y, 0, 0, 1;
    return t;
  };
  const Eigen::Matrix3d ts = normalizer(src);
  const Eigen::Matrix3d td = normalizer(dst);

  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = s.x() / s.z(), y = s.y() / s.z();
    const double u = d.x() / d.z(), v = d.y() / d.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Homography out = Homography::from_raw(from_eigen(td.inverse() * hn * ts));

  for (int i = 0; i < 4; ++i)
    if (distance(apply_homography(out, src[i]), dst[i]) >= 1e-6)
      raise(ErrorCode::DegenerateCorrespondence,
            "correspondences are not reproduced by a projective map");
  return out;
}

Point2 apply_homography(const Homography& h, const Point2& p) {
  const HomogeneousPoint hp = h.map(p);
  if (std::abs(hp.hw) < 1e-12)
    raise(ErrorCode::MapsToInfinity, "point maps to the line at infinity");
  return {hp.hx / hp.hw, hp.hy / hp.hw};
}

}  // namespace palletscope
