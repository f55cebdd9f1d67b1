#include "palletscope/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "palletscope/error.hpp"

namespace palletscope {

namespace {

constexpr double kMaxPitchRad = 15.0 * kPi / 180.0;
constexpr double kMaxRollRad = 5.0 * kPi / 180.0;
constexpr double kMinSubtendRad = 15.0 * kPi / 180.0;
constexpr float kTopShade = 0.20f;
constexpr float kLeftShade = 0.45f;
constexpr float kRightShade = 0.55f;
constexpr float kPalletSideShade = 0.30f;
constexpr float kPalletDeckShade = 0.35f;
constexpr float kEdgeShade = 1.0f;

struct V3 {
    double x = 0.0, y = 0.0, z = 0.0;

    V3 operator+(const V3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    V3 operator-(const V3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    V3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

double dot3(const V3& a, const V3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

struct Camera {
    V3 pos, right, down, fwd;
    double focal = 1.0;
    Point2 pp;
};

Camera make_camera(const CameraSpec& c) {
    Camera cam;
    cam.pos = {c.x, c.y, c.z};
    cam.focal = c.focal_px;
    cam.pp = c.principal;
    // Base frame looks along +Y; yaw swings it toward +X, pitch tips the
    // forward axis toward the down axis, roll tips right toward down.
    const double sy = std::sin(c.yaw), cy = std::cos(c.yaw);
    const V3 r1{cy, -sy, 0.0};
    const V3 f1{sy, cy, 0.0};
    const V3 d1{0.0, 0.0, -1.0};
    const double sp = std::sin(c.pitch), cp = std::cos(c.pitch);
    const V3 f2 = f1 * cp + d1 * sp;
    const V3 d2 = d1 * cp - f1 * sp;
    const double sr = std::sin(c.roll), cr = std::cos(c.roll);
    cam.right = r1 * cr + d2 * sr;
    cam.down = d2 * cr - r1 * sr;
    cam.fwd = f2;
    return cam;
}

double depth_of(const Camera& cam, const V3& X) {
    return dot3(cam.fwd, X - cam.pos);
}

Point2 project(const Camera& cam, const V3& X) {
    const V3 q = X - cam.pos;
    const double zc = dot3(cam.fwd, q);
    return Point2{cam.focal * dot3(cam.right, q) / zc + cam.pp.x,
                  cam.focal * dot3(cam.down, q) / zc + cam.pp.y};
}

HomogeneousPoint vp_of_direction(const Camera& cam, const V3& d) {
    const double xc = dot3(cam.right, d);
    const double yc = dot3(cam.down, d);
    const double zc = dot3(cam.fwd, d);
    return HomogeneousPoint{cam.focal * xc + cam.pp.x * zc,
                            cam.focal * yc + cam.pp.y * zc, zc};
}

// One vertical box side: lattice(i, j) = origin + hstep*i + vstep*j with
// row 0 along the top edge.
struct FaceGeom {
    V3 origin, hstep, vstep;
    V3 outward;
    V3 hdir;  // world direction of the horizontal edges
    int rows = 0, cols = 0;

    V3 lattice(int i, int j) const { return origin + hstep * i + vstep * j; }
    V3 center() const {
        return origin + hstep * (cols * 0.5) + vstep * (rows * 0.5);
    }
};

void validate_spec(const SceneSpec& s) {
    if (s.na < 1 || s.nb < 1 || s.layers < 1)
        raise(ErrorCode::ConfigError, "package counts must be at least 1");
    if (s.package_dims.w <= 0.0 || s.package_dims.d <= 0.0 ||
        s.package_dims.h <= 0.0 || s.pallet_dims.w <= 0.0 ||
        s.pallet_dims.d <= 0.0 || s.pallet_dims.h <= 0.0)
        raise(ErrorCode::ConfigError, "dimensions must be positive");
    if (s.image_width < 32 || s.image_height < 32)
        raise(ErrorCode::ConfigError, "image too small to render");
    if (s.camera.focal_px <= 0.0)
        raise(ErrorCode::ConfigError, "focal length must be positive");
    if (std::abs(s.camera.pitch) > kMaxPitchRad + 1e-12)
        raise(ErrorCode::ConfigError, "camera pitch exceeds 15 degrees");
    if (std::abs(s.camera.roll) > kMaxRollRad + 1e-12)
        raise(ErrorCode::ConfigError, "camera roll exceeds 5 degrees");
    if (s.noise.edge_dropout < 0.0 || s.noise.edge_dropout > 1.0)
        raise(ErrorCode::ConfigError, "edge_dropout must be in [0,1]");
    if (s.noise.corner_jitter_px < 0.0)
        raise(ErrorCode::ConfigError, "corner_jitter_px must be nonnegative");
}

// Horizontal angle the face's vertical extremes subtend at the camera.
double subtend_angle(const Camera& cam, const FaceGeom& f) {
    const V3 e0 = f.lattice(0, 0);
    const V3 e1 = f.lattice(f.cols, 0);
    const double ax = e0.x - cam.pos.x, ay = e0.y - cam.pos.y;
    const double bx = e1.x - cam.pos.x, by = e1.y - cam.pos.y;
    return std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
}

void draw_line(GrayImage& img, const Point2& a, const Point2& b) {
    const double len = distance(a, b);
    const int n = std::max(2, static_cast<int>(std::ceil(len * 2.0)));
    for (int s = 0; s <= n; ++s) {
        const double t = static_cast<double>(s) / n;
        const int x = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
        const int y = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
        if (img.in_bounds(x, y)) img.at(x, y) = kEdgeShade;
    }
}

void fill_gray(GrayImage& img, std::span<const Point2> poly, float shade) {
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
        for (int x = xi0; x <= xi1; ++x) img.at(x, y) = shade;
    }
}

void fill_box_face(GrayImage& img, const Camera& cam,
                   const std::array<V3, 4>& corners, float shade) {
    std::array<Point2, 4> px;
    for (int i = 0; i < 4; ++i) px[i] = project(cam, corners[i]);
    fill_gray(img, px, shade);
}

// Emitted masks carry the slack of an upstream segmentation stage rather
// than hugging the silhouette exactly: each hull edge is pushed outward and
// adjacent offset edges are re-intersected. Adjacent hull edges never share
// a direction (the hull drops collinear points), so the intersections are
// well defined and the result stays convex.
constexpr double kMaskSlackPx = 2.0;

std::vector<Point2> offset_convex(const std::vector<Point2>& poly, double s) {
    const int n = static_cast<int>(poly.size());
    if (n < 3) return poly;
    Point2 centroid{0.0, 0.0};
    for (const Point2& p : poly) centroid = centroid + p;
    centroid = centroid * (1.0 / n);

    struct OffsetEdge {
        Point2 p, d;
    };
    std::vector<OffsetEdge> edges(n);
    for (int i = 0; i < n; ++i) {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % n];
        const Point2 dir = b - a;
        Point2 nrm = perp(dir) * (1.0 / norm(dir));
        if (dot(nrm, centroid - a) > 0.0) nrm = nrm * -1.0;
        edges[i] = {a + nrm * s, dir};
    }
    std::vector<Point2> out(n);
    for (int i = 0; i < n; ++i) {
        const OffsetEdge& e0 = edges[(i + n - 1) % n];
        const OffsetEdge& e1 = edges[i];
        const double denom = cross(e0.d, e1.d);
        const double t = cross(e1.p - e0.p, e1.d) / denom;
        out[i] = e0.p + e0.d * t;
    }
    return out;
}

}  // namespace

RenderedScene project_scene(const SceneSpec& spec) {
    validate_spec(spec);
    const Camera cam = make_camera(spec.camera);

    const double W = spec.na * spec.package_dims.w;
    const double D = spec.nb * spec.package_dims.d;
    const double z0 = spec.pallet_dims.h;
    const double z1 = z0 + spec.layers * spec.package_dims.h;

    // Full-extent requirement: every stack corner (and pallet corner when
    // the pallet is drawn) must project in front of the camera and inside
    // the frame.
    std::vector<V3> frame_corners;
    for (const double x : {-W / 2.0, W / 2.0})
        for (const double y : {-D / 2.0, D / 2.0})
            for (const double z : {z0, z1}) frame_corners.push_back({x, y, z});
    if (spec.render_pallet)
        for (const double x : {-spec.pallet_dims.w / 2.0, spec.pallet_dims.w / 2.0})
            for (const double y : {-spec.pallet_dims.d / 2.0, spec.pallet_dims.d / 2.0})
                for (const double z : {0.0, z0}) frame_corners.push_back({x, y, z});
    std::vector<Point2> stack_px;
    for (size_t i = 0; i < frame_corners.size(); ++i) {
        if (depth_of(cam, frame_corners[i]) <= 1e-9)
            raise(ErrorCode::SceneOutOfFrame, "stack behind the camera");
        const Point2 p = project(cam, frame_corners[i]);
        if (p.x < 0.0 || p.x > spec.image_width - 1.0 || p.y < 0.0 ||
            p.y > spec.image_height - 1.0)
            raise(ErrorCode::SceneOutOfFrame,
                  "stack projects outside the image");
        if (i < 8) stack_px.push_back(p);
    }

    // The four candidate vertical sides; a corner view keeps exactly two.
    const V3 vstep{0.0, 0.0, -spec.package_dims.h};
    const std::array<FaceGeom, 4> candidates{
        FaceGeom{{-W / 2.0, -D / 2.0, z1}, {spec.package_dims.w, 0.0, 0.0},
                 vstep, {0.0, -1.0, 0.0}, {1.0, 0.0, 0.0}, spec.layers, spec.na},
        FaceGeom{{-W / 2.0, D / 2.0, z1}, {spec.package_dims.w, 0.0, 0.0},
                 vstep, {0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}, spec.layers, spec.na},
        FaceGeom{{-W / 2.0, -D / 2.0, z1}, {0.0, spec.package_dims.d, 0.0},
                 vstep, {-1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, spec.layers, spec.nb},
        FaceGeom{{W / 2.0, -D / 2.0, z1}, {0.0, spec.package_dims.d, 0.0},
                 vstep, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, spec.layers, spec.nb}};
    std::vector<FaceGeom> faces;
    for (const FaceGeom& f : candidates)
        if (dot3(f.outward, cam.pos - f.center()) > 1e-9) faces.push_back(f);
    if (faces.size() != 2)
        raise(ErrorCode::ConfigError,
              "camera must see exactly two side faces");
    for (const FaceGeom& f : faces)
        if (subtend_angle(cam, f) < kMinSubtendRad - 1e-12)
            raise(ErrorCode::ConfigError,
                  "each side face must subtend at least 15 degrees");

    // ---- ground truth (before any noise) ----

    auto face_truth = [&](const FaceGeom& f) {
        FaceTruth t;
        t.rows = f.rows;
        t.cols = f.cols;
        const std::array<Point2, 4> q{
            project(cam, f.lattice(0, 0)), project(cam, f.lattice(f.cols, 0)),
            project(cam, f.lattice(f.cols, f.rows)),
            project(cam, f.lattice(0, f.rows))};
        t.quad = Quad::make_or_raise(q, ErrorCode::SceneOutOfFrame,
                                     "projected face");
        for (int j = 0; j < f.rows; ++j)
            for (int i = 0; i < f.cols; ++i) {
                const std::array<Point2, 4> p{
                    project(cam, f.lattice(i, j)),
                    project(cam, f.lattice(i + 1, j)),
                    project(cam, f.lattice(i + 1, j + 1)),
                    project(cam, f.lattice(i, j + 1))};
                t.packages.push_back(Quad::make_or_raise(
                    p, ErrorCode::SceneOutOfFrame, "projected package"));
            }
        return t;
    };

    FaceTruth t0 = face_truth(faces[0]);
    FaceTruth t1 = face_truth(faces[1]);
    const bool zero_is_left =
        t0.quad.centroid().x <= t1.quad.centroid().x;

    SceneGroundTruth truth;
    truth.left = zero_is_left ? std::move(t0) : std::move(t1);
    truth.right = zero_is_left ? std::move(t1) : std::move(t0);
    truth.vertical_vp = vp_of_direction(cam, V3{0.0, 0.0, 1.0});
    truth.left_vp =
        vp_of_direction(cam, zero_is_left ? faces[0].hdir : faces[1].hdir);
    truth.right_vp =
        vp_of_direction(cam, zero_is_left ? faces[1].hdir : faces[0].hdir);
    truth.total = spec.layers * spec.na * spec.nb;

    BinaryImage mask_bits(spec.image_width, spec.image_height);
    const std::vector<Point2> hull =
        offset_convex(convex_hull(stack_px), kMaskSlackPx);
    fill_convex_polygon(mask_bits, hull);
    truth.mask = InstanceMask::from_binary(std::move(mask_bits));

    // ---- rendering ----

    GrayImage img(spec.image_width, spec.image_height, 0.0f);

    if (spec.render_pallet) {
        const double pw = spec.pallet_dims.w / 2.0;
        const double pd = spec.pallet_dims.d / 2.0;
        const std::array<FaceGeom, 4> sides{
            FaceGeom{{-pw, -pd, z0}, {2 * pw, 0, 0}, {0, 0, -z0},
                     {0.0, -1.0, 0.0}, {1, 0, 0}, 1, 1},
            FaceGeom{{-pw, pd, z0}, {2 * pw, 0, 0}, {0, 0, -z0},
                     {0.0, 1.0, 0.0}, {1, 0, 0}, 1, 1},
            FaceGeom{{-pw, -pd, z0}, {0, 2 * pd, 0}, {0, 0, -z0},
                     {-1.0, 0.0, 0.0}, {0, 1, 0}, 1, 1},
            FaceGeom{{pw, -pd, z0}, {0, 2 * pd, 0}, {0, 0, -z0},
                     {1.0, 0.0, 0.0}, {0, 1, 0}, 1, 1}};
        if (cam.pos.z > z0)
            fill_box_face(img, cam,
                          {V3{-pw, -pd, z0}, V3{pw, -pd, z0}, V3{pw, pd, z0},
                           V3{-pw, pd, z0}},
                          kPalletDeckShade);
        for (const FaceGeom& f : sides)
            if (dot3(f.outward, cam.pos - f.center()) > 1e-9)
                fill_box_face(img, cam,
                              {f.lattice(0, 0), f.lattice(1, 0),
                               f.lattice(1, 1), f.lattice(0, 1)},
                              kPalletSideShade);
    }

    if (cam.pos.z > z1)
        fill_box_face(img, cam,
                      {V3{-W / 2.0, -D / 2.0, z1}, V3{W / 2.0, -D / 2.0, z1},
                       V3{W / 2.0, D / 2.0, z1}, V3{-W / 2.0, D / 2.0, z1}},
                      kTopShade);

    const FaceGeom& left_geom = zero_is_left ? faces[0] : faces[1];
    for (const FaceGeom& f : faces) {
        const bool is_left = &f == &left_geom;
        fill_box_face(img, cam,
                      {f.lattice(0, 0), f.lattice(f.cols, 0),
                       f.lattice(f.cols, f.rows), f.lattice(0, f.rows)},
                      is_left ? kLeftShade : kRightShade);
    }

    // Bright grid edges with lattice jitter and per-span dropout. Faces are
    // processed in their fixed world order so the random stream never
    // depends on which side ends up left in the image.
    std::mt19937_64 eng(spec.seed);
    std::normal_distribution<double> jitter(0.0, spec.noise.corner_jitter_px);
    std::bernoulli_distribution drop(spec.noise.edge_dropout);
    for (const FaceGeom& f : faces) {
        std::vector<Point2> px;
        px.reserve(static_cast<size_t>(f.rows + 1) * (f.cols + 1));
        for (int j = 0; j <= f.rows; ++j)
            for (int i = 0; i <= f.cols; ++i) {
                Point2 p = project(cam, f.lattice(i, j));
                if (spec.noise.corner_jitter_px > 0.0) {
                    p.x += jitter(eng);
                    p.y += jitter(eng);
                }
                px.push_back(p);
            }
        const int stride = f.cols + 1;
        for (int j = 0; j <= f.rows; ++j)
            for (int i = 0; i < f.cols; ++i) {
                if (spec.noise.edge_dropout > 0.0 && drop(eng)) continue;
                draw_line(img, px[j * stride + i], px[j * stride + i + 1]);
            }
        for (int i = 0; i <= f.cols; ++i)
            for (int j = 0; j < f.rows; ++j) {
                if (spec.noise.edge_dropout > 0.0 && drop(eng)) continue;
                draw_line(img, px[j * stride + i], px[(j + 1) * stride + i]);
            }
    }

    RenderedScene out;
    out.image = std::move(img);
    out.truth = std::move(truth);
    return out;
}

}  // namespace palletscope
