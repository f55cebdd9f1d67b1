#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "palletscope/error.hpp"
#include "palletscope/synth.hpp"

using namespace palletscope;

namespace {

// ---- independent projection oracle ----
//
// Re-derives the camera from the documented conventions using generic
// Rodrigues rotation matrices, a different construction from whatever the
// library does internally.

struct V3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct M3 {
    double m[3][3];
};

M3 matmul(const M3& a, const M3& b) {
    M3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
            r.m[i][j] = s;
        }
    return r;
}

M3 rodrigues(V3 axis, double angle) {
    const double n = std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
    const double ux = axis.x / n, uy = axis.y / n, uz = axis.z / n;
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    return M3{{{c + ux * ux * t, ux * uy * t - uz * s, ux * uz * t + uy * s},
               {uy * ux * t + uz * s, c + uy * uy * t, uy * uz * t - ux * s},
               {uz * ux * t - uy * s, uz * uy * t + ux * s, c + uz * uz * t}}};
}

V3 col(const M3& a, int j) { return V3{a.m[0][j], a.m[1][j], a.m[2][j]}; }

struct OracleCam {
    M3 cam_to_world;  // columns: right, down, forward
    V3 pos;
    double focal;
    Point2 pp;
};

OracleCam oracle_camera(const CameraSpec& c) {
    // Base frame: right=+X, down=-Z, forward=+Y.
    const M3 base{{{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, -1.0, 0.0}}};
    // Positive yaw turns the view toward +X, which is a negative right-hand
    // rotation about +Z.
    M3 r = matmul(rodrigues(V3{0, 0, 1}, -c.yaw), base);
    // Positive pitch looks down: negative right-hand rotation about the
    // camera's right axis.
    r = matmul(rodrigues(col(r, 0), -c.pitch), r);
    r = matmul(rodrigues(col(r, 2), c.roll), r);
    return OracleCam{r, V3{c.x, c.y, c.z}, c.focal_px, c.principal};
}

Point2 oracle_project(const OracleCam& cam, V3 X) {
    const V3 q{X.x - cam.pos.x, X.y - cam.pos.y, X.z - cam.pos.z};
    const V3 r = col(cam.cam_to_world, 0);
    const V3 d = col(cam.cam_to_world, 1);
    const V3 f = col(cam.cam_to_world, 2);
    const double xc = r.x * q.x + r.y * q.y + r.z * q.z;
    const double yc = d.x * q.x + d.y * q.y + d.z * q.z;
    const double zc = f.x * q.x + f.y * q.y + f.z * q.z;
    REQUIRE(zc > 0.0);
    return Point2{cam.focal * xc / zc + cam.pp.x,
                  cam.focal * yc / zc + cam.pp.y};
}

// World corners of the two visible side faces, derived from the documented
// stack layout (pallet deck top at z = pallet h, stack centered in XY).
struct OracleFace {
    std::vector<V3> lattice;  // (rows+1) x (cols+1), row 0 at the stack top
    int rows = 0, cols = 0;
};

OracleFace oracle_face(const SceneSpec& s, bool y_normal_face) {
    const double W = s.na * s.package_dims.w;
    const double D = s.nb * s.package_dims.d;
    const double z1 = s.pallet_dims.h + s.layers * s.package_dims.h;
    OracleFace f;
    f.rows = s.layers;
    f.cols = y_normal_face ? s.na : s.nb;
    for (int j = 0; j <= f.rows; ++j)
        for (int i = 0; i <= f.cols; ++i) {
            const double z = z1 - j * s.package_dims.h;
            if (y_normal_face)
                f.lattice.push_back(
                    V3{-W / 2.0 + i * s.package_dims.w, -D / 2.0, z});
            else
                f.lattice.push_back(
                    V3{W / 2.0, -D / 2.0 + i * s.package_dims.d, z});
        }
    return f;
}

double min_corner_distance(const Point2& p, const Quad& q) {
    double best = 1e300;
    for (int i = 0; i < 4; ++i) best = std::min(best, distance(p, q.c[i]));
    return best;
}

// Scene used by most cases: 45 deg azimuth onto a square-plan stack, seen
// slightly from above. Both faces subtend ~17 deg.
SceneSpec base_spec() {
    SceneSpec s;
    s.na = 2;
    s.nb = 3;
    s.layers = 3;
    const double d = 2.8;
    s.camera.x = d / std::sqrt(2.0);
    s.camera.y = -d / std::sqrt(2.0);
    s.camera.z = 1.1;
    s.camera.yaw = -kPi / 4.0;
    s.camera.pitch = 0.24;
    s.camera.roll = 0.0;
    s.camera.focal_px = 800.0;
    s.camera.principal = Point2{320.0, 240.0};
    return s;
}

}  // namespace

TEST_CASE("ground truth corners agree with an independent camera model") {
    SceneSpec s;
    s.na = 3;
    s.nb = 3;
    s.layers = 4;
    s.camera.x = 2.6;
    s.camera.y = -2.0;
    s.camera.z = 1.0;
    s.camera.yaw = std::atan2(-2.6, 2.0);
    s.camera.pitch = 0.17;
    s.camera.roll = 0.05;
    s.camera.focal_px = 700.0;
    s.camera.principal = Point2{320.0, 240.0};

    const RenderedScene scene = project_scene(s);
    const OracleCam cam = oracle_camera(s.camera);

    // The camera sits in the x>0, y<0 quadrant, so it sees the -Y face (on
    // the image's left) and the +X face (right).
    const OracleFace fl = oracle_face(s, true);
    const OracleFace fr = oracle_face(s, false);
    CHECK(scene.truth.left.rows == s.layers);
    CHECK(scene.truth.left.cols == s.na);
    CHECK(scene.truth.right.cols == s.nb);
    REQUIRE(scene.truth.left.packages.size() ==
            static_cast<size_t>(s.layers * s.na));
    REQUIRE(scene.truth.right.packages.size() ==
            static_cast<size_t>(s.layers * s.nb));

    auto check_face = [&](const FaceTruth& got, const OracleFace& want) {
        const int stride = want.cols + 1;
        // Face quad corners = extreme lattice points.
        const std::array<V3, 4> face3{
            want.lattice[0], want.lattice[want.cols],
            want.lattice[want.rows * stride + want.cols],
            want.lattice[want.rows * stride]};
        for (const V3& w : face3)
            CHECK(min_corner_distance(oracle_project(cam, w), got.quad) <
                  1e-9);
        // Every package quad corner reprojects onto its lattice point.
        for (int j = 0; j < want.rows; ++j)
            for (int i = 0; i < want.cols; ++i) {
                const Quad& pq = got.packages[j * want.cols + i];
                const std::array<V3, 4> p3{
                    want.lattice[j * stride + i],
                    want.lattice[j * stride + i + 1],
                    want.lattice[(j + 1) * stride + i + 1],
                    want.lattice[(j + 1) * stride + i]};
                for (const V3& w : p3)
                    CHECK(min_corner_distance(oracle_project(cam, w), pq) <
                          1e-9);
            }
    };
    check_face(scene.truth.left, fl);
    check_face(scene.truth.right, fr);

    // Row 0 is the top layer: it must sit above row 1 in the image.
    const Quad& top_pkg = scene.truth.left.packages[0];
    const Quad& below_pkg = scene.truth.left.packages[s.na];
    CHECK(top_pkg.centroid().y < below_pkg.centroid().y);

    CHECK(scene.truth.total == s.layers * s.na * s.nb);
}

TEST_CASE("45 degree view of a square plan mirrors left and right faces") {
    const SceneSpec s = base_spec();  // na*w == nb*d == 1.2 m
    const RenderedScene scene = project_scene(s);

    auto mirrored = [&](const Quad& q) {
        std::array<Point2, 4> c;
        for (int i = 0; i < 4; ++i)
            c[i] = Point2{2.0 * s.camera.principal.x - q.c[i].x, q.c[i].y};
        return Quad::make_or_raise(c, ErrorCode::DegenerateMask, "mirror");
    };
    const Quad ml = mirrored(scene.truth.left.quad);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(ml.c[i].x - scene.truth.right.quad.c[i].x) < 1e-6);
        CHECK(std::abs(ml.c[i].y - scene.truth.right.quad.c[i].y) < 1e-6);
    }

    // The lateral vanishing points mirror as well.
    const Point2 lv = scene.truth.left_vp.dehomogenized();
    const Point2 rv = scene.truth.right_vp.dehomogenized();
    CHECK(std::abs((2.0 * s.camera.principal.x - lv.x) - rv.x) < 1e-6);
    CHECK(std::abs(lv.y - rv.y) < 1e-6);
}

TEST_CASE("zero pitch and roll sends the vertical vp to infinity") {
    SceneSpec s = base_spec();
    s.camera.pitch = 0.0;
    s.camera.z = 0.45;  // near stack mid-height so the frame still holds it
    const RenderedScene scene = project_scene(s);
    CHECK(scene.truth.vertical_vp.is_infinite());
    const Point2 dir = scene.truth.vertical_vp.direction();
    CHECK(dir.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dir.y == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("emitted vps match intersections of ground truth edge lines") {
    const SceneSpec s = base_spec();
    const RenderedScene scene = project_scene(s);
    const SceneGroundTruth& t = scene.truth;

    // Two horizontal edges from different layers of the left face.
    const Quad& a = t.left.packages.front();
    const Quad& b = t.left.packages.back();
    const PolarLine ha = PolarLine::from_points(a.c[0], a.c[1]);
    const PolarLine hb = PolarLine::from_points(b.c[2], b.c[3]);
    const HomogeneousPoint lv = intersect_lines(ha, hb);
    CHECK(distance(lv.dehomogenized(), t.left_vp.dehomogenized()) < 1e-6);

    // Verticals from the two faces meet at the vertical VP.
    const PolarLine va = PolarLine::from_points(a.c[1], a.c[2]);
    const PolarLine vb = PolarLine::from_points(
        t.right.packages.back().c[1], t.right.packages.back().c[2]);
    const HomogeneousPoint vv = intersect_lines(va, vb);
    CHECK(distance(vv.dehomogenized(), t.vertical_vp.dehomogenized()) < 1e-6);
}

TEST_CASE("packages tile their face exactly") {
    const SceneSpec s = base_spec();
    const RenderedScene scene = project_scene(s);
    for (const FaceTruth* f : {&scene.truth.left, &scene.truth.right}) {
        double sum = 0.0;
        for (const Quad& p : f->packages) {
            sum += polygon_area(p);
            for (int i = 0; i < 4; ++i) CHECK(f->quad.contains(p.c[i]));
        }
        CHECK(sum == doctest::Approx(polygon_area(f->quad)).epsilon(1e-9));
        // Extreme packages share their outer corners with the face.
        for (int i = 0; i < 4; ++i) {
            double best = 1e300;
            for (const Quad& p : f->packages)
                best = std::min(best, min_corner_distance(f->quad.c[i], p));
            CHECK(best < 1e-9);
        }
    }
}

TEST_CASE("mask covers both face quads") {
    const SceneSpec s = base_spec();
    const RenderedScene scene = project_scene(s);
    const BBox mb = scene.truth.mask.bbox();
    for (const FaceTruth* f : {&scene.truth.left, &scene.truth.right})
        for (int i = 0; i < 4; ++i) {
            CHECK(f->quad.c[i].x >= mb.min.x - 1.0);
            CHECK(f->quad.c[i].x <= mb.max.x + 1.0);
            CHECK(f->quad.c[i].y >= mb.min.y - 1.0);
            CHECK(f->quad.c[i].y <= mb.max.y + 1.0);
        }
    CHECK(scene.truth.mask.image.count() > 0);
}

TEST_CASE("rendering is deterministic and noise leaves ground truth fixed") {
    SceneSpec s = base_spec();
    s.noise.edge_dropout = 0.3;
    s.noise.corner_jitter_px = 1.5;
    s.seed = 99;

    const RenderedScene a = project_scene(s);
    const RenderedScene b = project_scene(s);
    CHECK(a.image.pixels == b.image.pixels);
    CHECK(a.truth.mask.image.bits == b.truth.mask.image.bits);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.truth.left.quad.c[i] == b.truth.left.quad.c[i]);
        CHECK(a.truth.right.quad.c[i] == b.truth.right.quad.c[i]);
    }

    SceneSpec clean = s;
    clean.noise = NoiseSpec{};
    const RenderedScene c = project_scene(clean);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.truth.left.quad.c[i] == c.truth.left.quad.c[i]);
        CHECK(a.truth.right.quad.c[i] == c.truth.right.quad.c[i]);
    }
    CHECK(a.truth.left_vp.hx == c.truth.left_vp.hx);
    CHECK(a.truth.mask.image.bits == c.truth.mask.image.bits);

    // Different seeds change the rendering but not the truth.
    SceneSpec other = s;
    other.seed = 100;
    const RenderedScene d = project_scene(other);
    CHECK(d.image.pixels != a.image.pixels);
    CHECK(d.truth.mask.image.bits == a.truth.mask.image.bits);
}

TEST_CASE("full dropout removes every bright edge") {
    SceneSpec s = base_spec();
    s.noise.edge_dropout = 1.0;
    const RenderedScene scene = project_scene(s);
    float peak = 0.0f;
    for (float v : scene.image.pixels) peak = std::max(peak, v);
    CHECK(peak < 0.6f);  // only the face fills remain

    s.noise.edge_dropout = 0.0;
    const RenderedScene lit = project_scene(s);
    float lit_peak = 0.0f;
    for (float v : lit.image.pixels) lit_peak = std::max(lit_peak, v);
    CHECK(lit_peak == 1.0f);
}

TEST_CASE("spec violations are rejected") {
    auto expect_config_error = [](const SceneSpec& s) {
        try {
            project_scene(s);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ConfigError);
        }
    };

    SceneSpec s = base_spec();
    s.na = 0;
    expect_config_error(s);

    s = base_spec();
    s.package_dims.h = 0.0;
    expect_config_error(s);

    s = base_spec();
    s.camera.pitch = 0.30;  // ~17 deg, above the 15 deg bound
    expect_config_error(s);

    s = base_spec();
    s.camera.roll = 0.10;  // ~5.7 deg, above the 5 deg bound
    expect_config_error(s);

    s = base_spec();
    s.noise.edge_dropout = 1.5;
    expect_config_error(s);

    // Head-on view: the second face is edge-on, so the two-face requirement
    // fails.
    s = base_spec();
    s.camera.x = 0.0;
    s.camera.y = -2.8;
    s.camera.yaw = 0.0;
    expect_config_error(s);

    // Oblique but too shallow: both faces are visible, yet the narrow one
    // subtends only ~1.4 degrees.
    s = base_spec();
    s.camera.x = 0.8;
    s.camera.y = -3.2;
    s.camera.yaw = std::atan2(-0.8, 3.2);
    expect_config_error(s);
}

TEST_CASE("a stack leaving the frame is rejected") {
    SceneSpec s = base_spec();
    s.camera.focal_px = 2000.0;  // zoomed in far enough to crop the stack
    try {
        project_scene(s);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SceneOutOfFrame);
    }
}
