#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "palletscope/structure.hpp"
#include "palletscope/synth.hpp"

using namespace palletscope;

namespace {

Quad rect_quad(double x0, double y0, double w, double h) {
    return *Quad::make({Point2{x0, y0}, Point2{x0 + w, y0},
                        Point2{x0 + w, y0 + h}, Point2{x0, y0 + h}});
}

PackageDetection det(const Quad& q, PackageClass cls = PackageClass::KLT,
                     double score = 1.0) {
    return PackageDetection{q, cls, score};
}

// ---- independent oracles ----

// Projection-profile peak counter built directly from the definition: bin
// totals along the requested axis, clusters of bins at or above
// prominence_frac * max collapse to one peak each, peaks within 2% of either
// border are borders, interior peak count + 1 is the division count.
int oracle_frequency(const BinaryImage& img, bool rows,
                     double prominence_frac) {
    const int n = rows ? img.height : img.width;
    const int m = rows ? img.width : img.height;
    std::vector<long> profile(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (rows ? img.test(j, i) : img.test(i, j)) ++profile[i];
    const long peak = *std::max_element(profile.begin(), profile.end());
    if (peak <= 0) return -1;  // inconclusive
    const double thresh = prominence_frac * static_cast<double>(peak);
    const double border = 0.02 * n;
    int interior = 0;
    bool any_peak = false;
    int i = 0;
    while (i < n) {
        if (static_cast<double>(profile[i]) < thresh) {
            ++i;
            continue;
        }
        int j = i;
        int best = i;
        while (j < n && static_cast<double>(profile[j]) >= thresh) {
            if (profile[j] > profile[best]) best = j;
            ++j;
        }
        any_peak = true;
        if (best >= border && best <= n - 1 - border) ++interior;
        i = j;
    }
    if (!any_peak) return -1;
    return interior + 1;
}

// 1 px edge rasterizer for building rectified edge images in tests.
void draw_edge(BinaryImage& img, Point2 a, Point2 b) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(2, static_cast<int>(std::ceil(len * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int x = static_cast<int>(std::lround(a.x + (b.x - a.x) * t));
        const int y = static_cast<int>(std::lround(a.y + (b.y - a.y) * t));
        if (img.in_bounds(x, y)) img.set(x, y, true);
    }
}

SceneSpec corner_scene(int na, int nb, int layers) {
    SceneSpec spec;
    spec.na = na;
    spec.nb = nb;
    spec.layers = layers;
    const double standoff =
        1.7 * std::hypot(na * spec.package_dims.w, nb * spec.package_dims.d);
    const double az = 47.0 * kPi / 180.0;
    spec.camera.x = standoff * std::sin(az);
    spec.camera.y = -standoff * std::cos(az);
    spec.camera.z = spec.pallet_dims.h +
                    0.5 * layers * spec.package_dims.h +
                    standoff * std::tan(0.21);
    spec.camera.yaw = std::atan2(-spec.camera.x, -spec.camera.y);
    spec.camera.pitch = 0.21;
    spec.camera.roll = 0.015;
    spec.camera.focal_px = 800.0;
    return spec;
}

std::vector<PackageDetection> truth_dets(const FaceTruth& face) {
    std::vector<PackageDetection> out;
    for (const Quad& q : face.packages) out.push_back(det(q));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// rectify_face

TEST_CASE("axis-aligned face at the origin rectifies to itself") {
    const Quad face = rect_quad(0.0, 0.0, 300.0, 400.0);
    const Rectification r = rectify_face(face, 400);
    CHECK(r.target_w == 300);
    CHECK(r.target_h == 400);
    for (const Point2& c : face.c) {
        const Point2 m = apply_homography(r.to_rect, c);
        CHECK(std::abs(m.x - c.x) <= 1e-9);
        CHECK(std::abs(m.y - c.y) <= 1e-9);
    }
    const Point2 mid = apply_homography(r.to_rect, Point2{150.0, 200.0});
    CHECK(std::abs(mid.x - 150.0) <= 1e-9);
    CHECK(std::abs(mid.y - 200.0) <= 1e-9);
}

TEST_CASE("face corners land exactly on the target rectangle corners") {
    const Quad face = *Quad::make({Point2{102.0, 57.0}, Point2{311.0, 88.0},
                                   Point2{330.0, 252.0}, Point2{95.0, 231.0}});
    const Rectification r = rectify_face(face, 400);

    const double top = distance(face.c[0], face.c[1]);
    const double bottom = distance(face.c[3], face.c[2]);
    const double left = distance(face.c[0], face.c[3]);
    const double right = distance(face.c[1], face.c[2]);
    const long expect_w =
        std::lround(400.0 * (top + bottom) / (left + right));
    CHECK(r.target_w == expect_w);

    const double w = static_cast<double>(r.target_w);
    const std::array<Point2, 4> want{Point2{0.0, 0.0}, Point2{w, 0.0},
                                     Point2{w, 400.0}, Point2{0.0, 400.0}};
    for (int i = 0; i < 4; ++i) {
        const Point2 m = apply_homography(r.to_rect, face.c[i]);
        CHECK(distance(m, want[i]) <= 1e-6);
    }
}

TEST_CASE("rectified synthetic packages are axis-aligned") {
    const RenderedScene scene = project_scene(corner_scene(4, 3, 3));

    for (const FaceTruth* face : {&scene.truth.left, &scene.truth.right}) {
        const Rectification r = rectify_face(face->quad, 400);
        double sq = 0.0;
        int n = 0;
        for (const Quad& pkg : face->packages) {
            const Quad m = r.to_rect.map(pkg);
            // Top/bottom edges must be horizontal, left/right vertical.
            sq += (m.c[0].y - m.c[1].y) * (m.c[0].y - m.c[1].y);
            sq += (m.c[3].y - m.c[2].y) * (m.c[3].y - m.c[2].y);
            sq += (m.c[0].x - m.c[3].x) * (m.c[0].x - m.c[3].x);
            sq += (m.c[1].x - m.c[2].x) * (m.c[1].x - m.c[2].x);
            n += 4;
        }
        CHECK(std::sqrt(sq / n) <= 1.0);
    }
}

TEST_CASE("rectification rejects degenerate faces and bad heights") {
    const Quad face = rect_quad(0.0, 0.0, 300.0, 400.0);
    try {
        rectify_face(face, 0);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }

    // Three collinear corners still form a simple quad but kill the DLT.
    const Quad sliver = *Quad::make({Point2{0.0, 0.0}, Point2{100.0, 0.0},
                                     Point2{200.0, 0.0}, Point2{0.0, 100.0}});
    try {
        rectify_face(sliver, 400);
        FAIL("expected DegenerateCorrespondence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateCorrespondence);
    }
}

// ---------------------------------------------------------------------------
// assign_packages_to_face

TEST_CASE("assignment keeps inside centroids and drops outside ones") {
    const Quad face = rect_quad(0.0, 0.0, 400.0, 300.0);
    const std::vector<PackageDetection> dets{
        det(rect_quad(10.0, 10.0, 80.0, 80.0)),
        det(rect_quad(500.0, 10.0, 80.0, 80.0)),   // fully outside
        det(rect_quad(360.0, 100.0, 80.0, 80.0)),  // centroid at x=400, on edge
    };
    const FaceAssignment a = assign_packages_to_face(dets, face);
    REQUIRE(a.kept.size() == 2);
    CHECK(a.flagged.empty());
    CHECK(a.cls == PackageClass::KLT);
    CHECK(a.kept[0].quad.c[0] == Point2{10.0, 10.0});
}

TEST_CASE("minority class detections are flagged, not kept") {
    const Quad face = rect_quad(0.0, 0.0, 800.0, 400.0);
    std::vector<PackageDetection> dets;
    for (int i = 0; i < 7; ++i)
        dets.push_back(det(rect_quad(10.0 + 95.0 * i, 50.0, 80.0, 80.0),
                           PackageClass::KLT));
    dets.push_back(
        det(rect_quad(10.0, 200.0, 80.0, 80.0), PackageClass::Tray));

    const FaceAssignment a = assign_packages_to_face(dets, face);
    CHECK(a.kept.size() == 7);
    REQUIRE(a.flagged.size() == 1);
    CHECK(a.cls == PackageClass::KLT);
    CHECK(a.flagged[0].cls == PackageClass::Tray);

    const FaceAssignment none =
        assign_packages_to_face({}, face);
    CHECK(none.kept.empty());
    CHECK(none.flagged.empty());
}

// ---------------------------------------------------------------------------
// count_grid

TEST_CASE("uniform grid counts follow exact division") {
    const Quad face = rect_quad(0.0, 0.0, 300.0, 200.0);
    std::vector<PackageDetection> dets;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c)
            dets.push_back(det(rect_quad(75.0 * c, 100.0 * r, 75.0, 100.0)));

    const FaceStructure fs = count_grid(face, dets);
    CHECK(fs.rows == 2);
    CHECK(fs.cols == 4);
    CHECK(!fs.low_confidence);
    CHECK(fs.cls == PackageClass::KLT);
    // Rectified frame is 400 high: the scale doubles every length.
    CHECK(fs.mean_w == doctest::Approx(150.0).epsilon(1e-6));
    CHECK(fs.mean_h == doctest::Approx(200.0).epsilon(1e-6));
}

TEST_CASE("a single congruent package counts one by one") {
    const Quad face = *Quad::make({Point2{40.0, 30.0}, Point2{250.0, 55.0},
                                   Point2{240.0, 210.0}, Point2{35.0, 180.0}});
    const FaceStructure fs = count_grid(face, {det(face)});
    CHECK(fs.rows == 1);
    CHECK(fs.cols == 1);
    CHECK(!fs.low_confidence);
}

TEST_CASE("perspective-distorted synthetic face counts its true grid") {
    const RenderedScene scene = project_scene(corner_scene(4, 3, 3));
    const FaceTruth& face = scene.truth.left;
    REQUIRE(face.rows == 3);
    REQUIRE(face.cols == 4);

    const FaceStructure fs = count_grid(face.quad, truth_dets(face));
    CHECK(fs.rows == 3);
    CHECK(fs.cols == 4);
    CHECK(!fs.low_confidence);

    const FaceStructure other =
        count_grid(scene.truth.right.quad, truth_dets(scene.truth.right));
    CHECK(other.rows == 3);
    CHECK(other.cols == 3);
}

TEST_CASE("empty detection list raises") {
    const Quad face = rect_quad(0.0, 0.0, 300.0, 200.0);
    try {
        count_grid(face, {});
        FAIL("expected NoPackagesOnFace");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPackagesOnFace);
    }
}

TEST_CASE("counting is invariant under uniform scaling") {
    const RenderedScene scene = project_scene(corner_scene(3, 2, 4));
    const FaceTruth& face = scene.truth.left;

    auto scale_quad = [](const Quad& q, double s) {
        return *Quad::make({q.c[0] * s, q.c[1] * s, q.c[2] * s, q.c[3] * s});
    };
    const double s = 2.5;
    std::vector<PackageDetection> dets, scaled;
    for (const Quad& q : face.packages) {
        dets.push_back(det(q));
        scaled.push_back(det(scale_quad(q, s)));
    }
    const FaceStructure a = count_grid(face.quad, dets);
    const FaceStructure b = count_grid(scale_quad(face.quad, s), scaled);
    CHECK(a.rows == b.rows);
    CHECK(a.cols == b.cols);
    CHECK(a.rows == face.rows);
    CHECK(a.cols == face.cols);
}

TEST_CASE("grid counts survive dropping thirty percent of detections") {
    const RenderedScene scene = project_scene(corner_scene(4, 4, 5));
    const FaceTruth& face = scene.truth.left;
    const std::vector<PackageDetection> all = truth_dets(face);
    const std::size_t keep =
        all.size() - static_cast<std::size_t>(all.size() * 3 / 10);

    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PackageDetection> subset = all;
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(keep);
        const FaceStructure fs = count_grid(face.quad, subset);
        CHECK(fs.rows == face.rows);
        CHECK(fs.cols == face.cols);
    }
}

TEST_CASE("a residual far from an integer flags low confidence") {
    // target_w = 340, one package 100 wide: 340/100 = 3.4 -> cols 3, but the
    // residual 0.4 exceeds the 0.35 guard.
    const Quad face = rect_quad(0.0, 0.0, 340.0, 400.0);
    const FaceStructure fs =
        count_grid(face, {det(rect_quad(0.0, 0.0, 100.0, 400.0))});
    CHECK(fs.cols == 3);
    CHECK(fs.rows == 1);
    CHECK(fs.low_confidence);
}

// ---------------------------------------------------------------------------
// count_by_line_frequency

TEST_CASE("row frequency follows the hand-built projection profile") {
    BinaryImage img(300, 201);
    for (const int y : {0, 100, 200})
        for (int x = 0; x < 300; ++x) img.set(x, y, true);

    CHECK(oracle_frequency(img, true, 0.3) == 2);
    CHECK(count_by_line_frequency(img, CountAxis::Rows) == 2);
}

TEST_CASE("borders alone mean one undivided package") {
    BinaryImage img(300, 201);
    for (const int y : {0, 200})
        for (int x = 0; x < 300; ++x) img.set(x, y, true);

    CHECK(oracle_frequency(img, true, 0.3) == 1);
    CHECK(count_by_line_frequency(img, CountAxis::Rows) == 1);
}

TEST_CASE("blank input is inconclusive") {
    BinaryImage img(300, 200);
    CHECK(oracle_frequency(img, true, 0.3) == -1);
    try {
        count_by_line_frequency(img, CountAxis::Rows);
        FAIL("expected FrequencyInconclusive");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FrequencyInconclusive);
    }
    try {
        count_by_line_frequency(img, CountAxis::Rows, 0.0);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
}

TEST_CASE("grid and frequency counts agree on synthetic faces") {
    const RenderedScene scene = project_scene(corner_scene(3, 4, 4));

    for (const FaceTruth* face : {&scene.truth.left, &scene.truth.right}) {
        const Rectification r = rectify_face(face->quad, 400);
        BinaryImage edges(r.target_w + 1, r.target_h + 1);
        for (const Quad& pkg : face->packages) {
            const Quad m = r.to_rect.map(pkg);
            for (int k = 0; k < 4; ++k)
                draw_edge(edges, m.c[k], m.c[(k + 1) % 4]);
        }
        const FaceStructure fs = count_grid(face->quad, truth_dets(*face));
        const int rows = count_by_line_frequency(edges, CountAxis::Rows);
        const int cols = count_by_line_frequency(edges, CountAxis::Cols);
        CHECK(oracle_frequency(edges, true, 0.3) == face->rows);
        CHECK(oracle_frequency(edges, false, 0.3) == face->cols);
        CHECK(rows == fs.rows);
        CHECK(cols == fs.cols);
        CHECK(rows == face->rows);
        CHECK(cols == face->cols);
    }
}

// ---------------------------------------------------------------------------
// consolidate

TEST_CASE("consolidation multiplies layers by both column counts") {
    FaceStructure left{3, 2, PackageClass::KLT, 150.0, 130.0, false};
    FaceStructure right{3, 4, PackageClass::KLT, 90.0, 130.0, false};
    const PackagingStructure ps = consolidate(left, right);
    CHECK(ps.layers == 3);
    CHECK(ps.total == 24);
    CHECK(ps.left.cols == 2);
    CHECK(ps.right.cols == 4);
}

TEST_CASE("layer disagreement and class disagreement are errors") {
    FaceStructure left{3, 2, PackageClass::KLT, 150.0, 130.0, false};
    FaceStructure right{2, 4, PackageClass::KLT, 90.0, 130.0, false};
    try {
        consolidate(left, right);
        FAIL("expected LayerMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LayerMismatch);
    }

    right.rows = 3;
    right.cls = PackageClass::Tray;
    try {
        consolidate(left, right);
        FAIL("expected ClassMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ClassMismatch);
    }
}

TEST_CASE("total formula is exact for all valid shapes") {
    for (int layers = 1; layers <= 6; ++layers)
        for (int cl = 1; cl <= 5; ++cl)
            for (int cr = 1; cr <= 5; ++cr) {
                FaceStructure left{layers, cl, PackageClass::Tray, 10, 10,
                                   false};
                FaceStructure right{layers, cr, PackageClass::Tray, 10, 10,
                                    false};
                const PackagingStructure ps = consolidate(left, right);
                CHECK(ps.total == layers * cl * cr);
            }
}

TEST_CASE("synthetic stack consolidates to the generator count") {
    const RenderedScene scene = project_scene(corner_scene(2, 3, 4));
    REQUIRE(scene.truth.total == 24);

    const FaceStructure left =
        count_grid(scene.truth.left.quad, truth_dets(scene.truth.left));
    const FaceStructure right =
        count_grid(scene.truth.right.quad, truth_dets(scene.truth.right));
    const PackagingStructure ps = consolidate(left, right);
    CHECK(ps.layers == 4);
    CHECK(ps.total == scene.truth.total);
}
