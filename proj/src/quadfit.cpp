#include "palletscope/quadfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "palletscope/error.hpp"

namespace palletscope {

namespace {

// ---- objective ----

// The mask sampled on a regular sub-lattice of its pixel grid, with per-row
// prefix sums so any x interval of a row costs O(1) to count.
struct MaskGrid {
    int pitch = 1;
    int nx = 0, ny = 0;
    long long on_count = 0;
    std::vector<int> prefix;  // ny rows of nx+1 partial sums
};

int pitch_for(const BinaryImage& img, int iou_resolution) {
    if (iou_resolution < 0)
        raise(ErrorCode::ConfigError, "iou_resolution must be nonnegative");
    if (iou_resolution == 0) return 1;
    const int long_axis = std::max(img.width, img.height);
    return std::max(1, (long_axis + iou_resolution / 2) / iou_resolution);
}

MaskGrid build_grid(const BinaryImage& img, int pitch) {
    MaskGrid g;
    g.pitch = pitch;
    g.nx = (img.width - 1) / pitch + 1;
    g.ny = (img.height - 1) / pitch + 1;
    g.prefix.assign(static_cast<size_t>(g.ny) * (g.nx + 1), 0);
    for (int j = 0; j < g.ny; ++j) {
        int* row = g.prefix.data() + static_cast<size_t>(j) * (g.nx + 1);
        int acc = 0;
        for (int i = 0; i < g.nx; ++i) {
            if (img.test(i * pitch, j * pitch)) ++acc;
            row[i + 1] = acc;
        }
        g.on_count += acc;
    }
    return g;
}

// Counts are exact integers, so candidates compare on the rational
// inter/uni pair; the double quotient only leaves as a reported score.
struct Overlap {
    long long inter = 0;
    long long uni = 1;

    double value() const {
        return uni > 0
                   ? static_cast<double>(inter) / static_cast<double>(uni)
                   : 0.0;
    }
    bool better_than(const Overlap& o) const {
        return inter * o.uni > o.inter * uni;
    }
};

Overlap score_cycle(const MaskGrid& g, const std::array<Point2, 4>& c) {
    const Quad q{c};
    double ymin = c[0].y, ymax = c[0].y;
    for (int i = 1; i < 4; ++i) {
        ymin = std::min(ymin, c[i].y);
        ymax = std::max(ymax, c[i].y);
    }
    const int j0 = static_cast<int>(std::ceil((ymin - 1e-9) / g.pitch));
    const int j1 = static_cast<int>(std::floor((ymax + 1e-9) / g.pitch));
    long long quad_cnt = 0, inter = 0;
    for (int j = j0; j <= j1; ++j) {
        const RowSpans rs = quad_row_spans(q, static_cast<double>(j) * g.pitch);
        for (int k = 0; k < rs.count; ++k) {
            const int i0 = static_cast<int>(
                std::ceil((rs.span[k].first - 1e-9) / g.pitch));
            const int i1 = static_cast<int>(
                std::floor((rs.span[k].second + 1e-9) / g.pitch));
            if (i1 < i0) continue;
            // Lattice points outside the image still count toward the union:
            // a corner drifting off-frame has to pay for the pixels it claims.
            quad_cnt += i1 - i0 + 1;
            if (j < 0 || j >= g.ny) continue;
            const int ia = std::max(i0, 0);
            const int ib = std::min(i1, g.nx - 1);
            if (ib < ia) continue;
            const int* row =
                g.prefix.data() + static_cast<size_t>(j) * (g.nx + 1);
            inter += row[ib + 1] - row[ia];
        }
    }
    Overlap o;
    o.inter = inter;
    o.uni = g.on_count + quad_cnt - inter;
    if (o.uni <= 0) o = Overlap{};
    return o;
}

// ---- cycle validity ----

double shoelace2(const std::array<Point2, 4>& c) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += cross(c[i], c[(i + 1) % 4]);
    return s;
}

// quad_row_spans needs the canonical positive winding; a large discrete move
// can hop a corner clean across the opposite edge into a reversed-but-simple
// cycle, so the sign check is not redundant with simplicity.
bool usable_cycle(const std::array<Point2, 4>& c) {
    return Quad::cycle_is_simple(c) && shoelace2(c) > 0.0;
}

void validate(const QuadFitConfig& cfg) {
    if (cfg.step_schedule.empty())
        raise(ErrorCode::ConfigError, "step schedule must not be empty");
    for (size_t i = 0; i < cfg.step_schedule.size(); ++i) {
        if (cfg.step_schedule[i] <= 0)
            raise(ErrorCode::ConfigError, "step sizes must be positive");
        if (i > 0 && cfg.step_schedule[i] >= cfg.step_schedule[i - 1])
            raise(ErrorCode::ConfigError,
                  "step schedule must be strictly decreasing");
    }
    if (cfg.max_sweeps_per_step <= 0)
        raise(ErrorCode::ConfigError, "max_sweeps_per_step must be positive");
}

}  // namespace

Quad initial_quad(const InstanceMask& mask) {
    std::vector<Point2> pts;
    for (int y = mask.y0; y <= mask.y1; ++y)
        for (int x = mask.x0; x <= mask.x1; ++x)
            if (mask.image.test(x, y))
                pts.push_back(
                    Point2{static_cast<double>(x), static_cast<double>(y)});
    const std::vector<Point2> hull = convex_hull(std::move(pts));
    if (hull.size() < 3)
        raise(ErrorCode::DegenerateMask, "mask on-pixels span a line at most");

    // The minimum-area enclosing rectangle has a side flush with some hull
    // edge, so trying every edge orientation is exhaustive.
    const int n = static_cast<int>(hull.size());
    double best_area = 0.0;
    std::array<Point2, 4> best{};
    bool have = false;
    for (int i = 0; i < n; ++i) {
        const Point2 e = hull[(i + 1) % n] - hull[i];
        const double len = norm(e);
        if (len == 0.0) continue;
        const Point2 u{e.x / len, e.y / len};
        const Point2 v = perp(u);
        double ulo = dot(hull[0], u), uhi = ulo;
        double vlo = dot(hull[0], v), vhi = vlo;
        for (int j = 1; j < n; ++j) {
            const double pu = dot(hull[j], u);
            const double pv = dot(hull[j], v);
            ulo = std::min(ulo, pu);
            uhi = std::max(uhi, pu);
            vlo = std::min(vlo, pv);
            vhi = std::max(vhi, pv);
        }
        const double area = (uhi - ulo) * (vhi - vlo);
        if (!have || area < best_area) {
            best_area = area;
            best = {u * ulo + v * vlo, u * uhi + v * vlo, u * uhi + v * vhi,
                    u * ulo + v * vhi};
            have = true;
        }
    }
    return Quad::make_or_raise(best, ErrorCode::DegenerateMask,
                               "initial quad");
}

double quad_mask_iou(const InstanceMask& mask, const Quad& quad,
                     int iou_resolution) {
    const MaskGrid grid =
        build_grid(mask.image, pitch_for(mask.image, iou_resolution));
    return score_cycle(grid, quad.c).value();
}

QuadFit fit_quad_to_mask(const InstanceMask& mask, const QuadFitConfig& cfg) {
    validate(cfg);
    const MaskGrid grid =
        build_grid(mask.image, pitch_for(mask.image, cfg.iou_resolution));
    if (grid.on_count == 0)
        raise(ErrorCode::DegenerateMask,
              "no mask pixels land on the objective grid");

    std::array<Point2, 4> cur = initial_quad(mask).c;
    Overlap best = score_cycle(grid, cur);

    QuadFit out;
    out.trace.push_back(best.value());

    static constexpr std::array<Point2, 8> kMoves{
        {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

    for (const int step : cfg.step_schedule) {
        for (int sweep = 0; sweep < cfg.max_sweeps_per_step; ++sweep) {
            bool improved = false;
            for (int ci = 0; ci < 4; ++ci) {
                Overlap cand_best = best;
                int take = -1;
                for (int d = 0; d < 8; ++d) {
                    std::array<Point2, 4> cand = cur;
                    cand[ci] =
                        cur[ci] + kMoves[d] * static_cast<double>(step);
                    if (!usable_cycle(cand)) continue;
                    const Overlap o = score_cycle(grid, cand);
                    // Strict improvement only; on ties the incumbent (or the
                    // earlier move) wins, which keeps the search fully
                    // deterministic.
                    if (o.better_than(cand_best)) {
                        cand_best = o;
                        take = d;
                    }
                }
                if (take >= 0) {
                    cur[ci] = cur[ci] + kMoves[take] * static_cast<double>(step);
                    best = cand_best;
                    out.trace.push_back(best.value());
                    improved = true;
                }
            }
            if (!improved) break;
        }
    }

    out.quad = Quad::make_or_raise(cur, ErrorCode::DegenerateMask,
                                   "fitted quad");
    out.iou = best.value();
    return out;
}

}  // namespace palletscope
