#include "palletscope/sideface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace palletscope {

namespace {

bool lex_less(const Point2& a, const Point2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
}

// Dominant unit eigenvector of the symmetric matrix [[a, b], [b, c]].
Point2 dominant_unit_eigvec(double a, double b, double c) {
    const double half_gap = (a - c) / 2.0;
    const double disc = std::sqrt(half_gap * half_gap + b * b);
    const double lambda = (a + c) / 2.0 + disc;
    Point2 v1{b, lambda - a};
    Point2 v2{lambda - c, b};
    Point2 v = norm(v1) >= norm(v2) ? v1 : v2;
    const double len = norm(v);
    if (len <= 0.0) return Point2{0.0, 1.0};  // isotropic scatter
    return v * (1.0 / len);
}

// Line direction with a fixed sign so antipodal representations compare and
// sum identically.
Point2 canonical_dir(const PolarLine& l) {
    Point2 d = l.direction();
    if (d.y < 0.0 || (d.y == 0.0 && d.x < 0.0)) d = d * -1.0;
    return d;
}

bool in_seed_region(const Point2& p, SeedRegion seed, const ImageFrame& f) {
    switch (seed) {
        case SeedRegion::Left: return p.x < 0.0;
        case SeedRegion::Right: return p.x > f.width;
        case SeedRegion::Below: return p.y > f.height;
        case SeedRegion::Unconstrained: default: return true;
    }
}

HomogeneousPoint mean_line_direction(const std::vector<PolarLine>& lines,
                                     const std::vector<int>& subset) {
    std::vector<Point2> dirs;
    dirs.reserve(subset.size());
    for (int i : subset) dirs.push_back(canonical_dir(lines[i]));
    std::sort(dirs.begin(), dirs.end(), lex_less);
    double a = 0.0, b = 0.0, c = 0.0;
    for (const Point2& d : dirs) {
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
    }
    const Point2 u = dominant_unit_eigvec(a, b, c);
    return HomogeneousPoint{u.x, u.y, 0.0};
}

// Mean of the subset's pairwise intersections inside the seed region, or the
// point at infinity along the mean direction when there are none (or they
// spread past the parallel limit). Sorted accumulation keeps the result
// independent of input order.
HomogeneousPoint subset_estimate(const std::vector<PolarLine>& lines,
                                 const std::vector<int>& subset,
                                 SeedRegion seed, const VPConfig& cfg,
                                 const ImageFrame& frame) {
    std::vector<Point2> pts;
    for (std::size_t ii = 0; ii < subset.size(); ++ii) {
        for (std::size_t jj = ii + 1; jj < subset.size(); ++jj) {
            HomogeneousPoint h{};
            try {
                h = intersect_lines(lines[subset[ii]], lines[subset[jj]]);
            } catch (const Error&) {
                continue;  // duplicate lines contribute nothing
            }
            if (h.is_infinite()) continue;
            const Point2 p = h.dehomogenized();
            if (in_seed_region(p, seed, frame)) pts.push_back(p);
        }
    }
    if (pts.empty()) return mean_line_direction(lines, subset);

    std::sort(pts.begin(), pts.end(), lex_less);
    Point2 sum{0.0, 0.0};
    for (const Point2& p : pts) sum = sum + p;
    const Point2 mean = sum * (1.0 / static_cast<double>(pts.size()));
    double spread = 0.0;
    for (const Point2& p : pts) spread = std::max(spread, distance(p, mean));
    if (spread > cfg.parallel_spread_px)
        return mean_line_direction(lines, subset);
    return HomogeneousPoint{mean.x, mean.y, 1.0};
}

void check_vp_config(const VPConfig& cfg) {
    if (cfg.iterations < 1 || !(cfg.decay > 0.0 && cfg.decay < 1.0) ||
        cfg.init_dist_frac <= 0.0 || cfg.min_support < 1 ||
        cfg.parallel_spread_px <= 0.0)
        raise(ErrorCode::ConfigError, "bad vanishing point parameters");
}

}  // namespace

double vp_line_distance(const HomogeneousPoint& vp, const PolarLine& line,
                        double diag) {
    if (vp.is_infinite()) {
        const double c = std::abs(dot(vp.direction(), line.direction()));
        return std::acos(std::clamp(c, 0.0, 1.0)) * diag;
    }
    return point_line_distance(vp, line);
}

VanishingPointEstimate estimate_vp(const std::vector<PolarLine>& lines,
                                   SeedRegion seed, const VPConfig& cfg,
                                   const ImageFrame& frame) {
    check_vp_config(cfg);
    if (static_cast<int>(lines.size()) < cfg.min_support)
        raise(ErrorCode::InsufficientSupport,
              "fewer lines than min_support");

    const double diag = frame.diag();
    std::vector<int> cur(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) cur[i] = static_cast<int>(i);

    VanishingPointEstimate est;
    est.point = subset_estimate(lines, cur, seed, cfg, frame);

    double tau = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        tau = cfg.init_dist_frac * diag * std::pow(cfg.decay, it);
        std::vector<int> next;
        for (int i : cur)
            if (vp_line_distance(est.point, lines[i], diag) <= tau + 1e-9)
                next.push_back(i);
        if (static_cast<int>(next.size()) < cfg.min_support)
            raise(ErrorCode::InsufficientSupport,
                  "support fell under min_support during filtering");
        cur = std::move(next);
        est.history.push_back(cur);
        est.point = subset_estimate(lines, cur, seed, cfg, frame);
    }

    // The last re-estimate may have drifted; keep only lines that still sit
    // within the final threshold so the support list matches the point.
    std::vector<int> final_support;
    for (int i : cur)
        if (vp_line_distance(est.point, lines[i], diag) <= tau + 1e-9)
            final_support.push_back(i);
    if (static_cast<int>(final_support.size()) < cfg.min_support)
        raise(ErrorCode::InsufficientSupport,
              "support fell under min_support at final check");
    est.history.push_back(final_support);
    est.support = std::move(final_support);
    est.final_threshold = tau;

    std::vector<double> residuals;
    for (int i : est.support) {
        est.supporting_lines.push_back(lines[i]);
        residuals.push_back(vp_line_distance(est.point, lines[i], diag));
    }
    std::sort(residuals.begin(), residuals.end());
    double sum = 0.0;
    for (double r : residuals) sum += r;
    est.mean_residual = residuals.empty() ? 0.0 : sum / residuals.size();
    return est;
}

std::pair<VanishingPointEstimate, VanishingPointEstimate>
assign_horizontal_vps(const std::vector<PolarLine>& horizontal,
                      const VPConfig& cfg, const ImageFrame& frame) {
    check_vp_config(cfg);
    if (static_cast<int>(horizontal.size()) < 2 * cfg.min_support)
        raise(ErrorCode::OneSideNotVisible,
              "too few horizontal lines for two faces");

    auto estimate_or_starve = [&](const std::vector<PolarLine>& ls,
                                  SeedRegion seed) {
        try {
            return estimate_vp(ls, seed, cfg, frame);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InsufficientSupport)
                raise(ErrorCode::OneSideNotVisible,
                      "one lateral pencil lacks support");
            throw;
        }
    };

    const VanishingPointEstimate first_left =
        estimate_or_starve(horizontal, SeedRegion::Left);
    const VanishingPointEstimate first_right =
        estimate_or_starve(horizontal, SeedRegion::Right);

    // Every line backs at most the nearer of the two candidate points.
    const double diag = frame.diag();
    std::vector<int> left_set, right_set;
    for (std::size_t i = 0; i < horizontal.size(); ++i) {
        const double dl = vp_line_distance(first_left.point, horizontal[i], diag);
        const double dr =
            vp_line_distance(first_right.point, horizontal[i], diag);
        const bool in_l = dl <= first_left.final_threshold + 1e-9;
        const bool in_r = dr <= first_right.final_threshold + 1e-9;
        if (in_l && (!in_r || dl <= dr))
            left_set.push_back(static_cast<int>(i));
        else if (in_r)
            right_set.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(left_set.size()) < cfg.min_support ||
        static_cast<int>(right_set.size()) < cfg.min_support)
        raise(ErrorCode::OneSideNotVisible,
              "horizontal lines accumulate on a single side");

    // Re-estimate each side from its disjoint support so one side's pencil
    // cannot bias the other; remap indices back into the caller's list.
    auto rerun = [&](const std::vector<int>& subset, SeedRegion seed) {
        std::vector<PolarLine> ls;
        ls.reserve(subset.size());
        for (int i : subset) ls.push_back(horizontal[i]);
        VanishingPointEstimate e = estimate_or_starve(ls, seed);
        for (int& i : e.support) i = subset[i];
        for (std::vector<int>& h : e.history)
            for (int& i : h) i = subset[i];
        return e;
    };
    return {rerun(left_set, SeedRegion::Left),
            rerun(right_set, SeedRegion::Right)};
}

PolarLine regress_boundary(const std::vector<Point2>& endpoints,
                           const HomogeneousPoint& through) {
    if (endpoints.empty())
        raise(ErrorCode::NoEndpoints, "no endpoints to regress through");

    std::vector<Point2> pts = endpoints;
    std::sort(pts.begin(), pts.end(), lex_less);

    if (through.is_infinite()) {
        // Fixed direction: the optimal offset makes the line pass through
        // the centroid.
        Point2 sum{0.0, 0.0};
        for (const Point2& p : pts) sum = sum + p;
        const Point2 centroid = sum * (1.0 / static_cast<double>(pts.size()));
        return PolarLine::through(centroid, through.direction());
    }

    const Point2 v = through.dehomogenized();
    double a = 0.0, b = 0.0, c = 0.0;
    for (const Point2& p : pts) {
        const Point2 q = p - v;
        a += q.x * q.x;
        b += q.x * q.y;
        c += q.y * q.y;
    }
    // Squared distance of p to the line through v with direction u is the
    // normal component of (p - v); minimizing the sum picks u as the
    // dominant eigenvector of the scatter about v.
    const Point2 u = dominant_unit_eigvec(a, b, c);
    return PolarLine::through(v, u);
}

SceneValidation validate_scene(const VanishingPointEstimate& vertical_vp,
                               const ImageFrame& frame) {
    if (vertical_vp.point.is_infinite()) return {true, ""};
    const double d =
        distance(vertical_vp.point.dehomogenized(), frame.center());
    if (d < 3.0 * frame.height)
        return {false,
                "vertical vanishing point within 3x image height of the "
                "image center; verticals deviate strongly from the image "
                "axis"};
    return {true, ""};
}

// ---- full side-face stage ----

namespace {

struct ExtremesX {
    Point2 lo, hi;  // endpoints with min / max x over all segments
};

// Farthest-apart pair of run endpoints; ties resolve toward the
// lexicographically earliest pair so the result is order-independent.
struct ExtremesSpan {
    Point2 a, b;
};

ExtremesSpan extremes_span(const std::vector<LineSegment>& segs) {
    std::vector<Point2> ends;
    for (const LineSegment& s : segs) {
        ends.push_back(s.p0);
        ends.push_back(s.p1);
    }
    std::sort(ends.begin(), ends.end(), lex_less);
    ExtremesSpan best{ends[0], ends[1]};
    double best_d = distance(best.a, best.b);
    for (std::size_t i = 0; i < ends.size(); ++i)
        for (std::size_t j = i + 1; j < ends.size(); ++j) {
            const double d = distance(ends[i], ends[j]);
            if (d > best_d) {
                best_d = d;
                best = {ends[i], ends[j]};
            }
        }
    return best;
}

ExtremesX extremes_x(const TrackedLine& tl) {
    ExtremesX e{tl.segments[0].p0, tl.segments[0].p0};
    for (const LineSegment& s : tl.segments)
        for (const Point2& p : {s.p0, s.p1}) {
            if (p.x < e.lo.x || (p.x == e.lo.x && p.y < e.lo.y)) e.lo = p;
            if (p.x > e.hi.x || (p.x == e.hi.x && p.y < e.hi.y)) e.hi = p;
        }
    return e;
}

Point2 extreme_y(const TrackedLine& tl, bool top) {
    Point2 best = tl.segments[0].p0;
    for (const LineSegment& s : tl.segments)
        for (const Point2& p : {s.p0, s.p1}) {
            if (top ? (p.y < best.y || (p.y == best.y && p.x < best.x))
                    : (p.y > best.y || (p.y == best.y && p.x < best.x)))
                best = p;
        }
    return best;
}

// Where two strokes cross, run tips misbehave in both directions: the
// transverse stroke's flank pixels fall inside the extraction band (runs
// overshoot the crossing by a couple of pixels), and the crossing suppresses
// the oriented edge response (runs stop short of it). Both structures are
// detected lines, so a segment end within snap range of a transverse line is
// moved onto the exact line-line crossing. Corrections are tip-sized and the
// crossing must lie inside the transverse line's own extent, so long runs and
// distant line extrapolations are never touched.
void snap_run_ends(std::vector<TrackedLine>& lines,
                   const std::vector<TrackedLine>& transverse) {
    constexpr double kSnapRangePx = 4.0;
    constexpr double kSpanPadPx = 3.0;
    struct Box {
        double x0, y0, x1, y1;
    };
    std::vector<Box> boxes;
    boxes.reserve(transverse.size());
    for (const TrackedLine& t : transverse) {
        Box b{t.segments[0].p0.x, t.segments[0].p0.y, t.segments[0].p0.x,
              t.segments[0].p0.y};
        for (const LineSegment& s : t.segments)
            for (const Point2& p : {s.p0, s.p1}) {
                b.x0 = std::min(b.x0, p.x);
                b.y0 = std::min(b.y0, p.y);
                b.x1 = std::max(b.x1, p.x);
                b.y1 = std::max(b.y1, p.y);
            }
        boxes.push_back(b);
    }
    for (TrackedLine& tl : lines) {
        for (LineSegment& seg : tl.segments) {
            for (Point2* pp : {&seg.p0, &seg.p1}) {
                const Point2 other = pp == &seg.p0 ? seg.p1 : seg.p0;
                double best_d = kSnapRangePx;
                Point2 best_c{};
                bool found = false;
                for (std::size_t t = 0; t < transverse.size(); ++t) {
                    HomogeneousPoint h{};
                    try {
                        h = intersect_lines(tl.line, transverse[t].line);
                    } catch (const Error&) {
                        continue;
                    }
                    if (h.is_infinite()) continue;
                    const Point2 c = h.dehomogenized();
                    const Box& b = boxes[t];
                    if (c.x < b.x0 - kSpanPadPx || c.x > b.x1 + kSpanPadPx ||
                        c.y < b.y0 - kSpanPadPx || c.y > b.y1 + kSpanPadPx)
                        continue;
                    const double d = distance(c, *pp);
                    if (d > best_d) continue;
                    // Never move an end past the segment's other end.
                    if (dot(c - other, *pp - other) < 0.0) continue;
                    best_d = d;
                    best_c = c;
                    found = true;
                }
                if (found) *pp = best_c;
            }
        }
    }
}

// Orthogonal least-squares over the on-pixels within band_px of the guess,
// restricted along the line to the extracted span. A bright stroke binarizes
// into a structure a few pixels wide, and a fit through two run endpoints can
// tilt a degree or two across it — enough to miss a vanishing point hundreds
// of pixels out. Regressing over every stroke pixel pins the direction down;
// a second round lets the band re-center after the first correction.
PolarLine refit_to_band_pixels(PolarLine guess, const BinaryImage& img,
                               const std::vector<LineSegment>& segs,
                               double band_px) {
    constexpr double kSpanSlackPx = 2.0;
    for (int round = 0; round < 2; ++round) {
        const Point2 dir = guess.direction();
        double t_lo = std::numeric_limits<double>::infinity();
        double t_hi = -t_lo;
        double bx0 = t_lo, bx1 = -t_lo, by0 = t_lo, by1 = -t_lo;
        for (const LineSegment& s : segs)
            for (const Point2& p : {s.p0, s.p1}) {
                const double t = dot(p, dir);
                t_lo = std::min(t_lo, t);
                t_hi = std::max(t_hi, t);
                bx0 = std::min(bx0, p.x);
                bx1 = std::max(bx1, p.x);
                by0 = std::min(by0, p.y);
                by1 = std::max(by1, p.y);
            }
        const double pad = band_px + kSpanSlackPx;
        const int x0 = std::max(0, static_cast<int>(std::floor(bx0 - pad)));
        const int x1 = std::min(img.width - 1,
                                static_cast<int>(std::ceil(bx1 + pad)));
        const int y0 = std::max(0, static_cast<int>(std::floor(by0 - pad)));
        const int y1 = std::min(img.height - 1,
                                static_cast<int>(std::ceil(by1 + pad)));
        double n = 0.0, sx = 0.0, sy = 0.0;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (!img.test(x, y)) continue;
                const Point2 p{static_cast<double>(x),
                               static_cast<double>(y)};
                if (std::abs(guess.eval(p)) > band_px) continue;
                const double t = dot(p, dir);
                if (t < t_lo - kSpanSlackPx || t > t_hi + kSpanSlackPx)
                    continue;
                n += 1.0;
                sx += p.x;
                sy += p.y;
                sxx += p.x * p.x;
                sxy += p.x * p.y;
                syy += p.y * p.y;
            }
        if (n < 8.0) return guess;
        const Point2 centroid{sx / n, sy / n};
        const double a = sxx / n - centroid.x * centroid.x;
        const double b = sxy / n - centroid.x * centroid.y;
        const double c = syy / n - centroid.y * centroid.y;
        if (a + c <= 1e-9) return guess;  // all pixels in one spot
        guess = PolarLine::through(centroid, dominant_unit_eigvec(a, b, c));
    }
    return guess;
}

}  // namespace

SideFaceResult segment_side_faces(const GrayImage& gray,
                                  const InstanceMask& mask,
                                  const SideFaceConfig& cfg) {
    if (gray.width != mask.image.width || gray.height != mask.image.height)
        raise(ErrorCode::DimensionMismatch, "image and mask dimensions differ");
    if (mask.image.count() < static_cast<std::size_t>(cfg.min_mask_px))
        raise(ErrorCode::NotEnoughEvidence, "mask smaller than min_mask_px");

    const ImageFrame frame{static_cast<double>(gray.width),
                           static_cast<double>(gray.height)};
    SideFaceResult result;

    auto edges = [&](EdgeOrientation orientation) {
        const GrayImage response = edge_filter(gray, orientation, cfg.kernel);
        const double t = cfg.auto_threshold ? otsu_threshold(response)
                                            : cfg.binarize_threshold;
        return restrict_to_mask(binarize(response, t), mask,
                                cfg.mask_erosion_px);
    };
    result.vertical_edges = edges(EdgeOrientation::VerticalEdges);
    result.horizontal_edges = edges(EdgeOrientation::HorizontalEdges);

    // Hough per orientation; a line only counts for the orientation whose
    // edge image produced it, and only within that orientation's band.
    // Accumulator cells are coarse (1 px, half a degree) and a bright line
    // binarizes into two parallel response bands, so one physical edge often
    // comes back as two slightly rotated fits. Refitting each line to the
    // stroke pixels collapses that tilt error, and a dedup pass drops fits
    // that coincide in image space with a longer one.
    auto track = [&](const BinaryImage& img, bool vertical) {
        std::vector<TrackedLine> out;
        for (const PolarLine& l : hough_lines(img, cfg.hough)) {
            std::vector<LineSegment> segs =
                extract_segments(l, img, cfg.segments);
            if (segs.empty()) continue;

            const ExtremesSpan sp = extremes_span(segs);
            PolarLine refit = PolarLine::from_points(sp.a, sp.b);
            refit = refit_to_band_pixels(refit, img, segs,
                                         2.0 * cfg.segments.on_band_px);

            const Point2 d = refit.direction();
            const double off = vertical
                                   ? std::acos(std::min(1.0, std::abs(d.y)))
                                   : std::acos(std::min(1.0, std::abs(d.x)));
            if (off > (vertical ? cfg.vertical_tol : cfg.horizontal_tol))
                continue;

            // Runs re-extracted along the corrected line follow the actual
            // stroke, so span endpoints reach its true tips.
            std::vector<LineSegment> refreshed =
                extract_segments(refit, img, cfg.segments);
            if (!refreshed.empty()) segs = std::move(refreshed);
            out.push_back(TrackedLine{refit, std::move(segs)});
        }

        // Dedup: two fits of the same band structure lie within a couple of
        // pixels of each other along their whole extent; distinct pencil
        // lines stay tens of pixels apart inside the image.
        constexpr double kDedupTolPx = 4.5;
        std::vector<ExtremesSpan> spans;
        for (const TrackedLine& t : out) spans.push_back(extremes_span(t.segments));
        std::vector<bool> drop(out.size(), false);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (drop[i]) continue;
            for (std::size_t j = i + 1; j < out.size(); ++j) {
                if (drop[j]) continue;
                const bool coincide =
                    std::abs(out[i].line.eval(spans[j].a)) <= kDedupTolPx &&
                    std::abs(out[i].line.eval(spans[j].b)) <= kDedupTolPx &&
                    std::abs(out[j].line.eval(spans[i].a)) <= kDedupTolPx &&
                    std::abs(out[j].line.eval(spans[i].b)) <= kDedupTolPx;
                if (!coincide) continue;
                // Keep the longer fit; ties keep the stronger (earlier) one.
                if (distance(spans[j].a, spans[j].b) >
                    distance(spans[i].a, spans[i].b)) {
                    drop[i] = true;
                    break;
                }
                drop[j] = true;
            }
        }
        std::vector<TrackedLine> kept;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!drop[i]) kept.push_back(std::move(out[i]));
        return kept;
    };
    result.vertical_lines = track(result.vertical_edges, true);
    result.horizontal_lines = track(result.horizontal_edges, false);
    snap_run_ends(result.vertical_lines, result.horizontal_lines);
    snap_run_ends(result.horizontal_lines, result.vertical_lines);

    std::vector<PolarLine> vlines, hlines;
    for (const TrackedLine& t : result.vertical_lines) vlines.push_back(t.line);
    for (const TrackedLine& t : result.horizontal_lines)
        hlines.push_back(t.line);

    result.vertical_vp = estimate_vp(vlines, SeedRegion::Below, cfg.vp, frame);
    const SceneValidation check = validate_scene(result.vertical_vp, frame);
    if (!check.ok) result.warnings.push_back(check.reason);

    auto [left_vp, right_vp] = assign_horizontal_vps(hlines, cfg.vp, frame);
    result.left_vp = std::move(left_vp);
    result.right_vp = std::move(right_vp);
    result.left_face_lines = result.left_vp.support;
    result.right_face_lines = result.right_vp.support;

    // Extreme endpoints per horizontal line. Runs walk a few pixels past the
    // shared edge onto the neighboring face before the band loses them (and
    // near-horizon structures can merge across it entirely), so raw inner
    // extremes overshoot. Where a left-face line and a right-face line meet
    // at a healthy angle inside both runs, that junction marks the shared
    // edge; the median such junction plus the vertical vanishing point give
    // a shared-edge estimate, and inner endpoints beyond it are pulled back
    // onto it. Shallow-angle pairs are ignored: their intersection moves
    // tens of pixels per pixel of fit error.
    std::vector<ExtremesX> ext(result.horizontal_lines.size());
    for (std::size_t i = 0; i < result.horizontal_lines.size(); ++i)
        ext[i] = extremes_x(result.horizontal_lines[i]);

    constexpr double kJunctionSlack = 3.0;
    constexpr double kMinJunctionSine = 0.25;
    std::vector<Point2> junctions;
    for (int li : result.left_vp.support) {
        for (int ri : result.right_vp.support) {
            const PolarLine& a = result.horizontal_lines[li].line;
            const PolarLine& b = result.horizontal_lines[ri].line;
            if (std::abs(cross(a.direction(), b.direction())) <
                kMinJunctionSine)
                continue;
            HomogeneousPoint h{};
            try {
                h = intersect_lines(a, b);
            } catch (const Error&) {
                continue;
            }
            if (h.is_infinite()) continue;
            const Point2 x = h.dehomogenized();
            if (x.x < ext[li].lo.x - kJunctionSlack ||
                x.x > ext[li].hi.x + kJunctionSlack ||
                x.x < ext[ri].lo.x - kJunctionSlack ||
                x.x > ext[ri].hi.x + kJunctionSlack)
                continue;
            junctions.push_back(x);
        }
    }
    if (!junctions.empty()) {
        std::sort(junctions.begin(), junctions.end(), lex_less);
        const Point2 pivot = junctions[(junctions.size() - 1) / 2];
        std::optional<PolarLine> edge;
        try {
            edge = result.vertical_vp.point.is_infinite()
                       ? PolarLine::through(
                             pivot, result.vertical_vp.point.direction())
                       : PolarLine::from_points(
                             pivot, result.vertical_vp.point.dehomogenized());
        } catch (const Error&) {
        }
        auto clamp_to_edge = [&](const PolarLine& l, Point2& p, bool is_hi) {
            HomogeneousPoint h{};
            try {
                h = intersect_lines(l, *edge);
            } catch (const Error&) {
                return;
            }
            if (h.is_infinite()) return;
            const Point2 x = h.dehomogenized();
            if (is_hi ? p.x > x.x + kJunctionSlack
                      : p.x < x.x - kJunctionSlack)
                p = x;
        };
        if (edge) {
            for (int li : result.left_vp.support)
                clamp_to_edge(result.horizontal_lines[li].line, ext[li].hi,
                              true);
            for (int ri : result.right_vp.support)
                clamp_to_edge(result.horizontal_lines[ri].line, ext[ri].lo,
                              false);
        }
    }

    const BBox clamp_box = mask.bbox().expanded(cfg.corner_clamp_factor);
    auto clamp_corner = [&](Point2 p) {
        p.x = std::clamp(p.x, clamp_box.min.x, clamp_box.max.x);
        p.y = std::clamp(p.y, clamp_box.min.y, clamp_box.max.y);
        return p;
    };

    auto build_face = [&](const VanishingPointEstimate& face_vp) {
        std::vector<Point2> lo_pts, hi_pts;
        double span_lo = std::numeric_limits<double>::infinity();
        double span_hi = -span_lo;
        for (int i : face_vp.support) {
            lo_pts.push_back(ext[i].lo);
            hi_pts.push_back(ext[i].hi);
            span_lo = std::min(span_lo, ext[i].lo.x);
            span_hi = std::max(span_hi, ext[i].hi.x);
        }
        const PolarLine left_b =
            regress_boundary(lo_pts, result.vertical_vp.point);
        const PolarLine right_b =
            regress_boundary(hi_pts, result.vertical_vp.point);

        std::vector<Point2> top_pts, bot_pts;
        for (int i : result.vertical_vp.support) {
            const TrackedLine& tl = result.vertical_lines[i];
            const Point2 top = extreme_y(tl, true);
            const Point2 bot = extreme_y(tl, false);
            const Point2 mid = (top + bot) * 0.5;
            if (mid.x >= span_lo - cfg.face_span_pad_px &&
                mid.x <= span_hi + cfg.face_span_pad_px) {
                top_pts.push_back(top);
                bot_pts.push_back(bot);
            }
        }
        const PolarLine top_b = regress_boundary(top_pts, face_vp.point);
        const PolarLine bot_b = regress_boundary(bot_pts, face_vp.point);

        auto corner = [&](const PolarLine& a, const PolarLine& b) {
            const HomogeneousPoint h = intersect_lines(a, b);
            if (h.is_infinite())
                raise(ErrorCode::NotEnoughEvidence,
                      "parallel face boundaries");
            return clamp_corner(h.dehomogenized());
        };
        return std::array<Point2, 4>{
            corner(left_b, top_b), corner(top_b, right_b),
            corner(right_b, bot_b), corner(bot_b, left_b)};
    };

    const std::array<Point2, 4> lc = build_face(result.left_vp);
    const std::array<Point2, 4> rc = build_face(result.right_vp);

    // lc = {TL, TR, BR, BL}; the left face's right edge must meet the right
    // face's left edge.
    if (distance(lc[1], rc[0]) > cfg.shared_edge_tol_px ||
        distance(lc[2], rc[3]) > cfg.shared_edge_tol_px)
        raise(ErrorCode::SharedEdgeMismatch,
              "face quads disagree about the shared edge");
    result.faces.shared_edge =
        LineSegment{(lc[1] + rc[0]) * 0.5, (lc[2] + rc[3]) * 0.5};

    auto to_quad = [](const std::array<Point2, 4>& c) {
        std::optional<Quad> q = Quad::make(c);
        if (!q)
            raise(ErrorCode::NotEnoughEvidence, "degenerate face quad");
        return *q;
    };
    result.faces.left = to_quad(lc);
    result.faces.right = to_quad(rc);
    return result;
}

}  // namespace palletscope
