#include "palletscope/hough.hpp"

#include <algorithm>
#include <cmath>

namespace palletscope {

namespace {

struct Grid {
    int n_theta;
    double theta_step;
    int rho_offset;  // index of rho == 0
    int n_rho;
};

Grid make_grid(const BinaryImage& img, const HoughParams& p) {
    if (p.rho_res <= 0.0 || p.theta_res <= 0.0 || p.nms_rho <= 0.0 ||
        p.nms_theta <= 0.0 || p.max_lines < 1 ||
        !(p.peak_threshold_frac > 0.0 && p.peak_threshold_frac <= 1.0))
        raise(ErrorCode::ConfigError, "bad hough parameters");
    Grid g;
    g.n_theta = std::max(1, static_cast<int>(std::lround(kPi / p.theta_res)));
    g.theta_step = kPi / g.n_theta;  // bins tile [0,pi) exactly
    const double diag = std::hypot(img.width, img.height);
    g.rho_offset = static_cast<int>(std::floor(diag / p.rho_res));
    g.n_rho = 2 * g.rho_offset + 1;
    return g;
}

// theta wraps at pi with a rho sign flip; suppression must see
// (rho, theta) and (-rho, theta +/- pi) as the same neighborhood.
bool within_window(double rho_a, double theta_a, double rho_b, double theta_b,
                   const HoughParams& p) {
    const double dt = std::abs(theta_a - theta_b);
    const double dr = std::abs(rho_a - rho_b);
    if (dt <= p.nms_theta && dr <= p.nms_rho) return true;
    const double dtw = kPi - dt;
    const double drw = std::abs(rho_a + rho_b);
    return dtw <= p.nms_theta && drw <= p.nms_rho;
}

}  // namespace

std::vector<PolarLine> hough_lines(const BinaryImage& img,
                                   const HoughParams& p) {
    const Grid g = make_grid(img, p);

    std::vector<Point2> on;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (img.test(x, y))
                on.push_back(
                    Point2{static_cast<double>(x), static_cast<double>(y)});
    if (on.size() < 2)
        raise(ErrorCode::NotEnoughEvidence, "need at least 2 on-pixels");

    std::vector<double> cos_t(g.n_theta), sin_t(g.n_theta);
    for (int t = 0; t < g.n_theta; ++t) {
        cos_t[t] = std::cos(t * g.theta_step);
        sin_t[t] = std::sin(t * g.theta_step);
    }

    std::vector<int> acc(static_cast<std::size_t>(g.n_rho) * g.n_theta, 0);
    for (const Point2& q : on) {
        for (int t = 0; t < g.n_theta; ++t) {
            const double rho = q.x * cos_t[t] + q.y * sin_t[t];
            const int ri =
                static_cast<int>(std::lround(rho / p.rho_res)) + g.rho_offset;
            if (ri >= 0 && ri < g.n_rho)
                acc[static_cast<std::size_t>(ri) * g.n_theta + t]++;
        }
    }

    const int max_score = *std::max_element(acc.begin(), acc.end());
    const double threshold = p.peak_threshold_frac * max_score;

    struct Cell {
        int score, ri, ti;
    };
    std::vector<Cell> cand;
    for (int ri = 0; ri < g.n_rho; ++ri)
        for (int ti = 0; ti < g.n_theta; ++ti) {
            const int s = acc[static_cast<std::size_t>(ri) * g.n_theta + ti];
            if (s >= threshold && s > 0) cand.push_back({s, ri, ti});
        }
    std::sort(cand.begin(), cand.end(), [](const Cell& a, const Cell& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.ti != b.ti) return a.ti < b.ti;
        return a.ri < b.ri;
    });

    std::vector<PolarLine> out;
    std::vector<std::pair<double, double>> kept;  // (rho, theta) of winners
    for (const Cell& c : cand) {
        if (static_cast<int>(out.size()) >= p.max_lines) break;
        const double rho = (c.ri - g.rho_offset) * p.rho_res;
        const double theta = c.ti * g.theta_step;
        bool suppressed = false;
        for (const auto& [kr, kt] : kept)
            if (within_window(rho, theta, kr, kt, p)) {
                suppressed = true;
                break;
            }
        if (suppressed) continue;
        kept.emplace_back(rho, theta);
        out.push_back(PolarLine::normalized(rho, theta));
    }
    return out;
}

int hough_votes(const BinaryImage& img, const PolarLine& line,
                const HoughParams& p) {
    const Grid g = make_grid(img, p);
    int ti = static_cast<int>(std::lround(line.theta / g.theta_step));
    double rho = line.rho;
    if (ti >= g.n_theta) {  // rounded up past the seam
        ti = 0;
        rho = -rho;
    }
    const int ri = static_cast<int>(std::lround(rho / p.rho_res));
    const double ct = std::cos(ti * g.theta_step);
    const double st = std::sin(ti * g.theta_step);
    int votes = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!img.test(x, y)) continue;
            const double r = x * ct + y * st;
            if (static_cast<int>(std::lround(r / p.rho_res)) == ri) votes++;
        }
    return votes;
}

std::vector<LineSegment> extract_segments(const PolarLine& line,
                                          const BinaryImage& img,
                                          const SegmentParams& p) {
    if (p.min_length_frac <= 0.0 || p.max_gap_px <= 0.0 || p.on_band_px <= 0.0)
        raise(ErrorCode::ConfigError, "bad segment parameters");
    const double diag = std::hypot(img.width, img.height);
    const double min_length = p.min_length_frac * diag;

    const Point2 dir = line.direction();
    const Point2 base = line.normal() * line.rho;

    // Walk parameter range: projections of the pixel-center corners.
    double t0 = 0.0, t1 = 0.0;
    bool first = true;
    for (const Point2 c :
         {Point2{0, 0}, Point2{img.width - 1.0, 0.0},
          Point2{0.0, img.height - 1.0},
          Point2{img.width - 1.0, img.height - 1.0}}) {
        const double t = dot(c - base, dir);
        t0 = first ? t : std::min(t0, t);
        t1 = first ? t : std::max(t1, t);
        first = false;
    }

    const int reach = static_cast<int>(std::ceil(p.on_band_px));
    std::vector<LineSegment> out;

    std::vector<Point2> run;  // hit pixel centers of the open run
    double last_hit_t = 0.0;
    auto close_run = [&]() {
        if (run.empty()) return;
        // Extreme hits along the walk direction become the endpoints.
        Point2 lo = run.front(), hi = run.front();
        double lo_t = dot(lo - base, dir), hi_t = lo_t;
        for (const Point2& q : run) {
            const double t = dot(q - base, dir);
            if (t < lo_t) {
                lo_t = t;
                lo = q;
            }
            if (t > hi_t) {
                hi_t = t;
                hi = q;
            }
        }
        if (distance(lo, hi) >= min_length) out.push_back(LineSegment{lo, hi});
        run.clear();
    };

    const Point2 normal = line.normal();
    const int steps = static_cast<int>(std::floor(t1 - t0));
    for (int i = 0; i <= steps; ++i) {
        const double t = t0 + i;
        const Point2 q = base + dir * t;

        // Probe straight across the line only; pixels that lie further along
        // the walk belong to their own step, and reaching for them here would
        // hide genuine gaps.
        bool found = false;
        Point2 best{};
        double best_dist = 0.0;
        for (int j = 0; j <= 2 * reach; ++j) {
            const int k = (j % 2 == 0) ? j / 2 : -(j + 1) / 2;  // 0,-1,1,-2,2
            const Point2 probe = q + normal * static_cast<double>(k);
            const int ix = static_cast<int>(std::lround(probe.x));
            const int iy = static_cast<int>(std::lround(probe.y));
            if (!img.in_bounds(ix, iy) || !img.test(ix, iy)) continue;
            const Point2 pix{static_cast<double>(ix), static_cast<double>(iy)};
            const double d = std::abs(line.eval(pix));
            if (d > p.on_band_px) continue;
            if (!found || d < best_dist) {
                found = true;
                best = pix;
                best_dist = d;
            }
        }
        if (!found) continue;

        // Number of unmatched pixels since the previous hit.
        if (!run.empty() && t - last_hit_t - 1.0 > p.max_gap_px) close_run();
        run.push_back(best);
        last_hit_t = t;
    }
    close_run();
    return out;
}

std::pair<std::vector<LineSegment>, std::vector<LineSegment>>
split_by_orientation(const std::vector<LineSegment>& segments,
                     double vertical_tol, double horizontal_tol) {
    if (vertical_tol <= 0.0 || horizontal_tol <= 0.0)
        raise(ErrorCode::ConfigError, "orientation tolerances must be positive");
    std::vector<LineSegment> vertical, horizontal;
    for (const LineSegment& s : segments) {
        const double len = s.length();
        if (len <= 0.0) continue;
        const Point2 d = (s.p1 - s.p0) * (1.0 / len);
        const double from_vertical = std::acos(std::min(1.0, std::abs(d.y)));
        const double from_horizontal = std::acos(std::min(1.0, std::abs(d.x)));
        if (from_vertical <= vertical_tol)
            vertical.push_back(s);
        else if (from_horizontal <= horizontal_tol)
            horizontal.push_back(s);
    }
    return {std::move(vertical), std::move(horizontal)};
}

}  // namespace palletscope
