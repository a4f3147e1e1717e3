#include "mkdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <utility>

#include "mkdepth/error.hpp"

namespace mkdepth {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

void require_planar(const std::vector<Point>& points) {
    for (const auto& p : points) {
        if (p.size() != 2) throw Error(ErrorCode::UnsupportedDimension, "planar geometry needs 2-d points");
    }
}

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r2 = 0.0;
};

Circle circumcircle(const Point& a, const Point& b, const Point& c) {
    const double bx = b[0] - a[0], by = b[1] - a[1];
    const double cx = c[0] - a[0], cy = c[1] - a[1];
    const double d = 2.0 * (bx * cy - by * cx);
    if (d == 0.0) return {0.0, 0.0, std::numeric_limits<double>::infinity()};
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    const double ux = (cy * b2 - by * c2) / d;
    const double uy = (bx * c2 - cx * b2) / d;
    return {a[0] + ux, a[1] + uy, ux * ux + uy * uy};
}

}  // namespace

std::vector<Point> convex_hull(std::vector<Point> points) {
    require_planar(points);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) return points;
    std::vector<Point> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = points.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    return hull;
}

double convexity_gap(const std::vector<Point>& points) {
    if (points.empty()) throw Error(ErrorCode::EmptySet, "convexity gap of an empty set");
    const auto hull = convex_hull(points);
    double worst = 0.0;
    for (std::size_t a = 0; a < hull.size(); ++a) {
        for (std::size_t b = a + 1; b < hull.size(); ++b) {
            const Point mid{(hull[a][0] + hull[b][0]) / 2.0, (hull[a][1] + hull[b][1]) / 2.0};
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& p : points) nearest = std::min(nearest, squared_distance(p, mid));
            worst = std::max(worst, nearest);
        }
    }
    return std::sqrt(worst);
}

std::vector<Triangle> delaunay(const std::vector<Point>& input) {
    require_planar(input);
    const std::size_t n = input.size();
    if (n < 3) return {};
    double lo_x = input[0][0], hi_x = lo_x, lo_y = input[0][1], hi_y = lo_y;
    for (const auto& p : input) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
    const double mx = (lo_x + hi_x) / 2.0, my = (lo_y + hi_y) / 2.0;
    // Cocircular inputs (rings, lattices) break the incircle test; a tiny
    // fixed jitter puts them in general position. Triangles index the input.
    std::vector<Point> pts = input;
    std::mt19937_64 rng(0x64656c61756e6179);
    std::uniform_real_distribution<double> jitter(-1e-9 * span, 1e-9 * span);
    for (auto& p : pts) {
        p[0] += jitter(rng);
        p[1] += jitter(rng);
    }
    pts.push_back({mx - 40.0 * span, my - 30.0 * span});
    pts.push_back({mx + 40.0 * span, my - 30.0 * span});
    pts.push_back({mx, my + 40.0 * span});

    struct Tri {
        Triangle v;
        Circle c;
        bool alive;
    };
    std::vector<Tri> tris;
    auto add = [&](std::size_t a, std::size_t b, std::size_t c) {
        if (cross(pts[a], pts[b], pts[c]) < 0.0) std::swap(b, c);
        tris.push_back({{a, b, c}, circumcircle(pts[a], pts[b], pts[c]), true});
    };
    add(n, n + 1, n + 2);

    // Insert in lexicographic order so repeated points are easy to skip.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return input[a] < input[b]; });

    std::vector<std::size_t> alive;
    alive.push_back(0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t p = order[k];
        if (k > 0 && input[order[k - 1]] == input[p]) continue;
        const double px = pts[p][0], py = pts[p][1];
        std::map<std::pair<std::size_t, std::size_t>, int> edges;
        std::vector<std::size_t> keep;
        keep.reserve(alive.size() + 2);
        for (const std::size_t t : alive) {
            const auto& c = tris[t].c;
            const double dx = px - c.cx, dy = py - c.cy;
            if (dx * dx + dy * dy < c.r2) {
                tris[t].alive = false;
                const auto& v = tris[t].v;
                for (int e = 0; e < 3; ++e) {
                    const std::size_t a = v[e], b = v[(e + 1) % 3];
                    ++edges[{std::min(a, b), std::max(a, b)}];
                }
            } else {
                keep.push_back(t);
            }
        }
        for (const auto& [edge, count] : edges) {
            if (count != 1) continue;
            keep.push_back(tris.size());
            add(edge.first, edge.second, p);
        }
        alive = std::move(keep);
    }
    std::vector<Triangle> out;
    for (const std::size_t t : alive) {
        const auto& v = tris[t].v;
        if (v[0] < n && v[1] < n && v[2] < n) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<Point>> alpha_shape_boundary(const std::vector<Point>& points, double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    const auto tris = delaunay(points);
    std::map<std::pair<std::size_t, std::size_t>, int> count;
    std::vector<std::pair<std::size_t, std::size_t>> directed;
    for (const auto& t : tris) {
        const Circle c = circumcircle(points[t[0]], points[t[1]], points[t[2]]);
        if (!(c.r2 <= alpha * alpha)) continue;
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = t[e], b = t[(e + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
            directed.emplace_back(a, b);
        }
    }
    std::multimap<std::size_t, std::size_t> next;
    for (const auto& [a, b] : directed) {
        if (count[{std::min(a, b), std::max(a, b)}] == 1) next.emplace(a, b);
    }
    std::vector<std::vector<Point>> loops;
    while (!next.empty()) {
        auto it = next.begin();
        const std::size_t start = it->first;
        std::size_t at = it->second;
        next.erase(it);
        std::vector<Point> loop{points[start]};
        while (at != start) {
            loop.push_back(points[at]);
            auto step = next.find(at);
            if (step == next.end()) break;
            at = step->second;
            next.erase(step);
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace mkdepth
