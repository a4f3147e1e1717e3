#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "mkdepth/geometry.hpp"
#include "oracles.hpp"

using namespace mkdepth;

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool in_circumcircle(const Point& a, const Point& b, const Point& c, const Point& p) {
    const double ax = a[0] - p[0], ay = a[1] - p[1];
    const double bx = b[0] - p[0], by = b[1] - p[1];
    const double cx = c[0] - p[0], cy = c[1] - p[1];
    const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay) +
                       (cx * cx + cy * cy) * (ax * by - bx * ay);
    return det > 1e-9;
}

}  // namespace

TEST_CASE("convex hull") {
    const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}};
    const auto hull = convex_hull(square);
    CHECK(hull.size() == 4);
    for (std::size_t i = 0; i < hull.size(); ++i) {
        CHECK(cross(hull[i], hull[(i + 1) % 4], hull[(i + 2) % 4]) > 0.0);
    }
    CHECK(convex_hull({{1, 1}, {1, 1}}).size() == 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Point> cloud(300);
    for (auto& p : cloud) p = {u(rng), u(rng)};
    const auto h = convex_hull(cloud);
    for (const auto& p : cloud) {
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(cross(h[i], h[(i + 1) % h.size()], p) >= -1e-12);
    }
}

TEST_CASE("convexity gap separates a disk from an annulus") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point> disk, ring;
    while (disk.size() < 2000) {
        const Point p{2 * u(rng) - 1, 2 * u(rng) - 1};
        if (norm(p) <= 1) disk.push_back(p);
        if (norm(p) <= 1 && norm(p) >= 0.7) ring.push_back(p);
    }
    CHECK(convexity_gap(disk) < 0.1);
    CHECK(convexity_gap(ring) > 0.5);
}

TEST_CASE("delaunay triangulation has empty circumcircles") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point> pts(150);
    for (auto& p : pts) p = {u(rng), u(rng)};
    pts.push_back(pts[3]);
    const auto tris = delaunay(pts);
    // Euler: 2n - 2 - h triangles for n points in general position.
    const auto hull = convex_hull(pts);
    CHECK(tris.size() == 2 * 150 - 2 - hull.size());
    for (const auto& t : tris) {
        CHECK(cross(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0);
        for (std::size_t k = 0; k < 150; ++k) {
            if (k == t[0] || k == t[1] || k == t[2]) continue;
            CHECK_FALSE(in_circumcircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[k]));
        }
    }
    CHECK(delaunay({{0, 0}, {1, 0}}).empty());
}

TEST_CASE("alpha shape of an annulus has two loops") {
    std::vector<Point> pts;
    for (int j = 0; j < 5; ++j) {
        const double r = 0.6 + 0.1 * j;
        for (int k = 0; k < 80; ++k) {
            const double a = 2.0 * std::numbers::pi * k / 80.0 + 0.01 * j;
            pts.push_back({r * std::cos(a), r * std::sin(a)});
        }
    }
    const auto loops = alpha_shape_boundary(pts, 0.12);
    REQUIRE(loops.size() == 2);
    std::vector<double> radii;
    for (const auto& loop : loops) {
        double mean = 0.0;
        for (const auto& p : loop) mean += norm(p) / loop.size();
        radii.push_back(mean);
    }
    std::sort(radii.begin(), radii.end());
    CHECK(radii[0] == doctest::Approx(0.6).epsilon(0.02));
    CHECK(radii[1] == doctest::Approx(1.0).epsilon(0.02));
    // Large alpha gives the hull.
    const auto all = alpha_shape_boundary(pts, 100.0);
    REQUIRE(all.size() == 1);
    CHECK(all[0].size() == convex_hull(pts).size());
}
