#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mkdepth/error.hpp"
#include "mkdepth/ot_core.hpp"
#include "mkdepth/semidiscrete.hpp"
#include "oracles.hpp"

using namespace mkdepth;

namespace {

// Midpoints of a k x k grid on [-1,1]^2; symmetric, no atom on either axis.
DiscreteMeasure square_midpoints(int k) {
    std::vector<double> c;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            c.push_back(-1.0 + (2.0 * i + 1.0) / k);
            c.push_back(-1.0 + (2.0 * j + 1.0) / k);
        }
    }
    return DiscreteMeasure::uniform(2, std::move(c));
}

DiscreteMeasure random_targets(std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_int_distribution<int> w(1, 7);
    std::vector<double> c(2 * k), ws(k);
    for (auto& x : c) x = coord(rng);
    for (auto& x : ws) x = w(rng);
    return DiscreteMeasure(2, std::move(c), std::move(ws));
}

// Independent evaluation of the objective and cells.
double objective_direct(const std::vector<double>& v, const DiscreteMeasure& quad, const DiscreteMeasure& tgt) {
    double total = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        double best = -1e300;
        for (std::size_t k = 0; k < tgt.size(); ++k) best = std::max(best, dot(quad.point(q), tgt.point(k)) - v[k]);
        total += quad.weight(q) * best;
    }
    for (std::size_t k = 0; k < tgt.size(); ++k) total += tgt.weight(k) * v[k];
    return total;
}

}  // namespace

TEST_CASE("cells: symmetric split and single target") {
    const auto quad = square_midpoints(20);
    const auto two = DiscreteMeasure::from_points({{1, 0}, {-1, 0}});
    const auto cells = assign_cells(std::vector<double>{0.0, 0.0}, quad, two);
    CHECK(cells.masses[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cells.masses[1] == doctest::Approx(0.5).epsilon(1e-12));
    for (std::size_t q = 0; q < quad.size(); ++q) CHECK(cells.cell[q] == (quad.point(q)[0] > 0 ? 0u : 1u));

    const auto one = DiscreteMeasure::from_points({{0.3, 0.3}});
    CHECK(assign_cells(std::vector<double>{0.7}, quad, one).masses[0] == doctest::Approx(1.0));
}

TEST_CASE("cells: mass of a cell is nonincreasing in its weight") {
    const auto quad = make_reference_grid(30, 40).base;
    std::mt19937_64 rng(3);
    const auto tgt = random_targets(6, rng);
    std::vector<double> v(6, 0.0);
    double previous = 2.0;
    for (int s = -20; s <= 20; ++s) {
        v[0] = 0.05 * s;
        const double mass = assign_cells(v, quad, tgt).masses[0];
        CHECK(mass <= previous);
        previous = mass;
    }
}

TEST_CASE("solve: trivial and symmetric cases") {
    const auto quad = square_midpoints(20);
    const auto one = DiscreteMeasure::from_points({{0.2, -0.4}});
    const auto s1 = solve_semidiscrete(one, quad);
    CHECK(s1.v == std::vector<double>{0.0});
    CHECK(s1.cell_masses[0] == doctest::Approx(1.0));
    CHECK(s1.converged);

    const auto two = DiscreteMeasure::from_points({{0.5, 0}, {-0.5, 0}});
    const auto s2 = solve_semidiscrete(two, quad);
    CHECK(s2.v[0] == 0.0);
    CHECK(std::abs(s2.v[1]) <= 1e-12);
    CHECK(s2.cell_masses[0] == doctest::Approx(0.5));
    CHECK(s2.cell_masses[1] == doctest::Approx(0.5));
}

TEST_CASE("gradient matches central differences at generic weights") {
    const auto quad = make_reference_grid(100, 100).base;
    std::mt19937_64 rng(17);
    const auto tgt = random_targets(8, rng);
    std::uniform_real_distribution<double> unif(-0.3, 0.3);
    std::uniform_int_distribution<std::size_t> pick(0, 7);
    const double delta = 1e-4;
    int generic = 0, draws = 0;
    while (generic < 20 && draws < 400) {
        ++draws;
        std::vector<double> v(8);
        for (auto& x : v) x = unif(rng);
        const std::size_t k = pick(rng);
        auto lo = v, hi = v;
        lo[k] -= delta;
        hi[k] += delta;
        // Generic: no quadrature atom changes cell inside [v - delta, v + delta].
        if (assign_cells(lo, quad, tgt).cell != assign_cells(hi, quad, tgt).cell) continue;
        ++generic;
        const double fd = (semidiscrete_objective(hi, quad, tgt) - semidiscrete_objective(lo, quad, tgt)) / (2 * delta);
        const double grad = tgt.weight(k) - assign_cells(v, quad, tgt).masses[k];
        CHECK(std::abs(fd - grad) <= 1e-5);
    }
    CHECK(generic == 20);
}

TEST_CASE("objective is convex and shift invariant") {
    const auto quad = make_reference_grid(40, 50).base;
    std::mt19937_64 rng(5);
    const auto tgt = random_targets(10, rng);
    std::uniform_real_distribution<double> unif(-1.0, 1.0), frac(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(10), b(10), m(10);
        for (auto& x : a) x = unif(rng);
        for (auto& x : b) x = unif(rng);
        const double s = frac(rng);
        for (std::size_t k = 0; k < 10; ++k) m[k] = s * a[k] + (1 - s) * b[k];
        CHECK(semidiscrete_objective(m, quad, tgt) <=
              s * semidiscrete_objective(a, quad, tgt) + (1 - s) * semidiscrete_objective(b, quad, tgt) + 1e-12);
    }
    std::vector<double> v(10);
    for (auto& x : v) x = unif(rng);
    auto shifted = v;
    for (auto& x : shifted) x += 0.25;  // exactly representable shift
    const auto c0 = assign_cells(v, quad, tgt);
    const auto c1 = assign_cells(shifted, quad, tgt);
    CHECK(c0.cell == c1.cell);
    CHECK(std::abs(semidiscrete_objective(v, quad, tgt) - semidiscrete_objective(shifted, quad, tgt)) <= 1e-12);
}

TEST_CASE("push-forward on random target sets") {
    const auto quad = make_reference_grid(100, 100).base;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto tgt = random_targets(5 + seed * 3, rng);
        SemiDiscreteOptions opts;
        opts.tol_mass = 1e-3;
        const auto s = solve_semidiscrete(tgt, quad, opts);
        CHECK(s.converged);
        CHECK(s.v[0] == 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < tgt.size(); ++k) {
            CHECK(std::abs(s.cell_masses[k] - tgt.weight(k)) <= s.tol_mass);
            total += s.cell_masses[k];
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        CHECK(std::abs(s.objective - objective_direct(s.v, quad, tgt)) <= 1e-10);
        CHECK(std::abs(s.objective - semidiscrete_objective(s.v, quad, tgt)) <= 1e-10);
        CHECK(s.residual <= s.tol_mass);
    }
}

TEST_CASE("equal counts reproduce the optimal assignment") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed + 40);
        const auto quad = oracle::random_uniform_measure(9, 2, rng);
        const auto tgt = oracle::random_uniform_measure(9, 2, rng);
        const auto s = solve_semidiscrete(tgt, quad);
        // One atom per cell: a permutation.
        std::vector<std::size_t> sorted = s.cells;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> ids(9);
        std::iota(ids.begin(), ids.end(), 0);
        CHECK(sorted == ids);
        double cost = 0.0;
        for (std::size_t q = 0; q < 9; ++q) cost += quad.weight(q) * squared_distance(quad.point(q), tgt.point(s.cells[q]));
        CHECK(cost == doctest::Approx(oracle::permutation_minimum(quad, tgt)).epsilon(1e-12));
        CHECK(s.residual == 0.0);
    }
    std::mt19937_64 rng(7);
    const auto quad = oracle::random_uniform_measure(80, 2, rng);
    const auto tgt = oracle::random_uniform_measure(80, 2, rng);
    const auto s = solve_semidiscrete(tgt, quad);
    CHECK(s.residual == 0.0);
    double cost = 0.0;
    for (std::size_t q = 0; q < 80; ++q) cost += quad.weight(q) * squared_distance(quad.point(q), tgt.point(s.cells[q]));
    CHECK(std::abs(cost - solve_assignment(quad, tgt).objective) <= 1e-12);
    const auto cells = assign_cells(s.v, quad, tgt);
    CHECK(cells.cell == s.cells);
}

TEST_CASE("tolerance floor and stopping metadata") {
    const auto quad = make_reference_grid(10, 10).base;
    std::mt19937_64 rng(2);
    const auto tgt = random_targets(4, rng);
    SemiDiscreteOptions opts;
    opts.tol_mass = 1e-9;
    const auto s = solve_semidiscrete(tgt, quad, opts);
    CHECK(s.tol_mass == doctest::Approx(0.01));
    nlohmann::json j = s;
    CHECK(j.contains("stopping_rule"));
    CHECK(j.at("iterations") == s.iterations);
    CHECK(j.at("v").size() == 4);
}

TEST_CASE("solver errors") {
    const auto quad = square_midpoints(2);
    std::mt19937_64 rng(1);
    const auto many = random_targets(6, rng);
    try {
        solve_semidiscrete(many, quad);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
    const DiscreteMeasure dup(2, {0.1, 0.1, 0.1, 0.1}, {1, 1});
    CHECK_THROWS_AS(solve_semidiscrete(dup, square_midpoints(10)), Error);

    const auto big = make_reference_grid(100, 100).base;
    const auto tgt = random_targets(15, rng);
    SemiDiscreteOptions opts;
    opts.max_iters = 1;
    try {
        solve_semidiscrete(tgt, big, opts);
        FAIL("expected max-iters");
    } catch (const MaxItersExceeded& e) {
        CHECK(e.code() == ErrorCode::MaxItersExceeded);
        CHECK(e.best().v.size() == 15);
        CHECK(e.best().residual > e.best().tol_mass);
        CHECK_FALSE(e.best().converged);
    }
}
