#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mkdepth/error.hpp"
#include "mkdepth/metrics.hpp"
#include "oracles.hpp"

using namespace mkdepth;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

double hausdorff_brute(const std::vector<Point>& a, const std::vector<Point>& b) {
    auto directed = [](const std::vector<Point>& x, const std::vector<Point>& y) {
        double worst = 0.0;
        for (const auto& p : x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y) best = std::min(best, std::sqrt(oracle::sqdist(p, q)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

std::vector<Point> random_points(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Point> out(n);
    for (auto& p : out) p = {u(rng), u(rng)};
    return out;
}

}  // namespace

TEST_CASE("hausdorff distance") {
    const std::vector<Point> a{{0, 0}, {1, 2}};
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff({{0, 0}}, {{0, 0}, {3, 4}}) == 5.0);
    std::mt19937_64 rng(12);
    for (int t = 0; t < 30; ++t) {
        const auto x = random_points(1 + t, rng), y = random_points(40 - t, rng), z = random_points(7, rng);
        CHECK(hausdorff(x, y) == doctest::Approx(hausdorff_brute(x, y)).epsilon(1e-14));
        CHECK(hausdorff(x, y) == hausdorff(y, x));
        CHECK(hausdorff(x, z) <= hausdorff(x, y) + hausdorff(y, z) + 1e-12);
    }
    CHECK(code_of([] { hausdorff({}, {{0.0, 1.0}}); }) == ErrorCode::EmptySet);
    CHECK(code_of([] { hausdorff({{0.0}}, {{0.0, 1.0}}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("band and probe grid") {
    CHECK_NOTHROW(Band{}.validate());
    CHECK(code_of([] { Band{0.0, 0.5}.validate(); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Band{0.6, 0.5}.validate(); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Band{0.2, 1.0}.validate(); }) == ErrorCode::InvalidArgument);
    for (std::size_t d : {1u, 2u, 3u}) {
        const auto probes = band_probe_grid(Band{}, d, 400);
        CHECK(probes.size() >= 300);
        CHECK(probes.size() <= 500);
        double lo = 1.0, hi = 0.0;
        for (const auto& p : probes) {
            CHECK(p.size() == d);
            lo = std::min(lo, norm(p));
            hi = std::max(hi, norm(p));
        }
        CHECK(lo == doctest::Approx(0.2));
        CHECK(hi == doctest::Approx(0.8));
        CHECK(probes == band_probe_grid(Band{}, d, 400));
    }
}

TEST_CASE("self transport of the reference has grid-level error") {
    const auto grid = make_reference_grid(20, 120).base;
    const auto fit = fit_assignment(grid, ReferenceKind::Ball, grid);
    const auto self = elliptical_spherical_family(2, 1.0);
    const double spacing = std::max(1.0 / 20.0, 2.0 * std::numbers::pi / 120.0);
    CHECK(sup_error_on_band(fit, self, Band{}, 1000) <= 2.0 * spacing);
    CHECK(sup_error_on_band(fit, self, Band{}, 1000, MapKind::Rank) <= 2.0 * spacing);
    CHECK(contour_hausdorff(fit, self, 0.5, Band{}) <= 2.0 * spacing);
}

TEST_CASE("oracle and band requirements") {
    const auto data = sample_banana(200, 1);
    const auto fit = fit_assignment(make_reference_grid(4, 50).base, ReferenceKind::Ball, data);
    CHECK(code_of([&] { sup_error_on_band(fit, banana_family(), Band{}, 100); }) == ErrorCode::NoOracle);
    const auto disk = uniform_ball_family(2);
    CHECK(code_of([&] { contour_hausdorff(fit, disk, 0.9, Band{}); }) == ErrorCode::InvalidTau);
    CHECK(code_of([&] { sup_error_on_band(fit, disk, Band{0.5, 0.2}, 100); }) == ErrorCode::InvalidArgument);
    const auto cube = fit_assignment(sample_uniform_cube(200, 2, 1), ReferenceKind::Cube, data);
    CHECK(code_of([&] { sup_error_on_band(cube, disk, Band{}, 100); }) == ErrorCode::NoOracle);
}

TEST_CASE("uniform disk at n = 4000") {
    const auto disk = uniform_ball_family(2);
    const auto data = disk.sample(4000, 2024);
    const auto fit = fit_assignment(make_reference_grid(25, 160).base, ReferenceKind::Ball, data);
    const double sup = sup_error_on_band(fit, disk, Band{}, 2000);
    const double h = contour_hausdorff(fit, disk, 0.5, Band{});
    MESSAGE("sup error " << sup << ", contour hausdorff " << h);
    CHECK(sup <= 0.15);
    CHECK(h <= 0.15);
}

TEST_CASE("convergence runs are reproducible") {
    ConvergenceRun run;
    run.family = uniform_ball_family(2);
    run.sizes = {200, 500};
    run.seeds = {1, 2, 3};
    run.taus = {0.5};
    run.probe_count = 400;
    run_convergence(run);
    CHECK(run.records.size() == 6);
    ConvergenceRun again = run;
    again.records.clear();
    run_convergence(again);
    for (std::size_t i = 0; i < run.records.size(); ++i) {
        CHECK(run.records[i].sup_error == again.records[i].sup_error);
        CHECK(run.records[i].hausdorff == again.records[i].hausdorff);
    }
    CHECK(median_sup_error(run, 500) > 0.0);
    CHECK(std::isfinite(median_hausdorff(run, 200, 0.5)));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    std::ostringstream out;
    write_convergence_csv(out, run);
    const std::string text = out.str();
    CHECK(text.rfind("# band=0.2:0.8 probes=", 0) == 0);
    CHECK(text.find("family,n,seed,tau,sup_error,hausdorff") != std::string::npos);

    CHECK(convergence_reference(500, 2).str() == "ball-grid:10,50");
    CHECK(convergence_reference(7919, 2).scheme == ReferenceSpec::Scheme::BallMonteCarlo);
    CHECK(convergence_reference(40, 1).scheme == ReferenceSpec::Scheme::BallGrid1d);
}
