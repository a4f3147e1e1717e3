#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mkdepth/error.hpp"
#include "mkdepth/measures.hpp"
#include "oracles.hpp"

using namespace mkdepth;

namespace {

double mass_within(const DiscreteMeasure& m, double tau) {
    double mass = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (norm(m.point(i)) <= tau) mass += m.weight(i);
    }
    return mass;
}

double weight_sum(const DiscreteMeasure& m) {
    return std::accumulate(m.weights().begin(), m.weights().end(), 0.0);
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("measure construction normalizes and drops zero weights") {
    DiscreteMeasure m(2, {0, 0, 1, 0, 0, 1}, {2, 0, 6});
    CHECK(m.size() == 2);
    CHECK(m.weight(0) == doctest::Approx(0.25));
    CHECK(m.weight(1) == doctest::Approx(0.75));
    CHECK(m.point(1)[1] == 1.0);
    CHECK(std::abs(weight_sum(m) - 1.0) <= 1e-12);
    CHECK(code_of([] { DiscreteMeasure(2, {0, 0, 1, 1}, {1, -1}); }) == ErrorCode::NonpositiveWeight);
    CHECK(code_of([] { DiscreteMeasure(2, {0, 0, 1}, {1}); }) == ErrorCode::InconsistentArity);
    CHECK(code_of([] { DiscreteMeasure(0, {}, {}); }) == ErrorCode::InvalidDimension);
}

TEST_CASE("json round trip keeps weights bit-exact") {
    std::mt19937_64 rng(3);
    DiscreteMeasure m(3, {0.1, 0.2, 0.3, -1, 2, 5, 7, 7, 7}, {1, 2, 4});
    nlohmann::json j = m;
    CHECK(j.at("dim") == 3);
    CHECK(j.at("points").size() == 3);
    const auto back = nlohmann::json::parse(j.dump()).get<DiscreteMeasure>();
    CHECK(back == m);
}

TEST_CASE("spherical uniform: mass of the ball of radius tau is tau") {
    const auto m = sample_spherical_uniform(1000, 2, 11);
    for (double tau : {0.25, 0.5, 0.75}) CHECK(std::abs(mass_within(m, tau) - tau) <= 3.0 / std::sqrt(1000.0));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = sample_spherical_uniform(2000, 2, seed);
        for (double tau : {0.1, 0.3, 0.6, 0.9}) CHECK(std::abs(mass_within(s, tau) - tau) <= 4.0 / std::sqrt(2000.0));
    }
}

TEST_CASE("spherical uniform: small cases and symmetry") {
    const auto one = sample_spherical_uniform(1, 1, 99);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one.point(0)[0]) <= 1.0);
    CHECK(one.weight(0) == 1.0);

    const auto m = sample_spherical_uniform(5000, 3, 5);
    for (std::size_t k = 0; k < 3; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) mean += m.point(i)[k] / 5000.0;
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(5000.0));
    }
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(norm(m.point(i)) <= 1.0);
    CHECK(m.has_uniform_weights());
    CHECK(sample_spherical_uniform(50, 3, 5) == sample_spherical_uniform(50, 3, 5));
    CHECK(code_of([] { sample_spherical_uniform(10, 0, 1); }) == ErrorCode::InvalidDimension);
}

TEST_CASE("reference grid layout") {
    const auto g = make_reference_grid(101, 99);
    CHECK(g.base.size() == 9999);
    double max_norm = 0.0;
    for (std::size_t i = 0; i < g.base.size(); ++i) max_norm = std::max(max_norm, norm(g.base.point(i)));
    CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.radii.back() == 1.0);
    for (std::size_t j = 0; j < g.rings; ++j) {
        for (std::size_t k = 0; k < g.spokes; ++k) {
            CHECK(std::abs(norm(g.base.point(j * g.spokes + k)) - g.radii[j]) <= 1e-12);
        }
    }
    CHECK(std::is_sorted(g.radii.begin(), g.radii.end()));

    const auto single = make_reference_grid(1, 4);
    CHECK(single.base.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(norm(single.base.point(i)) == doctest::Approx(1.0));
        CHECK(single.base.weight(i) == 0.25);
    }

    // Rings at radii 0.1 .. 0.5 are inside the ball of radius 0.5.
    CHECK(mass_within(make_reference_grid(10, 16).base, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK(make_reference_grid(7, 9).base == make_reference_grid(7, 9).base);
    CHECK(code_of([] { make_reference_grid(3, 5, 3); }) == ErrorCode::UnsupportedDimension);
    CHECK(code_of([] { make_reference_grid(3, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("univariate midpoint grid") {
    const auto g = make_reference_grid_1d(4);
    REQUIRE(g.size() == 4);
    CHECK(g.point(0)[0] == -0.75);
    CHECK(g.point(3)[0] == 0.75);
}

TEST_CASE("banana sample bounds and symmetry") {
    const auto m = sample_banana(9999, 17);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto y = m.point(i);
        CHECK(y[0] >= -1.3);
        CHECK(y[0] <= 1.3);
        CHECK(y[1] >= -0.3);
        CHECK(y[1] <= 1.3);
    }
    const auto one = sample_banana(1, 4);
    CHECK(one.point(0)[1] >= -0.3);

    const auto big = sample_banana(10000, 23);
    double mean = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) mean += big.point(i)[0] / 10000.0;
    CHECK(std::abs(mean) <= 0.05);
    CHECK(sample_banana(200, 8) == sample_banana(200, 8));
    CHECK(!(sample_banana(200, 8) == sample_banana(200, 9)));
}

TEST_CASE("synthetic families") {
    SyntheticFamily bad = banana_family();
    bad.dim = 3;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::UnsupportedDimension);
    CHECK(code_of([] { elliptical_spherical_family(2, 0.0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { banana_family().quantile_oracle(Point{0.1, 0.2}); }) == ErrorCode::NoOracle);

    const auto disk = uniform_ball_family(2);
    const Point u{0.3, -0.4};
    const Point q = disk.quantile_oracle(u);
    CHECK(norm(q) == doctest::Approx(std::sqrt(0.5)));
    const Point back = disk.rank_oracle(q);
    CHECK(back[0] == doctest::Approx(u[0]));
    CHECK(back[1] == doctest::Approx(u[1]));

    const auto uni = univariate_uniform_family();
    CHECK(uni.quantile_oracle(Point{0.0})[0] == 0.5);
    CHECK(uni.rank_oracle(Point{0.75})[0] == 0.5);

    // Uniform disk sample: radius CDF is r^2.
    const auto s = disk.sample(4000, 3);
    double inside = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) inside += norm(s.point(i)) <= 0.5 ? 1.0 : 0.0;
    CHECK(std::abs(inside / 4000.0 - 0.25) <= 4.0 / std::sqrt(4000.0));
}

TEST_CASE("csv ingestion") {
    {
        std::istringstream in("0,0\n1,0\n0,1\n");
        const auto m = parse_csv(in);
        CHECK(m.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(m.weight(i) == doctest::Approx(1.0 / 3.0));
    }
    {
        std::istringstream in("# x,y,w\n0,0,2\n1,0,1\n0,1,1\n");
        const auto m = parse_csv(in, true);
        CHECK(m.weight(0) == 0.5);
        CHECK(m.weight(1) == 0.25);
        CHECK(m.weight(2) == 0.25);
    }
    {
        std::istringstream in("1,abc\n");
        try {
            parse_csv(in);
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            const std::string msg = e.what();
            CHECK(msg.find("row 1") != std::string::npos);
            CHECK(msg.find("column 2") != std::string::npos);
        }
    }
    {
        std::istringstream in("1,2\n3\n");
        CHECK(code_of([&] { parse_csv(in); }) == ErrorCode::InconsistentArity);
    }
    {
        std::istringstream in("1,2,0\n3,4,1\n");
        CHECK(code_of([&] { parse_csv(in, true); }) == ErrorCode::NonpositiveWeight);
    }
    {
        std::istringstream in("1,2\n1,2\n3,4\n");
        const auto m = parse_csv(in);
        CHECK(m.size() == 2);
        CHECK(m.weight(0) == doctest::Approx(2.0 / 3.0));
    }
    CHECK(code_of([] { load_csv("/nonexistent/file.csv"); }) == ErrorCode::IoError);

    // write then read back is exact
    const auto m = sample_banana(50, 2);
    std::ostringstream out;
    write_csv(out, m);
    std::istringstream in(out.str());
    CHECK(parse_csv(in) == m);
}
