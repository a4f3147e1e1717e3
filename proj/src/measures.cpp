#include "mkdepth/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "mkdepth/error.hpp"

namespace mkdepth {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords,
                                 std::vector<double> weights)
    : dim_(dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be positive");
    if (coords.size() != dim * weights.size()) {
        throw Error(ErrorCode::InconsistentArity,
                    "coordinate count " + std::to_string(coords.size()) + " is not " +
                        std::to_string(dim) + " x " + std::to_string(weights.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw Error(ErrorCode::NonpositiveWeight,
                        "atom " + std::to_string(i) + " has weight " + std::to_string(weights[i]));
        }
        total += weights[i];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::NonpositiveWeight, "total mass is zero");
    for (double c : coords) {
        if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
    }

    coords_.reserve(coords.size());
    weights_.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] == 0.0) continue;
        coords_.insert(coords_.end(), coords.begin() + i * dim, coords.begin() + (i + 1) * dim);
        weights_.push_back(weights[i] / total);
    }
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t dim, std::vector<double> coords) {
    if (dim == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be positive");
    if (coords.empty() || coords.size() % dim != 0) {
        throw Error(ErrorCode::InconsistentArity, "coordinate count is not a positive multiple of dim");
    }
    const std::size_t n = coords.size() / dim;
    DiscreteMeasure m(dim, std::move(coords), std::vector<double>(n, 1.0));
    std::fill(m.weights_.begin(), m.weights_.end(), 1.0 / static_cast<double>(n));
    return m;
}

DiscreteMeasure DiscreteMeasure::from_points(const std::vector<Point>& points) {
    if (points.empty()) throw Error(ErrorCode::EmptySupport, "no points");
    const std::size_t dim = points.front().size();
    std::vector<double> coords;
    coords.reserve(dim * points.size());
    for (const auto& p : points) {
        if (p.size() != dim) throw Error(ErrorCode::InconsistentArity, "points of unequal length");
        coords.insert(coords.end(), p.begin(), p.end());
    }
    return uniform(dim, std::move(coords));
}

DiscreteMeasure DiscreteMeasure::from_normalized(std::size_t dim, std::vector<double> coords,
                                                 std::vector<double> weights) {
    DiscreteMeasure m(dim, std::vector<double>(coords), std::vector<double>(weights));
    if (m.size() != weights.size()) {
        throw Error(ErrorCode::NonpositiveWeight, "stored measure contains zero-weight atoms");
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "stored weights do not sum to one");
    }
    m.weights_ = std::move(weights);
    return m;
}

Point DiscreteMeasure::point_copy(std::size_t i) const {
    auto p = point(i);
    return Point(p.begin(), p.end());
}

bool DiscreteMeasure::has_uniform_weights(double rel_tol) const {
    if (weights_.empty()) return true;
    const double target = 1.0 / static_cast<double>(weights_.size());
    return std::all_of(weights_.begin(), weights_.end(),
                       [&](double w) { return std::abs(w - target) <= rel_tol * target; });
}

namespace {

struct CoordHash {
    std::size_t operator()(const std::vector<double>& v) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (double x : v) {
            if (x == 0.0) x = 0.0;  // fold -0.0 onto +0.0 (they compare equal)
            h ^= std::hash<double>{}(x);
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace

DiscreteMeasure DiscreteMeasure::merge_duplicates() const {
    std::unordered_map<std::vector<double>, std::size_t, CoordHash> seen;
    std::vector<double> coords;
    std::vector<double> weights;
    for (std::size_t i = 0; i < size(); ++i) {
        std::vector<double> key(point(i).begin(), point(i).end());
        auto [it, inserted] = seen.try_emplace(key, weights.size());
        if (inserted) {
            coords.insert(coords.end(), key.begin(), key.end());
            weights.push_back(weights_[i]);
        } else {
            weights[it->second] += weights_[i];
        }
    }
    if (weights.size() == size()) return *this;
    return DiscreteMeasure(dim_, std::move(coords), std::move(weights));
}

void to_json(nlohmann::json& j, const DiscreteMeasure& m) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) points.push_back(m.point_copy(i));
    j = nlohmann::json{{"dim", m.dim()}, {"points", std::move(points)}, {"weights", m.weights()}};
}

void from_json(const nlohmann::json& j, DiscreteMeasure& m) {
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<double> coords;
    for (const auto& p : j.at("points")) {
        auto row = p.get<std::vector<double>>();
        if (row.size() != dim) throw Error(ErrorCode::InconsistentArity, "point of wrong length in JSON");
        coords.insert(coords.end(), row.begin(), row.end());
    }
    m = DiscreteMeasure::from_normalized(dim, std::move(coords), j.at("weights").get<std::vector<double>>());
}

ReferenceGrid make_reference_grid(std::size_t rings, std::size_t spokes, std::size_t dim) {
    if (dim != 2) {
        throw Error(ErrorCode::UnsupportedDimension,
                    "ring grid is two-dimensional; use Monte-Carlo sampling for d = " + std::to_string(dim));
    }
    if (rings < 1) throw Error(ErrorCode::InvalidArgument, "rings must be >= 1");
    if (spokes < 3) throw Error(ErrorCode::InvalidArgument, "spokes must be >= 3");

    ReferenceGrid grid;
    grid.rings = rings;
    grid.spokes = spokes;
    std::vector<double> coords;
    coords.reserve(2 * rings * spokes);
    for (std::size_t j = 0; j < rings; ++j) {
        const double r = static_cast<double>(j + 1) / static_cast<double>(rings);
        grid.radii.push_back(r);
        const double offset = std::numbers::pi * static_cast<double>(j) / static_cast<double>(spokes);
        for (std::size_t k = 0; k < spokes; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(spokes) + offset;
            coords.push_back(r * std::cos(angle));
            coords.push_back(r * std::sin(angle));
        }
    }
    grid.base = DiscreteMeasure::uniform(2, std::move(coords));
    return grid;
}

DiscreteMeasure make_reference_grid_1d(std::size_t n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    std::vector<double> coords(n);
    for (std::size_t k = 0; k < n; ++k) {
        coords[k] = -1.0 + static_cast<double>(2 * k + 1) / static_cast<double>(n);
    }
    return DiscreteMeasure::uniform(1, std::move(coords));
}

namespace {

// Uniform direction on the unit sphere S^{dim-1}; written into out.
void draw_direction(std::mt19937_64& rng, std::size_t dim, std::span<double> out) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (dim == 1) {
        out[0] = unif(rng) < 0.5 ? -1.0 : 1.0;
        return;
    }
    if (dim == 2) {
        const double a = 2.0 * std::numbers::pi * unif(rng);
        out[0] = std::cos(a);
        out[1] = std::sin(a);
        return;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    double len = 0.0;
    do {
        for (auto& x : out) x = gauss(rng);
        len = norm(out);
    } while (len == 0.0);
    for (auto& x : out) x /= len;
}

DiscreteMeasure sample_radial(std::size_t n, std::size_t dim, std::uint64_t seed, double exponent,
                              double scale) {
    if (dim < 1) throw Error(ErrorCode::InvalidDimension, "dimension must be >= 1");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> coords(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> atom(coords.data() + i * dim, dim);
        const double t = unif(rng);
        const double r = scale * (exponent == 1.0 ? t : std::pow(t, 1.0 / exponent));
        draw_direction(rng, dim, atom);
        for (auto& x : atom) x *= r;
    }
    return DiscreteMeasure::uniform(dim, std::move(coords));
}

}  // namespace

DiscreteMeasure sample_spherical_uniform(std::size_t n, std::size_t dim, std::uint64_t seed) {
    return sample_radial(n, dim, seed, 1.0, 1.0);
}

DiscreteMeasure sample_uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw Error(ErrorCode::InvalidDimension, "dimension must be >= 1");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> coords(n * dim);
    for (auto& x : coords) x = unif(rng);
    return DiscreteMeasure::uniform(dim, std::move(coords));
}

DiscreteMeasure sample_banana(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> coords(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * unif(rng) - 1.0;
        const double phi = 2.0 * std::numbers::pi * unif(rng);
        const double z = unif(rng);
        const double r = 0.2 * z * (1.0 + (1.0 - std::abs(x)) / 2.0);
        coords[2 * i] = x + r * std::cos(phi);
        coords[2 * i + 1] = x * x + r * std::sin(phi);
    }
    return DiscreteMeasure::uniform(2, std::move(coords));
}

const char* to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Banana: return "banana";
        case FamilyKind::UniformBall: return "uniform-ball";
        case FamilyKind::UnivariateUniform: return "univariate-uniform";
        case FamilyKind::EllipticalSpherical: return "elliptical-spherical";
    }
    return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) {
    for (auto k : {FamilyKind::Banana, FamilyKind::UniformBall, FamilyKind::UnivariateUniform,
                   FamilyKind::EllipticalSpherical}) {
        if (name == to_string(k)) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown family '" + name + "'");
}

namespace {

double param(const SyntheticFamily& f, const std::string& key, double fallback) {
    auto it = f.parameters.find(key);
    return it == f.parameters.end() ? fallback : it->second;
}

// Radial law (exponent, scale) of the spherical families.
std::pair<double, double> radial_law(const SyntheticFamily& f) {
    if (f.kind == FamilyKind::UniformBall) return {static_cast<double>(f.dim), 1.0};
    return {param(f, "exponent", 1.0), param(f, "scale", 1.0)};
}

}  // namespace

void SyntheticFamily::validate() const {
    if (dim < 1) throw Error(ErrorCode::InvalidDimension, "dimension must be >= 1");
    switch (kind) {
        case FamilyKind::Banana:
            if (dim != 2) throw Error(ErrorCode::UnsupportedDimension, "banana family requires dim = 2");
            break;
        case FamilyKind::UnivariateUniform:
            if (dim != 1) throw Error(ErrorCode::UnsupportedDimension, "univariate-uniform requires dim = 1");
            break;
        case FamilyKind::UniformBall:
            break;
        case FamilyKind::EllipticalSpherical: {
            auto [a, s] = radial_law(*this);
            if (!(a > 0.0) || !(s > 0.0) || !std::isfinite(a) || !std::isfinite(s)) {
                throw Error(ErrorCode::InvalidArgument,
                            "radial distribution function must be strictly increasing (exponent, scale > 0)");
            }
            break;
        }
    }
}

DiscreteMeasure SyntheticFamily::sample(std::size_t n, std::uint64_t seed) const {
    validate();
    switch (kind) {
        case FamilyKind::Banana:
            return sample_banana(n, seed);
        case FamilyKind::UnivariateUniform:
            return sample_uniform_cube(n, 1, seed);
        case FamilyKind::UniformBall:
        case FamilyKind::EllipticalSpherical: {
            auto [a, s] = radial_law(*this);
            return sample_radial(n, dim, seed, a, s);
        }
    }
    return {};
}

Point SyntheticFamily::quantile_oracle(std::span<const double> u) const {
    validate();
    if (u.size() != dim) throw Error(ErrorCode::DimensionMismatch, "oracle argument has wrong dimension");
    switch (kind) {
        case FamilyKind::Banana:
            throw Error(ErrorCode::NoOracle, "banana family has no closed-form transport map");
        case FamilyKind::UnivariateUniform:
            return {(u[0] + 1.0) / 2.0};
        case FamilyKind::UniformBall:
        case FamilyKind::EllipticalSpherical: {
            auto [a, s] = radial_law(*this);
            const double r = norm(u);
            Point q(u.begin(), u.end());
            if (r == 0.0) return q;
            const double radius = s * std::pow(std::min(r, 1.0), 1.0 / a);
            for (auto& x : q) x *= radius / r;
            return q;
        }
    }
    return {};
}

Point SyntheticFamily::rank_oracle(std::span<const double> y) const {
    validate();
    if (y.size() != dim) throw Error(ErrorCode::DimensionMismatch, "oracle argument has wrong dimension");
    switch (kind) {
        case FamilyKind::Banana:
            throw Error(ErrorCode::NoOracle, "banana family has no closed-form transport map");
        case FamilyKind::UnivariateUniform:
            return {2.0 * std::clamp(y[0], 0.0, 1.0) - 1.0};
        case FamilyKind::UniformBall:
        case FamilyKind::EllipticalSpherical: {
            auto [a, s] = radial_law(*this);
            const double r = norm(y);
            Point rank(y.begin(), y.end());
            if (r == 0.0) return rank;
            const double g = std::pow(std::min(r / s, 1.0), a);
            for (auto& x : rank) x *= g / r;
            return rank;
        }
    }
    return {};
}

std::string SyntheticFamily::name() const { return to_string(kind); }

SyntheticFamily banana_family() { return {FamilyKind::Banana, {}, 2}; }

SyntheticFamily uniform_ball_family(std::size_t dim) { return {FamilyKind::UniformBall, {}, dim}; }

SyntheticFamily univariate_uniform_family() { return {FamilyKind::UnivariateUniform, {}, 1}; }

SyntheticFamily elliptical_spherical_family(std::size_t dim, double exponent, double scale) {
    SyntheticFamily f{FamilyKind::EllipticalSpherical, {{"exponent", exponent}, {"scale", scale}}, dim};
    f.validate();
    return f;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_field(std::string_view field, std::size_t row, std::size_t col) {
    const auto text = trim(field);
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(col) +
                                               ": cannot parse '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

DiscreteMeasure parse_csv(std::istream& in, bool weight_column) {
    std::string line;
    std::size_t row = 0;
    std::size_t arity = 0;
    bool first_line = true;
    std::vector<double> coords;
    std::vector<double> weights;
    while (std::getline(in, line)) {
        const auto text = trim(line);
        if (first_line) {
            first_line = false;
            if (!text.empty() && text.front() == '#') continue;
        }
        if (text.empty()) continue;
        ++row;
        std::vector<double> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = text.find(',', start);
            fields.push_back(parse_field(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start),
                                         row, fields.size() + 1));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (arity == 0) {
            arity = fields.size();
            if (weight_column && arity < 2) {
                throw Error(ErrorCode::InconsistentArity, "row 1 has no coordinates besides the weight column");
            }
        } else if (fields.size() != arity) {
            throw Error(ErrorCode::InconsistentArity, "row " + std::to_string(row) + " has " +
                                                          std::to_string(fields.size()) + " fields, expected " +
                                                          std::to_string(arity));
        }
        if (weight_column) {
            const double w = fields.back();
            if (!(w > 0.0)) {
                throw Error(ErrorCode::NonpositiveWeight, "row " + std::to_string(row) + ", column " +
                                                              std::to_string(arity) + ": weight must be positive");
            }
            weights.push_back(w);
            fields.pop_back();
        } else {
            weights.push_back(1.0);
        }
        coords.insert(coords.end(), fields.begin(), fields.end());
    }
    if (row == 0) throw Error(ErrorCode::EmptySupport, "no data rows");
    const std::size_t dim = weight_column ? arity - 1 : arity;
    return DiscreteMeasure(dim, std::move(coords), std::move(weights)).merge_duplicates();
}

DiscreteMeasure load_csv(const std::string& path, bool weight_column) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    return parse_csv(in, weight_column);
}

void write_csv(std::ostream& out, const DiscreteMeasure& m, bool weight_column) {
    std::ostringstream buf;
    buf.precision(17);
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto p = m.point(i);
        for (std::size_t k = 0; k < p.size(); ++k) buf << (k ? "," : "") << p[k];
        if (weight_column) buf << "," << m.weight(i);
        buf << "\n";
    }
    out << buf.str();
}

}  // namespace mkdepth
