#include "mkdepth/depth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mkdepth/error.hpp"
#include "mkdepth/ot_core.hpp"

namespace mkdepth {

namespace {

constexpr double kBoundaryTol = 1e-12;

std::vector<std::uint64_t> bits_of(std::span<const double> x) {
    std::vector<std::uint64_t> key(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) key[k] = std::bit_cast<std::uint64_t>(x[k]);
    return key;
}

void require_fitted(const FittedTransport& fit) {
    if (!fit.fitted()) throw Error(ErrorCode::Unfitted, "transport has not been fitted");
}

void require_dim(const FittedTransport& fit, std::span<const double> x) {
    if (x.size() != fit.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "point has " + std::to_string(x.size()) + " coordinates, model has " + std::to_string(fit.dim()));
    }
    for (double c : x) {
        if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "point coordinates must be finite");
    }
}

void require_tau(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        std::ostringstream msg;
        msg << "tau must lie in (0, 1], got " << tau;
        throw Error(ErrorCode::InvalidTau, msg.str());
    }
}

double sup_norm_centered(std::span<const double> u) {
    double r = 0.0;
    for (double c : u) r = std::max(r, std::abs(c - 0.5));
    return r;
}

Point reference_center(ReferenceKind kind, std::size_t dim) {
    return Point(dim, kind == ReferenceKind::Cube ? 0.5 : 0.0);
}

// Is the reference point u inside the region of content tau?
bool in_region(ReferenceKind kind, std::span<const double> u, double tau) {
    if (kind == ReferenceKind::Ball) return norm(u) <= tau + kBoundaryTol;
    const double half_side = std::pow(tau, 1.0 / static_cast<double>(u.size())) / 2.0;
    return sup_norm_centered(u) <= half_side + kBoundaryTol;
}

void finish_fit(FittedTransport& fit, const std::vector<PlanEntry>& plan) {
    fit.residuals = check_potentials(fit.pair, plan);
    fit.objective = transport_cost(fit.ref(), fit.target(), plan);
    fit.surplus = transport_surplus(fit.ref(), fit.target(), plan);
    fit.dual_value = fit.pair.dual_value();
    fit.index();
}

std::uint64_t contour_seed(std::size_t dim) { return 0x636f6e746f7572ull + dim; }

}  // namespace

const char* to_string(ReferenceKind kind) { return kind == ReferenceKind::Ball ? "ball" : "cube"; }
const char* to_string(FitMode mode) { return mode == FitMode::Assignment ? "assignment" : "semidiscrete"; }

FitMode fit_mode_from_string(const std::string& name) {
    if (name == "assignment") return FitMode::Assignment;
    if (name == "semidiscrete") return FitMode::Semidiscrete;
    throw Error(ErrorCode::InvalidArgument, "unknown solver '" + name + "' (assignment, semidiscrete)");
}

ReferenceSpec ReferenceSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "reference '" + text + "' lacks ':'");
    const std::string scheme = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);
    auto count = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || v == 0 || s.front() == '-') {
            throw Error(ErrorCode::InvalidArgument, "bad count '" + s + "' in reference '" + text + "'");
        }
        return static_cast<std::size_t>(v);
    };
    ReferenceSpec spec;
    if (scheme == "ball-grid") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) {
            spec.scheme = Scheme::BallGrid1d;
            spec.count = count(args);
        } else {
            spec.scheme = Scheme::BallGrid;
            spec.rings = count(args.substr(0, comma));
            spec.spokes = count(args.substr(comma + 1));
        }
    } else if (scheme == "ball-mc") {
        spec.scheme = Scheme::BallMonteCarlo;
        spec.count = count(args);
    } else if (scheme == "cube") {
        spec.scheme = Scheme::Cube;
        spec.count = count(args);
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown reference scheme '" + scheme + "'");
    }
    return spec;
}

std::string ReferenceSpec::str() const {
    switch (scheme) {
        case Scheme::BallGrid: return "ball-grid:" + std::to_string(rings) + "," + std::to_string(spokes);
        case Scheme::BallGrid1d: return "ball-grid:" + std::to_string(count);
        case Scheme::BallMonteCarlo: return "ball-mc:" + std::to_string(count);
        case Scheme::Cube: return "cube:" + std::to_string(count);
    }
    return {};
}

DiscreteMeasure ReferenceSpec::build(std::size_t dim, std::uint64_t seed) const {
    switch (scheme) {
        case Scheme::BallGrid:
            if (dim != 2) throw Error(ErrorCode::UnsupportedDimension, "ball-grid:R,S needs d = 2; use ball-mc:N");
            return make_reference_grid(rings, spokes, 2).base;
        case Scheme::BallGrid1d:
            if (dim != 1) throw Error(ErrorCode::UnsupportedDimension, "ball-grid:N needs d = 1; use ball-grid:R,S");
            return make_reference_grid_1d(count);
        case Scheme::BallMonteCarlo: return sample_spherical_uniform(count, dim, seed);
        case Scheme::Cube: return sample_uniform_cube(count, dim, seed);
    }
    return {};
}

std::optional<ReferenceSpec> grid_spec_for(std::size_t n, std::size_t dim) {
    ReferenceSpec spec;
    if (dim == 1) {
        spec.scheme = ReferenceSpec::Scheme::BallGrid1d;
        spec.count = n;
        return spec;
    }
    if (dim != 2) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 2; r * r <= n; ++r) {
        if (n % r != 0) continue;
        const std::size_t s = n / r;
        if (s < 8) continue;
        const double score = std::abs(std::log(static_cast<double>(s) / (2.0 * std::numbers::pi * static_cast<double>(r))));
        if (score < best) {
            best = score;
            spec.rings = r;
            spec.spokes = s;
        }
    }
    // Too lopsided to discretize the disk fairly (e.g. n prime).
    if (!(best < std::log(4.0))) return std::nullopt;
    spec.scheme = ReferenceSpec::Scheme::BallGrid;
    return spec;
}

std::optional<std::size_t> FittedTransport::find_ref(std::span<const double> u) const {
    const auto it = ref_lookup_.find(bits_of(u));
    if (it == ref_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> FittedTransport::find_target(std::span<const double> y) const {
    const auto it = target_lookup_.find(bits_of(y));
    if (it == target_lookup_.end()) return std::nullopt;
    return it->second;
}

void FittedTransport::index() {
    ref_lookup_.clear();
    target_lookup_.clear();
    // emplace keeps the first occurrence, matching the lowest-index rule.
    for (std::size_t i = 0; i < ref().size(); ++i) ref_lookup_.emplace(bits_of(ref().point(i)), i);
    for (std::size_t j = 0; j < target().size(); ++j) target_lookup_.emplace(bits_of(target().point(j)), j);
    const std::size_t d = dim();
    box_lo.assign(d, std::numeric_limits<double>::infinity());
    box_hi.assign(d, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < target().size(); ++j) {
        const auto y = target().point(j);
        for (std::size_t k = 0; k < d; ++k) {
            box_lo[k] = std::min(box_lo[k], y[k]);
            box_hi[k] = std::max(box_hi[k], y[k]);
        }
    }
}

FittedTransport fit_assignment(const DiscreteMeasure& reference, ReferenceKind kind, const DiscreteMeasure& data) {
    const Coupling coupling = solve_assignment(reference, data);
    FittedTransport fit;
    fit.mode = FitMode::Assignment;
    fit.reference = kind;
    const Point center = reference_center(kind, reference.dim());
    fit.pair = recover_potentials(coupling, closest_to(reference, center));
    fit.ref_to_target = coupling.permutation;
    fit.target_to_ref.assign(data.size(), 0);
    for (std::size_t i = 0; i < coupling.permutation.size(); ++i) fit.target_to_ref[coupling.permutation[i]] = i;
    fit.iterations = coupling.iterations;
    finish_fit(fit, coupling.plan);
    return fit;
}

FittedTransport fit_semidiscrete(const DiscreteMeasure& quadrature, ReferenceKind kind, const DiscreteMeasure& data,
                                 const SemiDiscreteOptions& options) {
    const SemiDiscreteSolution sol = solve_semidiscrete(data, quadrature, options);
    FittedTransport fit;
    fit.mode = FitMode::Semidiscrete;
    fit.reference = kind;
    fit.pair.ref_support = quadrature;
    fit.pair.target_support = data;
    fit.pair.base_index = closest_to(quadrature, reference_center(kind, quadrature.dim()));
    fit.pair.psi = conjugate(sol.v, data, quadrature).values;
    const double pin = fit.pair.psi[fit.pair.base_index];
    for (auto& x : fit.pair.psi) x -= pin;
    fit.pair.psi_star = sol.v;
    for (auto& x : fit.pair.psi_star) x += pin;
    fit.ref_to_target = sol.cells;
    fit.cell_weights = sol.v;
    fit.mass_residual = sol.residual;
    fit.iterations = sol.iterations;
    std::vector<PlanEntry> plan;
    plan.reserve(quadrature.size());
    for (std::size_t q = 0; q < quadrature.size(); ++q) plan.push_back({q, sol.cells[q], quadrature.weight(q)});
    finish_fit(fit, plan);
    return fit;
}

std::size_t eval_quantile_index(const FittedTransport& fit, std::span<const double> u) {
    require_fitted(fit);
    require_dim(fit, u);
    if (fit.reference == ReferenceKind::Ball) {
        if (norm(u) > 1.0 + kBoundaryTol) throw Error(ErrorCode::InvalidArgument, "quantile needs |u| <= 1");
    } else if (sup_norm_centered(u) > 0.5 + kBoundaryTol) {
        throw Error(ErrorCode::InvalidArgument, "quantile needs u in the unit cube");
    }
    // On a reference atom the fitted plan is returned directly; degenerate
    // duals can tie several targets there.
    if (const auto i = fit.find_ref(u)) return fit.ref_to_target[*i];
    const auto& tgt = fit.target();
    std::size_t arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tgt.size(); ++j) {
        const double s = dot(tgt.point(j), u) - fit.pair.psi_star[j];
        if (s > best) {
            best = s;
            arg = j;
        }
    }
    return arg;
}

Point eval_quantile(const FittedTransport& fit, std::span<const double> u) {
    return fit.target().point_copy(eval_quantile_index(fit, u));
}

std::size_t eval_rank_index(const FittedTransport& fit, std::span<const double> y) {
    require_fitted(fit);
    require_dim(fit, y);
    if (fit.mode == FitMode::Assignment) {
        if (const auto j = fit.find_target(y)) return fit.target_to_ref[*j];
    }
    const auto& ref = fit.ref();
    std::size_t arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double s = dot(ref.point(i), y) - fit.pair.psi[i];
        if (s > best) {
            best = s;
            arg = i;
        }
    }
    return arg;
}

DepthReport eval_rank(const FittedTransport& fit, std::span<const double> y) {
    const std::size_t i = eval_rank_index(fit, y);
    DepthReport r;
    r.query.assign(y.begin(), y.end());
    r.vector_rank = fit.ref().point_copy(i);
    const std::size_t d = fit.dim();
    Point centered = r.vector_rank;
    if (fit.reference == ReferenceKind::Ball) {
        r.scalar_rank = std::min(norm(centered), 1.0);
        r.depth = tukey_depth_spherical(r.scalar_rank, d);
    } else {
        for (auto& c : centered) c -= 0.5;
        r.scalar_rank = std::min(std::pow(2.0 * sup_norm_centered(r.vector_rank), static_cast<double>(d)), 1.0);
        r.depth = cube_depth(r.vector_rank);
    }
    r.sign.assign(d, 0.0);
    const double len = norm(centered);
    if (r.scalar_rank >= 1e-12 && len > 0.0) {
        for (std::size_t k = 0; k < d; ++k) r.sign[k] = centered[k] / len;
    }
    for (std::size_t k = 0; k < d; ++k) {
        const double slack = 0.1 * (fit.box_hi[k] - fit.box_lo[k]);
        if (y[k] < fit.box_lo[k] - slack || y[k] > fit.box_hi[k] + slack) r.extrapolated = true;
    }
    return r;
}

std::vector<Point> quantile_contour(const FittedTransport& fit, double tau, std::size_t spokes) {
    require_fitted(fit);
    require_tau(tau);
    const std::size_t d = fit.dim();
    std::vector<Point> directions;
    if (d == 1) {
        directions = {{-1.0}, {1.0}};
    } else if (d == 2) {
        if (spokes == 0) throw Error(ErrorCode::InvalidArgument, "contour needs at least one spoke");
        for (std::size_t j = 0; j < spokes; ++j) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(spokes);
            directions.push_back({std::cos(a), std::sin(a)});
        }
    } else {
        if (spokes == 0) throw Error(ErrorCode::InvalidArgument, "contour needs at least one spoke");
        std::mt19937_64 rng(contour_seed(d));
        std::normal_distribution<double> gauss;
        while (directions.size() < spokes) {
            Point g(d);
            for (auto& c : g) c = gauss(rng);
            const double len = norm(g);
            if (len < 1e-12) continue;
            for (auto& c : g) c /= len;
            directions.push_back(std::move(g));
        }
    }
    std::vector<Point> out;
    out.reserve(directions.size());
    for (auto& phi : directions) {
        if (fit.reference == ReferenceKind::Ball) {
            for (auto& c : phi) c *= tau;
        } else {
            // Boundary of the centered cube with content tau.
            double sup = 0.0;
            for (double c : phi) sup = std::max(sup, std::abs(c));
            const double half_side = std::pow(tau, 1.0 / static_cast<double>(d)) / 2.0;
            for (auto& c : phi) c = 0.5 + half_side * c / sup;
        }
        out.push_back(eval_quantile(fit, phi));
    }
    return out;
}

DepthRegion depth_region(const FittedTransport& fit, double tau) {
    require_fitted(fit);
    require_tau(tau);
    const auto& ref = fit.ref();
    std::vector<char> hit(fit.target().size(), 0);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (in_region(fit.reference, ref.point(i), tau)) hit[fit.ref_to_target[i]] = 1;
    }
    DepthRegion region;
    for (std::size_t j = 0; j < hit.size(); ++j) {
        if (!hit[j]) continue;
        region.indices.push_back(j);
        region.points.push_back(fit.target().point_copy(j));
    }
    return region;
}

double tukey_depth_spherical(double tau, std::size_t dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be positive");
    if (!(tau >= 0.0 && tau <= 1.0)) {
        std::ostringstream msg;
        msg << "tau must lie in [0, 1], got " << tau;
        throw Error(ErrorCode::InvalidTau, msg.str());
    }
    if (dim == 1) return (1.0 - tau) / 2.0;
    if (tau == 0.0) return 0.5;
    // log|sec t + tan t| at t = arccos tau equals log((1 + sqrt(1 - tau^2)) / tau).
    const double theta = std::acos(tau);
    // Clamped: cancellation near tau = 1 leaves values of order -1e-17.
    return std::max(0.0, (theta - tau * std::log((1.0 + std::sqrt(1.0 - tau * tau)) / tau)) / std::numbers::pi);
}

double cube_depth(std::span<const double> u) { return std::max(0.0, 0.5 - sup_norm_centered(u)); }

void to_json(nlohmann::json& j, const FittedTransport& fit) {
    nlohmann::json potentials;
    to_json(potentials, fit.pair);
    j = nlohmann::json{
        {"format", "mkdepth-model"},
        {"version", 1},
        {"solver", to_string(fit.mode)},
        {"reference", to_string(fit.reference)},
        {"reference_spec", fit.reference_spec},
        {"seed", fit.seed},
        {"objective", fit.objective},
        {"surplus", fit.surplus},
        {"dual_value", fit.dual_value},
        {"residuals",
         {{"duality_gap", std::abs(fit.surplus - fit.dual_value)},
          {"min_feasibility_slack", fit.residuals.min_feasibility_slack},
          {"max_slackness", fit.residuals.max_slackness},
          {"exhaustive", fit.residuals.exhaustive},
          {"mass_residual", fit.mass_residual}}},
        {"iterations", fit.iterations},
        {"ref", fit.ref()},
        {"target", fit.target()},
        {"potentials", potentials},
        {"ref_to_target", fit.ref_to_target},
        {"target_to_ref", fit.target_to_ref},
        {"cell_weights", fit.cell_weights},
    };
}

FittedTransport fitted_transport_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "mkdepth-model") {
            throw Error(ErrorCode::ParseError, "not a model file");
        }
        FittedTransport fit;
        fit.mode = fit_mode_from_string(j.at("solver").get<std::string>());
        const auto kind = j.at("reference").get<std::string>();
        if (kind != "ball" && kind != "cube") throw Error(ErrorCode::ParseError, "unknown reference '" + kind + "'");
        fit.reference = kind == "ball" ? ReferenceKind::Ball : ReferenceKind::Cube;
        fit.reference_spec = j.at("reference_spec").get<std::string>();
        fit.seed = j.at("seed").get<std::uint64_t>();
        fit.objective = j.at("objective").get<double>();
        fit.surplus = j.at("surplus").get<double>();
        fit.dual_value = j.at("dual_value").get<double>();
        const auto& res = j.at("residuals");
        fit.residuals.min_feasibility_slack = res.at("min_feasibility_slack").get<double>();
        fit.residuals.max_slackness = res.at("max_slackness").get<double>();
        fit.residuals.exhaustive = res.at("exhaustive").get<bool>();
        fit.mass_residual = res.at("mass_residual").get<double>();
        fit.iterations = j.at("iterations").get<std::size_t>();
        fit.pair = potentials_from_json(j.at("potentials"), j.at("ref").get<DiscreteMeasure>(),
                                        j.at("target").get<DiscreteMeasure>());
        fit.ref_to_target = j.at("ref_to_target").get<std::vector<std::size_t>>();
        fit.target_to_ref = j.at("target_to_ref").get<std::vector<std::size_t>>();
        fit.cell_weights = j.at("cell_weights").get<std::vector<double>>();
        if (fit.ref_to_target.size() != fit.ref().size()) throw Error(ErrorCode::SizeMismatch, "ref_to_target length");
        for (auto t : fit.ref_to_target) {
            if (t >= fit.target().size()) throw Error(ErrorCode::ParseError, "ref_to_target index out of range");
        }
        if (fit.mode == FitMode::Assignment) {
            if (fit.target_to_ref.size() != fit.target().size()) {
                throw Error(ErrorCode::SizeMismatch, "target_to_ref length");
            }
            for (auto r : fit.target_to_ref) {
                if (r >= fit.ref().size()) throw Error(ErrorCode::ParseError, "target_to_ref index out of range");
            }
        }
        fit.index();
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
    }
}

void save_model(const std::string& path, const FittedTransport& fit) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    nlohmann::json j;
    to_json(j, fit);
    out << j.dump(1) << "\n";
    if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

FittedTransport load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "'" + path + "': " + e.what());
    }
    return fitted_transport_from_json(j);
}

void write_depth_csv(std::ostream& out, const std::vector<DepthReport>& reports) {
    std::ostringstream buf;
    buf.precision(17);
    const std::size_t d = reports.empty() ? 0 : reports.front().query.size();
    buf << "#";
    for (std::size_t k = 0; k < d; ++k) buf << (k ? "," : "") << "y" << k + 1;
    for (std::size_t k = 0; k < d; ++k) buf << ",r" << k + 1;
    buf << ",scalar_rank,depth,extrapolated\n";
    for (const auto& r : reports) {
        for (std::size_t k = 0; k < d; ++k) buf << (k ? "," : "") << r.query[k];
        for (std::size_t k = 0; k < d; ++k) buf << "," << r.vector_rank[k];
        buf << "," << r.scalar_rank << "," << r.depth << "," << (r.extrapolated ? 1 : 0) << "\n";
    }
    out << buf.str();
}

}  // namespace mkdepth
