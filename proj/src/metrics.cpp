#include "mkdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mkdepth/error.hpp"

namespace mkdepth {

namespace {

double directed(const std::vector<Point>& a, const std::vector<Point>& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& q : b) nearest = std::min(nearest, squared_distance(p, q));
        worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
}

void require_oracle(const SyntheticFamily& family) {
    if (!family.has_oracle()) throw Error(ErrorCode::NoOracle, "family '" + family.name() + "' has no closed-form map");
}

std::vector<Point> sphere_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
    std::vector<Point> dirs;
    if (dim == 1) return {{-1.0}, {1.0}};
    if (dim == 2) {
        for (std::size_t j = 0; j < count; ++j) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
            dirs.push_back({std::cos(a), std::sin(a)});
        }
        return dirs;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    while (dirs.size() < count) {
        Point g(dim);
        for (auto& c : g) c = gauss(rng);
        const double len = norm(g);
        if (len < 1e-12) continue;
        for (auto& c : g) c /= len;
        dirs.push_back(std::move(g));
    }
    return dirs;
}

}  // namespace

double hausdorff(const std::vector<Point>& a, const std::vector<Point>& b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "hausdorff distance of an empty set");
    const std::size_t d = a.front().size();
    for (const auto* set : {&a, &b}) {
        for (const auto& p : *set) {
            if (p.size() != d) throw Error(ErrorCode::DimensionMismatch, "points of different dimensions");
        }
    }
    return std::max(directed(a, b), directed(b, a));
}

void Band::validate() const {
    if (!(r_lo > 0.0 && r_lo <= r_hi && r_hi < 1.0)) {
        std::ostringstream msg;
        msg << "band must satisfy 0 < r_lo <= r_hi < 1, got (" << r_lo << ", " << r_hi << ")";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

std::vector<Point> band_probe_grid(const Band& band, std::size_t dim, std::size_t probe_count) {
    band.validate();
    if (dim == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be positive");
    if (probe_count < 2) throw Error(ErrorCode::InvalidArgument, "need at least two probes");
    std::size_t radii = 0;
    std::size_t dirs = 0;
    if (dim == 1) {
        dirs = 2;
        radii = probe_count / 2;
    } else {
        // Radial and angular spacings roughly equal at the outer radius.
        const double ratio = 2.0 * std::numbers::pi * band.r_hi / std::max(band.r_hi - band.r_lo, 1e-3);
        radii = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(std::sqrt(probe_count / ratio))));
        dirs = std::max<std::size_t>(3, (probe_count + radii - 1) / radii);
    }
    if (band.r_lo == band.r_hi) {
        dirs *= radii;
        radii = 1;
    }
    const auto directions = sphere_directions(dim, dirs, 0x70726f6265ull + dim);
    std::vector<Point> out;
    out.reserve(radii * directions.size());
    for (std::size_t k = 0; k < radii; ++k) {
        const double r = radii == 1 ? band.r_lo
                                    : band.r_lo + (band.r_hi - band.r_lo) * static_cast<double>(k) /
                                                      static_cast<double>(radii - 1);
        for (const auto& phi : directions) {
            Point u = phi;
            for (auto& c : u) c *= r;
            out.push_back(std::move(u));
        }
    }
    return out;
}

double sup_error_on_band(const FittedTransport& fit, const SyntheticFamily& family, const Band& band,
                         std::size_t probe_count, MapKind kind) {
    require_oracle(family);
    if (fit.reference != ReferenceKind::Ball) {
        throw Error(ErrorCode::NoOracle, "closed-form maps are for the spherical uniform reference");
    }
    if (family.dim != fit.dim()) throw Error(ErrorCode::DimensionMismatch, "family and model dimensions differ");
    double worst = 0.0;
    for (const auto& u : band_probe_grid(band, fit.dim(), probe_count)) {
        double err = 0.0;
        if (kind == MapKind::Quantile) {
            err = std::sqrt(squared_distance(eval_quantile(fit, u), family.quantile_oracle(u)));
        } else {
            const Point y = family.quantile_oracle(u);
            err = std::sqrt(squared_distance(fit.ref().point(eval_rank_index(fit, y)), u));
        }
        worst = std::max(worst, err);
    }
    return worst;
}

double contour_hausdorff(const FittedTransport& fit, const SyntheticFamily& family, double tau, const Band& band,
                         std::size_t contour_spokes, std::size_t oracle_points) {
    require_oracle(family);
    band.validate();
    if (!(tau >= band.r_lo && tau <= band.r_hi)) {
        std::ostringstream msg;
        msg << "tau " << tau << " outside the band [" << band.r_lo << ", " << band.r_hi << "]";
        throw Error(ErrorCode::InvalidTau, msg.str());
    }
    if (fit.reference != ReferenceKind::Ball) {
        throw Error(ErrorCode::NoOracle, "closed-form maps are for the spherical uniform reference");
    }
    const auto empirical = quantile_contour(fit, tau, contour_spokes);
    std::vector<Point> truth;
    for (auto phi : sphere_directions(fit.dim(), oracle_points, 0x74727565ull + fit.dim())) {
        for (auto& c : phi) c *= tau;
        truth.push_back(family.quantile_oracle(phi));
    }
    return hausdorff(empirical, truth);
}

ReferenceSpec convergence_reference(std::size_t n, std::size_t dim) {
    if (auto grid = grid_spec_for(n, dim)) return *grid;
    ReferenceSpec spec;
    spec.scheme = ReferenceSpec::Scheme::BallMonteCarlo;
    spec.count = n;
    return spec;
}

void run_convergence(ConvergenceRun& run) {
    run.family.validate();
    run.band.validate();
    if (!run.family.has_oracle()) {
        throw Error(ErrorCode::NoOracle, "family '" + run.family.name() + "' has no closed-form map");
    }
    if (run.sizes.empty() || run.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "sizes and seeds must be given");
    for (double tau : run.taus) {
        if (!(tau >= run.band.r_lo && tau <= run.band.r_hi)) {
            std::ostringstream msg;
            msg << "tau " << tau << " outside the band [" << run.band.r_lo << ", " << run.band.r_hi << "]";
            throw Error(ErrorCode::InvalidTau, msg.str());
        }
    }
    run.records.clear();
    const std::size_t dim = run.family.dim;
    for (const std::size_t n : run.sizes) {
        const ReferenceSpec spec = convergence_reference(n, dim);
        for (const std::uint64_t seed : run.seeds) {
            const DiscreteMeasure data = run.family.sample(n, seed);
            const DiscreteMeasure ref = spec.build(dim, seed ^ 0x726566ull);
            FittedTransport fit = fit_assignment(ref, ReferenceKind::Ball, data);
            fit.reference_spec = spec.str();
            fit.seed = seed;
            const double sup = sup_error_on_band(fit, run.family, run.band, run.probe_count);
            if (run.taus.empty()) {
                run.records.push_back({n, seed, std::numeric_limits<double>::quiet_NaN(), sup,
                                       std::numeric_limits<double>::quiet_NaN()});
            }
            for (double tau : run.taus) {
                run.records.push_back({n, seed, tau, sup, contour_hausdorff(fit, run.family, tau, run.band)});
            }
        }
    }
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptySet, "median of no values");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double median_sup_error(const ConvergenceRun& run, std::size_t n) {
    std::map<std::uint64_t, double> per_seed;
    for (const auto& r : run.records) {
        if (r.n == n) per_seed.emplace(r.seed, r.sup_error);
    }
    std::vector<double> v;
    for (const auto& [seed, e] : per_seed) v.push_back(e);
    return median(std::move(v));
}

double median_hausdorff(const ConvergenceRun& run, std::size_t n, double tau) {
    std::vector<double> v;
    for (const auto& r : run.records) {
        if (r.n == n && r.tau == tau) v.push_back(r.hausdorff);
    }
    return median(std::move(v));
}

void write_convergence_csv(std::ostream& out, const ConvergenceRun& run) {
    std::ostringstream buf;
    const std::size_t probes = band_probe_grid(run.band, run.family.dim, run.probe_count).size();
    buf << "# band=" << run.band.r_lo << ":" << run.band.r_hi << " probes=" << probes << "\n";
    buf.precision(17);
    buf << "family,n,seed,tau,sup_error,hausdorff\n";
    for (const auto& r : run.records) {
        buf << run.family.name() << "," << r.n << "," << r.seed << ",";
        if (!std::isnan(r.tau)) buf << r.tau;
        buf << "," << r.sup_error << ",";
        if (!std::isnan(r.hausdorff)) buf << r.hausdorff;
        buf << "\n";
    }
    out << buf.str();
}

}  // namespace mkdepth
