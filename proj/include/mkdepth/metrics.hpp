#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mkdepth/depth.hpp"
#include "mkdepth/measures.hpp"

namespace mkdepth {

/// max(sup_a inf_b |a - b|, sup_b inf_a |a - b|)
double hausdorff(const std::vector<Point>& a, const std::vector<Point>& b);

/// Closed annulus {u : r_lo <= |u| <= r_hi} inside the open unit ball.
struct Band {
    double r_lo = 0.2;
    double r_hi = 0.8;
    void validate() const;
};

/// Deterministic probe points in the band: for d = 2 a polar grid of evenly
/// spaced radii (endpoints included) and angles; d = 1 evenly spaced points
/// on both sides; d >= 3 fixed pseudo-random directions times evenly spaced
/// radii. Returns about probe_count points.
std::vector<Point> band_probe_grid(const Band& band, std::size_t dim, std::size_t probe_count);

enum class MapKind { Quantile, Rank };

/// Quantile: max over probes u of |Q_n(u) - Q_P(u)|.
/// Rank: max over probes u of |R_n(Q_P(u)) - u|, i.e. the rank map on the
/// image of the band.
double sup_error_on_band(const FittedTransport& fit, const SyntheticFamily& family, const Band& band,
                         std::size_t probe_count, MapKind kind = MapKind::Quantile);

/// Hausdorff distance between the empirical tau-contour (contour_spokes
/// images) and the true contour Q_P(tau S) sampled at oracle_points
/// directions. tau must lie in the band.
double contour_hausdorff(const FittedTransport& fit, const SyntheticFamily& family, double tau, const Band& band,
                         std::size_t contour_spokes = 360, std::size_t oracle_points = 720);

struct ConvergenceRecord {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    /// NaN when no contour was evaluated.
    double tau = 0.0;
    double sup_error = 0.0;
    double hausdorff = 0.0;
};

struct ConvergenceRun {
    SyntheticFamily family;
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> seeds;
    Band band;
    std::vector<double> taus;
    std::size_t probe_count = 2000;
    std::vector<ConvergenceRecord> records;
};

/// The reference used for an n-point fit: the ring grid when n factors
/// well (d = 2), the midpoint grid (d = 1), otherwise Monte-Carlo draws.
ReferenceSpec convergence_reference(std::size_t n, std::size_t dim);

/// Fits every (n, seed) cell by optimal assignment and fills records with
/// one row per tau (or a single row when taus is empty).
void run_convergence(ConvergenceRun& run);

/// Median of the sup errors of one sample size (one value per seed).
double median_sup_error(const ConvergenceRun& run, std::size_t n);
/// Median Hausdorff error of one sample size at one tau.
double median_hausdorff(const ConvergenceRun& run, std::size_t n, double tau);
double median(std::vector<double> values);

/// Header comment with band and probe density, then
/// family,n,seed,tau,sup_error,hausdorff rows.
void write_convergence_csv(std::ostream& out, const ConvergenceRun& run);

}  // namespace mkdepth
