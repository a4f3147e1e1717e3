#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkdepth/measures.hpp"
#include "mkdepth/potentials.hpp"
#include "mkdepth/semidiscrete.hpp"

namespace mkdepth {

/// Spherical uniform law on the unit ball, or uniform law on [0,1]^d.
enum class ReferenceKind { Ball, Cube };
enum class FitMode { Assignment, Semidiscrete };

const char* to_string(ReferenceKind kind);
const char* to_string(FitMode mode);
FitMode fit_mode_from_string(const std::string& name);

/// Textual reference description used by the command line and stored in
/// model files:
///   ball-grid:R,S   ring grid with R rings of S spokes (d = 2)
///   ball-grid:N     midpoint grid of N atoms on [-1, 1] (d = 1)
///   ball-mc:N       N spherical uniform draws
///   cube:N          N uniform draws on the unit cube
struct ReferenceSpec {
    enum class Scheme { BallGrid, BallGrid1d, BallMonteCarlo, Cube };
    Scheme scheme = Scheme::BallGrid;
    std::size_t rings = 0;
    std::size_t spokes = 0;
    std::size_t count = 0;

    static ReferenceSpec parse(const std::string& text);
    std::string str() const;
    ReferenceKind kind() const { return scheme == Scheme::Cube ? ReferenceKind::Cube : ReferenceKind::Ball; }
    std::size_t size() const { return scheme == Scheme::BallGrid ? rings * spokes : count; }
    /// Builds the atoms in dimension dim. Monte-Carlo schemes use seed.
    DiscreteMeasure build(std::size_t dim, std::uint64_t seed) const;
};

/// Ring grid shape with rings * spokes == n and spokes close to 2 pi rings,
/// so ring spacing and outer arc spacing are comparable. Empty when n has
/// no divisor in a usable range.
std::optional<ReferenceSpec> grid_spec_for(std::size_t n, std::size_t dim);

/// Empirical transport between a reference measure and the data.
///
/// pair.ref_support holds the reference atoms and pair.target_support the
/// data atoms. In semi-discrete mode the reference atoms are the quadrature
/// and psi is the max-affine potential evaluated on them. Immutable after
/// fitting; all evaluations are const.
struct FittedTransport {
    PotentialPair pair;
    FitMode mode = FitMode::Assignment;
    ReferenceKind reference = ReferenceKind::Ball;
    std::string reference_spec;
    std::uint64_t seed = 0;
    /// Reference atom -> target atom (the matching, or the power cell).
    std::vector<std::size_t> ref_to_target;
    /// Target atom -> reference atom; assignment mode only.
    std::vector<std::size_t> target_to_ref;
    /// Transport cost of the fitted plan and its surplus sum mass * <u, y>.
    double objective = 0.0;
    double surplus = 0.0;
    double dual_value = 0.0;
    PotentialResiduals residuals;
    /// Semi-discrete mode: weights v and the mass residual of the solve.
    std::vector<double> cell_weights;
    double mass_residual = 0.0;
    std::size_t iterations = 0;
    Point box_lo;
    Point box_hi;

    bool fitted() const { return !pair.psi.empty(); }
    std::size_t dim() const { return pair.target_support.dim(); }
    const DiscreteMeasure& ref() const { return pair.ref_support; }
    const DiscreteMeasure& target() const { return pair.target_support; }

    /// Index of the reference atom bit-identical to u, if any.
    std::optional<std::size_t> find_ref(std::span<const double> u) const;
    std::optional<std::size_t> find_target(std::span<const double> y) const;
    /// Rebuilds lookup tables and the bounding box after the fields are set.
    void index();

private:
    std::map<std::vector<std::uint64_t>, std::size_t> ref_lookup_;
    std::map<std::vector<std::uint64_t>, std::size_t> target_lookup_;
};

/// Optimal matching of reference and data (equal counts, uniform weights).
FittedTransport fit_assignment(const DiscreteMeasure& reference, ReferenceKind kind, const DiscreteMeasure& data);
/// Semi-discrete transport from the quadrature onto the (distinct) data atoms.
FittedTransport fit_semidiscrete(const DiscreteMeasure& quadrature, ReferenceKind kind, const DiscreteMeasure& data,
                                 const SemiDiscreteOptions& options = {});

struct DepthReport {
    Point query;
    Point vector_rank;
    double scalar_rank = 0.0;
    Point sign;
    double depth = 0.0;
    bool extrapolated = false;
};

/// Target atom maximizing <y, u> - psi_star(y), lowest index on ties. On a
/// reference atom this is the fitted image of that atom.
Point eval_quantile(const FittedTransport& fit, std::span<const double> u);
std::size_t eval_quantile_index(const FittedTransport& fit, std::span<const double> u);

/// Reference atom maximizing <y, u> - psi(u), with rank, sign and depth.
DepthReport eval_rank(const FittedTransport& fit, std::span<const double> y);
std::size_t eval_rank_index(const FittedTransport& fit, std::span<const double> y);

/// Images of spokes points on the boundary of the reference region of
/// content tau. For d = 2 they come in counterclockwise order of the
/// reference directions; d = 1 gives the images of -tau and tau; d >= 3
/// uses pseudo-random directions from a fixed seed.
std::vector<Point> quantile_contour(const FittedTransport& fit, double tau, std::size_t spokes = 360);

struct DepthRegion {
    /// Distinct target atoms, ascending.
    std::vector<std::size_t> indices;
    std::vector<Point> points;
};

/// Images of the reference atoms inside the region of content tau.
DepthRegion depth_region(const FittedTransport& fit, double tau);

/// Halfspace depth of the spherical uniform law at a point of norm tau.
double tukey_depth_spherical(double tau, std::size_t dim);
/// Halfspace depth of the uniform law on [0,1]^d: 1/2 - |u - 1/2|_inf.
double cube_depth(std::span<const double> u);

void to_json(nlohmann::json& j, const FittedTransport& fit);
FittedTransport fitted_transport_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const FittedTransport& fit);
FittedTransport load_model(const std::string& path);

/// One row per report: query coords, rank coords, scalar_rank, depth,
/// extrapolated (0/1), after a '#' header.
void write_depth_csv(std::ostream& out, const std::vector<DepthReport>& reports);

}  // namespace mkdepth
