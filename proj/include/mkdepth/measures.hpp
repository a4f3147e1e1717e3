#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mkdepth {

using Point = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Weighted point cloud in R^dim. Coordinates are stored row-major.
///
/// Construction removes zero-weight atoms and rescales the weights to sum
/// to one. Negative weights are rejected.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

    /// Every atom gets weight exactly 1/n.
    static DiscreteMeasure uniform(std::size_t dim, std::vector<double> coords);
    static DiscreteMeasure from_points(const std::vector<Point>& points);
    /// Keeps already-normalized weights bit-exact (used when reloading).
    static DiscreteMeasure from_normalized(std::size_t dim, std::vector<double> coords,
                                           std::vector<double> weights);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return weights_.size(); }
    bool empty() const noexcept { return weights_.empty(); }

    std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    Point point_copy(std::size_t i) const;
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& coords() const noexcept { return coords_; }

    bool has_uniform_weights(double rel_tol = 1e-12) const;

    /// Atoms with bit-identical coordinates are merged by summing weights.
    /// First-occurrence order is kept.
    DiscreteMeasure merge_duplicates() const;

    bool operator==(const DiscreteMeasure&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

void to_json(nlohmann::json& j, const DiscreteMeasure& m);
void from_json(const nlohmann::json& j, DiscreteMeasure& m);

/// Ring grid discretizing the spherical uniform law on the unit disk.
///
/// Ring j has radius (j+1)/rings and is rotated by pi*j/spokes; all atoms
/// carry weight 1/(rings*spokes). Because the radius of the spherical
/// uniform law is uniform on [0,1], equal-count rings at evenly spaced
/// radii carry equal mass.
struct ReferenceGrid {
    DiscreteMeasure base;
    std::size_t rings = 0;
    std::size_t spokes = 0;
    std::vector<double> radii;
};

ReferenceGrid make_reference_grid(std::size_t rings, std::size_t spokes, std::size_t dim = 2);

/// Midpoint discretization of the uniform law on [-1, 1]:
/// atoms at -1 + (2k+1)/n, k = 0..n-1.
DiscreteMeasure make_reference_grid_1d(std::size_t n);

DiscreteMeasure sample_spherical_uniform(std::size_t n, std::size_t dim, std::uint64_t seed);
DiscreteMeasure sample_uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed);
DiscreteMeasure sample_banana(std::size_t n, std::uint64_t seed);

enum class FamilyKind { Banana, UniformBall, UnivariateUniform, EllipticalSpherical };

const char* to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// Synthetic data-generating law, with closed-form transport maps where
/// they exist.
///
/// EllipticalSpherical is used in isotropic position (location 0, scatter
/// identity) with radial distribution function G(r) = (r / scale)^exponent
/// on [0, scale]. UniformBall is the special case exponent = dim, scale = 1;
/// exponent = 1, scale = 1 reproduces the spherical uniform law itself.
struct SyntheticFamily {
    FamilyKind kind = FamilyKind::Banana;
    std::map<std::string, double> parameters;
    std::size_t dim = 2;

    void validate() const;
    DiscreteMeasure sample(std::size_t n, std::uint64_t seed) const;

    bool has_oracle() const noexcept { return kind != FamilyKind::Banana; }
    /// Population vector quantile Q_P(u) for the spherical uniform reference.
    Point quantile_oracle(std::span<const double> u) const;
    /// Population vector rank R_P(y).
    Point rank_oracle(std::span<const double> y) const;

    std::string name() const;
};

SyntheticFamily banana_family();
SyntheticFamily uniform_ball_family(std::size_t dim);
SyntheticFamily univariate_uniform_family();
SyntheticFamily elliptical_spherical_family(std::size_t dim, double exponent, double scale = 1.0);

/// Comma-separated numeric rows, '.' decimal point, optional single header
/// line starting with '#'. With weight_column the last field of each row is
/// the atom weight. Duplicate atoms are merged.
DiscreteMeasure load_csv(const std::string& path, bool weight_column = false);
DiscreteMeasure parse_csv(std::istream& in, bool weight_column = false);
void write_csv(std::ostream& out, const DiscreteMeasure& m, bool weight_column = false);

}  // namespace mkdepth
