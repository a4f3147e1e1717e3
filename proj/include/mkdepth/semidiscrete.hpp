#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "mkdepth/error.hpp"
#include "mkdepth/measures.hpp"

namespace mkdepth {

/// Power-diagram cells of the max-affine potential u -> max_k <u, y_k> - v_k
/// restricted to quadrature atoms.
struct CellAssignment {
    /// cell[q] = argmax_k <u_q, y_k> - v_k, lowest k on ties.
    std::vector<std::size_t> cell;
    /// Quadrature mass of each cell.
    std::vector<double> masses;
};

CellAssignment assign_cells(std::span<const double> v, const DiscreteMeasure& quadrature,
                            const DiscreteMeasure& targets);

/// v -> sum_q w_q max_k (<u_q, y_k> - v_k) + sum_k p_k v_k.
double semidiscrete_objective(std::span<const double> v, const DiscreteMeasure& quadrature,
                              const DiscreteMeasure& targets);

struct SemiDiscreteOptions {
    /// Stop once max_k |p_k - cell_mass_k| <= tol_mass. Raised to
    /// 1 / (quadrature count) when smaller.
    double tol_mass = 1e-6;
    std::size_t max_iters = 2000;
};

struct SemiDiscreteSolution {
    DiscreteMeasure targets;
    DiscreteMeasure quadrature;
    /// Weights with v[0] = 0.
    std::vector<double> v;
    std::vector<std::size_t> cells;
    std::vector<double> cell_masses;
    double objective = 0.0;
    /// max_k |p_k - cell_masses[k]| at v.
    double residual = 0.0;
    double tol_mass = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Thrown when the iteration budget runs out; carries the best iterate.
class MaxItersExceeded : public Error {
public:
    MaxItersExceeded(const std::string& message, SemiDiscreteSolution best)
        : Error(ErrorCode::MaxItersExceeded, message), best_(std::move(best)) {}
    const SemiDiscreteSolution& best() const noexcept { return best_; }

private:
    SemiDiscreteSolution best_;
};

/// Minimizes the convex piecewise-linear objective above. Starts from v = 0
/// and uses Polak-Ribiere conjugate directions built from the gradient
/// p - cell_masses, each followed by an exact line search (bisection on the
/// directional derivative). Cells that are empty while their target has
/// mass are re-seeded by lowering v_k just enough to capture the nearest
/// quadrature atom.
SemiDiscreteSolution solve_semidiscrete(const DiscreteMeasure& targets, const DiscreteMeasure& quadrature,
                                        const SemiDiscreteOptions& options = {});

void to_json(nlohmann::json& j, const SemiDiscreteSolution& s);

}  // namespace mkdepth
