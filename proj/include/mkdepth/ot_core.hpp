#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mkdepth/measures.hpp"

namespace mkdepth {

/// Dense squared-Euclidean cost c[i][j] = |u_i - y_j|^2 between two supports.
class CostMatrix {
public:
    CostMatrix(const DiscreteMeasure& source, const DiscreteMeasure& target);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    double max_entry() const noexcept { return max_entry_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
    double max_entry_ = 0.0;
};

struct PlanEntry {
    std::size_t source;
    std::size_t target;
    double mass;
};

/// Kantorovich duals in cost form: a_i + b_j <= c[i][j], with equality on
/// the support of an optimal plan.
struct CostDuals {
    std::vector<double> source;
    std::vector<double> target;
};

struct Coupling {
    DiscreteMeasure source;
    DiscreteMeasure target;
    std::vector<PlanEntry> plan;
    /// Sum of mass * c[i][j].
    double objective = 0.0;
    /// Sum a_i p_i + sum b_j q_j of the duals below.
    double dual_value = 0.0;
    std::optional<CostDuals> duals;
    /// Assignment solutions only: source atom i is matched to target permutation[i].
    std::vector<std::size_t> permutation;
    std::size_t iterations = 0;
};

double transport_cost(const DiscreteMeasure& source, const DiscreteMeasure& target,
                      const std::vector<PlanEntry>& plan);
/// Sum of mass * <u_i, y_j>.
double transport_surplus(const DiscreteMeasure& source, const DiscreteMeasure& target,
                         const std::vector<PlanEntry>& plan);

/// Optimal assignment between two equal-size uniform measures.
///
/// Jonker-Volgenant shortest augmenting paths (column reduction, augmenting
/// row reduction, Dijkstra augmentation) on costs scaled by their maximum.
/// Costs are evaluated on the fly, so memory is O(n). Ties are resolved by
/// scanning indices in increasing order, which makes the result
/// deterministic.
Coupling solve_assignment(const DiscreteMeasure& source, const DiscreteMeasure& target);

/// Exact transportation LP by the primal transportation simplex (MODI
/// pricing). The returned plan is an extreme point with at most n+m-1
/// positive entries. max_pivots defaults to 50*(n+m).
Coupling solve_discrete_ot(const DiscreteMeasure& source, const DiscreteMeasure& target,
                           std::optional<std::size_t> max_pivots = std::nullopt);

/// Exhaustive oracle: permutation search for uniform equal-size measures
/// with n <= 8, vertex enumeration of the transportation polytope when
/// n + m <= 8.
Coupling brute_force_ot(const DiscreteMeasure& source, const DiscreteMeasure& target);

/// Rebuilds cost-form duals from an optimal plan alone, by shortest paths
/// over the source atoms with arc lengths min_j (c[k][j] - c[i][j]) for j
/// in the support of row i. The source dual at index 0 is pinned to zero.
CostDuals reconstruct_cost_duals(const DiscreteMeasure& source, const DiscreteMeasure& target,
                                 const std::vector<PlanEntry>& plan);

struct CouplingResiduals {
    double row_sum = 0.0;
    double col_sum = 0.0;
    /// |objective - recomputed objective|
    double objective = 0.0;
    /// |objective - dual_value|
    double duality_gap = 0.0;
    /// min over all (i, j) of c[i][j] - a_i - b_j (negative means infeasible).
    double min_reduced_cost = 0.0;
    /// max over support of |c[i][j] - a_i - b_j|.
    double slackness = 0.0;
    bool min_positive_mass = true;
};

CouplingResiduals check_coupling(const Coupling& coupling);

}  // namespace mkdepth
