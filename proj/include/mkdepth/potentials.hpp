#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mkdepth/measures.hpp"
#include "mkdepth/ot_core.hpp"

namespace mkdepth {

/// Conjugate pair of empirical potentials in surplus form:
/// psi[i] + psi_star[j] >= <u_i, y_j>, with equality on the optimal plan.
///
/// ref_support carries the reference atoms u_i, target_support the data
/// atoms y_j. The constant is pinned by psi[base_index] == 0.
struct PotentialPair {
    DiscreteMeasure ref_support;
    std::vector<double> psi;
    DiscreteMeasure target_support;
    std::vector<double> psi_star;
    std::size_t base_index = 0;

    /// sum psi dF + sum psi_star dP
    double dual_value() const;
    /// Adds c to psi and subtracts it from psi_star.
    void shift(double c);
};

/// Index of the atom nearest to center (lowest index on ties). With no
/// center given, the origin is used.
std::size_t closest_to(const DiscreteMeasure& m, std::span<const double> center = {});

/// Surplus-form potentials of an optimal coupling. Uses the solver duals when
/// the coupling carries them, otherwise rebuilds them from the plan. Cost
/// duals convert as psi = (|u|^2 - a) / 2, psi_star = (|y|^2 - b) / 2; then
/// psi is shifted so psi[base_index] = 0 and psi_star is replaced by the
/// discrete conjugate of psi, which makes feasibility hold exactly.
PotentialPair recover_potentials(const Coupling& coupling, std::size_t base_index);
PotentialPair recover_potentials(const Coupling& coupling);

struct ConjugateResult {
    std::vector<double> values;
    std::vector<std::size_t> argmax;
};

/// values -> sup over support atoms u of <u, y> - values(u), for each query y.
/// Ties go to the lowest support index.
ConjugateResult conjugate(std::span<const double> values, const DiscreteMeasure& support,
                          const DiscreteMeasure& query);

struct PotentialResiduals {
    /// min over checked pairs of psi[i] + psi_star[j] - <u_i, y_j>
    double min_feasibility_slack = 0.0;
    /// max over plan support of |psi[i] + psi_star[j] - <u_i, y_j>|
    double max_slackness = 0.0;
    bool exhaustive = true;
};

/// Exhaustive over all pairs when n*m <= 1e6, otherwise over every row
/// against a deterministic sample of columns.
PotentialResiduals check_potentials(const PotentialPair& pair, const std::vector<PlanEntry>& plan);

void to_json(nlohmann::json& j, const PotentialPair& p);
/// Reads psi, psi_star and base_index; the supports must be set by the caller.
PotentialPair potentials_from_json(const nlohmann::json& j, DiscreteMeasure ref_support,
                                   DiscreteMeasure target_support);

}  // namespace mkdepth
