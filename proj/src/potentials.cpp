#include "mkdepth/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mkdepth/error.hpp"

namespace mkdepth {

double PotentialPair::dual_value() const {
    double total = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) total += psi[i] * ref_support.weight(i);
    for (std::size_t j = 0; j < psi_star.size(); ++j) total += psi_star[j] * target_support.weight(j);
    return total;
}

void PotentialPair::shift(double c) {
    for (auto& x : psi) x += c;
    for (auto& x : psi_star) x -= c;
}

std::size_t closest_to(const DiscreteMeasure& m, std::span<const double> center) {
    if (m.empty()) throw Error(ErrorCode::EmptySupport, "empty measure");
    std::vector<double> origin(m.dim(), 0.0);
    if (center.empty()) center = origin;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = squared_distance(m.point(i), center);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

ConjugateResult conjugate(std::span<const double> values, const DiscreteMeasure& support,
                          const DiscreteMeasure& query) {
    if (support.empty()) throw Error(ErrorCode::EmptySupport, "conjugate over an empty support");
    if (values.size() != support.size()) throw Error(ErrorCode::SizeMismatch, "one value per support atom expected");
    if (!query.empty() && query.dim() != support.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "query and support dimensions differ");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "potential values must be finite");
    }
    ConjugateResult out;
    out.values.resize(query.size());
    out.argmax.resize(query.size());
    for (std::size_t q = 0; q < query.size(); ++q) {
        const auto y = query.point(q);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            const double s = dot(support.point(i), y) - values[i];
            if (s > best) {
                best = s;
                arg = i;
            }
        }
        out.values[q] = best;
        out.argmax[q] = arg;
    }
    return out;
}

PotentialPair recover_potentials(const Coupling& coupling, std::size_t base_index) {
    const auto& ref = coupling.source;
    const auto& tgt = coupling.target;
    if (base_index >= ref.size()) throw Error(ErrorCode::InvalidArgument, "base index out of range");
    const CostDuals duals = coupling.duals ? *coupling.duals : reconstruct_cost_duals(ref, tgt, coupling.plan);

    PotentialPair pair;
    pair.ref_support = ref;
    pair.target_support = tgt;
    pair.base_index = base_index;
    pair.psi.resize(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) pair.psi[i] = (squared_norm(ref.point(i)) - duals.source[i]) / 2.0;
    const double pin = pair.psi[base_index];
    for (auto& x : pair.psi) x -= pin;
    pair.psi_star = conjugate(pair.psi, ref, tgt).values;
    return pair;
}

PotentialPair recover_potentials(const Coupling& coupling) {
    return recover_potentials(coupling, closest_to(coupling.source));
}

PotentialResiduals check_potentials(const PotentialPair& pair, const std::vector<PlanEntry>& plan) {
    PotentialResiduals r;
    const auto& ref = pair.ref_support;
    const auto& tgt = pair.target_support;
    auto slack = [&](std::size_t i, std::size_t j) {
        return pair.psi[i] + pair.psi_star[j] - dot(ref.point(i), tgt.point(j));
    };
    r.min_feasibility_slack = std::numeric_limits<double>::infinity();
    const std::size_t n = ref.size();
    const std::size_t m = tgt.size();
    r.exhaustive = n * m <= 1'000'000;
    if (r.exhaustive) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) r.min_feasibility_slack = std::min(r.min_feasibility_slack, slack(i, j));
        }
    } else {
        std::mt19937_64 rng(0x5eed);
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        const std::size_t per_row = std::max<std::size_t>(1, 1'000'000 / n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < per_row; ++t) {
                r.min_feasibility_slack = std::min(r.min_feasibility_slack, slack(i, pick(rng)));
            }
        }
    }
    for (const auto& e : plan) r.max_slackness = std::max(r.max_slackness, std::abs(slack(e.source, e.target)));
    return r;
}

void to_json(nlohmann::json& j, const PotentialPair& p) {
    j = nlohmann::json{{"psi", p.psi}, {"psi_star", p.psi_star}, {"base_index", p.base_index}};
}

PotentialPair potentials_from_json(const nlohmann::json& j, DiscreteMeasure ref_support,
                                   DiscreteMeasure target_support) {
    PotentialPair p;
    p.psi = j.at("psi").get<std::vector<double>>();
    p.psi_star = j.at("psi_star").get<std::vector<double>>();
    p.base_index = j.at("base_index").get<std::size_t>();
    if (p.psi.size() != ref_support.size() || p.psi_star.size() != target_support.size()) {
        throw Error(ErrorCode::SizeMismatch, "potential lengths do not match the supports");
    }
    if (p.base_index >= p.psi.size()) throw Error(ErrorCode::InvalidArgument, "base index out of range");
    p.ref_support = std::move(ref_support);
    p.target_support = std::move(target_support);
    return p;
}

}  // namespace mkdepth
