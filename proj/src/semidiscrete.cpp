#include "mkdepth/semidiscrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "mkdepth/ot_core.hpp"

namespace mkdepth {

namespace {

constexpr std::size_t kAssignmentPathMax = 600;

void check_inputs(std::span<const double> v, const DiscreteMeasure& quadrature, const DiscreteMeasure& targets) {
    if (targets.empty() || quadrature.empty()) throw Error(ErrorCode::EmptySupport, "empty measure");
    if (targets.dim() != quadrature.dim()) throw Error(ErrorCode::DimensionMismatch, "target/quadrature dims differ");
    if (v.size() != targets.size()) throw Error(ErrorCode::SizeMismatch, "one weight per target expected");
}

// Surplus table <u_q, y_k>, cached when it fits in memory.
class Surplus {
public:
    Surplus(const DiscreteMeasure& quadrature, const DiscreteMeasure& targets)
        : quad_(quadrature), tgt_(targets), k_(targets.size()) {
        if (quadrature.size() * targets.size() <= (std::size_t{1} << 23)) {
            table_.resize(quadrature.size() * k_);
            for (std::size_t q = 0; q < quadrature.size(); ++q) {
                for (std::size_t k = 0; k < k_; ++k) table_[q * k_ + k] = dot(quadrature.point(q), targets.point(k));
            }
        }
    }

    double operator()(std::size_t q, std::size_t k) const {
        return table_.empty() ? dot(quad_.point(q), tgt_.point(k)) : table_[q * k_ + k];
    }

    // Best cell of atom q and its value.
    std::pair<std::size_t, double> best(std::size_t q, std::span<const double> v) const {
        std::size_t arg = 0;
        double top = (*this)(q, 0) - v[0];
        for (std::size_t k = 1; k < k_; ++k) {
            const double s = (*this)(q, k) - v[k];
            if (s > top) {
                top = s;
                arg = k;
            }
        }
        return {arg, top};
    }

    const DiscreteMeasure& quadrature() const { return quad_; }
    const DiscreteMeasure& targets() const { return tgt_; }

private:
    const DiscreteMeasure& quad_;
    const DiscreteMeasure& tgt_;
    std::size_t k_;
    std::vector<double> table_;
};

struct Evaluation {
    CellAssignment cells;
    double objective = 0.0;
};

Evaluation evaluate(const Surplus& s, std::span<const double> v) {
    const auto& quad = s.quadrature();
    const auto& tgt = s.targets();
    Evaluation e;
    e.cells.cell.resize(quad.size());
    e.cells.masses.assign(tgt.size(), 0.0);
    double integral = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const auto [arg, top] = s.best(q, v);
        e.cells.cell[q] = arg;
        e.cells.masses[arg] += quad.weight(q);
        integral += quad.weight(q) * top;
    }
    double linear = 0.0;
    for (std::size_t k = 0; k < tgt.size(); ++k) linear += tgt.weight(k) * v[k];
    e.objective = integral + linear;
    return e;
}

// Equal counts with uniform weights: the optimum puts one atom in each cell,
// i.e. an optimal assignment. Given the unique optimal matching, weights that
// realize it with a strict margin are shortest-path distances for the
// constraints v_j - v_k <= w(k, j) - delta, where w(k, j) is the surplus the
// atom of cell j loses by moving to k and delta is half the minimum cycle mean
// (Karp). Empty when the matching is not strictly optimal.
std::optional<std::vector<double>> assignment_weights(const Surplus& s, const std::vector<std::size_t>& atom_of) {
    const std::size_t K = atom_of.size();
    std::vector<double> w(K * K, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
        const double own = s(atom_of[j], j);
        for (std::size_t k = 0; k < K; ++k) w[k * K + j] = own - s(atom_of[j], k);
    }
    const double inf = std::numeric_limits<double>::infinity();
    // D[m][x]: lightest walk of exactly m edges ending at x.
    std::vector<std::vector<double>> D(K + 1, std::vector<double>(K, inf));
    D[0].assign(K, 0.0);
    for (std::size_t m = 1; m <= K; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t x = 0; x < K; ++x) {
                if (x != k) D[m][x] = std::min(D[m][x], D[m - 1][k] + w[k * K + x]);
            }
        }
    }
    double mean = inf;
    for (std::size_t x = 0; x < K; ++x) {
        if (!std::isfinite(D[K][x])) continue;
        double worst = -inf;
        for (std::size_t m = 0; m < K; ++m) {
            if (std::isfinite(D[m][x])) worst = std::max(worst, (D[K][x] - D[m][x]) / static_cast<double>(K - m));
        }
        mean = std::min(mean, worst);
    }
    if (!(mean > 0.0) || !std::isfinite(mean)) return std::nullopt;
    const double delta = mean / 2.0;
    std::vector<double> v(K, 0.0);
    for (std::size_t pass = 0; pass < K; ++pass) {
        bool changed = false;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < K; ++j) {
                if (j == k) continue;
                const double cand = v[k] + w[k * K + j] - delta;
                if (cand < v[j]) {
                    v[j] = cand;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    return v;
}

double max_residual(const DiscreteMeasure& targets, const std::vector<double>& masses) {
    double r = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) r = std::max(r, std::abs(targets.weight(k) - masses[k]));
    return r;
}

}  // namespace

CellAssignment assign_cells(std::span<const double> v, const DiscreteMeasure& quadrature,
                            const DiscreteMeasure& targets) {
    check_inputs(v, quadrature, targets);
    return evaluate(Surplus(quadrature, targets), v).cells;
}

double semidiscrete_objective(std::span<const double> v, const DiscreteMeasure& quadrature,
                              const DiscreteMeasure& targets) {
    check_inputs(v, quadrature, targets);
    return evaluate(Surplus(quadrature, targets), v).objective;
}

SemiDiscreteSolution solve_semidiscrete(const DiscreteMeasure& targets, const DiscreteMeasure& quadrature,
                                        const SemiDiscreteOptions& options) {
    const std::size_t K = targets.size();
    const std::size_t N = quadrature.size();
    std::vector<double> v(K, 0.0);
    check_inputs(v, quadrature, targets);
    if (N < K) throw Error(ErrorCode::InvalidArgument, "quadrature has fewer atoms than targets");
    if (targets.merge_duplicates().size() != K) throw Error(ErrorCode::InvalidArgument, "target atoms must be distinct");

    const double tol = std::max(options.tol_mass, 1.0 / static_cast<double>(N));
    const Surplus surplus(quadrature, targets);

    // Scale of the surplus values, used for the initial step and tie margins.
    double scale = 0.0;
    for (std::size_t k = 0; k < K; ++k) scale = std::max(scale, norm(targets.point(k)));
    double quad_radius = 0.0;
    for (std::size_t q = 0; q < N; ++q) quad_radius = std::max(quad_radius, norm(quadrature.point(q)));
    scale = std::max(scale * quad_radius, 1e-300);
    const double capture_margin = 1e-12 * scale;

    auto pin = [&](std::vector<double>& w) {
        const double c = w[0];
        for (auto& x : w) x -= c;
    };

    // Lowers v_k of every empty cell with positive target mass until its
    // nearest quadrature atom switches over.
    auto reseed_empty = [&](std::vector<double>& w, Evaluation& e) {
        bool changed = false;
        for (std::size_t k = 0; k < K; ++k) {
            if (e.cells.masses[k] > 0.0 || targets.weight(k) <= 0.0) continue;
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < N; ++q) {
                const double top = surplus(q, e.cells.cell[q]) - w[e.cells.cell[q]];
                gap = std::min(gap, top - (surplus(q, k) - w[k]));
            }
            w[k] -= gap + capture_margin;
            e = evaluate(surplus, w);
            if (e.cells.masses[k] <= 0.0) {
                throw Error(ErrorCode::EmptyCellUnrecoverable,
                            "cell " + std::to_string(k) + " stays empty after re-seeding");
            }
            changed = true;
        }
        return changed;
    };

    auto gradient = [&](const Evaluation& e) {
        std::vector<double> g(K);
        for (std::size_t k = 0; k < K; ++k) g[k] = targets.weight(k) - e.cells.masses[k];
        return g;
    };
    auto directional = [&](const std::vector<double>& d, const Evaluation& e) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += d[k] * (targets.weight(k) - e.cells.masses[k]);
        return s;
    };

    Evaluation current = evaluate(surplus, v);
    reseed_empty(v, current);
    pin(v);

    SemiDiscreteSolution best;
    best.targets = targets;
    best.quadrature = quadrature;
    best.tol_mass = tol;
    best.residual = std::numeric_limits<double>::infinity();
    auto record = [&](const std::vector<double>& w, const Evaluation& e, std::size_t iter) {
        const double r = max_residual(targets, e.cells.masses);
        if (r < best.residual) {
            best.v = w;
            best.cells = e.cells.cell;
            best.cell_masses = e.cells.masses;
            best.objective = e.objective;
            best.residual = r;
        }
        best.iterations = iter;
        return r;
    };

    if (N == K && K > 1 && K <= kAssignmentPathMax && quadrature.has_uniform_weights() && targets.has_uniform_weights()) {
        const auto coupling = solve_assignment(quadrature, targets);
        std::vector<std::size_t> atom_of(K);
        for (const auto& e : coupling.plan) atom_of[e.target] = e.source;
        if (auto w = assignment_weights(surplus, atom_of)) {
            pin(*w);
            Evaluation e = evaluate(surplus, *w);
            if (record(*w, e, 0) <= tol * (1.0 + 1e-9)) {
                best.converged = true;
                return best;
            }
        }
    }

    std::vector<double> g = gradient(current);
    std::vector<double> d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = -g[k];
    double step_guess = 0.0;
    {
        double dmax = 0.0;
        for (double x : d) dmax = std::max(dmax, std::abs(x));
        step_guess = dmax > 0.0 ? 0.01 * scale / dmax : 1.0;
    }

    for (std::size_t iter = 0;; ++iter) {
        const double r = record(v, current, iter);
        // Cell masses are sums of atom weights; allow for their rounding.
        if (r <= tol * (1.0 + 1e-9)) {
            best.converged = true;
            return best;
        }
        if (iter >= options.max_iters) break;

        double slope0 = directional(d, current);
        if (!(slope0 < 0.0)) {
            for (std::size_t k = 0; k < K; ++k) d[k] = -g[k];
            slope0 = directional(d, current);
            if (!(slope0 < 0.0)) break;
        }

        auto at = [&](double s) {
            std::vector<double> w(K);
            for (std::size_t k = 0; k < K; ++k) w[k] = v[k] + s * d[k];
            return w;
        };
        // Bracket the sign change of the directional derivative.
        double lo = 0.0;
        double hi = step_guess;
        std::optional<Evaluation> e_hi;
        for (int grow = 0; grow < 80; ++grow) {
            Evaluation e = evaluate(surplus, at(hi));
            if (directional(d, e) >= 0.0) {
                e_hi = std::move(e);
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if (!e_hi) break;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            Evaluation e = evaluate(surplus, at(mid));
            if (directional(d, e) < 0.0) {
                lo = mid;
            } else {
                hi = mid;
                e_hi = std::move(e);
            }
        }
        Evaluation e_lo = evaluate(surplus, at(lo));
        const bool take_hi = lo == 0.0 || e_hi->objective <= e_lo.objective;
        const double step = take_hi ? hi : lo;
        v = at(step);
        current = take_hi ? std::move(*e_hi) : std::move(e_lo);
        step_guess = std::max(step, 1e-12 * scale);

        const bool reseeded = reseed_empty(v, current);
        pin(v);

        std::vector<double> g_new = gradient(current);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            num += g_new[k] * (g_new[k] - g[k]);
            den += g[k] * g[k];
        }
        const double beta = (reseeded || den == 0.0 || (iter + 1) % K == 0) ? 0.0 : std::max(0.0, num / den);
        for (std::size_t k = 0; k < K; ++k) d[k] = -g_new[k] + beta * d[k];
        g = std::move(g_new);
    }

    std::ostringstream msg;
    msg << "semi-discrete solver stopped after " << best.iterations << " iterations with mass residual "
        << best.residual << " > " << tol;
    throw MaxItersExceeded(msg.str(), best);
}

void to_json(nlohmann::json& j, const SemiDiscreteSolution& s) {
    j = nlohmann::json{{"v", s.v},
                       {"cell_masses", s.cell_masses},
                       {"objective", s.objective},
                       {"residual", s.residual},
                       {"tol_mass", s.tol_mass},
                       {"iterations", s.iterations},
                       {"converged", s.converged},
                       {"stopping_rule", "max_k |p_k - cell_mass_k| <= tol_mass"}};
}

}  // namespace mkdepth
