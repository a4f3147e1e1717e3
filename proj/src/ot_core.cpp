#include "mkdepth/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include "mkdepth/error.hpp"

namespace mkdepth {

CostMatrix::CostMatrix(const DiscreteMeasure& source, const DiscreteMeasure& target)
    : rows_(source.size()), cols_(target.size()), entries_(rows_ * cols_) {
    if (source.dim() != target.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "source and target dimensions differ");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            const double c = squared_distance(source.point(i), target.point(j));
            entries_[i * cols_ + j] = c;
            max_entry_ = std::max(max_entry_, c);
        }
    }
}

double transport_cost(const DiscreteMeasure& source, const DiscreteMeasure& target,
                      const std::vector<PlanEntry>& plan) {
    double total = 0.0;
    for (const auto& e : plan) total += e.mass * squared_distance(source.point(e.source), target.point(e.target));
    return total;
}

double transport_surplus(const DiscreteMeasure& source, const DiscreteMeasure& target,
                         const std::vector<PlanEntry>& plan) {
    double total = 0.0;
    for (const auto& e : plan) total += e.mass * dot(source.point(e.source), target.point(e.target));
    return total;
}

namespace {

double dual_objective(const DiscreteMeasure& source, const DiscreteMeasure& target, const CostDuals& duals) {
    double total = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) total += duals.source[i] * source.weight(i);
    for (std::size_t j = 0; j < target.size(); ++j) total += duals.target[j] * target.weight(j);
    return total;
}

// Scaled squared distance s*|u_i - y_j|^2, evaluated on demand in the
// expanded form s|u_i|^2 + s|y_j|^2 - <u_i, 2s y_j>.
class ExpandedCost {
public:
    ExpandedCost(const DiscreteMeasure& source, const DiscreteMeasure& target, double scale)
        : dim_(source.dim()), src_(source.coords()), scaled_dst_(target.coords()),
          src_norm_(source.size()), dst_norm_(target.size()) {
        for (auto& x : scaled_dst_) x *= 2.0 * scale;
        for (std::size_t i = 0; i < source.size(); ++i) src_norm_[i] = scale * squared_norm(source.point(i));
        for (std::size_t j = 0; j < target.size(); ++j) dst_norm_[j] = scale * squared_norm(target.point(j));
    }

    double operator()(std::size_t i, std::size_t j) const {
        return src_norm_[i] + dst_norm_[j] - cross(i, scaled_dst_.data() + j * dim_);
    }

    // <u_i, y> for a scaled target coordinate block y.
    double cross(std::size_t i, const double* y) const {
        const double* u = src_.data() + i * dim_;
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) s += u[k] * y[k];
        return s;
    }

    std::size_t dim() const { return dim_; }
    const double* src(std::size_t i) const { return src_.data() + i * dim_; }
    double src_norm(std::size_t i) const { return src_norm_[i]; }
    double dst_norm(std::size_t j) const { return dst_norm_[j]; }
    const double* scaled_dst(std::size_t j) const { return scaled_dst_.data() + j * dim_; }

private:
    std::size_t dim_;
    std::vector<double> src_;
    std::vector<double> scaled_dst_;
    std::vector<double> src_norm_;
    std::vector<double> dst_norm_;
};

constexpr std::ptrdiff_t kNone = -1;

// Column reduction followed by reduction transfer; collects the rows left
// unassigned.
void column_reduction(std::size_t n, const ExpandedCost& cost, std::vector<std::ptrdiff_t>& rowsol,
                      std::vector<std::ptrdiff_t>& colsol, std::vector<double>& v,
                      std::vector<std::size_t>& free_rows) {
    const double big = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> matches(n, 0);
    for (std::size_t jj = n; jj-- > 0;) {
        double min = cost(0, jj);
        std::size_t imin = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double c = cost(i, jj);
            if (c < min) {
                min = c;
                imin = i;
            }
        }
        v[jj] = min;
        if (++matches[imin] == 1) {
            rowsol[imin] = static_cast<std::ptrdiff_t>(jj);
            colsol[jj] = static_cast<std::ptrdiff_t>(imin);
        } else if (v[jj] < v[static_cast<std::size_t>(rowsol[imin])]) {
            const auto j1 = static_cast<std::size_t>(rowsol[imin]);
            rowsol[imin] = static_cast<std::ptrdiff_t>(jj);
            colsol[jj] = static_cast<std::ptrdiff_t>(imin);
            colsol[j1] = kNone;
        } else {
            colsol[jj] = kNone;
        }
    }

    // Reduction transfer.
    for (std::size_t i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows.push_back(i);
        } else if (matches[i] == 1 && n > 1) {
            const auto j1 = static_cast<std::size_t>(rowsol[i]);
            double min = big;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != j1) min = std::min(min, cost(i, j) - v[j]);
            }
            v[j1] -= min;
        }
    }

}

// Jonker-Volgenant on an n x n dense cost. Returns row -> column and the
// column duals v; row duals follow as u_i = c(i, x_i) - v_{x_i}.
//
// With warm column prices every row starts free and the column reduction
// and reduction transfer steps are skipped; augmenting row reduction only
// needs assigned rows to sit at their row minimum, which holds trivially.
template <std::size_t D>
void lapjv_impl(std::size_t n, const ExpandedCost& cost, std::vector<std::ptrdiff_t>& rowsol, std::vector<double>& v,
                const std::vector<double>* warm) {
    const double big = std::numeric_limits<double>::infinity();
    rowsol.assign(n, kNone);
    std::vector<std::ptrdiff_t> colsol(n, kNone);
    std::vector<std::size_t> free_rows;
    if (warm) {
        v = *warm;
        free_rows.resize(n);
        std::iota(free_rows.begin(), free_rows.end(), 0);
    } else {
        v.assign(n, 0.0);
        column_reduction(n, cost, rowsol, colsol, v, free_rows);
    }
    // Augmenting row reduction, two passes. The step cap bounds the inner
    // loop, which can otherwise shave v by tiny amounts for a long time.
    for (int pass = 0; pass < 2 && !free_rows.empty() && n > 1; ++pass) {
        std::vector<std::size_t> queue = std::move(free_rows);
        free_rows.clear();
        std::size_t k = 0;
        std::size_t steps = 0;
        const std::size_t step_cap = 8 * n + 64;
        while (k < queue.size()) {
            const std::size_t i = queue[k++];
            if (++steps > step_cap) {
                free_rows.push_back(i);
                continue;
            }
            double umin = cost(i, 0) - v[0];
            std::size_t j1 = 0;
            std::size_t j2 = 0;
            double usubmin = big;
            for (std::size_t j = 1; j < n; ++j) {
                const double h = cost(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            std::ptrdiff_t i0 = colsol[j1];
            const bool strict = umin < usubmin;
            if (strict) {
                v[j1] -= usubmin - umin;
            } else if (i0 != kNone) {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = static_cast<std::ptrdiff_t>(j1);
            colsol[j1] = static_cast<std::ptrdiff_t>(i);
            if (i0 != kNone) {
                rowsol[static_cast<std::size_t>(i0)] = kNone;
                if (strict) {
                    queue[--k] = static_cast<std::size_t>(i0);
                } else {
                    free_rows.push_back(static_cast<std::size_t>(i0));
                }
            }
        }
    }

    // Augmentation by Dijkstra-like shortest paths. Columns are kept in
    // position order (col[k]) with their distance, reduced norm and scaled
    // coordinates stored alongside, so the scan over todo columns is a
    // contiguous sweep.
    const std::size_t dim = cost.dim();
    auto cross = [dim](const double* u, const double* y) {
        double acc = 0.0;
        if constexpr (D > 0) {
            for (std::size_t k = 0; k < D; ++k) acc += u[k] * y[k];
        } else {
            for (std::size_t k = 0; k < dim; ++k) acc += u[k] * y[k];
        }
        return acc;
    };
    std::vector<std::size_t> col(n);
    std::vector<double> dist(n);
    std::vector<double> reduced(n);  // s|y_j|^2 - v_j
    std::vector<double> coord(n * dim);
    std::vector<std::size_t> pred(n);
    auto swap_pos = [&](std::size_t p, std::size_t q) {
        if (p == q) return;
        std::swap(col[p], col[q]);
        std::swap(dist[p], dist[q]);
        std::swap(reduced[p], reduced[q]);
        std::swap_ranges(coord.begin() + static_cast<std::ptrdiff_t>(p * dim),
                         coord.begin() + static_cast<std::ptrdiff_t>((p + 1) * dim),
                         coord.begin() + static_cast<std::ptrdiff_t>(q * dim));
    };
    for (const std::size_t freerow : free_rows) {
        for (std::size_t j = 0; j < n; ++j) {
            col[j] = j;
            reduced[j] = cost.dst_norm(j) - v[j];
            std::copy_n(cost.scaled_dst(j), dim, coord.begin() + static_cast<std::ptrdiff_t>(j * dim));
            dist[j] = cost.src_norm(freerow) + reduced[j] - cost.cross(freerow, coord.data() + j * dim);
            pred[j] = freerow;
        }
        std::size_t low = 0;  // [0, low) ready, [low, up) to scan, [up, n) todo
        std::size_t up = 0;
        std::size_t last = 0;
        std::size_t endofpath = 0;
        bool found = false;
        double min = 0.0;
        do {
            if (up == low) {
                last = low;
                min = dist[up++];
                for (std::size_t k = up; k < n; ++k) {
                    const double h = dist[k];
                    if (h <= min) {
                        if (h < min) {
                            up = low;
                            min = h;
                        }
                        swap_pos(k, up++);
                    }
                }
                for (std::size_t k = low; k < up; ++k) {
                    if (colsol[col[k]] == kNone) {
                        endofpath = col[k];
                        found = true;
                        break;
                    }
                }
            }
            if (!found) {
                const std::size_t p1 = low++;
                const std::size_t j1 = col[p1];
                const auto i = static_cast<std::size_t>(colsol[j1]);
                const double h = cost(i, j1) - v[j1] - min;
                const double base = cost.src_norm(i) - h;
                const double* u = cost.src(i);
                for (std::size_t k = up; k < n; ++k) {
                    const double v2 = base + reduced[k] - cross(u, coord.data() + k * dim);
                    if (v2 < dist[k]) {
                        const std::size_t j = col[k];
                        pred[j] = i;
                        dist[k] = v2;
                        if (v2 == min) {
                            if (colsol[j] == kNone) {
                                endofpath = j;
                                found = true;
                                break;
                            }
                            swap_pos(k, up++);
                        }
                    }
                }
            }
        } while (!found);

        // Columns finalized before the last minimum search get their duals updated.
        for (std::size_t k = 0; k < last; ++k) v[col[k]] += dist[k] - min;
        while (true) {
            const std::size_t i = pred[endofpath];
            colsol[endofpath] = static_cast<std::ptrdiff_t>(i);
            const std::ptrdiff_t next = rowsol[i];
            rowsol[i] = static_cast<std::ptrdiff_t>(endofpath);
            if (i == freerow) break;
            endofpath = static_cast<std::size_t>(next);
        }
    }
}

void lapjv(std::size_t n, const ExpandedCost& cost, std::vector<std::ptrdiff_t>& rowsol, std::vector<double>& v,
           const std::vector<double>* warm) {
    switch (cost.dim()) {
        case 1: return lapjv_impl<1>(n, cost, rowsol, v, warm);
        case 2: return lapjv_impl<2>(n, cost, rowsol, v, warm);
        case 3: return lapjv_impl<3>(n, cost, rowsol, v, warm);
        default: return lapjv_impl<0>(n, cost, rowsol, v, warm);
    }
}

constexpr std::size_t kDirectSolveSize = 1024;

// Exact assignment on scaled costs. Large instances first solve a half-size
// subproblem on a fixed pseudo-random subsample and c-transform its row duals
// into warm column prices for the full problem.
void solve_lap(const DiscreteMeasure& source, const DiscreteMeasure& target, double scale,
               std::vector<std::ptrdiff_t>& rowsol, std::vector<double>& v) {
    const std::size_t n = source.size();
    const ExpandedCost cost(source, target, scale);
    if (n <= kDirectSolveSize) {
        lapjv(n, cost, rowsol, v, nullptr);
        return;
    }
    const std::size_t m = n / 2;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(0x6d6b6465707468ull + n);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t dim = source.dim();
    std::vector<double> sub_src, sub_dst;
    sub_src.reserve(m * dim);
    sub_dst.reserve(m * dim);
    for (std::size_t k = 0; k < m; ++k) {
        const auto u = source.point(idx[k]);
        const auto y = target.point(idx[n - 1 - k]);
        sub_src.insert(sub_src.end(), u.begin(), u.end());
        sub_dst.insert(sub_dst.end(), y.begin(), y.end());
    }
    const auto coarse_src = DiscreteMeasure::uniform(dim, std::move(sub_src));
    const auto coarse_dst = DiscreteMeasure::uniform(dim, std::move(sub_dst));
    std::vector<std::ptrdiff_t> coarse_rows;
    std::vector<double> coarse_v;
    solve_lap(coarse_src, coarse_dst, scale, coarse_rows, coarse_v);

    const ExpandedCost coarse_cost(coarse_src, coarse_dst, scale);
    std::vector<double> coarse_u(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto j = static_cast<std::size_t>(coarse_rows[i]);
        coarse_u[i] = coarse_cost(i, j) - coarse_v[j];
    }
    std::vector<double> warm(n, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) {
        const auto y = target.point(j);
        const double yn = scale * squared_norm(y);
        for (std::size_t i = 0; i < m; ++i) {
            const double c = coarse_cost.src_norm(i) + yn - 2.0 * scale * dot(coarse_src.point(i), y);
            warm[j] = std::min(warm[j], c - coarse_u[i]);
        }
    }
    lapjv(n, cost, rowsol, v, &warm);
}

void require_same_dim(const DiscreteMeasure& source, const DiscreteMeasure& target) {
    if (source.empty() || target.empty()) throw Error(ErrorCode::EmptySupport, "empty measure");
    if (source.dim() != target.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "source dim " + std::to_string(source.dim()) +
                                                      " != target dim " + std::to_string(target.dim()));
    }
}

Coupling coupling_from_permutation(const DiscreteMeasure& source, const DiscreteMeasure& target,
                                   const std::vector<std::size_t>& perm) {
    Coupling c;
    c.source = source;
    c.target = target;
    c.permutation = perm;
    c.plan.reserve(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) c.plan.push_back({i, perm[i], source.weight(i)});
    c.objective = transport_cost(source, target, c.plan);
    return c;
}

}  // namespace

Coupling solve_assignment(const DiscreteMeasure& source, const DiscreteMeasure& target) {
    require_same_dim(source, target);
    if (source.size() != target.size()) {
        throw Error(ErrorCode::SizeMismatch, "assignment needs equal atom counts (" + std::to_string(source.size()) +
                                                 " vs " + std::to_string(target.size()) + ")");
    }
    if (!source.has_uniform_weights() || !target.has_uniform_weights()) {
        throw Error(ErrorCode::NonuniformWeights, "assignment needs uniform weights; use solve_discrete_ot");
    }
    const std::size_t n = source.size();

    double max_cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) max_cost = std::max(max_cost, squared_distance(source.point(i), target.point(j)));
    }
    const double scale = max_cost > 0.0 ? 1.0 / max_cost : 1.0;
    const double unscale = max_cost > 0.0 ? max_cost : 1.0;
    const ExpandedCost cost(source, target, scale);

    std::vector<std::ptrdiff_t> rowsol;
    std::vector<double> v;
    solve_lap(source, target, scale, rowsol, v);

    std::vector<std::size_t> perm(n);
    CostDuals duals;
    duals.source.resize(n);
    duals.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rowsol[i] == kNone) throw Error(ErrorCode::NumericalFailure, "assignment left a row unmatched");
        perm[i] = static_cast<std::size_t>(rowsol[i]);
    }
    for (std::size_t j = 0; j < n; ++j) duals.target[j] = v[j] * unscale;
    for (std::size_t i = 0; i < n; ++i) {
        duals.source[i] = (cost(i, perm[i]) - v[perm[i]]) * unscale;
    }

    Coupling c = coupling_from_permutation(source, target, perm);
    c.dual_value = dual_objective(source, target, duals);
    c.duals = std::move(duals);
    return c;
}

namespace {

// Transportation simplex state. Nodes 0..n-1 are sources, n..n+m-1 targets.
struct Basis {
    struct Cell {
        std::size_t i;
        std::size_t j;
        double flow;
    };
    std::vector<Cell> cells;
    std::vector<std::vector<std::size_t>> incident;  // node -> cell ids

    void add(std::size_t n, std::size_t i, std::size_t j, double flow) {
        incident[i].push_back(cells.size());
        incident[n + j].push_back(cells.size());
        cells.push_back({i, j, flow});
    }
};

}  // namespace

Coupling solve_discrete_ot(const DiscreteMeasure& source, const DiscreteMeasure& target,
                           std::optional<std::size_t> max_pivots) {
    require_same_dim(source, target);
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    const std::size_t budget = max_pivots.value_or(50 * (n + m));

    const CostMatrix raw(source, target);
    const double unscale = raw.max_entry() > 0.0 ? raw.max_entry() : 1.0;
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = raw(i, j) / unscale;
    }

    // North-west corner rule on atoms sorted by first coordinate: in one
    // dimension this is already the monotone (optimal) coupling.
    std::vector<std::size_t> row_order(n), col_order(m);
    std::iota(row_order.begin(), row_order.end(), 0);
    std::iota(col_order.begin(), col_order.end(), 0);
    std::stable_sort(row_order.begin(), row_order.end(),
                     [&](std::size_t a, std::size_t b) { return source.point(a)[0] < source.point(b)[0]; });
    std::stable_sort(col_order.begin(), col_order.end(),
                     [&](std::size_t a, std::size_t b) { return target.point(a)[0] < target.point(b)[0]; });

    Basis basis;
    basis.incident.resize(n + m);
    {
        std::vector<double> supply = source.weights();
        std::vector<double> demand = target.weights();
        std::size_t r = 0, c = 0;
        while (true) {
            const std::size_t i = row_order[r];
            const std::size_t j = col_order[c];
            const double x = std::max(0.0, std::min(supply[i], demand[j]));
            basis.add(n, i, j, x);
            supply[i] -= x;
            demand[j] -= x;
            if (r == n - 1 && c == m - 1) break;
            if (c == m - 1 || (r < n - 1 && supply[i] <= demand[j])) {
                ++r;
            } else {
                ++c;
            }
        }
    }

    std::vector<double> a(n), b(m);
    std::vector<char> seen(n + m);
    std::vector<std::size_t> parent_cell(n + m);
    std::vector<std::size_t> stack;
    auto compute_duals = [&] {
        std::fill(seen.begin(), seen.end(), 0);
        stack.assign(1, 0);
        seen[0] = 1;
        a[0] = 0.0;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t id : basis.incident[node]) {
                const auto& cell = basis.cells[id];
                const std::size_t other = node < n ? n + cell.j : cell.i;
                if (seen[other]) continue;
                seen[other] = 1;
                if (node < n) {
                    b[cell.j] = cost[cell.i * m + cell.j] - a[cell.i];
                } else {
                    a[cell.i] = cost[cell.i * m + cell.j] - b[cell.j];
                }
                stack.push_back(other);
            }
        }
    };

    const double tol = 1e-12;
    std::size_t pivots = 0;
    double min_reduced = 0.0;
    while (true) {
        compute_duals();
        min_reduced = 0.0;
        std::size_t enter_i = 0, enter_j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = cost.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) {
                const double r = row[j] - a[i] - b[j];
                if (r < min_reduced) {
                    min_reduced = r;
                    enter_i = i;
                    enter_j = j;
                }
            }
        }
        if (min_reduced >= -tol) break;
        if (pivots >= budget) {
            std::ostringstream msg;
            msg << "transportation simplex exceeded " << budget << " pivots (most negative reduced cost "
                << min_reduced * unscale << ")";
            throw Error(ErrorCode::NumericalFailure, msg.str());
        }
        ++pivots;

        // Tree path from source node enter_i to target node n + enter_j.
        std::fill(seen.begin(), seen.end(), 0);
        stack.assign(1, enter_i);
        seen[enter_i] = 1;
        const std::size_t goal = n + enter_j;
        while (!stack.empty() && !seen[goal]) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t id : basis.incident[node]) {
                const auto& cell = basis.cells[id];
                const std::size_t other = node < n ? n + cell.j : cell.i;
                if (seen[other]) continue;
                seen[other] = 1;
                parent_cell[other] = id;
                stack.push_back(other);
            }
        }
        // Walk back from the goal: cells alternate -, +, -, ... starting at the goal.
        std::vector<std::size_t> path;
        for (std::size_t node = goal; node != enter_i;) {
            const std::size_t id = parent_cell[node];
            path.push_back(id);
            const auto& cell = basis.cells[id];
            node = node == n + cell.j ? cell.i : n + cell.j;
        }
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = path.front();
        for (std::size_t k = 0; k < path.size(); k += 2) {
            if (basis.cells[path[k]].flow < theta) {
                theta = basis.cells[path[k]].flow;
                leave = path[k];
            }
        }
        for (std::size_t k = 0; k < path.size(); ++k) {
            auto& flow = basis.cells[path[k]].flow;
            flow = (k % 2 == 0) ? flow - theta : flow + theta;
        }
        // Replace the leaving cell by the entering one in place.
        auto& out = basis.cells[leave];
        auto erase_from = [&](std::size_t node) {
            auto& list = basis.incident[node];
            list.erase(std::find(list.begin(), list.end(), leave));
        };
        erase_from(out.i);
        erase_from(n + out.j);
        out = {enter_i, enter_j, theta};
        basis.incident[enter_i].push_back(leave);
        basis.incident[n + enter_j].push_back(leave);
    }

    Coupling c;
    c.source = source;
    c.target = target;
    c.iterations = pivots;
    for (const auto& cell : basis.cells) {
        if (cell.flow > 0.0) c.plan.push_back({cell.i, cell.j, cell.flow});
    }
    std::sort(c.plan.begin(), c.plan.end(), [](const PlanEntry& x, const PlanEntry& y) {
        return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    c.objective = transport_cost(source, target, c.plan);
    CostDuals duals;
    duals.source.resize(n);
    duals.target.resize(m);
    for (std::size_t i = 0; i < n; ++i) duals.source[i] = a[i] * unscale;
    for (std::size_t j = 0; j < m; ++j) duals.target[j] = b[j] * unscale;
    c.dual_value = dual_objective(source, target, duals);
    c.duals = std::move(duals);
    return c;
}

namespace {

// Flows of the basic solution supported on a spanning tree of cells, or
// nullopt when the cells do not form a spanning tree.
std::optional<std::vector<double>> tree_flows(std::size_t n, std::size_t m,
                                              const std::vector<std::pair<std::size_t, std::size_t>>& cells,
                                              const std::vector<double>& supply, const std::vector<double>& demand) {
    std::vector<std::size_t> parent(n + m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [i, j] : cells) {
        const auto ri = find(i), rj = find(n + j);
        if (ri == rj) return std::nullopt;
        parent[ri] = rj;
    }
    std::vector<double> rest(n + m);
    for (std::size_t i = 0; i < n; ++i) rest[i] = supply[i];
    for (std::size_t j = 0; j < m; ++j) rest[n + j] = demand[j];
    std::vector<std::size_t> degree(n + m, 0);
    for (auto [i, j] : cells) {
        ++degree[i];
        ++degree[n + j];
    }
    std::vector<double> flow(cells.size(), 0.0);
    std::vector<char> done(cells.size(), 0);
    for (std::size_t round = 0; round < cells.size(); ++round) {
        bool progressed = false;
        for (std::size_t e = 0; e < cells.size(); ++e) {
            if (done[e]) continue;
            const auto [i, j] = cells[e];
            std::size_t leaf;
            if (degree[i] == 1) {
                leaf = i;
            } else if (degree[n + j] == 1) {
                leaf = n + j;
            } else {
                continue;
            }
            const std::size_t other = leaf == i ? n + j : i;
            flow[e] = rest[leaf];
            rest[other] -= rest[leaf];
            rest[leaf] = 0.0;
            --degree[i];
            --degree[n + j];
            done[e] = 1;
            progressed = true;
        }
        if (!progressed) break;
    }
    return flow;
}

}  // namespace

Coupling brute_force_ot(const DiscreteMeasure& source, const DiscreteMeasure& target) {
    require_same_dim(source, target);
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    const CostMatrix cost(source, target);

    Coupling best;
    if (n == m && n <= 8 && source.has_uniform_weights() && target.has_uniform_weights()) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::size_t> best_perm = perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += source.weight(i) * cost(i, perm[i]);
            if (total < best_cost) {
                best_cost = total;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        best = coupling_from_permutation(source, target, best_perm);
    } else if (n + m <= 8) {
        const std::size_t cells_total = n * m;
        const std::size_t basis_size = n + m - 1;
        std::vector<std::pair<std::size_t, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) all.emplace_back(i, j);
        }
        // Enumerate all basis_size-subsets of cells via a selection mask.
        std::vector<char> mask(cells_total, 0);
        std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(basis_size), 1);
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            std::vector<std::pair<std::size_t, std::size_t>> cells;
            for (std::size_t k = 0; k < cells_total; ++k) {
                if (mask[k]) cells.push_back(all[k]);
            }
            auto flows = tree_flows(n, m, cells, source.weights(), target.weights());
            if (!flows) continue;
            bool feasible = true;
            double total = 0.0;
            for (std::size_t e = 0; e < cells.size(); ++e) {
                if ((*flows)[e] < -1e-14) feasible = false;
                total += std::max(0.0, (*flows)[e]) * cost(cells[e].first, cells[e].second);
            }
            if (feasible && total < best_cost) {
                best_cost = total;
                best.plan.clear();
                for (std::size_t e = 0; e < cells.size(); ++e) {
                    if ((*flows)[e] > 1e-15) best.plan.push_back({cells[e].first, cells[e].second, (*flows)[e]});
                }
            }
        } while (std::prev_permutation(mask.begin(), mask.end()));
        std::sort(best.plan.begin(), best.plan.end(), [](const PlanEntry& x, const PlanEntry& y) {
            return x.source != y.source ? x.source < y.source : x.target < y.target;
        });
        best.source = source;
        best.target = target;
        best.objective = transport_cost(source, target, best.plan);
    } else {
        throw Error(ErrorCode::InstanceTooLarge, "brute force needs n <= 8 (uniform) or n + m <= 8");
    }
    CostDuals duals = reconstruct_cost_duals(source, target, best.plan);
    best.dual_value = dual_objective(source, target, duals);
    best.duals = std::move(duals);
    return best;
}

CostDuals reconstruct_cost_duals(const DiscreteMeasure& source, const DiscreteMeasure& target,
                                 const std::vector<PlanEntry>& plan) {
    require_same_dim(source, target);
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    const CostMatrix cost(source, target);

    std::vector<std::vector<std::size_t>> support(n);
    for (const auto& e : plan) support[e.source].push_back(e.target);
    for (std::size_t i = 0; i < n; ++i) {
        if (support[i].empty()) {
            throw Error(ErrorCode::InvalidArgument, "plan leaves source atom " + std::to_string(i) + " unserved");
        }
    }
    // arc[i][k] = min over j in support(i) of c[k][j] - c[i][j]
    std::vector<double> arc(n * n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            for (std::size_t j : support[i]) arc[i * n + k] = std::min(arc[i * n + k], cost(k, j) - cost(i, j));
        }
    }
    // Bellman-Ford from source atom 0 on the complete graph.
    const double slack = 1e-15 * std::max(1.0, cost.max_entry());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) dist[k] = arc[k];
    bool changed = true;
    for (std::size_t pass = 0; pass < n && changed; ++pass) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i) continue;
                const double cand = dist[i] + arc[i * n + k];
                if (cand < dist[k] - slack) {
                    dist[k] = cand;
                    changed = true;
                }
            }
        }
    }
    if (changed) {
        throw Error(ErrorCode::NumericalFailure, "plan is not cyclically monotone (negative cycle in dual graph)");
    }
    CostDuals duals;
    duals.source = dist;
    duals.target.assign(m, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) duals.target[j] = std::min(duals.target[j], cost(i, j) - dist[i]);
    }
    return duals;
}

CouplingResiduals check_coupling(const Coupling& c) {
    CouplingResiduals r;
    std::vector<double> rows(c.source.size(), 0.0), cols(c.target.size(), 0.0);
    for (const auto& e : c.plan) {
        rows[e.source] += e.mass;
        cols[e.target] += e.mass;
        if (!(e.mass > 0.0)) r.min_positive_mass = false;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) r.row_sum = std::max(r.row_sum, std::abs(rows[i] - c.source.weight(i)));
    for (std::size_t j = 0; j < cols.size(); ++j) r.col_sum = std::max(r.col_sum, std::abs(cols[j] - c.target.weight(j)));
    r.objective = std::abs(c.objective - transport_cost(c.source, c.target, c.plan));
    r.duality_gap = std::abs(c.objective - c.dual_value);
    if (c.duals) {
        const auto& du = *c.duals;
        r.min_reduced_cost = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < c.source.size(); ++i) {
            for (std::size_t j = 0; j < c.target.size(); ++j) {
                const double red = squared_distance(c.source.point(i), c.target.point(j)) - du.source[i] - du.target[j];
                r.min_reduced_cost = std::min(r.min_reduced_cost, red);
            }
        }
        for (const auto& e : c.plan) {
            const double red = squared_distance(c.source.point(e.source), c.target.point(e.target)) -
                               du.source[e.source] - du.target[e.target];
            r.slackness = std::max(r.slackness, std::abs(red));
        }
    }
    return r;
}

}  // namespace mkdepth
