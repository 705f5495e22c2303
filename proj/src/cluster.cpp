#include "tr/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "tr/errors.hpp"
#include "tr/rng.hpp"

namespace tr {

namespace {

double squared_distance(Complex a, Complex b) {
    const double dr = a.real() - b.real();
    const double di = a.imag() - b.imag();
    return dr * dr + di * di;
}

/** Centroids and objective of a given assignment; cluster sizes are assumed
 *  equal to m. */
double evaluate_assignment(const std::vector<Complex>& points,
                           const std::vector<std::int64_t>& assignment, std::int64_t k,
                           std::vector<Complex>& centers) {
    const std::int64_t m = static_cast<std::int64_t>(points.size()) / k;
    centers.assign(static_cast<std::size_t>(k), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i)
        centers[static_cast<std::size_t>(assignment[i])] += points[i];
    for (auto& c : centers) c /= static_cast<double>(m);
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        objective += squared_distance(points[i], centers[static_cast<std::size_t>(assignment[i])]);
    return objective;
}

bool lex_less(Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

/** Relabels clusters so centroids appear in lexicographic (Re, Im) order. */
void canonicalize(BalancedKmeansResult& result) {
    const std::int64_t k = static_cast<std::int64_t>(result.centers.size());
    std::vector<std::int64_t> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return lex_less(result.centers[static_cast<std::size_t>(a)],
                        result.centers[static_cast<std::size_t>(b)]);
    });
    std::vector<std::int64_t> relabel(static_cast<std::size_t>(k));
    std::vector<Complex> centers(static_cast<std::size_t>(k));
    for (std::int64_t new_label = 0; new_label < k; ++new_label) {
        relabel[static_cast<std::size_t>(order[static_cast<std::size_t>(new_label)])] = new_label;
        centers[static_cast<std::size_t>(new_label)] =
            result.centers[static_cast<std::size_t>(order[static_cast<std::size_t>(new_label)])];
    }
    for (auto& a : result.assignment) a = relabel[static_cast<std::size_t>(a)];
    result.centers = std::move(centers);
}

/** Number of ways to split n = k*m labeled points into k unlabeled groups of
 *  m, computed in floating point for budget checks. */
double partition_count(std::int64_t n, std::int64_t k) {
    const std::int64_t m = n / k;
    double count = 1.0;
    std::int64_t remaining = n;
    for (std::int64_t g = 0; g < k; ++g) {
        // choose(remaining - 1, m - 1): the lowest remaining point anchors the group.
        for (std::int64_t i = 1; i < m; ++i)
            count *= static_cast<double>(remaining - i) / static_cast<double>(i);
        remaining -= m;
        if (count > 1e12) return count;
    }
    return count;
}

struct ExhaustiveState {
    const std::vector<Complex>* points = nullptr;
    std::int64_t k = 0;
    std::int64_t m = 0;
    std::vector<std::int64_t> assignment;
    std::vector<std::int64_t> best_assignment;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<Complex> scratch_centers;
};

/** Enumerates balanced partitions in canonical order: the lowest-indexed
 *  unassigned point always anchors the next group, so each set partition is
 *  visited exactly once. */
void enumerate_partitions(ExhaustiveState& st, std::vector<std::int64_t>& unassigned,
                          std::int64_t group) {
    if (unassigned.empty()) {
        const double objective =
            evaluate_assignment(*st.points, st.assignment, st.k, st.scratch_centers);
        if (objective < st.best_objective) {
            st.best_objective = objective;
            st.best_assignment = st.assignment;
        }
        return;
    }
    const std::int64_t anchor = unassigned.front();
    st.assignment[static_cast<std::size_t>(anchor)] = group;
    std::vector<std::int64_t> pool(unassigned.begin() + 1, unassigned.end());
    const std::int64_t need = st.m - 1;
    const std::int64_t pool_size = static_cast<std::int64_t>(pool.size());
    // Iterate over combinations of `need` companions from `pool`.
    std::vector<std::int64_t> comb(static_cast<std::size_t>(need));
    std::iota(comb.begin(), comb.end(), 0);
    bool done = (need > pool_size);
    while (!done) {
        std::vector<std::int64_t> rest;
        rest.reserve(static_cast<std::size_t>(pool_size - need));
        std::size_t next_pick = 0;
        for (std::int64_t i = 0; i < pool_size; ++i) {
            if (next_pick < comb.size() && comb[next_pick] == i) {
                st.assignment[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = group;
                ++next_pick;
            } else {
                rest.push_back(pool[static_cast<std::size_t>(i)]);
            }
        }
        enumerate_partitions(st, rest, group + 1);
        // Advance the combination (standard odometer).
        std::int64_t pos = need - 1;
        while (pos >= 0 &&
               comb[static_cast<std::size_t>(pos)] == pool_size - need + pos)
            --pos;
        if (pos < 0) {
            done = true;
        } else {
            ++comb[static_cast<std::size_t>(pos)];
            for (std::int64_t q = pos + 1; q < need; ++q)
                comb[static_cast<std::size_t>(q)] = comb[static_cast<std::size_t>(q - 1)] + 1;
        }
    }
}

void check_inputs(const std::vector<Complex>& points, std::int64_t k, const char* who) {
    if (k < 1)
        throw ValidationError(std::string(who) + ": cluster count must be positive, got " +
                              std::to_string(k));
    if (points.empty() || static_cast<std::int64_t>(points.size()) % k != 0)
        throw ValidationError(std::string(who) + ": point count " +
                              std::to_string(points.size()) + " is not a positive multiple of " +
                              std::to_string(k));
}

BalancedKmeansResult lloyd_balanced(const std::vector<Complex>& points, std::int64_t k,
                                    std::uint64_t seed, int restarts) {
    const std::int64_t n = static_cast<std::int64_t>(points.size());
    const std::int64_t m = n / k;
    BalancedKmeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < std::max(restarts, 1); ++restart) {
        Rng rng(seed, "balanced_kmeans", static_cast<std::uint64_t>(restart));
        // Initial centers: k distinct points, drawn by partial shuffle.
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        for (std::int64_t i = 0; i < k; ++i) {
            const std::int64_t j = rng.uniform_int(i, n - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        std::vector<Complex> centers(static_cast<std::size_t>(k));
        for (std::int64_t c = 0; c < k; ++c)
            centers[static_cast<std::size_t>(c)] = points[static_cast<std::size_t>(pool[static_cast<std::size_t>(c)])];

        std::vector<std::int64_t> assignment(static_cast<std::size_t>(n), -1);
        RealMatrix cost(n, n);
        for (int iter = 0; iter < 100; ++iter) {
            // Balanced assignment: each cluster contributes m identical slots.
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t slot = 0; slot < n; ++slot)
                    cost(i, slot) = squared_distance(points[static_cast<std::size_t>(i)],
                                                     centers[static_cast<std::size_t>(slot / m)]);
            const std::vector<std::int64_t> matched = min_cost_assignment(cost);
            std::vector<std::int64_t> next(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = matched[static_cast<std::size_t>(i)] / m;
            const bool stable = (next == assignment);
            assignment = std::move(next);
            std::vector<Complex> new_centers;
            evaluate_assignment(points, assignment, k, new_centers);
            centers = std::move(new_centers);
            if (stable) break;
        }
        // Pairwise exchange refinement: the matching step is optimal for the
        // current centers, but the coupled centers/assignment problem can
        // stall where swapping two points across clusters lowers the
        // objective once the centroids move with them.
        std::vector<Complex> scratch;
        double objective = evaluate_assignment(points, assignment, k, scratch);
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::int64_t i = 0; i < n; ++i) {
                for (std::int64_t j = i + 1; j < n; ++j) {
                    auto& ai = assignment[static_cast<std::size_t>(i)];
                    auto& aj = assignment[static_cast<std::size_t>(j)];
                    if (ai == aj) continue;
                    std::swap(ai, aj);
                    const double trial = evaluate_assignment(points, assignment, k, scratch);
                    if (trial < objective - 1e-12 * (1.0 + objective)) {
                        objective = trial;
                        improved = true;
                    } else {
                        std::swap(ai, aj);
                    }
                }
            }
        }
        std::vector<Complex> final_centers;
        objective = evaluate_assignment(points, assignment, k, final_centers);
        if (objective < best.objective) {
            best.objective = objective;
            best.assignment = assignment;
            best.centers = std::move(final_centers);
        }
    }
    canonicalize(best);
    return best;
}

}  // namespace

BalancedKmeansResult balanced_kmeans_exhaustive(const std::vector<Complex>& points,
                                                std::int64_t k) {
    check_inputs(points, k, "balanced_kmeans_exhaustive");
    const std::int64_t n = static_cast<std::int64_t>(points.size());
    if (partition_count(n, k) > 1e7)
        throw ValidationError(
            "balanced_kmeans_exhaustive: enumeration budget exceeded for " + std::to_string(n) +
            " points in " + std::to_string(k) + " groups");
    ExhaustiveState st;
    st.points = &points;
    st.k = k;
    st.m = n / k;
    st.assignment.assign(static_cast<std::size_t>(n), -1);
    std::vector<std::int64_t> unassigned(static_cast<std::size_t>(n));
    std::iota(unassigned.begin(), unassigned.end(), 0);
    enumerate_partitions(st, unassigned, 0);
    BalancedKmeansResult result;
    result.assignment = st.best_assignment;
    result.objective = evaluate_assignment(points, result.assignment, k, result.centers);
    canonicalize(result);
    return result;
}

BalancedKmeansResult balanced_kmeans_heuristic(const std::vector<Complex>& points,
                                               std::int64_t k, std::uint64_t seed,
                                               int restarts) {
    check_inputs(points, k, "balanced_kmeans_heuristic");
    return lloyd_balanced(points, k, seed, restarts);
}

BalancedKmeansResult balanced_kmeans(const std::vector<Complex>& points, std::int64_t k,
                                     std::uint64_t seed, int restarts) {
    check_inputs(points, k, "balanced_kmeans");
    const std::int64_t n = static_cast<std::int64_t>(points.size());
    if (partition_count(n, k) <= 20000.0) return balanced_kmeans_exhaustive(points, k);
    return lloyd_balanced(points, k, seed, restarts);
}

std::vector<std::int64_t> min_cost_assignment(const RealMatrix& cost) {
    if (cost.rows() != cost.cols() || cost.rows() == 0)
        throw ValidationError("min_cost_assignment: cost matrix must be square and non-empty");
    const std::int64_t n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    // Shortest-augmenting-path assignment with dual potentials (1-based arrays).
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<std::int64_t> match(static_cast<std::size_t>(n + 1), 0);
    std::vector<std::int64_t> way(static_cast<std::size_t>(n + 1), 0);
    for (std::int64_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::int64_t j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const std::int64_t i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            std::int64_t j1 = 0;
            for (std::int64_t j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (std::int64_t j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const std::int64_t j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::int64_t> row_to_col(static_cast<std::size_t>(n), -1);
    for (std::int64_t j = 1; j <= n; ++j)
        if (match[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

}  // namespace tr
