#pragma once

#include <cstdint>
#include <vector>

#include "tr/tensor.hpp"

namespace tr {

/** Size-balanced k-means assignment of planar points (complex values seen as
 *  (Re, Im) coordinates). Clusters are relabeled so their centroids are in
 *  lexicographic (Re, Im) order, making the result deterministic. */
struct BalancedKmeansResult {
    std::vector<std::int64_t> assignment;
    std::vector<Complex> centers;
    double objective = 0.0;
};

/** Globally optimal balanced clustering by enumeration of all partitions of
 *  the points into k groups of equal size (points.size() must be divisible by
 *  k). Intended for small instances and as the reference for tests; throws
 *  ValidationError when the enumeration would exceed an internal budget. */
BalancedKmeansResult balanced_kmeans_exhaustive(const std::vector<Complex>& points,
                                                std::int64_t k);

/** The seeded-restart heuristic behind balanced_kmeans: balanced Lloyd
 *  iterations whose assignment step is an exact linear assignment over cluster
 *  slots. Exposed so tests can compare it against the exhaustive optimum on
 *  instances small enough for both. */
BalancedKmeansResult balanced_kmeans_heuristic(const std::vector<Complex>& points,
                                               std::int64_t k, std::uint64_t seed = 0,
                                               int restarts = 10);

/** Balanced k-means: partitions points.size() = k*m points into k clusters of
 *  exactly m, minimizing the sum of squared distances to cluster centroids.
 *  Small instances are solved exactly by enumeration; larger ones run balanced
 *  Lloyd iterations with seeded restarts (see balanced_kmeans_heuristic). */
BalancedKmeansResult balanced_kmeans(const std::vector<Complex>& points, std::int64_t k,
                                     std::uint64_t seed = 0, int restarts = 10);

/** Exact square linear assignment: returns for each row the column assigned to
 *  it in a minimum-total-cost perfect matching. */
std::vector<std::int64_t> min_cost_assignment(const RealMatrix& cost);

}  // namespace tr
