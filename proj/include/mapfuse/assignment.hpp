#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "mapfuse/common.hpp"

namespace mapfuse {

// Minimum-cost perfect assignment on a dense square matrix via shortest
// augmenting paths with dual potentials (Kuhn-Munkres family, O(n^3)).
// cost is row-major n x n. Returns row_to_col.
//
// The assignment polytope has integral vertices, so this also solves the
// linear-programming relaxation exactly.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<double>& cost,
                                                    std::size_t n) {
    require(cost.size() == n * n, "assignment: matrix size mismatch");
    if (n == 0) return {};
    const double inf = std::numeric_limits<double>::infinity();

    // 1-indexed internals; p[j] = row matched to column j, p[0] = current row
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            const double* row = cost.data() + (i0 - 1) * n;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = row[j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

// Maximum-weight perfect assignment (negated costs).
inline std::vector<std::size_t> max_weight_assignment(const std::vector<double>& weight,
                                                      std::size_t n) {
    std::vector<double> cost(weight.size());
    for (std::size_t k = 0; k < weight.size(); ++k) cost[k] = -weight[k];
    return min_cost_assignment(cost, n);
}

} // namespace mapfuse
