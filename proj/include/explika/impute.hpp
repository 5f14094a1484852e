#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "explika/errors.hpp"
#include "explika/parallel.hpp"
#include "explika/table.hpp"

namespace explika {

enum class WeightScheme { uniform, inverse_distance };

struct ImputeParams {
    std::size_t k = 100;
    WeightScheme weight_scheme = WeightScheme::inverse_distance;
    bool standardize = true;
};

namespace detail {

// Row-to-row distance: root mean squared deviation over columns observed in
// both rows. Normalizing by the shared-column count keeps rows with different
// missingness patterns comparable.
struct RowDistance {
    double value = 0.0;
    std::size_t shared = 0;
};

} // namespace detail

// Fills every missing cell from the k nearest donor rows, KNNimpute style.
// Distances are computed on standardized columns when p.standardize is set;
// the imputed value is a weighted mean of the donors' raw column values, so
// observed cells and imputed values stay in original units.
inline Table knn_impute(const Table& t, const ImputeParams& p = {}) {
    if (p.k < 1) throw config_error("knn_impute: k must be at least 1");
    const std::size_t m = t.rows();
    const std::size_t n = t.cols();

    for (std::size_t r = 0; r < m; ++r) {
        bool any = false;
        for (std::size_t c = 0; c < n && !any; ++c) any = t.observed(r, c);
        if (!any) throw data_error("knn_impute: row " + std::to_string(r) + " has no observed cells");
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (t.observed_count(c) == 0)
            throw data_error("knn_impute: column " + std::to_string(c) + " has no observed cells");
    }

    // Column standardization for the distance metric only. Zero-deviation
    // columns contribute 0 to distances. Observed values are summed in sorted
    // order so the statistics do not depend on row order (permutation
    // equivariance must hold bit-for-bit).
    std::vector<double> mean(n, 0.0), inv_sd(n, 0.0);
    if (p.standardize) {
        std::vector<double> observed;
        for (std::size_t c = 0; c < n; ++c) {
            const auto vals = t.column_values(c);
            const auto mask = t.column_mask(c);
            observed.clear();
            for (std::size_t r = 0; r < m; ++r) {
                if (mask[r]) observed.push_back(vals[r]);
            }
            std::sort(observed.begin(), observed.end());
            double sum = 0.0;
            for (const double v : observed) sum += v;
            mean[c] = sum / static_cast<double>(observed.size());
            double ss = 0.0;
            for (const double v : observed) {
                const double d = v - mean[c];
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(observed.size()));
            inv_sd[c] = sd > 0.0 ? 1.0 / sd : 0.0;
        }
    } else {
        for (std::size_t c = 0; c < n; ++c) inv_sd[c] = 1.0;
    }

    std::vector<std::size_t> rows_with_missing;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (!t.observed(r, c)) {
                rows_with_missing.push_back(r);
                break;
            }
        }
    }

    Table out = t;
    // Missing cells in distinct rows are independent units; results land in
    // per-cell slots, so any schedule produces identical output.
    parallel_for(rows_with_missing.size(), [&](std::size_t unit) {
        const std::size_t i = rows_with_missing[unit];

        // Distances from row i to every other row, shared columns counted.
        std::vector<detail::RowDistance> dist(m);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == i) continue;
            double ss = 0.0;
            std::size_t shared = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (t.observed(i, c) && t.observed(r, c)) {
                    const double d = (t.value(i, c) - t.value(r, c)) * inv_sd[c];
                    ss += d * d;
                    ++shared;
                }
            }
            dist[r].shared = shared;
            dist[r].value = shared > 0 ? std::sqrt(ss / static_cast<double>(shared)) : 0.0;
        }

        for (std::size_t j = 0; j < n; ++j) {
            if (t.observed(i, j)) continue;

            std::vector<std::size_t> candidates;
            for (std::size_t r = 0; r < m; ++r) {
                if (r != i && t.observed(r, j) && dist[r].shared > 0) candidates.push_back(r);
            }
            if (candidates.empty())
                throw data_error("knn_impute: no donor candidates for cell (" + std::to_string(i) +
                                 "," + std::to_string(j) + ")");

            // Rank k ties break on lower row index.
            const std::size_t k = std::min(p.k, candidates.size());
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                              candidates.end(), [&](std::size_t a, std::size_t b) {
                                  if (dist[a].value != dist[b].value) return dist[a].value < dist[b].value;
                                  return a < b;
                              });

            double wsum = 0.0, vsum = 0.0;
            for (std::size_t s = 0; s < k; ++s) {
                const std::size_t r = candidates[s];
                const double w = p.weight_scheme == WeightScheme::uniform
                                     ? 1.0
                                     : 1.0 / (dist[r].value + 1e-8);
                wsum += w;
                vsum += w * t.value(r, j);
            }
            out.set(i, j, vsum / wsum);
        }
    });
    return out;
}

} // namespace explika
