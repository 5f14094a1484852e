#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/linalg.hpp"
#include "explika/parallel.hpp"
#include "explika/rng.hpp"
#include "explika/table.hpp"

namespace explika {

struct FeatureScore {
    std::vector<double> scores; // aligned to columns
    std::string method;
};

struct FeatureSubset {
    std::vector<std::size_t> indices; // strictly increasing
    std::vector<std::string> provenance;
};

struct RandomizedLassoParams {
    double alpha = 0.004;
    double weakness = 0.5;
    std::size_t n_resamples = 200;
    double subsample_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(alpha > 0.0)) throw config_error("randomized_lasso: alpha must be positive");
        if (!(weakness > 0.0 && weakness <= 1.0))
            throw config_error("randomized_lasso: weakness must be in (0,1]");
        if (n_resamples < 1) throw config_error("randomized_lasso: need at least one resample");
        if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
            throw config_error("randomized_lasso: subsample_fraction must be in (0,1]");
    }
};

// ---------------------------------------------------------------------------
// Extremely randomized trees importance (regression)
// ---------------------------------------------------------------------------

namespace detail {

struct ExtraTreeScratch {
    std::vector<std::size_t> node;
    std::vector<double>* importance = nullptr;
};

// One uniform-random threshold per candidate feature, sqrt(n) candidates per
// node, full sample (no bootstrap). Importance accumulates the variance
// decrease of each split; callers normalize.
inline void grow_extra_tree(const Matrix& X, const std::vector<double>& y,
                            std::vector<std::size_t>& node, Rng& rng, std::size_t mtry,
                            std::vector<double>& importance) {
    const std::size_t s = node.size();
    if (s < 2) return;
    bool pure = true;
    for (const std::size_t i : node) {
        if (y[i] != y[node.front()]) {
            pure = false;
            break;
        }
    }
    if (pure) return;

    auto feats = sample_without_replacement(rng, X.cols(), mtry);
    std::sort(feats.begin(), feats.end());

    bool found = false;
    std::size_t best_f = 0;
    double best_thr = 0.0;
    double best_decrease = 0.0;

    double sum = 0.0, sumsq = 0.0;
    for (const std::size_t i : node) {
        sum += y[i];
        sumsq += y[i] * y[i];
    }
    const double sse_parent = sumsq - sum * sum / static_cast<double>(s);

    for (const std::size_t f : feats) {
        double lo = X(node.front(), f), hi = lo;
        for (const std::size_t i : node) {
            const double v = X(i, f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) continue;
        const double thr = uniform_real(rng, lo, hi);

        double lsum = 0.0, lsumsq = 0.0;
        std::size_t ln = 0;
        for (const std::size_t i : node) {
            if (X(i, f) <= thr) {
                lsum += y[i];
                lsumsq += y[i] * y[i];
                ++ln;
            }
        }
        const std::size_t rn = s - ln;
        assert(ln > 0 && rn > 0);
        const double sse_l = lsumsq - lsum * lsum / static_cast<double>(ln);
        const double rsum = sum - lsum;
        const double sse_r = (sumsq - lsumsq) - rsum * rsum / static_cast<double>(rn);
        const double decrease = sse_parent - sse_l - sse_r;
        if (!found || decrease > best_decrease) {
            found = true;
            best_f = f;
            best_thr = thr;
            best_decrease = decrease;
        }
    }
    if (!found) return;

    importance[best_f] += std::max(0.0, best_decrease);

    std::vector<std::size_t> left, right;
    for (const std::size_t i : node) {
        (X(i, best_f) <= best_thr ? left : right).push_back(i);
    }
    node.clear();
    node.shrink_to_fit();
    grow_extra_tree(X, y, left, rng, mtry, importance);
    grow_extra_tree(X, y, right, rng, mtry, importance);
}

} // namespace detail

// Feature importance from an extra-trees regressor ensemble: mean across
// trees of the variance decrease attributed to each feature, normalized to
// sum 1.
inline FeatureScore forest_importance(const Matrix& X, const std::vector<double>& y,
                                      std::size_t n_trees = 500, std::uint64_t seed = 0) {
    if (n_trees < 1) throw config_error("forest_importance: need at least one tree");
    if (X.rows() < 2 || X.rows() != y.size()) throw data_error("forest_importance: shape mismatch");
    bool constant = true;
    for (const double v : y) {
        if (v != y.front()) {
            constant = false;
            break;
        }
    }
    if (constant) throw data_error("forest_importance: constant target has no impurity to reduce");

    const std::size_t mtry =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(X.cols()))));

    std::vector<std::vector<double>> per_tree(n_trees);
    parallel_for(n_trees, [&](std::size_t ti) {
        Rng rng = make_rng(seed, ti);
        std::vector<double> imp(X.cols(), 0.0);
        std::vector<std::size_t> node(X.rows());
        std::iota(node.begin(), node.end(), std::size_t{0});
        detail::grow_extra_tree(X, y, node, rng, mtry, imp);
        per_tree[ti] = std::move(imp);
    });

    FeatureScore out;
    out.method = "extra_trees_importance";
    out.scores.assign(X.cols(), 0.0);
    for (const auto& imp : per_tree)
        for (std::size_t j = 0; j < X.cols(); ++j) out.scores[j] += imp[j];
    double total = 0.0;
    for (const double v : out.scores) total += v;
    if (total <= 0.0)
        throw numeric_error("forest_importance: no split reduced impurity");
    for (auto& v : out.scores) v /= total;
    return out;
}

// ---------------------------------------------------------------------------
// Randomized lasso (stability selection)
// ---------------------------------------------------------------------------

namespace detail {

inline double soft_threshold_value(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Cyclic coordinate descent for (1/(2m))||y - X b||^2 + alpha*||b||_1 on
// column-major data; columns may carry unequal norms (the randomized
// reweighting). Returns the 0/1 support at |b| > 1e-10.
inline std::vector<std::uint8_t> lasso_cd_support(const std::vector<double>& cols, std::size_t m,
                                                  std::size_t n, const std::vector<double>& y,
                                                  double alpha, double tol = 1e-6,
                                                  std::size_t max_sweeps = 10000) {
    std::vector<double> beta(n, 0.0);
    std::vector<double> resid = y;
    std::vector<double> sqnorm(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* col = cols.data() + j * m;
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += col[i] * col[i];
        sqnorm[j] = s;
    }
    const double inv_m = 1.0 / static_cast<double>(m);

#ifndef NDEBUG
    auto objective = [&] {
        double rs = 0.0;
        for (const double r : resid) rs += r * r;
        double l1 = 0.0;
        for (const double b : beta) l1 += std::abs(b);
        return 0.5 * rs * inv_m + alpha * l1;
    };
    double prev_obj = objective();
#endif

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (sqnorm[j] <= 0.0) continue;
            const double* col = cols.data() + j * m;
            double rho = 0.0;
            for (std::size_t i = 0; i < m; ++i) rho += col[i] * resid[i];
            rho = rho * inv_m + beta[j] * sqnorm[j] * inv_m;
            const double b_new = soft_threshold_value(rho, alpha) / (sqnorm[j] * inv_m);
            const double delta = beta[j] - b_new;
            if (delta != 0.0) {
                for (std::size_t i = 0; i < m; ++i) resid[i] += col[i] * delta;
                beta[j] = b_new;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
#ifndef NDEBUG
        const double obj = objective();
        assert(obj <= prev_obj + 1e-10 * (1.0 + std::abs(prev_obj)));
        prev_obj = obj;
#endif
        if (max_delta < tol) break;
    }

    std::vector<std::uint8_t> support(n, 0);
    for (std::size_t j = 0; j < n; ++j) support[j] = std::abs(beta[j]) > 1e-10 ? 1 : 0;
    return support;
}

} // namespace detail

// Stability selection: repeated lasso fits on row subsamples with columns
// randomly down-weighted into [weakness, 1]; a feature's score is its
// selection frequency across resamples.
inline FeatureScore randomized_lasso(const Matrix& X, const std::vector<double>& y,
                                     const RandomizedLassoParams& p) {
    p.validate();
    if (X.rows() < 4 || X.rows() != y.size())
        throw data_error("randomized_lasso: need at least 4 rows");

    const std::size_t n = X.cols();
    const std::size_t sub =
        static_cast<std::size_t>(std::ceil(p.subsample_fraction * static_cast<double>(X.rows())));

    std::vector<std::vector<std::uint8_t>> supports(p.n_resamples);
    parallel_for(p.n_resamples, [&](std::size_t r) {
        Rng rng = make_rng(p.seed, r);
        auto rows = sample_without_replacement(rng, X.rows(), sub);
        const std::size_t m = rows.size();

        // Standardize the subsample, then scale each column by its random
        // weakness factor. Constant columns stay zero and are never selected.
        std::vector<double> cols(m * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double* col = cols.data() + j * m;
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += X(rows[i], j);
            const double mean = sum / static_cast<double>(m);
            double ss = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = X(rows[i], j) - mean;
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(m));
            const double w = uniform_real(rng, p.weakness, 1.0);
            if (sd > 0.0) {
                const double scale = w / sd;
                for (std::size_t i = 0; i < m; ++i) col[i] = (X(rows[i], j) - mean) * scale;
            }
        }
        std::vector<double> yc(m);
        double ymean = 0.0;
        for (std::size_t i = 0; i < m; ++i) ymean += y[rows[i]];
        ymean /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) yc[i] = y[rows[i]] - ymean;

        supports[r] = detail::lasso_cd_support(cols, m, n, yc, p.alpha);
    });

    FeatureScore out;
    out.method = "randomized_lasso(alpha=" + format_g9(p.alpha) + ")";
    out.scores.assign(n, 0.0);
    for (const auto& s : supports)
        for (std::size_t j = 0; j < n; ++j) out.scores[j] += s[j];
    for (auto& v : out.scores) v /= static_cast<double>(p.n_resamples);
    return out;
}

// ---------------------------------------------------------------------------
// Ranking and intersection
// ---------------------------------------------------------------------------

// Indices of the k highest scores; ties break toward the lower index and the
// result is sorted ascending.
inline FeatureSubset top_k(const FeatureScore& s, std::size_t k = 500) {
    if (k < 1) throw config_error("top_k: k must be at least 1");
    std::vector<std::size_t> order(s.scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s.scores[a] != s.scores[b]) return s.scores[a] > s.scores[b];
        return a < b;
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    FeatureSubset out;
    out.indices = std::move(order);
    out.provenance = {s.method};
    return out;
}

inline FeatureSubset intersect(const std::vector<FeatureSubset>& subsets) {
    if (subsets.empty()) throw config_error("intersect: need at least one subset");
    FeatureSubset out;
    out.indices = subsets.front().indices;
    for (std::size_t s = 1; s < subsets.size(); ++s) {
        std::vector<std::size_t> merged;
        std::set_intersection(out.indices.begin(), out.indices.end(), subsets[s].indices.begin(),
                              subsets[s].indices.end(), std::back_inserter(merged));
        out.indices = std::move(merged);
    }
    for (const auto& s : subsets) {
        for (const auto& tag : s.provenance) {
            if (std::find(out.provenance.begin(), out.provenance.end(), tag) == out.provenance.end())
                out.provenance.push_back(tag);
        }
    }
    if (out.indices.empty())
        throw data_error("intersect: empty intersection; enlarge top_k to keep more features");
    return out;
}

inline std::string feature_subset_to_json(const FeatureSubset& s) {
    JsonWriter w;
    w.begin_object();
    w.number_array("indices", s.indices.begin(), s.indices.end());
    w.key("provenance");
    w.begin_array();
    for (const auto& p : s.provenance) w.value(p);
    w.end_array();
    w.end_object();
    return w.take();
}

// ---------------------------------------------------------------------------
// Full three-way selection
// ---------------------------------------------------------------------------

struct SelectConfig {
    std::size_t n_trees = 500;
    std::array<double, 2> alphas{0.004, 0.000004};
    std::size_t top_k = 500;
    double weakness = 0.5;
    std::size_t n_resamples = 200;
    double subsample_fraction = 0.5;
    std::uint64_t seed = 0;
};

struct SelectOutput {
    FeatureSubset subset;
    FeatureScore importance;
    FeatureScore lasso_scores[2];
};

// Tree-ensemble importance plus randomized lasso at two penalties, top-k of
// each, three-way intersection.
inline SelectOutput select_pipeline_full(const Table& t, const std::vector<double>& y,
                                         const SelectConfig& cfg) {
    if (!t.fully_observed())
        throw data_error("select_pipeline: table must be imputed (no missing cells)");
    if (t.rows() != y.size()) throw data_error("select_pipeline: target length mismatch");
    const Matrix X = to_matrix(t);

    SelectOutput out;
    out.importance = forest_importance(X, y, cfg.n_trees, derive_seed(cfg.seed, 1));
    for (std::size_t a = 0; a < 2; ++a) {
        RandomizedLassoParams p;
        p.alpha = cfg.alphas[a];
        p.weakness = cfg.weakness;
        p.n_resamples = cfg.n_resamples;
        p.subsample_fraction = cfg.subsample_fraction;
        p.seed = derive_seed(cfg.seed, 2 + a);
        out.lasso_scores[a] = randomized_lasso(X, y, p);
    }
    out.subset = intersect({top_k(out.importance, cfg.top_k), top_k(out.lasso_scores[0], cfg.top_k),
                            top_k(out.lasso_scores[1], cfg.top_k)});
    return out;
}

inline FeatureSubset select_pipeline(const Table& t, const std::vector<double>& y,
                                     const SelectConfig& cfg) {
    return select_pipeline_full(t, y, cfg).subset;
}

} // namespace explika
