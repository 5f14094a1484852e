#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/linalg.hpp"
#include "explika/parallel.hpp"
#include "explika/rng.hpp"

namespace explika {

// ---------------------------------------------------------------------------
// Trees and forests
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;              // regression mean at the node
    std::array<std::int64_t, 2> counts{}; // class counts (classification)
};

struct Tree {
    std::vector<TreeNode> nodes; // node 0 is the root

    bool empty() const { return nodes.empty(); }
};

enum class Task { regression, classification };

struct Forest {
    Task task = Task::regression;
    std::size_t n_features = 0;
    std::vector<Tree> trees;
};

namespace detail {

// Exact comparison of two weighted-Gini split qualities. For binary counts the
// quality of a split is Q = (l0^2+l1^2)/nl + (r0^2+r1^2)/nr; cross-multiplying
// the rationals keeps ties exact, so the greedy choice never depends on
// floating-point rounding.
struct GiniQuality {
    unsigned __int128 num = 0;
    std::uint64_t den = 1;

    static GiniQuality from_counts(std::int64_t l0, std::int64_t l1, std::int64_t r0, std::int64_t r1) {
        const std::uint64_t nl = static_cast<std::uint64_t>(l0 + l1);
        const std::uint64_t nr = static_cast<std::uint64_t>(r0 + r1);
        GiniQuality q;
        q.num = static_cast<unsigned __int128>(l0 * l0 + l1 * l1) * nr +
                static_cast<unsigned __int128>(r0 * r0 + r1 * r1) * nl;
        q.den = nl * nr;
        return q;
    }

    bool better_than(const GiniQuality& other) const {
        return num * other.den > other.num * den;
    }
};

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
};

// Best CART split over the given candidate features (ascending order fixes
// the documented tie-break: lower feature index, then lower threshold).
// Thresholds sit at midpoints of consecutive distinct sorted values.
inline SplitChoice best_classification_split(const Matrix& X, const std::vector<int>& y,
                                             const std::vector<std::size_t>& node,
                                             const std::vector<std::size_t>& features) {
    SplitChoice best;
    GiniQuality best_q;
    std::vector<std::pair<double, int>> vals;
    vals.reserve(node.size());
    for (const std::size_t f : features) {
        vals.clear();
        for (const std::size_t i : node) vals.emplace_back(X(i, f), y[i]);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;

        std::int64_t t0 = 0, t1 = 0;
        for (const auto& [v, c] : vals) (c ? t1 : t0)++;

        std::int64_t l0 = 0, l1 = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            (vals[i].second ? l1 : l0)++;
            if (vals[i].first == vals[i + 1].first) continue;
            const GiniQuality q = GiniQuality::from_counts(l0, l1, t0 - l0, t1 - l1);
            if (!best.found || q.better_than(best_q)) {
                best.found = true;
                best.feature = f;
                best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                best_q = q;
            }
        }
    }
    return best;
}

// Regression split minimizing total child SSE, equivalently maximizing
// sum_l^2/n_l + sum_r^2/n_r.
inline SplitChoice best_regression_split(const Matrix& X, const std::vector<double>& y,
                                         const std::vector<std::size_t>& node,
                                         const std::vector<std::size_t>& features) {
    SplitChoice best;
    double best_score = 0.0;
    std::vector<std::pair<double, double>> vals;
    vals.reserve(node.size());
    for (const std::size_t f : features) {
        vals.clear();
        for (const std::size_t i : node) vals.emplace_back(X(i, f), y[i]);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;

        double total = 0.0;
        for (const auto& [v, t] : vals) total += t;

        double lsum = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            lsum += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = static_cast<double>(vals.size() - i - 1);
            const double rsum = total - lsum;
            const double score = lsum * lsum / nl + rsum * rsum / nr;
            if (!best.found || score > best_score) {
                best.found = true;
                best.feature = f;
                best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                best_score = score;
            }
        }
    }
    return best;
}

struct GrowSettings {
    Task task = Task::classification;
    std::size_t max_depth = 0;    // 0 = unlimited
    std::size_t n_candidates = 0; // 0 = all features
};

inline std::vector<std::size_t> candidate_features(std::size_t n_features, const GrowSettings& gs,
                                                   Rng* rng) {
    std::vector<std::size_t> feats;
    if (gs.n_candidates == 0 || gs.n_candidates >= n_features) {
        feats.resize(n_features);
        for (std::size_t f = 0; f < n_features; ++f) feats[f] = f;
    } else {
        feats = sample_without_replacement(*rng, n_features, gs.n_candidates);
        std::sort(feats.begin(), feats.end());
    }
    return feats;
}

inline int grow_tree(Tree& tree, const Matrix& X, const std::vector<int>& y01,
                     const std::vector<double>& yreg, const std::vector<std::size_t>& node,
                     std::size_t depth, const GrowSettings& gs, Rng* rng) {
    TreeNode tn;
    bool pure;
    if (gs.task == Task::classification) {
        std::int64_t c0 = 0, c1 = 0;
        for (const std::size_t i : node) (y01[i] ? c1 : c0)++;
        tn.counts = {c0, c1};
        tn.prediction = c1 >= c0 ? 1.0 : 0.0;
        pure = c0 == 0 || c1 == 0;
    } else {
        double sum = 0.0;
        for (const std::size_t i : node) sum += yreg[i];
        tn.prediction = sum / static_cast<double>(node.size());
        pure = true;
        for (const std::size_t i : node) {
            if (yreg[i] != yreg[node.front()]) {
                pure = false;
                break;
            }
        }
    }

    const bool depth_capped = gs.max_depth > 0 && depth >= gs.max_depth;
    if (!pure && node.size() >= 2 && !depth_capped) {
        const auto feats = candidate_features(X.cols(), gs, rng);
        const SplitChoice split = gs.task == Task::classification
                                      ? best_classification_split(X, y01, node, feats)
                                      : best_regression_split(X, yreg, node, feats);
        if (split.found) {
            std::vector<std::size_t> left, right;
            for (const std::size_t i : node) {
                (X(i, split.feature) <= split.threshold ? left : right).push_back(i);
            }
            assert(!left.empty() && !right.empty());
            tn.feature = static_cast<int>(split.feature);
            tn.threshold = split.threshold;
            const int id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(tn);
            tree.nodes[id].left = grow_tree(tree, X, y01, yreg, left, depth + 1, gs, rng);
            tree.nodes[id].right = grow_tree(tree, X, y01, yreg, right, depth + 1, gs, rng);
            return id;
        }
    }

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(tn);
    return id;
}

} // namespace detail

inline const TreeNode& route_to_leaf(const Tree& tree, std::span<const double> x) {
    const TreeNode* node = &tree.nodes.at(0);
    while (node->feature >= 0) {
        const std::size_t next = x[static_cast<std::size_t>(node->feature)] <= node->threshold
                                     ? static_cast<std::size_t>(node->left)
                                     : static_cast<std::size_t>(node->right);
        node = &tree.nodes[next];
    }
    return *node;
}

// Greedy Gini CART on all features. max_depth = 0 grows to purity.
inline Tree fit_cart(const Matrix& X, const std::vector<int>& y01, std::size_t max_depth = 0) {
    if (X.rows() == 0 || X.rows() != y01.size()) throw data_error("fit_cart: shape mismatch");
    bool has0 = false, has1 = false;
    for (const int v : y01) {
        if (v != 0 && v != 1) throw data_error("fit_cart: targets must be 0/1");
        (v ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw data_error("fit_cart: both classes must be present");

    std::vector<std::size_t> all(X.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Tree tree;
    detail::GrowSettings gs;
    gs.task = Task::classification;
    gs.max_depth = max_depth;
    detail::grow_tree(tree, X, y01, {}, all, 0, gs, nullptr);
    return tree;
}

// Bagged CART forest: bootstrap per tree, sqrt(n) feature candidates per
// split, grown to purity. Per-tree seeds come from (seed, tree index), so
// parallel and serial training agree exactly.
inline Forest fit_forest(const Matrix& X, const std::vector<double>& yreg,
                         const std::vector<int>& y01, Task task, std::size_t n_trees = 500,
                         std::uint64_t seed = 0) {
    if (n_trees < 1) throw config_error("fit_forest: need at least one tree");
    if (X.rows() < 2) throw data_error("fit_forest: need at least 2 rows");
    if (task == Task::classification) {
        if (y01.size() != X.rows()) throw data_error("fit_forest: target length mismatch");
        bool has0 = false, has1 = false;
        for (const int v : y01) {
            if (v != 0 && v != 1) throw data_error("fit_forest: classification targets must be 0/1");
            (v ? has1 : has0) = true;
        }
        if (!has0 || !has1) throw data_error("fit_forest: both classes must be present");
    } else if (yreg.size() != X.rows()) {
        throw data_error("fit_forest: target length mismatch");
    }

    Forest forest;
    forest.task = task;
    forest.n_features = X.cols();
    forest.trees.resize(n_trees);

    const std::size_t mtry =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(X.cols()))));

    parallel_for(n_trees, [&](std::size_t ti) {
        Rng rng = make_rng(seed, ti);
        std::vector<std::size_t> sample(X.rows());
        for (auto& s : sample) s = static_cast<std::size_t>(uniform_index(rng, X.rows()));
        detail::GrowSettings gs;
        gs.task = task;
        gs.n_candidates = mtry;
        Tree tree;
        detail::grow_tree(tree, X, y01, yreg, sample, 0, gs, &rng);
        forest.trees[ti] = std::move(tree);
    });
    return forest;
}

inline Forest fit_forest_regression(const Matrix& X, const std::vector<double>& y,
                                    std::size_t n_trees = 500, std::uint64_t seed = 0) {
    return fit_forest(X, y, {}, Task::regression, n_trees, seed);
}

inline Forest fit_forest_classifier(const Matrix& X, const std::vector<int>& y01,
                                    std::size_t n_trees = 500, std::uint64_t seed = 0) {
    return fit_forest(X, {}, y01, Task::classification, n_trees, seed);
}

inline double predict_regression(const Forest& f, std::span<const double> x) {
    if (f.task != Task::regression) throw data_error("predict_regression: forest is a classifier");
    if (x.size() != f.n_features) throw data_error("predict_regression: feature dimension mismatch");
    double sum = 0.0;
    for (const auto& tree : f.trees) sum += route_to_leaf(tree, x).prediction;
    return sum / static_cast<double>(f.trees.size());
}

// Mean over trees of leaf class-frequency vectors.
inline std::array<double, 2> predict_proba(const Forest& f, std::span<const double> x) {
    if (f.task != Task::classification) throw data_error("predict_proba: forest is not a classifier");
    if (x.size() != f.n_features) throw data_error("predict_proba: feature dimension mismatch");
    double p1 = 0.0;
    for (const auto& tree : f.trees) {
        const TreeNode& leaf = route_to_leaf(tree, x);
        const double total = static_cast<double>(leaf.counts[0] + leaf.counts[1]);
        p1 += total > 0.0 ? static_cast<double>(leaf.counts[1]) / total : 0.5;
    }
    p1 /= static_cast<double>(f.trees.size());
    return {1.0 - p1, p1};
}

// ---------------------------------------------------------------------------
// DOT export (CART visualization: majority class colors the node, intensity
// tracks certainty)
// ---------------------------------------------------------------------------

namespace detail {
inline std::string blend_hex(const std::array<int, 3>& base, double intensity) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(255.0 + intensity * (base[0] - 255.0))),
                  static_cast<int>(std::lround(255.0 + intensity * (base[1] - 255.0))),
                  static_cast<int>(std::lround(255.0 + intensity * (base[2] - 255.0))));
    return buf;
}

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}
} // namespace detail

inline std::string export_dot(const Tree& tree, const std::vector<std::string>& column_names) {
    static constexpr std::array<int, 3> kBlue{31, 119, 180};    // majority Top
    static constexpr std::array<int, 3> kOrange{255, 127, 14};  // majority Low
    std::string out = "digraph cart {\n  node [shape=box, style=filled];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        std::string label;
        if (n.feature >= 0) {
            const auto f = static_cast<std::size_t>(n.feature);
            const std::string name =
                f < column_names.size() ? column_names[f] : "f" + std::to_string(f);
            label = detail::dot_escape(name) + " <= " + format_g9(n.threshold) + "\\n";
        }
        label += "counts = [" + std::to_string(n.counts[0]) + ", " + std::to_string(n.counts[1]) + "]";
        const double total = static_cast<double>(n.counts[0] + n.counts[1]);
        const double p1 = total > 0.0 ? static_cast<double>(n.counts[1]) / total : 0.5;
        const double intensity = std::abs(p1 - 0.5) * 2.0;
        const std::string color = detail::blend_hex(p1 >= 0.5 ? kBlue : kOrange, intensity);
        out += "  n" + std::to_string(i) + " [label=\"" + label + "\", fillcolor=\"" + color + "\"];\n";
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (n.feature >= 0) {
            out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.left) + ";\n";
            out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.right) + ";\n";
        }
    }
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// L1-regularized logistic regression (proximal gradient with backtracking)
// ---------------------------------------------------------------------------

struct LinearModel {
    std::vector<double> weights; // in standardized feature space
    double intercept = 0.0;
    double lambda = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_scales; // population sd; 0 marks a constant feature
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Mean logistic loss on the features exactly as given (no standardization).
inline double logistic_loss(const Matrix& X, const std::vector<int>& y, std::span<const double> w,
                            double b) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double z = dot(X.row(i), w) + b;
        loss += softplus(z) - static_cast<double>(y[i]) * z;
    }
    return loss / static_cast<double>(X.rows());
}

// Gradient of the mean logistic loss; returns (d/dw, d/db).
inline std::pair<std::vector<double>, double> logistic_loss_gradient(const Matrix& X,
                                                                     const std::vector<int>& y,
                                                                     std::span<const double> w,
                                                                     double b) {
    std::vector<double> gw(X.cols(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double r = sigmoid(dot(X.row(i), w) + b) - static_cast<double>(y[i]);
        const auto row = X.row(i);
        for (std::size_t j = 0; j < X.cols(); ++j) gw[j] += r * row[j];
        gb += r;
    }
    const double inv_m = 1.0 / static_cast<double>(X.rows());
    for (auto& g : gw) g *= inv_m;
    return {std::move(gw), gb * inv_m};
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Minimizes mean logistic loss + lambda*||w||_1 (intercept unpenalized) on
// standardized features. Stops when the objective decrease falls below tol or
// max_iter is reached; the iteration cap still yields a usable model (the
// lambda=0 separable case has no finite optimum). Non-finite state is the
// only hard failure. objective_trace, when given, receives the objective
// value after every accepted step.
inline LinearModel fit_logistic_l1(const Matrix& X, const std::vector<int>& y01, double lambda,
                                   double tol = 1e-8, std::size_t max_iter = 5000,
                                   std::vector<double>* objective_trace = nullptr) {
    if (lambda < 0.0) throw config_error("fit_logistic_l1: lambda must be non-negative");
    if (X.rows() == 0 || X.rows() != y01.size()) throw data_error("fit_logistic_l1: shape mismatch");
    bool has0 = false, has1 = false;
    for (const int v : y01) {
        if (v != 0 && v != 1) throw data_error("fit_logistic_l1: targets must be 0/1");
        (v ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw data_error("fit_logistic_l1: both classes must be present");
    for (const double v : X.data())
        if (!std::isfinite(v)) throw data_error("fit_logistic_l1: non-finite feature value");

    const std::size_t m = X.rows();
    const std::size_t n = X.cols();

    LinearModel model;
    model.lambda = lambda;
    model.feature_means.resize(n);
    model.feature_scales.resize(n);
    Matrix Z(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(m);
        for (std::size_t i = 0; i < m; ++i) col[i] = X(i, j);
        const MeanSd ms = mean_sd(col);
        model.feature_means[j] = ms.mean;
        model.feature_scales[j] = ms.sd;
        const double inv = ms.sd > 0.0 ? 1.0 / ms.sd : 0.0;
        for (std::size_t i = 0; i < m; ++i) Z(i, j) = (X(i, j) - ms.mean) * inv;
    }

    std::vector<double> w(n, 0.0);
    double b = 0.0;
    double step = 1.0;
    double smooth = logistic_loss(Z, y01, w, b);
    double objective = smooth; // ||w||_1 = 0 at start
    if (objective_trace) {
        objective_trace->clear();
        objective_trace->push_back(objective);
    }

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const auto [gw, gb] = logistic_loss_gradient(Z, y01, w, b);

        std::vector<double> w_new(n);
        double b_new = 0.0;
        double smooth_new = 0.0;
        for (;;) {
            for (std::size_t j = 0; j < n; ++j)
                w_new[j] = soft_threshold(w[j] - step * gw[j], step * lambda);
            b_new = b - step * gb;
            smooth_new = logistic_loss(Z, y01, w_new, b_new);

            double lin = (b_new - b) * gb;
            double sq = (b_new - b) * (b_new - b);
            for (std::size_t j = 0; j < n; ++j) {
                const double d = w_new[j] - w[j];
                lin += d * gw[j];
                sq += d * d;
            }
            if (smooth_new <= smooth + lin + sq / (2.0 * step) + 1e-12) break;
            step *= 0.5;
            if (step < 1e-20) { // step collapsed: already at a stationary point
                w_new = w;
                b_new = b;
                smooth_new = smooth;
                break;
            }
        }

        double l1 = 0.0;
        for (const double v : w_new) l1 += std::abs(v);
        const double objective_new = smooth_new + lambda * l1;
        if (!std::isfinite(objective_new))
            throw numeric_error("fit_logistic_l1: objective became non-finite (last = " +
                                format_g9(objective) + ")");
        assert(objective_new <= objective + 1e-10 * (1.0 + std::abs(objective)));
        if (objective_trace) objective_trace->push_back(objective_new);

        const double decrease = objective - objective_new;
        w = std::move(w_new);
        b = b_new;
        smooth = smooth_new;
        objective = objective_new;
        if (decrease < tol) break;
        step = std::min(step * 2.0, 1e6);
        w_new.assign(n, 0.0);
    }

    model.weights = std::move(w);
    model.intercept = b;
    return model;
}

// Linear score on raw (unstandardized) inputs.
inline double linear_score(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.weights.size()) throw data_error("linear_score: feature dimension mismatch");
    double z = m.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (m.feature_scales[j] > 0.0)
            z += m.weights[j] * (x[j] - m.feature_means[j]) / m.feature_scales[j];
    }
    return z;
}

inline double predict_p(const LinearModel& m, std::span<const double> x) {
    return sigmoid(linear_score(m, x));
}

inline double mse(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw data_error("mse: vectors must have equal nonzero length");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline void tree_to_json(JsonWriter& w, const Tree& tree) {
    w.begin_array();
    for (const TreeNode& n : tree.nodes) {
        w.begin_object();
        w.kv("feature", n.feature);
        w.kv("threshold", n.threshold);
        w.kv("left", n.left);
        w.kv("right", n.right);
        w.kv("prediction", n.prediction);
        w.key("counts");
        w.begin_array();
        w.value(n.counts[0]);
        w.value(n.counts[1]);
        w.end_array();
        w.end_object();
    }
    w.end_array();
}

inline std::string forest_to_json(const Forest& f) {
    JsonWriter w;
    w.begin_object();
    w.kv("task", f.task == Task::classification ? "classification" : "regression");
    w.kv("n_features", f.n_features);
    w.key("trees");
    w.begin_array();
    for (const Tree& t : f.trees) tree_to_json(w, t);
    w.end_array();
    w.end_object();
    return w.take();
}

inline std::string tree_to_json(const Tree& tree) {
    JsonWriter w;
    tree_to_json(w, tree);
    return w.take();
}

inline std::string linear_model_to_json(const LinearModel& m) {
    JsonWriter w;
    w.begin_object();
    w.number_array("weights", m.weights.begin(), m.weights.end());
    w.kv("intercept", m.intercept);
    w.kv("lambda", m.lambda);
    w.number_array("feature_means", m.feature_means.begin(), m.feature_means.end());
    w.number_array("feature_scales", m.feature_scales.begin(), m.feature_scales.end());
    w.end_object();
    return w.take();
}

inline Tree tree_from_json(const nlohmann::json& j) {
    Tree tree;
    for (const auto& jn : j) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.prediction = jn.at("prediction").get<double>();
        n.counts[0] = jn.at("counts").at(0).get<std::int64_t>();
        n.counts[1] = jn.at("counts").at(1).get<std::int64_t>();
        tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw data_error("tree_from_json: empty node array");
    return tree;
}

inline Forest forest_from_json(const nlohmann::json& j) {
    Forest f;
    const std::string task = j.at("task").get<std::string>();
    if (task == "classification") f.task = Task::classification;
    else if (task == "regression") f.task = Task::regression;
    else throw data_error("forest_from_json: unknown task " + task);
    f.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) f.trees.push_back(tree_from_json(jt));
    if (f.trees.empty()) throw data_error("forest_from_json: forest has no trees");
    return f;
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
    LinearModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.feature_means = j.at("feature_means").get<std::vector<double>>();
    m.feature_scales = j.at("feature_scales").get<std::vector<double>>();
    if (m.weights.size() != m.feature_means.size() || m.weights.size() != m.feature_scales.size())
        throw data_error("linear_model_from_json: inconsistent lengths");
    return m;
}

} // namespace explika
