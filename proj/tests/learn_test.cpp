#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "explika/learn.hpp"
#include "explika/rng.hpp"

#include "test_util.hpp"

using namespace explika;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix X(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) X(r, c) = normal01(rng);
    return X;
}

// Independent exhaustive best-Gini-split search: every feature, every
// midpoint between consecutive distinct sorted values, naive counting,
// exact integer comparison. Ties break toward the lower feature index, then
// the lower threshold, matching the documented contract.
struct OracleSplit {
    std::size_t feature = 0;
    double threshold = 0.0;
    bool found = false;
};

OracleSplit brute_force_best_split(const Matrix& X, const std::vector<int>& y) {
    OracleSplit best;
    unsigned long long best_num = 0, best_den = 1;
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> uniq;
        for (std::size_t i = 0; i < X.rows(); ++i) uniq.push_back(X(i, f));
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t u = 0; u + 1 < uniq.size(); ++u) {
            const double thr = (uniq[u] + uniq[u + 1]) / 2.0;
            unsigned long long l0 = 0, l1 = 0, r0 = 0, r1 = 0;
            for (std::size_t i = 0; i < X.rows(); ++i) {
                if (X(i, f) <= thr) (y[i] ? l1 : l0)++;
                else (y[i] ? r1 : r0)++;
            }
            const unsigned long long nl = l0 + l1, nr = r0 + r1;
            if (nl == 0 || nr == 0) continue;
            const unsigned long long num = (l0 * l0 + l1 * l1) * nr + (r0 * r0 + r1 * r1) * nl;
            const unsigned long long den = nl * nr;
            // strictly better as a rational: num/den > best_num/best_den
            if (!best.found ||
                static_cast<unsigned __int128>(num) * best_den >
                    static_cast<unsigned __int128>(best_num) * den) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best_num = num;
                best_den = den;
            }
        }
    }
    return best;
}

std::size_t tree_depth(const Tree& t, int node = 0) {
    const TreeNode& n = t.nodes.at(static_cast<std::size_t>(node));
    if (n.feature < 0) return 0;
    return 1 + std::max(tree_depth(t, n.left), tree_depth(t, n.right));
}

} // namespace

// --------------------------------------------------------------------------
// fit_cart
// --------------------------------------------------------------------------

TEST(FitCart, PerfectlySeparableOneFeature) {
    Matrix X(6, 1);
    std::vector<int> y(6);
    for (std::size_t i = 0; i < 6; ++i) {
        X(i, 0) = static_cast<double>(i);
        y[i] = i >= 3 ? 1 : 0;
    }
    const Tree t = fit_cart(X, y);
    EXPECT_EQ(tree_depth(t), 1u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(route_to_leaf(t, X.row(i)).prediction, static_cast<double>(y[i]));
    }
}

TEST(FitCart, MaxDepthIsRespected) {
    Rng rng(3);
    const Matrix X = random_matrix(rng, 80, 4);
    std::vector<int> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = uniform01(rng) < 0.5 ? 0 : 1;
    const Tree t = fit_cart(X, y, 2);
    EXPECT_LE(tree_depth(t), 2u);
}

TEST(FitCart, PlantedRuleRecovered) {
    Rng rng(5);
    Matrix X(120, 21);
    std::vector<int> y(120);
    for (std::size_t i = 0; i < 120; ++i) {
        for (std::size_t j = 0; j < 21; ++j) X(i, j) = uniform01(rng);
        y[i] = X(i, 3) > 0.5 ? 1 : 0;
    }
    const Tree t = fit_cart(X, y);
    EXPECT_EQ(t.nodes[0].feature, 3);
    EXPECT_GT(t.nodes[0].threshold, 0.45);
    EXPECT_LT(t.nodes[0].threshold, 0.55);
}

TEST(FitCart, RootSplitMatchesBruteForceOracle) {
    Rng rng(7);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t rows = 40 + 13 * static_cast<std::size_t>(trial % 4);
        Matrix X(rows, 8);
        std::vector<int> y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                // Mix continuous and low-cardinality columns to exercise ties.
                X(i, j) = j % 2 == 0 ? normal01(rng)
                                     : static_cast<double>(uniform_index(rng, 4));
            }
            y[i] = uniform01(rng) < 0.4 ? 0 : 1;
        }
        bool has0 = false, has1 = false;
        for (int v : y) (v ? has1 : has0) = true;
        if (!has0 || !has1) continue;
        const Tree t = fit_cart(X, y);
        const OracleSplit oracle = brute_force_best_split(X, y);
        ASSERT_TRUE(oracle.found);
        EXPECT_EQ(t.nodes[0].feature, static_cast<int>(oracle.feature));
        EXPECT_EQ(t.nodes[0].threshold, oracle.threshold);
    }
}

TEST(FitCart, SingleClassIsAnError) {
    Matrix X(4, 1);
    EXPECT_THROW(fit_cart(X, std::vector<int>(4, 1)), data_error);
}

// --------------------------------------------------------------------------
// fit_forest / predict
// --------------------------------------------------------------------------

TEST(FitForest, ConstantRegressionTargetIsReproduced) {
    Rng rng(11);
    const Matrix X = random_matrix(rng, 30, 4);
    const std::vector<double> y(30, 3.7);
    const Forest f = fit_forest_regression(X, y, 20, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_DOUBLE_EQ(predict_regression(f, X.row(i)), 3.7);
    }
}

TEST(FitForest, XorIsMemorized) {
    Matrix X(4, 2);
    X(0, 0) = 0; X(0, 1) = 0;
    X(1, 0) = 0; X(1, 1) = 1;
    X(2, 0) = 1; X(2, 1) = 0;
    X(3, 0) = 1; X(3, 1) = 1;
    const std::vector<int> y{0, 1, 1, 0};
    const Forest f = fit_forest_classifier(X, y, 100, 42);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto p = predict_proba(f, X.row(i));
        EXPECT_EQ(p[1] > 0.5 ? 1 : 0, y[i]) << "instance " << i << " p1=" << p[1];
    }
}

TEST(FitForest, RegressionPredictionsWithinTargetRange) {
    Rng rng(13);
    const Matrix X = random_matrix(rng, 60, 5);
    std::vector<double> y(60);
    for (auto& v : y) v = uniform_real(rng, 2.0, 9.0);
    const Forest f = fit_forest_regression(X, y, 50, 2);
    const double lo = *std::min_element(y.begin(), y.end());
    const double hi = *std::max_element(y.begin(), y.end());
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(5);
        for (auto& v : x) v = normal01(rng) * 3.0;
        const double pred = predict_regression(f, x);
        EXPECT_GE(pred, lo);
        EXPECT_LE(pred, hi);
    }
}

TEST(FitForest, SingleClassClassificationIsAnError) {
    Rng rng(17);
    const Matrix X = random_matrix(rng, 10, 2);
    EXPECT_THROW(fit_forest_classifier(X, std::vector<int>(10, 0), 5, 0), data_error);
}

TEST(PredictProba, PureLeafForestIsExact) {
    Forest f;
    f.task = Task::classification;
    f.n_features = 1;
    Tree t;
    t.nodes.push_back({-1, 0.0, -1, -1, 1.0, {0, 7}});
    f.trees.push_back(t);
    const std::vector<double> x{0.3};
    const auto p = predict_proba(f, x);
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[1], 1.0);
}

TEST(PredictProba, TwoOpposedTreesAverageToHalf) {
    Forest f;
    f.task = Task::classification;
    f.n_features = 1;
    Tree a, b;
    a.nodes.push_back({-1, 0.0, -1, -1, 0.0, {3, 0}});
    b.nodes.push_back({-1, 0.0, -1, -1, 1.0, {0, 5}});
    f.trees = {a, b};
    const std::vector<double> x{0.0};
    const auto p = predict_proba(f, x);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PredictProba, ComponentsSumToOneAndTreeOrderIsIrrelevant) {
    Rng rng(19);
    const Matrix X = random_matrix(rng, 50, 3);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = X(i, 0) + 0.3 * normal01(rng) > 0 ? 1 : 0;
    Forest f = fit_forest_classifier(X, y, 30, 3);
    Forest reversed = f;
    std::reverse(reversed.trees.begin(), reversed.trees.end());
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> x(3);
        for (auto& v : x) v = normal01(rng);
        const auto p = predict_proba(f, x);
        EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
        const auto q = predict_proba(reversed, x);
        EXPECT_DOUBLE_EQ(p[1], q[1]);
    }
}

TEST(PredictProba, DimensionMismatchIsAnError) {
    Rng rng(23);
    const Matrix X = random_matrix(rng, 20, 3);
    std::vector<int> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = i % 2;
    const Forest f = fit_forest_classifier(X, y, 5, 0);
    const std::vector<double> x{1.0, 2.0};
    EXPECT_THROW(predict_proba(f, x), data_error);
}

// --------------------------------------------------------------------------
// export_dot
// --------------------------------------------------------------------------

TEST(ExportDot, SingleLeafGraph) {
    Tree t;
    t.nodes.push_back({-1, 0.0, -1, -1, 1.0, {2, 6}});
    const std::string dot = export_dot(t, {});
    EXPECT_NE(dot.find("digraph"), std::string::npos);
    EXPECT_NE(dot.find("n0"), std::string::npos);
    EXPECT_EQ(dot.find("->"), std::string::npos);
    EXPECT_NE(dot.find("[2, 6]"), std::string::npos);
}

TEST(ExportDot, DepthOneTreeHasThreeNodesTwoEdges) {
    Matrix X(6, 1);
    std::vector<int> y(6);
    for (std::size_t i = 0; i < 6; ++i) {
        X(i, 0) = static_cast<double>(i);
        y[i] = i >= 3 ? 1 : 0;
    }
    const Tree t = fit_cart(X, y);
    const std::string dot = export_dot(t, {"verbal_score"});
    std::size_t nodes = 0, edges = 0, pos = 0;
    while ((pos = dot.find("label=", pos)) != std::string::npos) { ++nodes; ++pos; }
    pos = 0;
    while ((pos = dot.find("->", pos)) != std::string::npos) { ++edges; ++pos; }
    EXPECT_EQ(nodes, 3u);
    EXPECT_EQ(edges, 2u);
    EXPECT_NE(dot.find("verbal_score <= 2.5"), std::string::npos);
}

TEST(ExportDot, BalancedLeafIsNeutralWhite) {
    Tree t;
    t.nodes.push_back({-1, 0.0, -1, -1, 1.0, {5, 5}});
    const std::string dot = export_dot(t, {});
    EXPECT_NE(dot.find("#ffffff"), std::string::npos);
}

// --------------------------------------------------------------------------
// fit_logistic_l1
// --------------------------------------------------------------------------

TEST(LogisticL1, FullShrinkageGivesBaseRateIntercept) {
    Rng rng(31);
    const Matrix X = random_matrix(rng, 40, 4);
    std::vector<int> y(40);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        y[i] = uniform01(rng) < 0.3 ? 1 : 0;
        ones += y[i];
    }
    if (ones == 0) y[0] = 1, ones = 1;
    const LinearModel m = fit_logistic_l1(X, y, 10.0, 1e-14);
    for (const double w : m.weights) EXPECT_EQ(w, 0.0);
    const double rate = static_cast<double>(ones) / 40.0;
    EXPECT_NEAR(m.intercept, std::log(rate / (1.0 - rate)), 1e-5);
}

TEST(LogisticL1, SeparableDataClassifiedPerfectlyAtLambdaZero) {
    Matrix X(20, 2);
    std::vector<int> y(20);
    Rng rng(37);
    for (std::size_t i = 0; i < 20; ++i) {
        const int cls = i % 2;
        X(i, 0) = (cls ? 1.0 : -1.0) + 0.2 * normal01(rng);
        X(i, 1) = normal01(rng);
        y[i] = cls;
    }
    const LinearModel m = fit_logistic_l1(X, y, 0.0, 1e-10, 2000);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(linear_score(m, X.row(i)) > 0.0 ? 1 : 0, y[i]);
    }
}

TEST(LogisticL1, GradientMatchesCentralFiniteDifferences) {
    Rng rng(41);
    const Matrix X = random_matrix(rng, 25, 5);
    std::vector<int> y(25);
    for (std::size_t i = 0; i < 25; ++i) y[i] = uniform01(rng) < 0.5 ? 0 : 1;
    y[0] = 0;
    y[1] = 1;

    const double h = 1e-6;
    for (int point = 0; point < 10; ++point) {
        std::vector<double> w(5);
        for (auto& v : w) v = normal01(rng);
        const double b = normal01(rng);
        const auto [gw, gb] = logistic_loss_gradient(X, y, w, b);
        for (std::size_t j = 0; j < 5; ++j) {
            auto wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            const double fd = (logistic_loss(X, y, wp, b) - logistic_loss(X, y, wm, b)) / (2 * h);
            EXPECT_NEAR(gw[j], fd, 1e-4 * std::max(1.0, std::abs(fd)));
        }
        const double fdb = (logistic_loss(X, y, w, b + h) - logistic_loss(X, y, w, b - h)) / (2 * h);
        EXPECT_NEAR(gb, fdb, 1e-4 * std::max(1.0, std::abs(fdb)));
    }
}

TEST(LogisticL1, LargerLambdaNeverIncreasesL1Norm) {
    Rng rng(43);
    const Matrix X = random_matrix(rng, 60, 6);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        y[i] = sigmoid(1.5 * X(i, 0) - 0.8 * X(i, 3)) > uniform01(rng) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    double prev = std::numeric_limits<double>::infinity();
    for (const double lambda : {0.001, 0.01, 0.05, 0.1, 0.5}) {
        const LinearModel m = fit_logistic_l1(X, y, lambda);
        double l1 = 0.0;
        for (const double w : m.weights) l1 += std::abs(w);
        EXPECT_LE(l1, prev + 1e-6);
        prev = l1;
    }
}

TEST(LogisticL1, SingleClassIsAnError) {
    Rng rng(47);
    const Matrix X = random_matrix(rng, 10, 2);
    EXPECT_THROW(fit_logistic_l1(X, std::vector<int>(10, 1), 0.1), data_error);
}

TEST(LogisticL1, ConstantFeatureGetsZeroWeight) {
    Rng rng(53);
    Matrix X = random_matrix(rng, 30, 3);
    for (std::size_t i = 0; i < 30; ++i) X(i, 1) = 4.0;
    std::vector<int> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = X(i, 0) > 0 ? 1 : 0;
    y[0] = 1 - y[0];
    const LinearModel m = fit_logistic_l1(X, y, 0.01);
    EXPECT_EQ(m.weights[1], 0.0);
    EXPECT_EQ(m.feature_scales[1], 0.0);
}

// --------------------------------------------------------------------------
// mse
// --------------------------------------------------------------------------

TEST(Mse, IdenticalVectorsGiveZero) {
    EXPECT_EQ(mse({1.0, 2.0}, {1.0, 2.0}), 0.0);
}

TEST(Mse, HandComputedValue) {
    EXPECT_DOUBLE_EQ(mse({0.0, 0.0}, {1.0, 3.0}), 5.0);
}

TEST(Mse, MatchesReverseAccumulationOracle) {
    Rng rng(59);
    std::vector<double> a(1000), b(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        a[i] = normal01(rng);
        b[i] = normal01(rng);
    }
    double rev = 0.0;
    for (std::size_t i = 1000; i-- > 0;) {
        const double d = a[i] - b[i];
        rev += d * d;
    }
    rev /= 1000.0;
    EXPECT_NEAR(mse(a, b), rev, 1e-12);
}

TEST(Mse, LengthMismatchIsAnError) {
    EXPECT_THROW(mse({1.0}, {1.0, 2.0}), data_error);
    EXPECT_THROW(mse({}, {}), data_error);
}

// --------------------------------------------------------------------------
// serialization
// --------------------------------------------------------------------------

TEST(ModelJson, ForestRoundTripIsTextStable) {
    Rng rng(61);
    const Matrix X = random_matrix(rng, 40, 3);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = X(i, 1) > 0 ? 1 : 0;
    y[0] = 1 - y[0];
    const Forest f = fit_forest_classifier(X, y, 10, 9);
    const std::string first = forest_to_json(f);
    const Forest parsed = forest_from_json(nlohmann::json::parse(first));
    EXPECT_EQ(forest_to_json(parsed), first);
    EXPECT_EQ(parsed.trees.size(), f.trees.size());
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(3);
        for (auto& v : x) v = normal01(rng);
        EXPECT_NEAR(predict_proba(parsed, x)[1], predict_proba(f, x)[1], 1e-6);
    }
}

TEST(ModelJson, LinearModelRoundTrip) {
    LinearModel m;
    m.weights = {0.5, -1.25, 0.0};
    m.intercept = 0.75;
    m.lambda = 0.01;
    m.feature_means = {1.0, 2.0, 3.0};
    m.feature_scales = {1.0, 0.5, 0.0};
    const std::string text = linear_model_to_json(m);
    const LinearModel parsed = linear_model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(parsed.weights, m.weights);
    EXPECT_EQ(parsed.intercept, m.intercept);
    EXPECT_EQ(linear_model_to_json(parsed), text);
}
