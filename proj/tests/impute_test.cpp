#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "explika/impute.hpp"
#include "explika/rng.hpp"
#include "explika/table.hpp"

#include "test_util.hpp"

using namespace explika;

namespace {

Table make_table(std::size_t rows, std::size_t cols) {
    std::vector<ColumnMeta> meta(cols);
    for (std::size_t c = 0; c < cols; ++c) meta[c].name = "c" + std::to_string(c);
    std::vector<std::string> ids(rows);
    for (std::size_t r = 0; r < rows; ++r) ids[r] = std::to_string(r);
    return Table(rows, cols, meta, ids);
}

// Clustered data with ground truth kept aside; mask_rate cells hidden MCAR.
struct MaskedData {
    Table table;
    std::vector<std::vector<double>> truth; // row-major
    std::vector<std::pair<std::size_t, std::size_t>> hidden;
};

MaskedData clustered_mcar(Rng& rng, std::size_t rows, std::size_t cols, std::size_t n_clusters,
                          double mask_rate) {
    std::vector<std::vector<double>> centers(n_clusters, std::vector<double>(cols));
    for (auto& c : centers)
        for (auto& v : c) v = 10.0 * normal01(rng);
    MaskedData out{make_table(rows, cols), {}, {}};
    out.truth.assign(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& c = centers[r % n_clusters];
        for (std::size_t j = 0; j < cols; ++j) out.truth[r][j] = c[j] + normal01(rng);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (uniform01(rng) < mask_rate) out.hidden.emplace_back(r, j);
            else out.table.set(r, j, out.truth[r][j]);
        }
    }
    return out;
}

double rmse_on_hidden(const MaskedData& d, const Table& filled) {
    double ss = 0.0;
    for (const auto& [r, j] : d.hidden) {
        const double diff = filled.value(r, j) - d.truth[r][j];
        ss += diff * diff;
    }
    return std::sqrt(ss / static_cast<double>(d.hidden.size()));
}

// Independent baseline: impute every hidden cell with its column's observed mean.
double column_mean_rmse(const MaskedData& d) {
    const Table& t = d.table;
    std::vector<double> mean(t.cols(), 0.0);
    for (std::size_t j = 0; j < t.cols(); ++j) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            if (t.observed(r, j)) {
                sum += t.value(r, j);
                ++n;
            }
        }
        mean[j] = sum / static_cast<double>(n);
    }
    double ss = 0.0;
    for (const auto& [r, j] : d.hidden) {
        const double diff = mean[j] - d.truth[r][j];
        ss += diff * diff;
    }
    return std::sqrt(ss / static_cast<double>(d.hidden.size()));
}

} // namespace

TEST(KnnImpute, FullyObservedIsIdentity) {
    Rng rng(1);
    Table t = make_table(5, 3);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) t.set(r, c, normal01(rng));
    const Table out = knn_impute(t);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.value(r, c), t.value(r, c));
}

TEST(KnnImpute, HandCheckedThreeRowCase) {
    // Rows (0,0), (1,1), (2,?): the donor nearest to row 2 by column 0 is
    // row 1, so with k=1 the missing cell becomes exactly 1.
    Table t = make_table(3, 2);
    t.set(0, 0, 0.0);
    t.set(0, 1, 0.0);
    t.set(1, 0, 1.0);
    t.set(1, 1, 1.0);
    t.set(2, 0, 2.0);
    ImputeParams p;
    p.k = 1;
    p.standardize = false;
    const Table out = knn_impute(t, p);
    EXPECT_EQ(out.value(2, 1), 1.0);
    EXPECT_TRUE(out.fully_observed());
}

TEST(KnnImpute, DuplicateRowTwinIsTheDonor) {
    Table t = make_table(4, 3);
    const std::vector<std::vector<double>> rows = {
        {1.5, -2.25, 0.375}, {1.5, -2.25, 0.375}, {8.0, 3.0, -1.0}, {8.0, 3.0, -1.0}};
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) t.set(r, c, rows[r][c]);
    t.set_missing(1, 2);
    t.set_missing(3, 0);
    ImputeParams p;
    p.k = 1;
    const Table out = knn_impute(t, p);
    EXPECT_EQ(out.value(1, 2), 0.375); // zero-distance twin, bit-identical
    EXPECT_EQ(out.value(3, 0), 8.0);
}

TEST(KnnImpute, EmptyRowIsAnError) {
    Table t = make_table(2, 2);
    t.set(0, 0, 1.0);
    t.set(0, 1, 2.0);
    EXPECT_THROW(knn_impute(t), data_error);
}

TEST(KnnImpute, EmptyColumnIsAnError) {
    Table t = make_table(2, 2);
    t.set(0, 0, 1.0);
    t.set(1, 0, 2.0);
    EXPECT_THROW(knn_impute(t), data_error);
}

TEST(KnnImpute, NoSharedColumnDonorIsAnError) {
    // Row 0 observes only column 0; the sole donor for (0,1) observes only
    // column 1, so no distance can be formed.
    Table t = make_table(3, 2);
    t.set(0, 0, 1.0);
    t.set(1, 1, 2.0);
    t.set(2, 0, 3.0);
    try {
        knn_impute(t);
        FAIL() << "expected data_error";
    } catch (const data_error& e) {
        EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos);
    }
}

TEST(KnnImpute, ObservedCellsBitIdenticalAndImputedWithinDonorRange) {
    Rng rng(7);
    const MaskedData d = clustered_mcar(rng, 60, 8, 3, 0.15);
    const Table out = knn_impute(d.table, {.k = 5});
    for (std::size_t r = 0; r < d.table.rows(); ++r) {
        for (std::size_t j = 0; j < d.table.cols(); ++j) {
            if (d.table.observed(r, j)) {
                EXPECT_EQ(out.value(r, j), d.table.value(r, j));
            } else {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t rr = 0; rr < d.table.rows(); ++rr) {
                    if (d.table.observed(rr, j)) {
                        lo = std::min(lo, d.table.value(rr, j));
                        hi = std::max(hi, d.table.value(rr, j));
                    }
                }
                EXPECT_GE(out.value(r, j), lo);
                EXPECT_LE(out.value(r, j), hi);
            }
        }
    }
}

TEST(KnnImpute, PermutationEquivariant) {
    Rng rng(13);
    const MaskedData d = clustered_mcar(rng, 40, 6, 2, 0.1);
    const Table base = knn_impute(d.table, {.k = 4});

    auto perm = sample_without_replacement(rng, d.table.rows(), d.table.rows());
    std::vector<std::size_t> order(perm.begin(), perm.end());
    const Table shuffled = d.table.keep_rows(order);
    const Table out = knn_impute(shuffled, {.k = 4});
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = 0; j < d.table.cols(); ++j) {
            EXPECT_EQ(out.value(i, j), base.value(order[i], j));
        }
    }
}

TEST(KnnImpute, BeatsColumnMeanOnClusteredData) {
    Rng rng(29);
    const MaskedData d = clustered_mcar(rng, 200, 20, 4, 0.1);
    const Table out = knn_impute(d.table, {.k = 10});
    EXPECT_LE(rmse_on_hidden(d, out), 0.5 * column_mean_rmse(d));
}

TEST(KnnImpute, UniformAndInverseDistanceAgreeOnEquidistantDonors) {
    // Two donors at identical distances: both schemes give the plain mean.
    Table t = make_table(3, 2);
    t.set(0, 0, 1.0);
    t.set(0, 1, 10.0);
    t.set(1, 0, 3.0);
    t.set(1, 1, 20.0);
    t.set(2, 0, 2.0);
    ImputeParams pu{.k = 2, .weight_scheme = WeightScheme::uniform, .standardize = false};
    ImputeParams pi{.k = 2, .weight_scheme = WeightScheme::inverse_distance, .standardize = false};
    EXPECT_DOUBLE_EQ(knn_impute(t, pu).value(2, 1), 15.0);
    EXPECT_DOUBLE_EQ(knn_impute(t, pi).value(2, 1), 15.0);
}
