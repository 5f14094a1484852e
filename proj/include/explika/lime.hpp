#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/linalg.hpp"
#include "explika/parallel.hpp"
#include "explika/rng.hpp"

namespace explika {

struct BackgroundStats {
    std::vector<double> means;
    std::vector<double> sds; // population form; 0 marks a constant feature
};

struct LimeParams {
    std::size_t n_samples = 5000;
    double kernel_width = 0.0; // <= 0 selects the default 0.75 * sqrt(n_features)
    double surrogate_ridge = 1e-3;
    std::uint64_t seed = 0;

    double effective_kernel_width(std::size_t n_features) const {
        return kernel_width > 0.0 ? kernel_width
                                  : 0.75 * std::sqrt(static_cast<double>(n_features));
    }

    void validate() const {
        if (n_samples < 1) throw config_error("lime: n_samples must be positive");
        if (surrogate_ridge < 0.0) throw config_error("lime: surrogate_ridge must be non-negative");
    }
};

// One instance's local surrogate. Coefficients live in standardized feature
// space and are oriented toward P(Top): positive pushes the prediction up.
struct Explanation {
    std::string row_id;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double local_r2 = 0.0;
    double predicted_p_top = 0.0;
};

using ProbFn = std::function<double(std::span<const double>)>;

// Column means and population standard deviations of the training matrix;
// the sampling neighborhood for every explanation is defined by these.
inline BackgroundStats background_stats(const Matrix& X) {
    if (X.rows() < 2) throw data_error("background_stats: need at least 2 rows");
    BackgroundStats out;
    out.means.resize(X.cols());
    out.sds.resize(X.cols());
    std::vector<double> col(X.rows());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        for (std::size_t i = 0; i < X.rows(); ++i) col[i] = X(i, j);
        const MeanSd ms = mean_sd(col);
        out.means[j] = ms.mean;
        out.sds[j] = ms.sd;
    }
    return out;
}

// Local surrogate for one instance: Gaussian perturbations around the
// standardized instance, exponential kernel weights, weighted ridge fit of
// the classifier's probabilities on the standardized samples.
inline Explanation explain(const ProbFn& prob, std::span<const double> x0,
                           const BackgroundStats& stats, const LimeParams& params,
                           std::string row_id = "") {
    params.validate();
    const std::size_t n = stats.means.size();
    if (x0.size() != n) throw data_error("explain: instance dimension mismatch");
    const double width = params.effective_kernel_width(n);
    const double inv_width_sq = 1.0 / (width * width);

    std::vector<double> z0(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (stats.sds[j] > 0.0) z0[j] = (x0[j] - stats.means[j]) / stats.sds[j];
    }

    Rng rng(params.seed);
    const std::size_t m = params.n_samples;
    Matrix Z(m, n);
    std::vector<double> weights(m, 0.0);
    std::vector<double> p(m, 0.0);

    std::vector<double> raw(n);
    for (std::size_t i = 0; i < m; ++i) {
        double dist_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double eps = i == 0 ? 0.0 : normal01(rng); // sample 0 is the instance itself
            Z(i, j) = z0[j] + eps;
            dist_sq += eps * eps;
        }
        weights[i] = std::exp(-dist_sq * inv_width_sq);
        for (std::size_t j = 0; j < n; ++j) raw[j] = stats.means[j] + Z(i, j) * stats.sds[j];
        const double pi = prob(raw);
        if (!std::isfinite(pi) || pi < 0.0 || pi > 1.0)
            throw numeric_error("explain: classifier returned invalid probability " + format_g9(pi) +
                                " for sample " + std::to_string(i));
        p[i] = pi;
    }

    // Weighted ridge with unpenalized intercept, via the centered normal
    // equations: (Zc' W Zc + ridge I) beta = Zc' W pc.
    double wsum = 0.0;
    std::vector<double> zmean(n, 0.0);
    double pmean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        wsum += weights[i];
        for (std::size_t j = 0; j < n; ++j) zmean[j] += weights[i] * Z(i, j);
        pmean += weights[i] * p[i];
    }
    for (auto& v : zmean) v /= wsum;
    pmean /= wsum;

    std::vector<double> a(n * n, 0.0);
    std::vector<double> rhs(n, 0.0);
    std::vector<double> zc(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) zc[j] = Z(i, j) - zmean[j];
        const double pc = p[i] - pmean;
        for (std::size_t j = 0; j < n; ++j) {
            const double wz = w * zc[j];
            for (std::size_t k = j; k < n; ++k) a[j * n + k] += wz * zc[k];
            rhs[j] += wz * pc;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) a[j * n + k] = a[k * n + j];
        a[j * n + j] += params.surrogate_ridge;
    }
    std::vector<double> beta = cholesky_solve(std::move(a), std::move(rhs));
    const double intercept = pmean - dot(beta, zmean);

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fit = dot(beta, Z.row(i)) + intercept;
        ss_res += weights[i] * (p[i] - fit) * (p[i] - fit);
        ss_tot += weights[i] * (p[i] - pmean) * (p[i] - pmean);
    }
    double r2;
    if (ss_tot <= 1e-24) {
        r2 = 1.0; // flat target: the constant surrogate reproduces it
    } else {
        r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    }

    Explanation out;
    out.row_id = std::move(row_id);
    out.coefficients = std::move(beta);
    out.intercept = intercept;
    out.local_r2 = r2;
    out.predicted_p_top = prob(x0);
    for (const double c : out.coefficients) {
        if (!std::isfinite(c)) throw numeric_error("explain: non-finite surrogate coefficient");
    }
    return out;
}

// explain() per row, seeds derived from (seed, row index); output order
// matches input order and the fan-out is schedule-independent.
inline std::vector<Explanation> explain_all(const ProbFn& prob, const Matrix& X_instances,
                                            const BackgroundStats& stats, const LimeParams& params,
                                            const std::vector<std::string>& row_ids = {}) {
    if (!row_ids.empty() && row_ids.size() != X_instances.rows())
        throw data_error("explain_all: row id count mismatch");
    std::vector<Explanation> out(X_instances.rows());
    parallel_for(X_instances.rows(), [&](std::size_t i) {
        LimeParams local = params;
        local.seed = derive_seed(params.seed, i);
        out[i] = explain(prob, X_instances.row(i), stats, local,
                         row_ids.empty() ? std::to_string(i) : row_ids[i]);
    });
    return out;
}

// ---------------------------------------------------------------------------
// JSON lines serialization (one object per subject)
// ---------------------------------------------------------------------------

inline std::string explanation_to_json(const Explanation& e) {
    JsonWriter w;
    w.begin_object();
    w.kv("row_id", e.row_id);
    w.number_array("coefficients", e.coefficients.begin(), e.coefficients.end());
    w.kv("intercept", e.intercept);
    w.kv("local_r2", e.local_r2);
    w.kv("predicted_p_top", e.predicted_p_top);
    w.end_object();
    return w.take();
}

inline std::string explanations_to_jsonl(const std::vector<Explanation>& list) {
    std::string out;
    for (const auto& e : list) {
        out += explanation_to_json(e);
        out += '\n';
    }
    return out;
}

inline std::vector<Explanation> explanations_from_jsonl(const std::string& text) {
    std::vector<Explanation> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        Explanation e;
        e.row_id = j.at("row_id").get<std::string>();
        e.coefficients = j.at("coefficients").get<std::vector<double>>();
        e.intercept = j.at("intercept").get<double>();
        e.local_r2 = j.at("local_r2").get<double>();
        e.predicted_p_top = j.at("predicted_p_top").get<double>();
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace explika
