#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "explika/cluster.hpp"
#include "explika/errors.hpp"
#include "explika/impute.hpp"
#include "explika/io.hpp"
#include "explika/learn.hpp"
#include "explika/lime.hpp"
#include "explika/select.hpp"
#include "explika/synthetic.hpp"
#include "explika/table.hpp"

namespace explika {

// ---------------------------------------------------------------------------
// Configuration. A single JSON document; unknown keys are rejected and every
// effective parameter (defaults included) lands in the run manifest.
// ---------------------------------------------------------------------------

struct DiscretizeConfig {
    std::string mode = "fixed"; // "fixed" or "percentile"
    double low_hi = 2.5;
    double top_lo = 3.25;
    double q = 0.3;
};

struct ImputeConfig {
    std::size_t k = 100;
    std::string weight_scheme = "inverse_distance";
    bool standardize = true;
};

struct ForestConfig {
    std::size_t n_trees = 500;
};

struct LimeConfig {
    std::size_t n_samples = 5000;
    double kernel_width = 0.0; // 0 = 0.75 * sqrt(n_features)
    double surrogate_ridge = 1e-3;
};

struct ClusterConfig {
    std::size_t k = 5;
    std::size_t n_init = 10;
    std::size_t max_iter = 300;
    double merge_threshold = 0.95;
    double lambda = 0.01; // L1 strength for the global and per-cluster logistic models
    std::size_t min_members = 10;
    std::size_t n_bootstrap = 100;
};

struct PipelineConfig {
    std::string data_csv;
    std::string metadata_csv;
    std::string target_csv;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> missing_codes;
    std::vector<std::string> negative_exempt_columns;
    std::size_t min_observed = 400;
    ImputeConfig impute;
    SelectConfig select; // seed field is ignored; derived from the master seed
    DiscretizeConfig discretize;
    ForestConfig forest;
    LimeConfig lime;
    ClusterConfig cluster;
    bool quiet = false; // CLI flag, not a config key

    static PipelineConfig from_json_text(const std::string& text);
    std::string effective_json() const;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw config_error("unknown config key '" + key + "' in " + where);
    }
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace detail

inline PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    detail::reject_unknown_keys(j,
                                {"data_csv", "metadata_csv", "target_csv", "out_dir", "seed",
                                 "missing_codes", "negative_exempt_columns", "min_observed",
                                 "impute", "select", "discretize", "forest", "lime", "cluster"},
                                "config");
    PipelineConfig c;
    detail::read_key(j, "data_csv", c.data_csv);
    detail::read_key(j, "metadata_csv", c.metadata_csv);
    detail::read_key(j, "target_csv", c.target_csv);
    detail::read_key(j, "out_dir", c.out_dir);
    if (!j.contains("seed"))
        throw config_error("config must set 'seed'; reproducibility is part of the contract");
    detail::read_key(j, "seed", c.seed);
    if (j.contains("missing_codes")) {
        for (const auto& v : j.at("missing_codes")) {
            if (v.is_string()) c.missing_codes.push_back(v.get<std::string>());
            else if (v.is_number()) c.missing_codes.push_back(format_g9(v.get<double>()));
            else throw config_error("missing_codes entries must be strings or numbers");
        }
    }
    detail::read_key(j, "negative_exempt_columns", c.negative_exempt_columns);
    detail::read_key(j, "min_observed", c.min_observed);

    if (j.contains("impute")) {
        const auto& ji = j.at("impute");
        detail::reject_unknown_keys(ji, {"k", "weight_scheme", "standardize"}, "impute");
        detail::read_key(ji, "k", c.impute.k);
        detail::read_key(ji, "weight_scheme", c.impute.weight_scheme);
        detail::read_key(ji, "standardize", c.impute.standardize);
        if (c.impute.weight_scheme != "uniform" && c.impute.weight_scheme != "inverse_distance")
            throw config_error("impute.weight_scheme must be 'uniform' or 'inverse_distance'");
    }
    if (j.contains("select")) {
        const auto& js = j.at("select");
        detail::reject_unknown_keys(
            js, {"n_trees", "alphas", "top_k", "weakness", "n_resamples", "subsample_fraction"},
            "select");
        detail::read_key(js, "n_trees", c.select.n_trees);
        if (js.contains("alphas")) {
            const auto alphas = js.at("alphas").get<std::vector<double>>();
            if (alphas.size() != 2) throw config_error("select.alphas must hold exactly 2 values");
            c.select.alphas = {alphas[0], alphas[1]};
        }
        detail::read_key(js, "top_k", c.select.top_k);
        detail::read_key(js, "weakness", c.select.weakness);
        detail::read_key(js, "n_resamples", c.select.n_resamples);
        detail::read_key(js, "subsample_fraction", c.select.subsample_fraction);
    }
    if (j.contains("discretize")) {
        const auto& jd = j.at("discretize");
        detail::reject_unknown_keys(jd, {"mode", "low_hi", "top_lo", "q"}, "discretize");
        detail::read_key(jd, "mode", c.discretize.mode);
        detail::read_key(jd, "low_hi", c.discretize.low_hi);
        detail::read_key(jd, "top_lo", c.discretize.top_lo);
        detail::read_key(jd, "q", c.discretize.q);
        if (c.discretize.mode != "fixed" && c.discretize.mode != "percentile")
            throw config_error("discretize.mode must be 'fixed' or 'percentile'");
    }
    if (j.contains("forest")) {
        detail::reject_unknown_keys(j.at("forest"), {"n_trees"}, "forest");
        detail::read_key(j.at("forest"), "n_trees", c.forest.n_trees);
    }
    if (j.contains("lime")) {
        const auto& jl = j.at("lime");
        detail::reject_unknown_keys(jl, {"n_samples", "kernel_width", "surrogate_ridge"}, "lime");
        detail::read_key(jl, "n_samples", c.lime.n_samples);
        detail::read_key(jl, "kernel_width", c.lime.kernel_width);
        detail::read_key(jl, "surrogate_ridge", c.lime.surrogate_ridge);
    }
    if (j.contains("cluster")) {
        const auto& jc = j.at("cluster");
        detail::reject_unknown_keys(jc,
                                    {"k", "n_init", "max_iter", "merge_threshold", "lambda",
                                     "min_members", "n_bootstrap"},
                                    "cluster");
        detail::read_key(jc, "k", c.cluster.k);
        detail::read_key(jc, "n_init", c.cluster.n_init);
        detail::read_key(jc, "max_iter", c.cluster.max_iter);
        detail::read_key(jc, "merge_threshold", c.cluster.merge_threshold);
        detail::read_key(jc, "lambda", c.cluster.lambda);
        detail::read_key(jc, "min_members", c.cluster.min_members);
        detail::read_key(jc, "n_bootstrap", c.cluster.n_bootstrap);
    }
    return c;
}

inline std::string PipelineConfig::effective_json() const {
    JsonWriter w;
    w.begin_object();
    w.kv("data_csv", data_csv);
    w.kv("metadata_csv", metadata_csv);
    w.kv("target_csv", target_csv);
    w.kv("out_dir", out_dir);
    w.kv("seed", seed);
    w.key("missing_codes");
    w.begin_array();
    for (const auto& m : missing_codes) w.value(m);
    w.end_array();
    w.key("negative_exempt_columns");
    w.begin_array();
    for (const auto& m : negative_exempt_columns) w.value(m);
    w.end_array();
    w.kv("min_observed", min_observed);
    w.key("impute");
    w.begin_object();
    w.kv("k", impute.k);
    w.kv("weight_scheme", impute.weight_scheme);
    w.kv("standardize", impute.standardize);
    w.end_object();
    w.key("select");
    w.begin_object();
    w.kv("n_trees", select.n_trees);
    w.key("alphas");
    w.begin_array();
    w.value(select.alphas[0]);
    w.value(select.alphas[1]);
    w.end_array();
    w.kv("top_k", select.top_k);
    w.kv("weakness", select.weakness);
    w.kv("n_resamples", select.n_resamples);
    w.kv("subsample_fraction", select.subsample_fraction);
    w.end_object();
    w.key("discretize");
    w.begin_object();
    w.kv("mode", discretize.mode);
    w.kv("low_hi", discretize.low_hi);
    w.kv("top_lo", discretize.top_lo);
    w.kv("q", discretize.q);
    w.end_object();
    w.key("forest");
    w.begin_object();
    w.kv("n_trees", forest.n_trees);
    w.end_object();
    w.key("lime");
    w.begin_object();
    w.kv("n_samples", lime.n_samples);
    w.kv("kernel_width", lime.kernel_width);
    w.kv("surrogate_ridge", lime.surrogate_ridge);
    w.end_object();
    w.key("cluster");
    w.begin_object();
    w.kv("k", cluster.k);
    w.kv("n_init", cluster.n_init);
    w.kv("max_iter", cluster.max_iter);
    w.kv("merge_threshold", cluster.merge_threshold);
    w.kv("lambda", cluster.lambda);
    w.kv("min_members", cluster.min_members);
    w.kv("n_bootstrap", cluster.n_bootstrap);
    w.end_object();
    w.end_object();
    return w.take();
}

// ---------------------------------------------------------------------------
// Stage plumbing. Every intermediate is a file so any stage can be inspected
// or replayed; cmd_run is literally the stage chain over one directory.
// ---------------------------------------------------------------------------

namespace seed_unit {
constexpr std::uint64_t select = 1;
constexpr std::uint64_t mse_split = 2;
constexpr std::uint64_t forest_regression = 3;
constexpr std::uint64_t forest_classifier = 4;
constexpr std::uint64_t lime = 5;
constexpr std::uint64_t kmeans = 6;
constexpr std::uint64_t cluster_models = 7;
} // namespace seed_unit

namespace detail {

inline std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

inline void log_stage(const PipelineConfig& cfg, const std::string& msg) {
    if (!cfg.quiet) std::cerr << "[explika] " << msg << "\n";
}

inline void write_table_csv(const Table& t, const std::string& path) {
    std::string csv = "row_id";
    for (std::size_t c = 0; c < t.cols(); ++c) csv += "," + csv_escape(t.column(c).name);
    csv += '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        csv += csv_escape(t.row_ids()[r]);
        for (std::size_t c = 0; c < t.cols(); ++c) {
            csv += ',';
            if (t.observed(r, c)) csv += format_g9(t.value(r, c));
        }
        csv += '\n';
    }
    write_file(path, csv);
}

inline void write_meta_csv(const Table& t, const std::string& path) {
    std::string csv = "name,respondent,wave\n";
    for (std::size_t c = 0; c < t.cols(); ++c) {
        const ColumnMeta& m = t.column(c);
        csv += csv_escape(m.name) + "," + csv_escape(m.respondent) + "," + std::to_string(m.wave) +
               "\n";
    }
    write_file(path, csv);
}

inline Table read_table_csv(const std::string& data_path, const std::string& meta_path) {
    return load_csv(data_path, MissingCodes{}, meta_path, "row_id");
}

// Input target: one numeric column, or a multi-column file with a "gpa"
// column. Intermediate targets are written as row_id,gpa.
inline std::vector<double> read_target_column(const std::string& path) {
    const CsvContent csv = read_csv(path);
    std::size_t col = csv.header.size();
    if (csv.header.size() == 1) {
        col = 0;
    } else {
        for (std::size_t c = 0; c < csv.header.size(); ++c) {
            if (trim(csv.header[c]) == "gpa") {
                col = c;
                break;
            }
        }
    }
    if (col == csv.header.size())
        throw data_error("target file " + path + " needs a single column or a 'gpa' column");
    std::vector<double> out;
    out.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto v = parse_double(csv.rows[r][col]);
        if (!v)
            throw data_error("target file " + path + " row " + std::to_string(r + 2) +
                             ": not a number");
        out.push_back(*v);
    }
    return out;
}

inline void write_target_csv(const Table& t, const std::vector<double>& gpa,
                             const std::string& path) {
    std::string csv = "row_id,gpa\n";
    for (std::size_t r = 0; r < t.rows(); ++r)
        csv += csv_escape(t.row_ids()[r]) + "," + format_g9(gpa[r]) + "\n";
    write_file(path, csv);
}

} // namespace detail

inline void stage_preprocess(const PipelineConfig& cfg, const std::string&,
                             const std::string& out_dir) {
    if (cfg.data_csv.empty()) throw config_error("config must set 'data_csv'");
    if (cfg.target_csv.empty()) throw config_error("config must set 'target_csv'");

    Table t = load_csv(cfg.data_csv, MissingCodes::from_strings(cfg.missing_codes),
                       cfg.metadata_csv);
    const std::size_t raw_cols = t.cols();

    std::set<std::size_t> exempt;
    for (const auto& name : cfg.negative_exempt_columns) {
        bool found = false;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (t.column(c).name == name) {
                exempt.insert(c);
                found = true;
                break;
            }
        }
        if (!found) throw config_error("negative_exempt_columns: no column named '" + name + "'");
    }

    t = mask_negative_values(t, exempt);
    t = drop_zero_variance(t);
    t = filter_min_observed(t, cfg.min_observed);
    if (t.cols() == 0) throw data_error("preprocess: no columns survived filtering");

    const std::vector<double> gpa = detail::read_target_column(cfg.target_csv);
    if (gpa.size() != t.rows())
        throw data_error("preprocess: target has " + std::to_string(gpa.size()) + " rows, data has " +
                         std::to_string(t.rows()));

    detail::log_stage(cfg, "preprocess: " + std::to_string(t.rows()) + " rows, kept " +
                               std::to_string(t.cols()) + " of " + std::to_string(raw_cols) +
                               " columns");
    detail::write_table_csv(t, detail::join(out_dir, "preprocessed_data.csv"));
    detail::write_meta_csv(t, detail::join(out_dir, "preprocessed_meta.csv"));
    detail::write_target_csv(t, gpa, detail::join(out_dir, "preprocessed_target.csv"));
}

inline void stage_impute(const PipelineConfig& cfg, const std::string& in_dir,
                         const std::string& out_dir) {
    const Table t = detail::read_table_csv(detail::join(in_dir, "preprocessed_data.csv"),
                                           detail::join(in_dir, "preprocessed_meta.csv"));
    ImputeParams p;
    p.k = cfg.impute.k;
    p.weight_scheme = cfg.impute.weight_scheme == "uniform" ? WeightScheme::uniform
                                                            : WeightScheme::inverse_distance;
    p.standardize = cfg.impute.standardize;
    const Table imputed = knn_impute(t, p);
    detail::log_stage(cfg, "impute: filled all missing cells (k=" + std::to_string(p.k) + ")");
    detail::write_table_csv(imputed, detail::join(out_dir, "imputed_data.csv"));
}

inline void stage_select(const PipelineConfig& cfg, const std::string& in_dir,
                         const std::string& out_dir) {
    const Table t = detail::read_table_csv(detail::join(in_dir, "imputed_data.csv"),
                                           detail::join(in_dir, "preprocessed_meta.csv"));
    const std::vector<double> gpa =
        detail::read_target_column(detail::join(in_dir, "preprocessed_target.csv"));

    SelectConfig sc = cfg.select;
    sc.seed = derive_seed(cfg.seed, seed_unit::select);
    const SelectOutput sel = select_pipeline_full(t, gpa, sc);

    detail::log_stage(cfg, "select: " + std::to_string(sel.subset.indices.size()) + " of " +
                               std::to_string(t.cols()) + " features in the intersection");
    write_file(detail::join(out_dir, "selected_features.json"), feature_subset_to_json(sel.subset));
    {
        JsonWriter w;
        w.begin_object();
        auto emit = [&w](const FeatureScore& s) {
            w.begin_object();
            w.kv("method", s.method);
            w.number_array("scores", s.scores.begin(), s.scores.end());
            w.end_object();
        };
        w.key("importance");
        emit(sel.importance);
        w.key("lasso");
        w.begin_array();
        emit(sel.lasso_scores[0]);
        emit(sel.lasso_scores[1]);
        w.end_array();
        w.end_object();
        write_file(detail::join(out_dir, "selection_scores.json"), w.take());
    }
    const Table selected = t.keep_columns(sel.subset.indices);
    detail::write_table_csv(selected, detail::join(out_dir, "selected_data.csv"));
    detail::write_meta_csv(selected, detail::join(out_dir, "selected_meta.csv"));
}

inline void stage_model(const PipelineConfig& cfg, const std::string& in_dir,
                        const std::string& out_dir) {
    const Table t = detail::read_table_csv(detail::join(in_dir, "selected_data.csv"),
                                           detail::join(in_dir, "selected_meta.csv"));
    const std::vector<double> gpa =
        detail::read_target_column(detail::join(in_dir, "preprocessed_target.csv"));
    if (gpa.size() != t.rows()) throw data_error("model: target/data row mismatch");

    DiscretizeParams dp;
    if (cfg.discretize.mode == "percentile") {
        dp = percentile_thresholds(gpa, cfg.discretize.q);
    } else {
        dp.low_hi = cfg.discretize.low_hi;
        dp.top_lo = cfg.discretize.top_lo;
    }
    {
        JsonWriter w;
        w.begin_object();
        w.kv("mode", cfg.discretize.mode);
        w.kv("low_hi", dp.low_hi);
        w.kv("top_lo", dp.top_lo);
        w.end_object();
        write_file(detail::join(out_dir, "discretization.json"), w.take());
    }

    const std::vector<Label> labels = discretize_target(gpa, dp);
    {
        std::string csv = "row_id,gpa,label\n";
        for (std::size_t r = 0; r < t.rows(); ++r)
            csv += csv_escape(t.row_ids()[r]) + "," + format_g9(gpa[r]) + "," +
                   label_name(labels[r]) + "\n";
        write_file(detail::join(out_dir, "labels.csv"), csv);
    }

    const ExtremesResult ex = select_extremes(t, labels);
    detail::write_table_csv(ex.table, detail::join(out_dir, "extremes_data.csv"));
    {
        std::string csv = "row_id,target\n";
        for (std::size_t r = 0; r < ex.table.rows(); ++r)
            csv += csv_escape(ex.table.row_ids()[r]) + "," + std::to_string(ex.targets[r]) + "\n";
        write_file(detail::join(out_dir, "extremes_targets.csv"), csv);
    }

    const Matrix X_all = to_matrix(t);
    const Matrix X_ex = to_matrix(ex.table);

    // Regression MSE on a fixed 80/20 shuffle split: the validation step that
    // sanity-checks the selected feature set.
    {
        Rng rng = make_rng(cfg.seed, seed_unit::mse_split);
        auto perm = sample_without_replacement(rng, t.rows(), t.rows());
        const std::size_t n_train = t.rows() - std::max<std::size_t>(1, t.rows() / 5);
        Matrix Xtr(n_train, t.cols());
        std::vector<double> ytr(n_train);
        const std::size_t n_test = t.rows() - n_train;
        Matrix Xte(n_test, t.cols());
        std::vector<double> yte(n_test);
        for (std::size_t i = 0; i < t.rows(); ++i) {
            if (i < n_train) {
                for (std::size_t j = 0; j < t.cols(); ++j) Xtr(i, j) = X_all(perm[i], j);
                ytr[i] = gpa[perm[i]];
            } else {
                for (std::size_t j = 0; j < t.cols(); ++j) Xte(i - n_train, j) = X_all(perm[i], j);
                yte[i - n_train] = gpa[perm[i]];
            }
        }
        const Forest reg = fit_forest_regression(Xtr, ytr, cfg.forest.n_trees,
                                                 derive_seed(cfg.seed, seed_unit::forest_regression));
        std::vector<double> pred(n_test);
        for (std::size_t i = 0; i < n_test; ++i) pred[i] = predict_regression(reg, Xte.row(i));
        const double holdout_mse = mse(pred, yte);
        detail::log_stage(cfg, "model: holdout MSE " + format_g9(holdout_mse));
        JsonWriter w;
        w.begin_object();
        w.kv("n_train", n_train);
        w.kv("n_test", n_test);
        w.kv("mse", holdout_mse);
        w.end_object();
        write_file(detail::join(out_dir, "mse_report.json"), w.take());
    }

    const Forest cls = fit_forest_classifier(X_ex, ex.targets, cfg.forest.n_trees,
                                             derive_seed(cfg.seed, seed_unit::forest_classifier));
    write_file(detail::join(out_dir, "forest_classifier.json"), forest_to_json(cls));

    std::vector<std::string> names;
    for (const auto& m : ex.table.columns()) names.push_back(m.name);
    const Tree cart = fit_cart(X_ex, ex.targets);
    write_file(detail::join(out_dir, "cart_tree.json"), tree_to_json(cart));
    write_file(detail::join(out_dir, "cart_tree.dot"), export_dot(cart, names));

    const LinearModel global = fit_logistic_l1(X_ex, ex.targets, cfg.cluster.lambda);
    {
        std::vector<std::size_t> order(global.weights.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double ma = std::abs(global.weights[a]), mb = std::abs(global.weights[b]);
            if (ma != mb) return ma > mb;
            return a < b;
        });
        JsonWriter w;
        w.begin_object();
        w.key("top_coefficients");
        w.begin_array();
        for (const std::size_t j : order) {
            if (global.weights[j] == 0.0) continue;
            w.begin_object();
            w.kv("feature", j);
            w.kv("name", names[j]);
            w.kv("coefficient", global.weights[j]);
            w.end_object();
        }
        w.end_array();
        w.key("model");
        // Reuse the standard linear-model layout inside the report.
        w.begin_object();
        w.number_array("weights", global.weights.begin(), global.weights.end());
        w.kv("intercept", global.intercept);
        w.kv("lambda", global.lambda);
        w.number_array("feature_means", global.feature_means.begin(), global.feature_means.end());
        w.number_array("feature_scales", global.feature_scales.begin(), global.feature_scales.end());
        w.end_object();
        w.end_object();
        write_file(detail::join(out_dir, "logistic_global.json"), w.take());
    }
}

inline void stage_explain(const PipelineConfig& cfg, const std::string& in_dir,
                          const std::string& out_dir) {
    const Table ex = detail::read_table_csv(detail::join(in_dir, "extremes_data.csv"),
                                            detail::join(in_dir, "selected_meta.csv"));
    const Forest cls = forest_from_json(
        nlohmann::json::parse(read_file(detail::join(in_dir, "forest_classifier.json"))));
    const Matrix X = to_matrix(ex);

    const BackgroundStats stats = background_stats(X);
    LimeParams lp;
    lp.n_samples = cfg.lime.n_samples;
    lp.kernel_width = cfg.lime.kernel_width;
    lp.surrogate_ridge = cfg.lime.surrogate_ridge;
    lp.seed = derive_seed(cfg.seed, seed_unit::lime);

    const ProbFn prob = [&cls](std::span<const double> x) { return predict_proba(cls, x)[1]; };
    const auto explanations = explain_all(prob, X, stats, lp, ex.row_ids());
    detail::log_stage(cfg, "explain: " + std::to_string(explanations.size()) + " local surrogates");
    write_file(detail::join(out_dir, "explanations.jsonl"), explanations_to_jsonl(explanations));
}

inline void stage_cluster(const PipelineConfig& cfg, const std::string& in_dir,
                          const std::string& out_dir) {
    const Table ex = detail::read_table_csv(detail::join(in_dir, "extremes_data.csv"),
                                            detail::join(in_dir, "selected_meta.csv"));
    const auto explanations =
        explanations_from_jsonl(read_file(detail::join(in_dir, "explanations.jsonl")));
    if (explanations.size() != ex.rows())
        throw data_error("cluster: explanation count does not match extremes rows");

    std::vector<int> y01;
    {
        const CsvContent csv = read_csv(detail::join(in_dir, "extremes_targets.csv"));
        for (const auto& row : csv.rows) {
            const auto v = parse_double(row.at(1));
            if (!v || (*v != 0.0 && *v != 1.0))
                throw data_error("cluster: extremes_targets.csv has a non-binary target");
            y01.push_back(static_cast<int>(*v));
        }
    }
    if (y01.size() != ex.rows()) throw data_error("cluster: target count mismatch");

    std::vector<std::vector<double>> V;
    V.reserve(explanations.size());
    for (const auto& e : explanations) V.push_back(e.coefficients);

    const Clustering initial =
        kmeans(V, cfg.cluster.k, cfg.cluster.n_init, cfg.cluster.max_iter,
               derive_seed(cfg.seed, seed_unit::kmeans));
    const Clustering merged = merge_similar(initial, cfg.cluster.merge_threshold);
    detail::log_stage(cfg, "cluster: " + std::to_string(initial.centroids.size()) + " -> " +
                               std::to_string(merged.centroids.size()) + " clusters after merging");
    write_file(detail::join(out_dir, "clustering.json"), clustering_to_json(merged));

    const auto summaries = summarize(merged, V);
    write_file(detail::join(out_dir, "cluster_summaries.json"), summaries_to_json(summaries));
    write_file(detail::join(out_dir, "cluster_summaries.csv"), summaries_to_csv(summaries));

    // Fig.-4-style plot data: features sorted by wave (stable), one column of
    // centroid coefficients per final cluster.
    {
        std::vector<std::size_t> order(ex.cols());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ex.column(a).wave < ex.column(b).wave;
        });
        std::string csv = "feature_index,name,wave";
        for (std::size_t g = 0; g < merged.centroids.size(); ++g)
            csv += ",cluster_" + std::to_string(g);
        csv += '\n';
        for (const std::size_t f : order) {
            csv += std::to_string(f) + "," + csv_escape(ex.column(f).name) + "," +
                   std::to_string(ex.column(f).wave);
            for (const auto& cent : merged.centroids) csv += "," + format_g9(cent.at(f));
            csv += '\n';
        }
        write_file(detail::join(out_dir, "cluster_centroids_plot.csv"), csv);
    }

    ClusterModelOptions opts;
    opts.min_members = cfg.cluster.min_members;
    opts.n_bootstrap = cfg.cluster.n_bootstrap;
    opts.seed = derive_seed(cfg.seed, seed_unit::cluster_models);
    const Matrix X = to_matrix(ex);
    const auto reports = per_cluster_logistic(X, y01, merged.assignments, cfg.cluster.lambda, opts);
    std::vector<std::string> names;
    for (const auto& m : ex.columns()) names.push_back(m.name);
    write_file(detail::join(out_dir, "cluster_models.json"), cluster_models_to_json(reports, names));
}

inline const std::vector<std::string>& pipeline_artifacts() {
    static const std::vector<std::string> kFiles = {
        "preprocessed_data.csv", "preprocessed_meta.csv", "preprocessed_target.csv",
        "imputed_data.csv",      "selected_features.json", "selection_scores.json",
        "selected_data.csv",     "selected_meta.csv",      "discretization.json",
        "labels.csv",            "extremes_data.csv",      "extremes_targets.csv",
        "mse_report.json",       "forest_classifier.json", "cart_tree.json",
        "cart_tree.dot",         "logistic_global.json",   "explanations.jsonl",
        "clustering.json",       "cluster_summaries.json", "cluster_summaries.csv",
        "cluster_centroids_plot.csv", "cluster_models.json"};
    return kFiles;
}

inline void stage_report(const PipelineConfig& cfg, const std::string& in_dir,
                         const std::string& out_dir) {
    const std::string config_json = cfg.effective_json();
    JsonWriter w;
    w.begin_object();
    w.kv("schema_version", 1);
    w.kv("seed", cfg.seed);
    w.kv("config_hash", fnv1a64_hex(config_json));
    w.key("config");
    // effective_json is already canonical; splice it in verbatim.
    w.raw_value(config_json);
    w.key("artifacts");
    w.begin_array();
    for (const auto& f : pipeline_artifacts()) {
        const std::string path = detail::join(in_dir, f);
        if (!std::filesystem::exists(path)) continue;
        w.begin_object();
        w.kv("file", f);
        w.kv("fnv1a64", hash_file_hex(path));
        w.end_object();
    }
    w.end_array();
    w.end_object();
    write_file(detail::join(out_dir, "run_manifest.json"), w.take());
}

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> kNames = {"preprocess", "impute", "select", "model",
                                                    "explain",    "cluster", "report"};
    return kNames;
}

// Runs one named stage, annotating any failure with the stage name.
inline void run_stage(const std::string& name, const PipelineConfig& cfg, const std::string& in_dir,
                      const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    try {
        if (name == "preprocess") stage_preprocess(cfg, in_dir, out_dir);
        else if (name == "impute") stage_impute(cfg, in_dir, out_dir);
        else if (name == "select") stage_select(cfg, in_dir, out_dir);
        else if (name == "model") stage_model(cfg, in_dir, out_dir);
        else if (name == "explain") stage_explain(cfg, in_dir, out_dir);
        else if (name == "cluster") stage_cluster(cfg, in_dir, out_dir);
        else if (name == "report") stage_report(cfg, in_dir, out_dir);
        else throw config_error("unknown stage '" + name + "'");
    } catch (const config_error& e) {
        throw config_error("stage " + name + ": " + e.what());
    } catch (const data_error& e) {
        throw data_error("stage " + name + ": " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error("stage " + name + ": " + e.what());
    }
}

// The full Fig.-1 flow: preprocess -> impute -> select -> model (discretize,
// extremes, forests, CART, global logistic) -> explain -> cluster -> report.
inline void run_pipeline(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw config_error("output directory not set (config out_dir or --out)");
    for (const auto& name : stage_names()) run_stage(name, cfg, cfg.out_dir, cfg.out_dir);
}

} // namespace explika
