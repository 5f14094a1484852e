#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/learn.hpp"
#include "explika/parallel.hpp"
#include "explika/rng.hpp"

namespace explika {

struct Clustering {
    std::vector<std::size_t> assignments;      // per subject, references centroids
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    std::vector<std::size_t> merge_map; // original cluster id -> final id
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

// Lloyd's algorithm with k-means++ seeding, best of n_init restarts. All
// seeded choices, tie-breaks and accumulation orders are keyed to the
// lexicographic order of the input vectors, so permuting the inputs permutes
// the assignments and nothing else. inertia_traces, when given, receives one
// per-iteration inertia sequence per restart.
inline Clustering kmeans(const std::vector<std::vector<double>>& V, std::size_t k,
                         std::size_t n_init = 10, std::size_t max_iter = 300,
                         std::uint64_t seed = 0,
                         std::vector<std::vector<double>>* inertia_traces = nullptr) {
    if (k < 1) throw config_error("kmeans: k must be at least 1");
    if (V.size() < k)
        throw data_error("kmeans: need at least k=" + std::to_string(k) + " vectors, got " +
                         std::to_string(V.size()));
    if (n_init < 1) throw config_error("kmeans: n_init must be at least 1");
    const std::size_t n = V.size();
    const std::size_t dim = V.front().size();
    for (const auto& v : V) {
        if (v.size() != dim) throw data_error("kmeans: inconsistent vector dimensions");
    }

    std::vector<std::size_t> canon(n);
    std::iota(canon.begin(), canon.end(), std::size_t{0});
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        if (V[a] != V[b]) return V[a] < V[b];
        return a < b;
    });
    std::vector<const std::vector<double>*> W(n); // canonical view of the data
    for (std::size_t i = 0; i < n; ++i) W[i] = &V[canon[i]];

    std::vector<std::vector<double>> best_centroids;
    std::vector<std::size_t> best_assign;
    double best_inertia = 0.0;
    bool have_best = false;

    for (std::size_t init = 0; init < n_init; ++init) {
        Rng rng = make_rng(seed, init);

        // k-means++ seeding over the canonical view.
        std::vector<std::vector<double>> centroids;
        centroids.reserve(k);
        centroids.push_back(*W[uniform_index(rng, n)]);
        std::vector<double> d2(n);
        while (centroids.size() < k) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double best = detail::sq_dist(*W[i], centroids.front());
                for (std::size_t c = 1; c < centroids.size(); ++c)
                    best = std::min(best, detail::sq_dist(*W[i], centroids[c]));
                d2[i] = best;
                total += best;
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                const double r = uniform01(rng) * total;
                double cum = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    cum += d2[i];
                    if (cum > r) {
                        pick = i;
                        break;
                    }
                }
            }
            centroids.push_back(*W[pick]);
        }

        std::vector<std::size_t> assign(n, 0);
        std::vector<std::size_t> counts(k, 0);
        double inertia = 0.0;
        double prev_inertia = 0.0;
        bool have_prev = false;
        if (inertia_traces) inertia_traces->emplace_back();

        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            bool changed = iter == 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best_c = 0;
                double best_d = detail::sq_dist(*W[i], centroids[0]);
                for (std::size_t c = 1; c < k; ++c) {
                    const double d = detail::sq_dist(*W[i], centroids[c]);
                    if (d < best_d) { // ties keep the lower centroid index
                        best_d = d;
                        best_c = c;
                    }
                }
                if (assign[i] != best_c) {
                    assign[i] = best_c;
                    changed = true;
                }
            }

            for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
            std::fill(counts.begin(), counts.end(), std::size_t{0});
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = assign[i];
                ++counts[c];
                for (std::size_t j = 0; j < dim; ++j) centroids[c][j] += (*W[i])[j];
            }

            // Empty clusters reseed from the farthest point (ties: lower
            // canonical rank), one point per empty cluster.
            std::vector<std::uint8_t> claimed(n, 0);
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    const double inv = 1.0 / static_cast<double>(counts[c]);
                    for (std::size_t j = 0; j < dim; ++j) centroids[c][j] *= inv;
                }
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] > 0) continue;
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (claimed[i] || counts[assign[i]] <= 1) continue;
                    const double d = detail::sq_dist(*W[i], centroids[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                claimed[far_i] = 1;
                --counts[assign[far_i]];
                centroids[c] = *W[far_i];
                assign[far_i] = c;
                counts[c] = 1;
                changed = true;
            }

            inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                inertia += detail::sq_dist(*W[i], centroids[assign[i]]);
            // Lloyd iterations never increase the objective.
            assert(!have_prev || inertia <= prev_inertia + 1e-9 * (1.0 + prev_inertia));
            prev_inertia = inertia;
            have_prev = true;
            if (inertia_traces) inertia_traces->back().push_back(inertia);

            if (!changed) break;
        }

        if (!have_best || inertia < best_inertia) {
            have_best = true;
            best_inertia = inertia;
            best_centroids = centroids;
            best_assign = assign;
        }
    }

    Clustering out;
    out.centroids = std::move(best_centroids);
    out.inertia = best_inertia;
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignments[canon[i]] = best_assign[i];
    out.merge_map.resize(k);
    std::iota(out.merge_map.begin(), out.merge_map.end(), std::size_t{0});
    return out;
}

// Iteratively merges the most cosine-similar centroid pair while similarity
// reaches the threshold. Merged centroid is the size-weighted mean; the
// inertia update uses the parallel-axis theorem, so no member vectors are
// needed. Final ids are contiguous, ordered by smallest original id.
inline Clustering merge_similar(const Clustering& c, double threshold = 0.95) {
    struct Group {
        std::vector<std::size_t> current_ids; // pre-merge centroid ids
        std::vector<double> centroid;
        std::size_t size = 0;
    };

    std::vector<std::size_t> sizes(c.centroids.size(), 0);
    for (const std::size_t a : c.assignments) sizes.at(a)++;

    std::vector<Group> groups;
    for (std::size_t i = 0; i < c.centroids.size(); ++i)
        groups.push_back({{i}, c.centroids[i], sizes[i]});

    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        const double na = std::sqrt(dot(a, a));
        const double nb = std::sqrt(dot(b, b));
        if (na == 0.0 || nb == 0.0) return -1.0; // zero centroids carry no direction
        if (a == b) return 1.0; // exact duplicates must clear a threshold of 1
        return dot(a, b) / (na * nb);
    };

    double inertia = c.inertia;
    while (groups.size() >= 2) {
        std::size_t bi = 0, bj = 1;
        double best = -2.0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                const double cs = cosine(groups[i].centroid, groups[j].centroid);
                if (cs > best) {
                    best = cs;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best < threshold) break;

        Group& a = groups[bi];
        Group& b = groups[bj];
        const double na = static_cast<double>(a.size);
        const double nb = static_cast<double>(b.size);
        std::vector<double> merged(a.centroid.size(), 0.0);
        if (a.size + b.size > 0) {
            for (std::size_t j = 0; j < merged.size(); ++j)
                merged[j] = (na * a.centroid[j] + nb * b.centroid[j]) / (na + nb);
        }
        inertia += na * detail::sq_dist(a.centroid, merged) + nb * detail::sq_dist(b.centroid, merged);
        a.centroid = std::move(merged);
        a.size += b.size;
        a.current_ids.insert(a.current_ids.end(), b.current_ids.begin(), b.current_ids.end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    std::vector<std::size_t> current_to_final(c.centroids.size(), 0);
    Clustering out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const std::size_t id : groups[g].current_ids) current_to_final[id] = g;
        out.centroids.push_back(groups[g].centroid);
    }
    out.inertia = inertia;
    out.assignments.resize(c.assignments.size());
    for (std::size_t i = 0; i < c.assignments.size(); ++i)
        out.assignments[i] = current_to_final[c.assignments[i]];
    out.merge_map.resize(c.merge_map.size());
    for (std::size_t orig = 0; orig < c.merge_map.size(); ++orig)
        out.merge_map[orig] = current_to_final[c.merge_map[orig]];
    return out;
}

// ---------------------------------------------------------------------------
// Centroid summaries (per-cluster min/max/mean/mode and counts at the
// extremes, plus the member-mean vector)
// ---------------------------------------------------------------------------

struct ClusterSummary {
    std::size_t cluster_id = 0;
    std::size_t size = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double mode = 0.0; // most frequent value after rounding to 4 decimals
    std::size_t count_min = 0;
    std::size_t count_max = 0;
    std::vector<double> member_mean;
};

inline std::vector<ClusterSummary> summarize(const Clustering& c,
                                             const std::vector<std::vector<double>>& V) {
    if (V.size() != c.assignments.size()) throw data_error("summarize: vector count mismatch");
    std::vector<ClusterSummary> out;
    for (std::size_t g = 0; g < c.centroids.size(); ++g) {
        const auto& cent = c.centroids[g];
        if (cent.empty()) throw data_error("summarize: empty centroid");
        ClusterSummary s;
        s.cluster_id = g;
        s.min = cent.front();
        s.max = cent.front();
        double sum = 0.0;
        for (const double v : cent) {
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / static_cast<double>(cent.size());
        for (const double v : cent) {
            if (v == s.min) ++s.count_min;
            if (v == s.max) ++s.count_max;
        }
        std::map<double, std::size_t> freq; // rounded value -> count
        for (const double v : cent) freq[std::round(v * 1e4) / 1e4]++;
        std::size_t best_count = 0;
        for (const auto& [value, count] : freq) {
            if (count > best_count) { // ascending keys: ties keep the smaller value
                best_count = count;
                s.mode = value;
            }
        }
        s.member_mean.assign(cent.size(), 0.0);
        for (std::size_t i = 0; i < V.size(); ++i) {
            if (c.assignments[i] != g) continue;
            ++s.size;
            for (std::size_t j = 0; j < cent.size(); ++j) s.member_mean[j] += V[i][j];
        }
        if (s.size > 0) {
            for (auto& v : s.member_mean) v /= static_cast<double>(s.size);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-cluster sparse logistic models
// ---------------------------------------------------------------------------

struct SignificantFeature {
    std::size_t feature = 0;
    double coefficient = 0.0; // standardized-space weight from the full fit
};

struct ClusterModelReport {
    std::size_t cluster_id = 0;
    std::size_t size = 0;
    bool skipped = false;
    std::string skip_reason;
    LinearModel model;
    std::vector<SignificantFeature> significant; // |coefficient| descending
};

struct ClusterModelOptions {
    std::size_t min_members = 10;
    std::size_t n_bootstrap = 100;
    double sign_stability = 0.9; // fraction of refits that must agree in sign
    double coef_threshold = 1e-6;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    std::size_t max_iter = 5000;
};

namespace detail {
inline int coef_sign(double v) {
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
}
} // namespace detail

// Fits an L1 logistic model per final cluster. "Significant" features carry a
// coefficient above the threshold whose sign is stable across the required
// fraction of stratified bootstrap refits. Thin clusters and single-class
// clusters are reported as skipped, not errors.
inline std::vector<ClusterModelReport> per_cluster_logistic(const Matrix& X,
                                                            const std::vector<int>& y01,
                                                            const std::vector<std::size_t>& assignments,
                                                            double lambda,
                                                            const ClusterModelOptions& opts = {}) {
    if (X.rows() != y01.size() || X.rows() != assignments.size())
        throw data_error("per_cluster_logistic: shape mismatch");
    std::size_t n_clusters = 0;
    for (const std::size_t a : assignments) n_clusters = std::max(n_clusters, a + 1);

    std::vector<ClusterModelReport> out;
    for (std::size_t g = 0; g < n_clusters; ++g) {
        ClusterModelReport rep;
        rep.cluster_id = g;
        std::vector<std::size_t> class_rows[2];
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i] == g) class_rows[y01[i]].push_back(i);
        }
        rep.size = class_rows[0].size() + class_rows[1].size();
        if (rep.size < opts.min_members) {
            rep.skipped = true;
            rep.skip_reason = "fewer than " + std::to_string(opts.min_members) + " members";
            out.push_back(std::move(rep));
            continue;
        }
        if (class_rows[0].empty() || class_rows[1].empty()) {
            rep.skipped = true;
            rep.skip_reason = "single class";
            out.push_back(std::move(rep));
            continue;
        }

        auto subproblem = [&](const std::vector<std::size_t>& rows) {
            Matrix sx(rows.size(), X.cols());
            std::vector<int> sy(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                for (std::size_t j = 0; j < X.cols(); ++j) sx(i, j) = X(rows[i], j);
                sy[i] = y01[rows[i]];
            }
            return std::make_pair(std::move(sx), std::move(sy));
        };

        std::vector<std::size_t> members = class_rows[0];
        members.insert(members.end(), class_rows[1].begin(), class_rows[1].end());
        std::sort(members.begin(), members.end());
        const auto [mx, my] = subproblem(members);
        rep.model = fit_logistic_l1(mx, my, lambda, opts.tol, opts.max_iter);

        // Stratified bootstrap keeps both classes in every refit.
        std::vector<std::vector<int>> signs(opts.n_bootstrap);
        parallel_for(opts.n_bootstrap, [&](std::size_t b) {
            Rng rng(derive_seed(opts.seed, g, b));
            std::vector<std::size_t> rows;
            rows.reserve(members.size());
            for (const auto& cls : class_rows) {
                for (std::size_t i = 0; i < cls.size(); ++i)
                    rows.push_back(cls[uniform_index(rng, cls.size())]);
            }
            const auto [bx, by] = subproblem(rows);
            const LinearModel bm = fit_logistic_l1(bx, by, lambda, opts.tol, opts.max_iter);
            std::vector<int> s(bm.weights.size());
            for (std::size_t j = 0; j < bm.weights.size(); ++j)
                s[j] = detail::coef_sign(bm.weights[j]);
            signs[b] = std::move(s);
        });

        for (std::size_t j = 0; j < rep.model.weights.size(); ++j) {
            const double w = rep.model.weights[j];
            if (std::abs(w) <= opts.coef_threshold) continue;
            const int want = detail::coef_sign(w);
            std::size_t agree = 0;
            for (const auto& s : signs) agree += s[j] == want ? 1 : 0;
            if (static_cast<double>(agree) >=
                opts.sign_stability * static_cast<double>(opts.n_bootstrap)) {
                rep.significant.push_back({j, w});
            }
        }
        std::sort(rep.significant.begin(), rep.significant.end(),
                  [](const SignificantFeature& a, const SignificantFeature& b) {
                      const double ma = std::abs(a.coefficient), mb = std::abs(b.coefficient);
                      if (ma != mb) return ma > mb;
                      return a.feature < b.feature;
                  });
        out.push_back(std::move(rep));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string clustering_to_json(const Clustering& c) {
    JsonWriter w;
    w.begin_object();
    w.number_array("assignments", c.assignments.begin(), c.assignments.end());
    w.key("centroids");
    w.begin_array();
    for (const auto& cent : c.centroids) {
        w.begin_array();
        for (const double v : cent) w.value(v);
        w.end_array();
    }
    w.end_array();
    w.kv("inertia", c.inertia);
    w.number_array("merge_map", c.merge_map.begin(), c.merge_map.end());
    w.end_object();
    return w.take();
}

inline Clustering clustering_from_json(const nlohmann::json& j) {
    Clustering c;
    c.assignments = j.at("assignments").get<std::vector<std::size_t>>();
    c.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    c.inertia = j.at("inertia").get<double>();
    c.merge_map = j.at("merge_map").get<std::vector<std::size_t>>();
    return c;
}

inline std::string summaries_to_json(const std::vector<ClusterSummary>& list) {
    JsonWriter w;
    w.begin_array();
    for (const auto& s : list) {
        w.begin_object();
        w.kv("cluster_id", s.cluster_id);
        w.kv("size", s.size);
        w.kv("min", s.min);
        w.kv("max", s.max);
        w.kv("mean", s.mean);
        w.kv("mode", s.mode);
        w.kv("count_min", s.count_min);
        w.kv("count_max", s.count_max);
        w.number_array("member_mean", s.member_mean.begin(), s.member_mean.end());
        w.end_object();
    }
    w.end_array();
    return w.take();
}

// One row per cluster: id,size,min,max,mean,mode,count_min,count_max.
inline std::string summaries_to_csv(const std::vector<ClusterSummary>& list) {
    std::string out = "id,size,min,max,mean,mode,count_min,count_max\n";
    for (const auto& s : list) {
        out += std::to_string(s.cluster_id) + "," + std::to_string(s.size) + "," + format_g9(s.min) +
               "," + format_g9(s.max) + "," + format_g9(s.mean) + "," + format_g9(s.mode) + "," +
               std::to_string(s.count_min) + "," + std::to_string(s.count_max) + "\n";
    }
    return out;
}

inline std::string cluster_models_to_json(const std::vector<ClusterModelReport>& reports,
                                          const std::vector<std::string>& feature_names = {}) {
    JsonWriter w;
    w.begin_array();
    for (const auto& r : reports) {
        w.begin_object();
        w.kv("cluster_id", r.cluster_id);
        w.kv("size", r.size);
        w.kv("skipped", r.skipped);
        if (r.skipped) {
            w.kv("skip_reason", r.skip_reason);
        } else {
            w.key("significant");
            w.begin_array();
            for (const auto& f : r.significant) {
                w.begin_object();
                w.kv("feature", f.feature);
                if (f.feature < feature_names.size()) w.kv("name", feature_names[f.feature]);
                w.kv("coefficient", f.coefficient);
                w.end_object();
            }
            w.end_array();
            w.key("model");
            w.begin_object();
            w.number_array("weights", r.model.weights.begin(), r.model.weights.end());
            w.kv("intercept", r.model.intercept);
            w.kv("lambda", r.model.lambda);
            w.number_array("feature_means", r.model.feature_means.begin(), r.model.feature_means.end());
            w.number_array("feature_scales", r.model.feature_scales.begin(),
                           r.model.feature_scales.end());
            w.end_object();
        }
        w.end_object();
    }
    w.end_array();
    return w.take();
}

} // namespace explika
