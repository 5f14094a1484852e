#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/learn.hpp"
#include "explika/rng.hpp"
#include "explika/table.hpp"

namespace explika {

// Planted-truth benchmark: each subgroup's GPA is driven by its own subset of
// the informative features,
//   gpa = clip(1 + 3*sigmoid(sum_j w_j x_j + noise), 1, 4),
// with MCAR masking on the feature matrix. Active sets index informative
// slots; the generator draws the actual column positions.
//
// subgroup_separation > 0 additionally shifts each subgroup's mean on its own
// active features, along a direction orthogonal to that subgroup's weights.
// The shift makes membership learnable from the features without changing
// any subject's outcome distribution (the score w.x is shift-invariant).
// Active sets with fewer than 2 features admit no orthogonal direction and
// are left unshifted.
struct SyntheticSpec {
    std::size_t rows = 0;
    std::size_t features = 0;
    std::size_t informative = 0;
    std::vector<std::vector<std::size_t>> subgroups; // active informative slots per subgroup
    double noise = 0.1;
    double missing_rate = 0.0;
    double subgroup_separation = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (rows < 1) throw config_error("synthetic spec: rows must be positive");
        if (features < 1) throw config_error("synthetic spec: features must be positive");
        if (informative < 1 || informative > features)
            throw config_error("synthetic spec: informative must be in [1, features]");
        if (subgroups.empty()) throw config_error("synthetic spec: need at least one subgroup");
        for (const auto& g : subgroups) {
            if (g.empty()) throw config_error("synthetic spec: empty active set");
            for (const std::size_t slot : g) {
                if (slot >= informative)
                    throw config_error("synthetic spec: active set references slot " +
                                       std::to_string(slot) + " outside the informative range");
            }
        }
        if (!(noise >= 0.0)) throw config_error("synthetic spec: noise must be non-negative");
        if (!(missing_rate >= 0.0 && missing_rate < 1.0))
            throw config_error("synthetic spec: missing_rate must be in [0,1)");
        if (!(subgroup_separation >= 0.0))
            throw config_error("synthetic spec: subgroup_separation must be non-negative");
    }

    static SyntheticSpec from_json(const nlohmann::json& j);
};

struct SyntheticData {
    Table table;                             // features with MCAR mask applied
    std::vector<double> gpa;                 // in [1,4]
    std::vector<std::size_t> subgroup_of_row;
    std::vector<std::size_t> informative_columns;         // per informative slot
    std::vector<std::vector<std::size_t>> active_columns; // per subgroup, actual column ids
    std::vector<double> slot_weights;                     // per informative slot
    std::vector<std::vector<double>> subgroup_shifts;     // per subgroup, per active slot
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, 0xda7a));

    SyntheticData out;
    out.informative_columns = sample_without_replacement(rng, spec.features, spec.informative);
    std::sort(out.informative_columns.begin(), out.informative_columns.end());

    out.slot_weights.resize(spec.informative);
    for (auto& w : out.slot_weights) {
        w = uniform_real(rng, 1.5, 2.5) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    }

    out.active_columns.resize(spec.subgroups.size());
    for (std::size_t g = 0; g < spec.subgroups.size(); ++g) {
        for (const std::size_t slot : spec.subgroups[g])
            out.active_columns[g].push_back(out.informative_columns[slot]);
        std::sort(out.active_columns[g].begin(), out.active_columns[g].end());
    }

    // Per-group mean shift orthogonal to the group's weight vector:
    // u = (-w1, w0, 0, ...) is orthogonal to w for any active set of >= 2,
    // scaled to length subgroup_separation.
    out.subgroup_shifts.resize(spec.subgroups.size());
    for (std::size_t g = 0; g < spec.subgroups.size(); ++g) {
        const auto& slots = spec.subgroups[g];
        out.subgroup_shifts[g].assign(slots.size(), 0.0);
        if (spec.subgroup_separation > 0.0 && slots.size() >= 2) {
            const double w0 = out.slot_weights[slots[0]];
            const double w1 = out.slot_weights[slots[1]];
            const double norm = std::sqrt(w0 * w0 + w1 * w1);
            out.subgroup_shifts[g][0] = -spec.subgroup_separation * w1 / norm;
            out.subgroup_shifts[g][1] = spec.subgroup_separation * w0 / norm;
        }
    }

    std::vector<ColumnMeta> meta(spec.features);
    static const char* kRespondents[] = {"mother", "father", "teacher", "kid", "home visit"};
    for (std::size_t c = 0; c < spec.features; ++c) {
        meta[c].name = "f" + std::to_string(c);
        meta[c].respondent = kRespondents[c % 5];
        meta[c].wave = static_cast<int>(c % 6);
    }
    std::vector<std::string> row_ids(spec.rows);
    for (std::size_t r = 0; r < spec.rows; ++r) row_ids[r] = std::to_string(r);

    Matrix X(spec.rows, spec.features);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.features; ++c) X(r, c) = normal01(rng);

    out.subgroup_of_row.resize(spec.rows);
    out.gpa.resize(spec.rows);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        const std::size_t g = static_cast<std::size_t>(uniform_index(rng, spec.subgroups.size()));
        out.subgroup_of_row[r] = g;
        for (std::size_t a = 0; a < spec.subgroups[g].size(); ++a) {
            const std::size_t slot = spec.subgroups[g][a];
            X(r, out.informative_columns[slot]) += out.subgroup_shifts[g][a];
        }
        double score = spec.noise * normal01(rng);
        for (const std::size_t slot : spec.subgroups[g])
            score += out.slot_weights[slot] * X(r, out.informative_columns[slot]);
        out.gpa[r] = std::clamp(1.0 + 3.0 * sigmoid(score), 1.0, 4.0);
    }

    Table t(spec.rows, spec.features, std::move(meta), std::move(row_ids));
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.features; ++c) {
            if (spec.missing_rate > 0.0 && uniform01(rng) < spec.missing_rate) continue;
            t.set(r, c, X(r, c));
        }
    }
    out.table = std::move(t);
    return out;
}

inline SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    static const char* kKnown[] = {"rows",  "features",     "informative",          "subgroups",
                                   "noise", "missing_rate", "subgroup_separation", "seed"};
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : kKnown) known = known || key == k;
        if (!known) throw config_error("synthetic spec: unknown key '" + key + "'");
    }
    SyntheticSpec spec;
    try {
        spec.rows = j.at("rows").get<std::size_t>();
        spec.features = j.at("features").get<std::size_t>();
        spec.informative = j.at("informative").get<std::size_t>();
        spec.subgroups = j.at("subgroups").get<std::vector<std::vector<std::size_t>>>();
        if (j.contains("noise")) spec.noise = j.at("noise").get<double>();
        if (j.contains("missing_rate")) spec.missing_rate = j.at("missing_rate").get<double>();
        if (j.contains("subgroup_separation"))
            spec.subgroup_separation = j.at("subgroup_separation").get<double>();
        spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("synthetic spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

// Writes data.csv / meta.csv / target.csv / ground_truth.json into out_dir.
inline void write_synthetic_dataset(const SyntheticData& d, const std::string& out_dir) {
    const Table& t = d.table;
    {
        std::string csv;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (c) csv += ',';
            csv += csv_escape(t.column(c).name);
        }
        csv += '\n';
        for (std::size_t r = 0; r < t.rows(); ++r) {
            for (std::size_t c = 0; c < t.cols(); ++c) {
                if (c) csv += ',';
                if (t.observed(r, c)) csv += format_g9(t.value(r, c));
            }
            csv += '\n';
        }
        write_file(out_dir + "/data.csv", csv);
    }
    {
        std::string csv = "name,respondent,wave\n";
        for (std::size_t c = 0; c < t.cols(); ++c) {
            const ColumnMeta& m = t.column(c);
            csv += csv_escape(m.name) + "," + csv_escape(m.respondent) + "," +
                   std::to_string(m.wave) + "\n";
        }
        write_file(out_dir + "/meta.csv", csv);
    }
    {
        std::string csv = "gpa\n";
        for (const double g : d.gpa) csv += format_g9(g) + "\n";
        write_file(out_dir + "/target.csv", csv);
    }
    {
        JsonWriter w;
        w.begin_object();
        w.number_array("informative_columns", d.informative_columns.begin(),
                       d.informative_columns.end());
        w.key("active_columns");
        w.begin_array();
        for (const auto& g : d.active_columns) {
            w.begin_array();
            for (const std::size_t c : g) w.value(c);
            w.end_array();
        }
        w.end_array();
        w.number_array("subgroup_of_row", d.subgroup_of_row.begin(), d.subgroup_of_row.end());
        w.number_array("slot_weights", d.slot_weights.begin(), d.slot_weights.end());
        w.key("subgroup_shifts");
        w.begin_array();
        for (const auto& g : d.subgroup_shifts) {
            w.begin_array();
            for (const double v : g) w.value(v);
            w.end_array();
        }
        w.end_array();
        w.end_object();
        write_file(out_dir + "/ground_truth.json", w.take());
    }
}

} // namespace explika
