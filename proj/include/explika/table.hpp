#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "explika/errors.hpp"
#include "explika/io.hpp"
#include "explika/linalg.hpp"

namespace explika {

struct ColumnMeta {
    std::string name;
    std::string respondent = "unknown"; // e.g. mother, father, teacher, kid, home visit
    int wave = 0;                       // survey collection round, 0..5
};

enum class Label : int { Low = 0, Middle = 1, Top = 2 };

inline const char* label_name(Label l) {
    switch (l) {
    case Label::Low: return "Low";
    case Label::Middle: return "Middle";
    default: return "Top";
    }
}

struct DiscretizeParams {
    double low_hi = 2.5;  // upper bound of Low
    double top_lo = 3.25; // lower bound of Top
};

// Numeric dataset with an explicit missingness mask. Storage is column-major:
// the pipeline's heavy per-column passes (variance, observed counts, donor
// scans) walk contiguous memory. A cell with mask=false has no meaningful
// value; readers must consult observed() before value().
//
// Tables are immutable once built; every operation returns a new table, so
// read-only sharing across threads is safe.
class Table {
public:
    Table() = default;

    Table(std::size_t rows, std::size_t cols, std::vector<ColumnMeta> columns,
          std::vector<std::string> row_ids)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0), mask_(rows * cols, 0),
          columns_(std::move(columns)), row_ids_(std::move(row_ids)) {
        if (columns_.size() != cols_) throw data_error("Table: column metadata length mismatch");
        if (row_ids_.size() != rows_) throw data_error("Table: row id length mismatch");
        for (const auto& c : columns_) {
            if (c.name.empty()) throw data_error("Table: empty column name");
            if (c.wave < 0 || c.wave > 5)
                throw data_error("Table: wave out of range for column " + c.name);
        }
        std::unordered_set<std::string> seen;
        for (const auto& id : row_ids_) {
            if (!seen.insert(id).second) throw data_error("Table: duplicate row id " + id);
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double value(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return values_[c * rows_ + r];
    }
    bool observed(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return mask_[c * rows_ + r] != 0;
    }
    void set(std::size_t r, std::size_t c, double v) {
        assert(r < rows_ && c < cols_);
        values_[c * rows_ + r] = v;
        mask_[c * rows_ + r] = 1;
    }
    void set_missing(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        values_[c * rows_ + r] = 0.0;
        mask_[c * rows_ + r] = 0;
    }

    std::span<const double> column_values(std::size_t c) const {
        assert(c < cols_);
        return {values_.data() + c * rows_, rows_};
    }
    std::span<const std::uint8_t> column_mask(std::size_t c) const {
        assert(c < cols_);
        return {mask_.data() + c * rows_, rows_};
    }

    const std::vector<ColumnMeta>& columns() const { return columns_; }
    const ColumnMeta& column(std::size_t c) const { return columns_.at(c); }
    const std::vector<std::string>& row_ids() const { return row_ids_; }

    std::size_t observed_count(std::size_t c) const {
        const auto m = column_mask(c);
        std::size_t n = 0;
        for (const auto b : m) n += b;
        return n;
    }

    bool fully_observed() const {
        for (const auto b : mask_)
            if (!b) return false;
        return true;
    }

    Table keep_columns(const std::vector<std::size_t>& cols) const {
        std::vector<ColumnMeta> meta;
        meta.reserve(cols.size());
        for (const auto c : cols) meta.push_back(columns_.at(c));
        Table out(rows_, cols.size(), std::move(meta), row_ids_);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t c = cols[j];
            std::copy_n(values_.data() + c * rows_, rows_, out.values_.data() + j * rows_);
            std::copy_n(mask_.data() + c * rows_, rows_, out.mask_.data() + j * rows_);
        }
        return out;
    }

    Table keep_rows(const std::vector<std::size_t>& rows) const {
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (const auto r : rows) ids.push_back(row_ids_.at(r));
        Table out(rows.size(), cols_, columns_, std::move(ids));
        for (std::size_t c = 0; c < cols_; ++c) {
            for (std::size_t j = 0; j < rows.size(); ++j) {
                const std::size_t r = rows[j];
                out.values_[c * out.rows_ + j] = values_[c * rows_ + r];
                out.mask_[c * out.rows_ + j] = mask_[c * rows_ + r];
            }
        }
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;       // column-major
    std::vector<std::uint8_t> mask_;   // column-major, 1 = observed
    std::vector<ColumnMeta> columns_;
    std::vector<std::string> row_ids_;
};

// Requires a complete table (post-imputation); learners work on dense rows.
inline Matrix to_matrix(const Table& t) {
    if (!t.fully_observed()) throw data_error("to_matrix: table still has missing cells");
    Matrix m(t.rows(), t.cols());
    for (std::size_t c = 0; c < t.cols(); ++c)
        for (std::size_t r = 0; r < t.rows(); ++r) m(r, c) = t.value(r, c);
    return m;
}

// Missing-value codes for CSV ingestion. A cell is missing when it is empty,
// matches one of the code strings verbatim, parses to a number equal to a
// numeric code, or does not parse as a number at all.
struct MissingCodes {
    std::vector<std::string> texts;
    std::vector<double> numbers;

    static MissingCodes from_strings(const std::vector<std::string>& codes) {
        MissingCodes out;
        for (const auto& c : codes) {
            out.texts.push_back(trim(c));
            if (const auto v = parse_double(c)) out.numbers.push_back(*v);
        }
        return out;
    }

    bool matches(const std::string& cell_trimmed, const std::optional<double>& parsed) const {
        for (const auto& t : texts)
            if (cell_trimmed == t) return true;
        if (parsed) {
            for (const auto n : numbers)
                if (*parsed == n) return true;
        }
        return false;
    }
};

// Optional sidecar CSV with columns name,respondent,wave. Columns absent from
// the sidecar keep respondent="unknown", wave=0.
inline std::vector<ColumnMeta> load_metadata_csv(const std::string& path) {
    const CsvContent csv = read_csv(path);
    if (csv.header.size() != 3 || trim(csv.header[0]) != "name" || trim(csv.header[1]) != "respondent" ||
        trim(csv.header[2]) != "wave") {
        throw data_error("metadata sidecar " + path + " must have header name,respondent,wave");
    }
    std::vector<ColumnMeta> out;
    out.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        ColumnMeta m;
        m.name = trim(csv.rows[r][0]);
        m.respondent = trim(csv.rows[r][1]);
        const auto wave = parse_double(csv.rows[r][2]);
        if (!wave || *wave != std::floor(*wave) || *wave < 0 || *wave > 5)
            throw data_error("metadata sidecar " + path + " row " + std::to_string(r + 2) +
                             ": wave must be an integer in [0,5]");
        m.wave = static_cast<int>(*wave);
        out.push_back(std::move(m));
    }
    return out;
}

// Loads a numeric CSV whose first row is a header. Row ids are synthesized as
// decimal row indexes unless id_column names a header column to consume as
// identifiers. Metadata, when given, is matched to columns by name.
inline Table load_csv(const std::string& path, const MissingCodes& missing,
                      const std::string& metadata_path = "", const std::string& id_column = "") {
    const CsvContent csv = read_csv(path);

    std::size_t id_col = csv.header.size();
    std::vector<std::string> names;
    std::vector<std::size_t> data_cols;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        const std::string name = trim(csv.header[c]);
        if (!id_column.empty() && name == id_column && id_col == csv.header.size()) {
            id_col = c;
            continue;
        }
        names.push_back(name);
        data_cols.push_back(c);
    }
    if (!id_column.empty() && id_col == csv.header.size())
        throw data_error("load_csv: id column '" + id_column + "' not found in " + path);

    {
        std::unordered_set<std::string> seen;
        for (const auto& n : names) {
            if (n.empty()) throw data_error("load_csv: empty column name in " + path);
            if (!seen.insert(n).second)
                throw data_error("load_csv: duplicate column name '" + n + "' in " + path);
        }
    }

    std::vector<ColumnMeta> meta(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) meta[c].name = names[c];
    if (!metadata_path.empty()) {
        const auto sidecar = load_metadata_csv(metadata_path);
        for (std::size_t c = 0; c < names.size(); ++c) {
            for (const auto& m : sidecar) {
                if (m.name == names[c]) {
                    meta[c] = m;
                    break;
                }
            }
        }
    }

    std::vector<std::string> row_ids;
    row_ids.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        row_ids.push_back(id_col < csv.header.size() ? trim(csv.rows[r][id_col]) : std::to_string(r));
    }

    Table t(csv.rows.size(), names.size(), std::move(meta), std::move(row_ids));
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        for (std::size_t j = 0; j < data_cols.size(); ++j) {
            const std::string cell = trim(csv.rows[r][data_cols[j]]);
            if (cell.empty()) continue;
            const auto parsed = parse_double(cell);
            if (missing.matches(cell, parsed) || !parsed) continue;
            t.set(r, j, *parsed);
        }
    }
    return t;
}

// Survey convention: negative values are response codes (refused, not asked,
// ...), not measurements. Columns listed in exempt_columns keep their
// negative values.
inline Table mask_negative_values(const Table& t, const std::set<std::size_t>& exempt_columns = {}) {
    Table out = t;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        if (exempt_columns.count(c)) continue;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            if (out.observed(r, c) && out.value(r, c) < 0.0) out.set_missing(r, c);
        }
    }
    return out;
}

// Removes columns whose observed values are all equal. Columns with fewer
// than 2 observed cells carry no signal and count as zero-variance.
inline Table drop_zero_variance(const Table& t) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        double first = 0.0;
        bool have_first = false;
        bool varies = false;
        std::size_t observed = 0;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            if (!t.observed(r, c)) continue;
            ++observed;
            if (!have_first) {
                first = t.value(r, c);
                have_first = true;
            } else if (t.value(r, c) != first) {
                varies = true;
            }
        }
        if (observed >= 2 && varies) keep.push_back(c);
    }
    return t.keep_columns(keep);
}

// Keeps exactly the columns with at least min_count observed cells.
inline Table filter_min_observed(const Table& t, std::size_t min_count = 400) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        if (t.observed_count(c) >= min_count) keep.push_back(c);
    }
    return t.keep_columns(keep);
}

// Maps GPA in [1,4] onto Low / Middle / Top:
//   gpa <= low_hi -> Low, low_hi < gpa < top_lo -> Middle, gpa >= top_lo -> Top.
inline std::vector<Label> discretize_target(const std::vector<double>& gpa,
                                            const DiscretizeParams& p = {}) {
    if (!(p.low_hi < p.top_lo)) throw config_error("discretize_target: low_hi must be below top_lo");
    std::vector<Label> out;
    out.reserve(gpa.size());
    for (std::size_t i = 0; i < gpa.size(); ++i) {
        const double g = gpa[i];
        if (!std::isfinite(g) || g < 1.0 || g > 4.0)
            throw data_error("discretize_target: gpa outside [1,4] at row " + std::to_string(i));
        if (g <= p.low_hi) out.push_back(Label::Low);
        else if (g >= p.top_lo) out.push_back(Label::Top);
        else out.push_back(Label::Middle);
    }
    return out;
}

// Linear-interpolation quantile of sorted data at fraction p in [0,1].
inline double interpolated_quantile(std::vector<double> v, double p) {
    if (v.empty()) throw data_error("quantile of empty vector");
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

// Thresholds at the bottom q and top q percentiles of the GPA distribution.
inline DiscretizeParams percentile_thresholds(const std::vector<double>& gpa, double q = 0.3) {
    if (!(q > 0.0 && q < 0.5)) throw config_error("percentile_thresholds: q must be in (0, 0.5)");
    if (gpa.size() < 10) throw data_error("percentile_thresholds: need at least 10 values");
    DiscretizeParams p;
    p.low_hi = interpolated_quantile(gpa, q);
    p.top_lo = interpolated_quantile(gpa, 1.0 - q);
    if (!(p.low_hi < p.top_lo))
        throw data_error("percentile_thresholds: degenerate distribution, thresholds coincide");
    return p;
}

struct ExtremesResult {
    Table table;
    std::vector<int> targets; // Low -> 0, Top -> 1, aligned with table rows
};

// Drops Middle rows so the classifiers see only the extreme classes.
inline ExtremesResult select_extremes(const Table& t, const std::vector<Label>& labels) {
    if (labels.size() != t.rows()) throw data_error("select_extremes: label length mismatch");
    std::vector<std::size_t> keep;
    std::vector<int> targets;
    std::size_t n_low = 0, n_top = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == Label::Middle) continue;
        keep.push_back(r);
        const int y = labels[r] == Label::Top ? 1 : 0;
        targets.push_back(y);
        if (y) ++n_top;
        else ++n_low;
    }
    if (n_low < 2 || n_top < 2)
        throw data_error("select_extremes: need at least 2 rows in each extreme class (Low=" +
                         std::to_string(n_low) + ", Top=" + std::to_string(n_top) + ")");
    return {t.keep_rows(keep), std::move(targets)};
}

} // namespace explika
