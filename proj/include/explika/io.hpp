#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "explika/errors.hpp"

namespace explika {

// ---------------------------------------------------------------------------
// Number formatting. All numeric output is serialized with 9 significant
// digits, which also keeps artifacts byte-stable across runs.
// ---------------------------------------------------------------------------

inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
    // Trim ASCII whitespace; std::from_chars accepts no leading spaces.
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

inline std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180 quoting)
// ---------------------------------------------------------------------------

struct CsvContent {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Parses the whole file; first record is the header. Quotes, embedded commas,
// escaped quotes and CRLF line ends are handled; ragged records are an error.
inline CsvContent read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open CSV file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started && field.empty()) {
                in_quotes = true;
                field_started = true;
            } else {
                field.push_back(c);
            }
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw data_error("unterminated quoted field in CSV file: " + path);
    if (field_started || !field.empty() || !record.empty()) end_record();

    if (records.empty()) throw data_error("empty CSV file: " + path);

    CsvContent out;
    out.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != out.header.size()) {
            throw data_error("ragged CSV row " + std::to_string(r + 1) + " in " + path + ": expected " +
                             std::to_string(out.header.size()) + " fields, got " +
                             std::to_string(records[r].size()));
        }
        out.rows.push_back(std::move(records[r]));
    }
    return out;
}

inline std::string csv_escape(std::string_view s) {
    const bool needs_quotes = s.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(fields[i]);
    }
    os << '\n';
}

// ---------------------------------------------------------------------------
// Minimal JSON writer. nlohmann::json is used for *parsing*; artifacts are
// emitted through this writer so every double goes out as %.9g with a fixed
// key order.
// ---------------------------------------------------------------------------

class JsonWriter {
public:
    std::string take() { return std::move(out_); }
    const std::string& str() const { return out_; }

    void begin_object() { separator(); out_ += '{'; stack_.push_back(State::Object); first_ = true; }
    void end_object() { out_ += '}'; pop(); }
    void begin_array() { separator(); out_ += '['; stack_.push_back(State::Array); first_ = true; }
    void end_array() { out_ += ']'; pop(); }

    void key(std::string_view k) {
        separator();
        append_string(k);
        out_ += ':';
        pending_value_ = true;
    }

    void value(double v) { separator(); out_ += format_g9(v); }
    void value(std::int64_t v) { separator(); out_ += std::to_string(v); }
    void value(std::uint64_t v) { separator(); out_ += std::to_string(v); }
    void value(int v) { value(static_cast<std::int64_t>(v)); }
    void value(unsigned v) { value(static_cast<std::uint64_t>(v)); }
    void value(bool v) { separator(); out_ += v ? "true" : "false"; }
    void value(std::string_view v) { separator(); append_string(v); }
    void value(const char* v) { value(std::string_view(v)); }
    void null() { separator(); out_ += "null"; }

    // Splices pre-serialized JSON in as a value.
    void raw_value(std::string_view json) { separator(); out_ += json; }

    template <class T>
    void kv(std::string_view k, const T& v) {
        key(k);
        value(v);
    }

    template <class It>
    void number_array(std::string_view k, It begin, It end) {
        key(k);
        begin_array();
        for (It it = begin; it != end; ++it) value(*it);
        end_array();
    }

private:
    enum class State { Object, Array };

    void separator() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!stack_.empty() && !first_) out_ += ',';
        first_ = false;
    }
    void pop() {
        stack_.pop_back();
        first_ = false;
        pending_value_ = false;
    }
    void append_string(std::string_view s) {
        out_ += '"';
        for (const char c : s) {
            switch (c) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\r': out_ += "\\r"; break;
            case '\t': out_ += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out_ += buf;
                } else {
                    out_ += c;
                }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<State> stack_;
    bool first_ = true;
    bool pending_value_ = false;
};

// ---------------------------------------------------------------------------
// Files and hashing
// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw data_error("failed writing file: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string hash_file_hex(const std::string& path) {
    return fnv1a64_hex(read_file(path));
}

} // namespace explika
