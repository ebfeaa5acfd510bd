#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "avsig/common.hpp"

namespace avsig {

// RFC-4180-style delimited text: fields may be quoted with '"', embedded
// quotes are doubled, quoted fields may contain separators and newlines.

class CsvReader {
public:
    explicit CsvReader(std::istream& in, char sep = ',') : in_(in), sep_(sep) {}

    /// Reads one record. Returns false on clean EOF. Throws ValidationError
    /// on an unterminated quoted field. line() is the 1-based line the
    /// record started on.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        if (c == EOF) return false;
        record_line_ = line_;
        std::string field;
        bool in_quotes = false;
        bool quoted_field = false;
        while (true) {
            if (c == EOF) {
                if (in_quotes)
                    throw ValidationError("line " + std::to_string(record_line_) +
                                          ": unterminated quoted field");
                fields.push_back(std::move(field));
                return true;
            }
            char ch = static_cast<char>(c);
            if (in_quotes) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        field += '"';
                        in_.get();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (ch == '\n') ++line_;
                    field += ch;
                }
            } else if (ch == '"' && field.empty() && !quoted_field) {
                in_quotes = true;
                quoted_field = true;
            } else if (ch == sep_) {
                fields.push_back(std::move(field));
                field.clear();
                quoted_field = false;
            } else if (ch == '\n') {
                ++line_;
                if (!field.empty() && field.back() == '\r') field.pop_back();
                fields.push_back(std::move(field));
                return true;
            } else {
                field += ch;
            }
            c = in_.get();
        }
    }

    long line() const { return record_line_; }

private:
    std::istream& in_;
    char sep_;
    long line_ = 1;
    long record_line_ = 1;
};

inline std::string csv_quote(const std::string& field, char sep = ',') {
    bool needs = false;
    for (char c : field)
        if (c == sep || c == '"' || c == '\n' || c == '\r') { needs = true; break; }
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline void csv_write_row(std::ostream& os, const std::vector<std::string>& fields,
                          char sep = ',') {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os << sep;
        os << csv_quote(fields[i], sep);
    }
    os << '\n';
}

} // namespace avsig
