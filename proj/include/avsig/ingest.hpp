#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsig/common.hpp"
#include "avsig/csv.hpp"
#include "avsig/hash.hpp"

namespace avsig {

enum class InputFormat { Delimited, JsonLines };

inline InputFormat parse_input_format(std::string_view s) {
    if (s == "delimited" || s == "csv") return InputFormat::Delimited;
    if (s == "json-lines" || s == "jsonl") return InputFormat::JsonLines;
    throw ValidationError("unknown input format: " + std::string(s));
}

/// One (application, engine, raw signature) observation.
struct DetectionRecord {
    std::string app_id;
    std::string engine_id;
    std::string raw_signature;              // non-empty after trim
    std::optional<std::string> scan_date;   // ISO date; parsed, unused by analyses
};

/// Immutable record collection with dense app/engine indices assigned in
/// first-appearance order. Safe to share across threads once built.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<DetectionRecord> records) {
        for (auto& r : records) add_record(std::move(r));
    }

    const std::vector<DetectionRecord>& records() const { return records_; }
    size_t n_apps() const { return app_ids_.size(); }
    size_t n_engines() const { return engine_ids_.size(); }
    size_t n_records() const { return records_.size(); }

    const std::vector<std::string>& app_ids() const { return app_ids_; }
    const std::vector<std::string>& engine_ids() const { return engine_ids_; }

    int app_index(const std::string& id) const { return lookup(app_index_, id); }
    int engine_index(const std::string& id) const { return lookup(engine_index_, id); }

    int app_index_of_record(size_t i) const { return record_app_idx_[i]; }
    int engine_index_of_record(size_t i) const { return record_engine_idx_[i]; }

    /// Exact duplicate triples dropped during load.
    size_t duplicates_dropped() const { return dups_dropped_; }
    void set_duplicates_dropped(size_t n) { dups_dropped_ = n; }

private:
    void add_record(DetectionRecord r) {
        record_app_idx_.push_back(intern(app_index_, app_ids_, r.app_id));
        record_engine_idx_.push_back(intern(engine_index_, engine_ids_, r.engine_id));
        records_.push_back(std::move(r));
    }

    static int intern(std::unordered_map<std::string, int>& index,
                      std::vector<std::string>& ids, const std::string& id) {
        auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
        if (inserted) ids.push_back(id);
        return it->second;
    }

    static int lookup(const std::unordered_map<std::string, int>& index,
                      const std::string& id) {
        auto it = index.find(id);
        return it == index.end() ? -1 : it->second;
    }

    std::vector<DetectionRecord> records_;
    std::vector<std::string> app_ids_, engine_ids_;
    std::unordered_map<std::string, int> app_index_, engine_index_;
    std::vector<int> record_app_idx_, record_engine_idx_;
    size_t dups_dropped_ = 0;
};

/// Corpus-level statistics over the per-app detection-count vector.
struct SummaryStats {
    size_t n_apps = 0;
    size_t n_engines = 0;
    size_t n_signatures = 0;
    double mean_detections_per_app = 0.0;
    double sd_detections_per_app = 0.0;         // population sd
    std::map<size_t, size_t> detections_histogram;  // count -> #apps
    std::map<std::string, size_t> per_engine_counts;
};

namespace detail {

inline bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    int m = (s[5] - '0') * 10 + (s[6] - '0');
    int d = (s[8] - '0') * 10 + (s[9] - '0');
    return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline void finish_record(std::vector<DetectionRecord>& out,
                          std::set<std::tuple<std::string, std::string, std::string>>* seen,
                          size_t& dropped, DetectionRecord rec, long line) {
    rec.app_id = trim(rec.app_id);
    rec.engine_id = trim(rec.engine_id);
    rec.raw_signature = trim(rec.raw_signature);
    if (rec.app_id.empty())
        throw ValidationError("line " + std::to_string(line) + ": missing app_id");
    if (rec.engine_id.empty())
        throw ValidationError("line " + std::to_string(line) + ": missing engine_id");
    if (rec.raw_signature.empty())
        throw ValidationError("line " + std::to_string(line) + ": missing raw_signature");
    if (rec.scan_date) {
        std::string d = trim(*rec.scan_date);
        if (d.empty()) {
            rec.scan_date.reset();
        } else if (!valid_iso_date(d)) {
            throw ValidationError("line " + std::to_string(line) +
                                  ": malformed scan_date '" + d + "' (expected YYYY-MM-DD)");
        } else {
            rec.scan_date = d;
        }
    }
    auto key = std::make_tuple(rec.app_id, rec.engine_id, rec.raw_signature);
    if (!seen->insert(std::move(key)).second) {
        ++dropped;
        return;
    }
    out.push_back(std::move(rec));
}

} // namespace detail

/// Loads detections from delimited text (header required, RFC-4180-style
/// quoting) or json-lines. Exact duplicate (app, engine, signature) triples
/// are dropped; load order is preserved otherwise. Throws ValidationError
/// naming the offending line; an input with zero records is an error unless
/// allow_empty is set.
inline Dataset load_detections(const std::string& path, InputFormat format,
                               char sep = ',', bool allow_empty = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open input file: " + path);

    std::vector<DetectionRecord> records;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    size_t dropped = 0;

    if (format == InputFormat::Delimited) {
        CsvReader reader(in, sep);
        std::vector<std::string> row;
        if (!reader.next(row)) {
            if (allow_empty) return Dataset{};
            throw ValidationError(path + ": no records");
        }
        // Header names the columns; order is free, the three core ones required.
        int c_app = -1, c_eng = -1, c_sig = -1, c_date = -1;
        for (size_t i = 0; i < row.size(); ++i) {
            std::string h = to_lower(trim(row[i]));
            if (h == "app_id") c_app = static_cast<int>(i);
            else if (h == "engine_id") c_eng = static_cast<int>(i);
            else if (h == "raw_signature") c_sig = static_cast<int>(i);
            else if (h == "scan_date") c_date = static_cast<int>(i);
        }
        if (c_app < 0 || c_eng < 0 || c_sig < 0)
            throw ValidationError(path +
                                  ": header must name app_id, engine_id, raw_signature");
        while (reader.next(row)) {
            long line = reader.line();
            if (row.size() == 1 && trim(row[0]).empty()) continue;
            size_t need = static_cast<size_t>(std::max({c_app, c_eng, c_sig})) + 1;
            if (row.size() < need)
                throw ValidationError("line " + std::to_string(line) +
                                      ": expected at least " + std::to_string(need) +
                                      " fields, got " + std::to_string(row.size()));
            DetectionRecord rec;
            rec.app_id = row[c_app];
            rec.engine_id = row[c_eng];
            rec.raw_signature = row[c_sig];
            if (c_date >= 0 && static_cast<size_t>(c_date) < row.size() &&
                !trim(row[c_date]).empty())
                rec.scan_date = row[c_date];
            detail::finish_record(records, &seen, dropped, std::move(rec), line);
        }
    } else {
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": invalid JSON: " + e.what());
            }
            if (!obj.is_object())
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": expected a JSON object");
            DetectionRecord rec;
            for (const char* key : {"app_id", "engine_id", "raw_signature"})
                if (!obj.contains(key) || !obj[key].is_string())
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": missing string field '" + key + "'");
            rec.app_id = obj["app_id"].get<std::string>();
            rec.engine_id = obj["engine_id"].get<std::string>();
            rec.raw_signature = obj["raw_signature"].get<std::string>();
            if (obj.contains("scan_date") && obj["scan_date"].is_string())
                rec.scan_date = obj["scan_date"].get<std::string>();
            detail::finish_record(records, &seen, dropped, std::move(rec), line_no);
        }
    }

    if (records.empty() && !allow_empty)
        throw ValidationError(path + ": no records");
    Dataset ds(std::move(records));
    ds.set_duplicates_dropped(dropped);
    return ds;
}

/// Replaces engine ids with aliases AV1..AVn assigned by descending
/// detection count. Ties break on a salted, rename-invariant fingerprint of
/// the engine's detections, so re-aliasing an already aliased dataset is a
/// no-op and the same salt always reproduces the same aliases.
inline std::pair<Dataset, std::map<std::string, std::string>>
anonymize_engines(const Dataset& ds, const std::string& salt) {
    size_t n = ds.n_engines();
    std::vector<size_t> counts(n, 0);
    std::vector<std::vector<std::pair<const std::string*, const std::string*>>> content(n);
    for (size_t i = 0; i < ds.n_records(); ++i) {
        const auto& r = ds.records()[i];
        int e = ds.engine_index_of_record(i);
        ++counts[e];
        content[e].emplace_back(&r.app_id, &r.raw_signature);
    }

    uint64_t salt_h = hash_bytes(salt);
    std::vector<uint64_t> fingerprint(n);
    for (size_t e = 0; e < n; ++e) {
        auto& items = content[e];
        std::sort(items.begin(), items.end(),
                  [](const auto& a, const auto& b) {
                      if (*a.first != *b.first) return *a.first < *b.first;
                      return *a.second < *b.second;
                  });
        uint64_t h = salt_h;
        for (const auto& [app, sig] : items) {
            h = hash_combine(h, hash_bytes(*app));
            h = hash_combine(h, hash_bytes(*sig));
        }
        fingerprint[e] = h;
    }

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        if (fingerprint[a] != fingerprint[b]) return fingerprint[a] < fingerprint[b];
        return a < b;  // first-appearance order, rename-invariant
    });

    std::vector<std::string> alias(n);
    std::map<std::string, std::string> alias_map;
    for (size_t rank = 0; rank < n; ++rank) {
        alias[order[rank]] = "AV" + std::to_string(rank + 1);
        alias_map[ds.engine_ids()[order[rank]]] = alias[order[rank]];
    }

    std::vector<DetectionRecord> out;
    out.reserve(ds.n_records());
    for (size_t i = 0; i < ds.n_records(); ++i) {
        DetectionRecord r = ds.records()[i];
        r.engine_id = alias[ds.engine_index_of_record(i)];
        out.push_back(std::move(r));
    }
    Dataset aliased(std::move(out));
    aliased.set_duplicates_dropped(ds.duplicates_dropped());
    return {std::move(aliased), std::move(alias_map)};
}

/// Statistics over per-app detection counts (one detection per record).
inline SummaryStats dataset_summary(const Dataset& ds) {
    if (ds.n_records() == 0) throw ValidationError("dataset_summary: empty dataset");
    SummaryStats s;
    s.n_apps = ds.n_apps();
    s.n_engines = ds.n_engines();
    s.n_signatures = ds.n_records();

    std::vector<size_t> per_app(ds.n_apps(), 0);
    for (size_t i = 0; i < ds.n_records(); ++i) {
        ++per_app[ds.app_index_of_record(i)];
        ++s.per_engine_counts[ds.records()[i].engine_id];
    }
    double mean = 0.0;
    for (size_t c : per_app) mean += static_cast<double>(c);
    mean /= static_cast<double>(per_app.size());
    double var = 0.0;
    for (size_t c : per_app) {
        double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    var /= static_cast<double>(per_app.size());
    s.mean_detections_per_app = mean;
    s.sd_detections_per_app = std::sqrt(var);
    for (size_t c : per_app) ++s.detections_histogram[c];
    return s;
}

} // namespace avsig
