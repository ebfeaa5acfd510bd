#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "avsig/clean.hpp"
#include "avsig/common.hpp"
#include "avsig/default_rules.hpp"
#include "avsig/graph.hpp"
#include "avsig/ingest.hpp"
#include "avsig/matrices.hpp"
#include "avsig/minhash.hpp"
#include "avsig/rules.hpp"
#include "avsig/sem.hpp"
#include "avsig/synth.hpp"
#include "avsig/version.hpp"

namespace avsig {

struct PipelineConfig {
    std::string input;
    InputFormat format = InputFormat::Delimited;
    std::string rules_path;      // empty: built-in Table-1 fixture
    std::string stopwords_path;  // empty: built-in defaults
    MinHashConfig minhash;       // k, shingle_width, seed
    int bands = 50;
    int rows = 4;
    std::vector<double> corr_min = {0.2, 0.35, 0.5};
    FactorFitOptions fit;
    std::string out_dir = "out";
    std::string models_dir;  // score: where model files live; empty = out_dir
    bool anonymize = false;
    std::string salt;
};

inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.minhash.k < 1) throw ValidationError("k must be at least 1");
    if (cfg.minhash.shingle_width < 1) throw ValidationError("shingle-width must be at least 1");
    if (cfg.bands < 1 || cfg.rows < 1) throw ValidationError("bands and rows must be at least 1");
    if (cfg.bands * cfg.rows != cfg.minhash.k)
        throw ValidationError("bands x rows must equal k");
    if (cfg.corr_min.empty()) throw ValidationError("at least one corr-min threshold required");
    for (double t : cfg.corr_min)
        if (t < 0.0) throw ValidationError("corr-min must be non-negative");
    if (cfg.fit.tol <= 0.0) throw ValidationError("tol must be positive");
    if (cfg.fit.max_iters < 1) throw ValidationError("max-iters must be at least 1");
    if (cfg.out_dir.empty()) throw ValidationError("out-dir must not be empty");
}

/// Fill a config from a declarative JSON document. Unknown keys are rejected
/// so typos fail loudly; CLI flags override these values afterwards.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "input",  "format",   "rules", "stopwords", "k",       "shingle_width",
        "bands",  "rows",     "seed",  "corr_min",  "max_iters", "tol",
        "standardize", "out_dir", "models_dir", "anonymize", "salt"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
    PipelineConfig cfg;
    try {
        cfg.input = j.value("input", cfg.input);
        if (j.contains("format")) cfg.format = parse_input_format(j.at("format").get<std::string>());
        cfg.rules_path = j.value("rules", cfg.rules_path);
        cfg.stopwords_path = j.value("stopwords", cfg.stopwords_path);
        cfg.minhash.k = j.value("k", cfg.minhash.k);
        cfg.minhash.shingle_width = j.value("shingle_width", cfg.minhash.shingle_width);
        cfg.bands = j.value("bands", cfg.bands);
        cfg.rows = j.value("rows", cfg.rows);
        if (j.contains("seed")) {
            cfg.minhash.seed = j.at("seed").get<std::uint64_t>();
            cfg.fit.seed = cfg.minhash.seed;
        }
        if (j.contains("corr_min"))
            cfg.corr_min = j.at("corr_min").get<std::vector<double>>();
        cfg.fit.max_iters = j.value("max_iters", cfg.fit.max_iters);
        cfg.fit.tol = j.value("tol", cfg.fit.tol);
        cfg.fit.standardize = j.value("standardize", cfg.fit.standardize);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.models_dir = j.value("models_dir", cfg.models_dir);
        cfg.anonymize = j.value("anonymize", cfg.anonymize);
        cfg.salt = j.value("salt", cfg.salt);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open config");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }
    return config_from_json(j);
}

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct RunReport {
    std::string command;
    std::vector<std::pair<std::string, double>> timings_ms;  // stage name, duration
    std::map<std::string, std::uint64_t> counts;
    std::vector<ManifestEntry> files;
};

namespace detail {

inline std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    int ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
             EVP_DigestUpdate(ctx, data, len) == 1 &&
             EVP_DigestFinal_ex(ctx, md, &md_len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

inline std::string sha256_hex(const std::string& data) {
    return sha256_hex(data.data(), data.size());
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string format_threshold(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

} // namespace detail

/// Writes output files atomically (temp file + rename) and accumulates the
/// manifest of everything written.
class OutputWriter {
public:
    explicit OutputWriter(std::string out_dir) : dir_(std::move(out_dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        namespace fs = std::filesystem;
        fs::path target = fs::path(dir_) / name;
        fs::path tmp = fs::path(dir_) / (name + ".tmp");
        {
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error(tmp.string() + ": cannot open for writing");
            os.write(content.data(), static_cast<std::streamsize>(content.size()));
            if (!os) throw std::runtime_error(tmp.string() + ": write failed");
        }
        fs::rename(tmp, target);
        entries_.push_back({name, detail::sha256_hex(content), content.size()});
    }

    const std::vector<ManifestEntry>& entries() const { return entries_; }
    const std::string& dir() const { return dir_; }

    /// Emit manifest.json listing every file written so far (sorted by name)
    /// plus the run's counts. Timings never enter the manifest, so reruns with
    /// the same config and seed are byte-identical.
    void write_manifest(RunReport& report) {
        std::sort(entries_.begin(), entries_.end(),
                  [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });
        report.files = entries_;
        nlohmann::json files = nlohmann::json::array();
        for (const auto& e : entries_)
            files.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
        nlohmann::json j = {{"toolkit_version", kVersion},
                            {"command", report.command},
                            {"counts", report.counts},
                            {"files", files}};
        std::string content = j.dump(2) + "\n";
        namespace fs = std::filesystem;
        fs::path tmp = fs::path(dir_) / "manifest.json.tmp";
        {
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error(tmp.string() + ": cannot open for writing");
            os << content;
            if (!os) throw std::runtime_error(tmp.string() + ": write failed");
        }
        fs::rename(tmp, fs::path(dir_) / "manifest.json");
    }

private:
    std::string dir_;
    std::vector<ManifestEntry> entries_;
};

namespace detail {

template <typename F>
void run_stage(RunReport& report, const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    report.timings_ms.emplace_back(
        name, std::chrono::duration<double, std::milli>(t1 - t0).count());
}

inline RuleSet load_rules(const PipelineConfig& cfg) {
    return cfg.rules_path.empty() ? default_ruleset() : RuleSet::load(cfg.rules_path);
}

inline Stopwords load_stopwords(const PipelineConfig& cfg) {
    if (cfg.stopwords_path.empty()) return default_stopwords();
    std::ifstream in(cfg.stopwords_path);
    if (!in) throw ValidationError(cfg.stopwords_path + ": cannot open stopwords");
    return parse_stopwords(in);
}

struct LoadedInput {
    Dataset dataset;
    std::optional<std::map<std::string, std::string>> alias_map;
};

inline LoadedInput load_input(const PipelineConfig& cfg, bool allow_empty) {
    if (cfg.input.empty()) throw ValidationError("input path required");
    LoadedInput li;
    li.dataset = load_detections(cfg.input, cfg.format, ',', allow_empty);
    if (cfg.anonymize) {
        auto [ds, amap] = anonymize_engines(li.dataset, cfg.salt);
        li.dataset = std::move(ds);
        li.alias_map = std::move(amap);
    }
    return li;
}

inline std::string alias_map_csv(const std::map<std::string, std::string>& amap) {
    // Rank order (AV1, AV2, ...) reads better than lexicographic.
    std::vector<std::pair<std::string, std::string>> rows(amap.begin(), amap.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        long ra = std::strtol(a.second.c_str() + 2, nullptr, 10);
        long rb = std::strtol(b.second.c_str() + 2, nullptr, 10);
        if (ra != rb) return ra < rb;
        return a.first < b.first;
    });
    std::ostringstream os;
    csv_write_row(os, {"engine_id", "alias"});
    for (const auto& [orig, alias] : rows) csv_write_row(os, {orig, alias});
    return os.str();
}

} // namespace detail

/// normalize: clean + group + classify the raw detections; emits the
/// normalized detections table, the minhash grouping report, and the token
/// frequency table.
inline RunReport cmd_normalize(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "normalize";
    OutputWriter out(cfg.out_dir);

    detail::LoadedInput input;
    detail::run_stage(report, "load", [&] { input = detail::load_input(cfg, true); });
    const Dataset& ds = input.dataset;

    RuleSet rules;
    Stopwords stopwords;
    detail::run_stage(report, "rules", [&] {
        rules = detail::load_rules(cfg);
        stopwords = detail::load_stopwords(cfg);
    });

    std::vector<NormalizedDetection> nd;
    detail::run_stage(report, "classify", [&] { nd = normalize_dataset(ds, rules, stopwords); });

    // Distinct raw signatures in first-appearance order form the grouping corpus.
    std::vector<TokenSet> corpus;
    std::vector<SignatureGroup> groups;
    std::map<std::string, std::size_t> token_counts;
    detail::run_stage(report, "group", [&] {
        std::set<std::string> seen;
        for (const auto& rec : ds.records())
            if (seen.insert(rec.raw_signature).second)
                corpus.push_back(clean_signature(rec.raw_signature, stopwords));
        groups = group_signatures(corpus, cfg.minhash, cfg.bands, cfg.rows);
        for (const auto& rec : ds.records()) {
            TokenSet ts = clean_signature(rec.raw_signature, stopwords);
            for (const auto& t : ts.tokens) ++token_counts[t];
        }
    });

    detail::run_stage(report, "emit", [&] {
        std::ostringstream osn;
        csv_write_row(osn, {"app_id", "engine_id", "class", "category", "rule_rank"});
        for (const auto& d : nd)
            csv_write_row(osn, {d.app_id, d.engine_id, d.class_name,
                                category_name(d.category), std::to_string(d.rule_rank)});
        out.write("normalized_detections.csv", osn.str());

        std::ostringstream osg;
        for (const auto& g : groups) {
            nlohmann::json members = nlohmann::json::array();
            for (std::size_t i = 0; i < g.members.size() && i < 5; ++i)
                members.push_back(corpus[g.members[i]].source);
            nlohmann::json j = {{"bucket_key", g.bucket_key},
                                {"size", g.members.size()},
                                {"representative", g.representative},
                                {"member_sample", members}};
            osg << j.dump() << '\n';
        }
        out.write("signature_groups.jsonl", osg.str());

        std::vector<std::pair<std::string, std::size_t>> tokens(token_counts.begin(),
                                                                token_counts.end());
        std::sort(tokens.begin(), tokens.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::ostringstream ost;
        csv_write_row(ost, {"token", "count"});
        for (const auto& [tok, n] : tokens) csv_write_row(ost, {tok, std::to_string(n)});
        out.write("token_frequencies.csv", ost.str());

        if (input.alias_map) out.write("alias_map.csv", detail::alias_map_csv(*input.alias_map));
    });

    report.counts["records"] = ds.n_records();
    report.counts["apps"] = ds.n_apps();
    report.counts["engines"] = ds.n_engines();
    report.counts["distinct_signatures"] = corpus.size();
    report.counts["signature_groups"] = groups.size();
    report.counts["duplicates_dropped"] = ds.duplicates_dropped();
    out.write_manifest(report);
    return report;
}

/// stats: corpus summary, detections-per-app histogram (row sums of the
/// app x engine indicator matrix), and per-class detection frequencies.
inline RunReport cmd_stats(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "stats";
    OutputWriter out(cfg.out_dir);

    detail::LoadedInput input;
    detail::run_stage(report, "load", [&] { input = detail::load_input(cfg, true); });
    const Dataset& ds = input.dataset;

    RuleSet rules;
    Stopwords stopwords;
    detail::run_stage(report, "rules", [&] {
        rules = detail::load_rules(cfg);
        stopwords = detail::load_stopwords(cfg);
    });

    IndicatorMatrix A;
    std::map<std::size_t, std::size_t> histogram;
    std::map<std::string, std::size_t> class_freq;
    SummaryStats stats;
    detail::run_stage(report, "aggregate", [&] {
        if (ds.n_records() > 0) stats = dataset_summary(ds);
        A = build_engine_matrix(ds);
        histogram = detection_histogram(A);
        auto nd = normalize_dataset(ds, rules, stopwords);
        IndicatorMatrix B = build_class_matrix(nd, rules);
        class_freq = class_frequency(B);
    });

    detail::run_stage(report, "emit", [&] {
        std::ostringstream oss;
        csv_write_row(oss, {"key", "value"});
        csv_write_row(oss, {"n_apps", std::to_string(stats.n_apps)});
        csv_write_row(oss, {"n_engines", std::to_string(stats.n_engines)});
        csv_write_row(oss, {"n_signatures", std::to_string(stats.n_signatures)});
        csv_write_row(oss, {"duplicates_dropped", std::to_string(ds.duplicates_dropped())});
        csv_write_row(oss, {"mean_detections_per_app",
                            detail::format_double(stats.mean_detections_per_app)});
        csv_write_row(oss, {"sd_detections_per_app",
                            detail::format_double(stats.sd_detections_per_app)});
        for (const auto& [engine, n] : stats.per_engine_counts)
            csv_write_row(oss, {"engine:" + engine, std::to_string(n)});
        out.write("summary_stats.csv", oss.str());

        std::ostringstream osh;
        csv_write_row(osh, {"detections", "apps"});
        for (const auto& [k, n] : histogram)
            csv_write_row(osh, {std::to_string(k), std::to_string(n)});
        out.write("detection_histogram.csv", osh.str());

        std::vector<std::pair<std::string, std::size_t>> freq(class_freq.begin(),
                                                              class_freq.end());
        std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::ostringstream osf;
        csv_write_row(osf, {"class", "apps"});
        for (const auto& [cls, n] : freq) csv_write_row(osf, {cls, std::to_string(n)});
        out.write("class_frequencies.csv", osf.str());

        if (input.alias_map) out.write("alias_map.csv", detail::alias_map_csv(*input.alias_map));
    });

    report.counts["records"] = ds.n_records();
    report.counts["apps"] = ds.n_apps();
    report.counts["engines"] = ds.n_engines();
    report.counts["duplicates_dropped"] = ds.duplicates_dropped();
    out.write_manifest(report);
    return report;
}

/// communities: class-correlation matrix plus one community-annotated graph
/// (json + dot) per corr-min threshold.
inline RunReport cmd_communities(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "communities";
    OutputWriter out(cfg.out_dir);

    detail::LoadedInput input;
    detail::run_stage(report, "load", [&] { input = detail::load_input(cfg, false); });

    RuleSet rules;
    Stopwords stopwords;
    detail::run_stage(report, "rules", [&] {
        rules = detail::load_rules(cfg);
        stopwords = detail::load_stopwords(cfg);
    });

    CorrelationMatrix C;
    detail::run_stage(report, "correlate", [&] {
        auto nd = normalize_dataset(input.dataset, rules, stopwords);
        IndicatorMatrix B = build_class_matrix(nd, rules);
        C = pearson_correlation(B);
    });

    std::vector<double> thresholds = cfg.corr_min;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    detail::run_stage(report, "cluster", [&] {
        std::ostringstream osc;
        write_correlation(osc, C);
        out.write("correlation_matrix.csv", osc.str());

        for (double t : thresholds) {
            WeightedGraph g = threshold_graph(C, {t});
            CommunityPartition part = detect_communities(g);
            std::string tag = detail::format_threshold(t);

            std::ostringstream osj;
            emit_graph_json(osj, g, part);
            out.write("graph_" + tag + ".json", osj.str());

            std::ostringstream osd;
            emit_graph_dot(osd, g, part);
            out.write("graph_" + tag + ".dot", osd.str());

            report.counts["edges_" + tag] = g.n_edges();
            report.counts["communities_" + tag] = part.communities.size();
        }
    });

    report.counts["records"] = input.dataset.n_records();
    report.counts["classes"] = C.size;
    out.write_manifest(report);
    return report;
}

namespace detail {

inline const char* model_file_name(Category c) {
    switch (c) {
        case Category::Adware: return "model_adware.json";
        case Category::HarmfulThreats: return "model_harmful.json";
        default: return "model_unknown.json";
    }
}

} // namespace detail

/// fit: one single-factor model per category, emitted as JSON documents.
inline RunReport cmd_fit(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "fit";
    OutputWriter out(cfg.out_dir);

    detail::LoadedInput input;
    detail::run_stage(report, "load", [&] { input = detail::load_input(cfg, false); });

    RuleSet rules;
    Stopwords stopwords;
    std::vector<NormalizedDetection> nd;
    detail::run_stage(report, "classify", [&] {
        rules = detail::load_rules(cfg);
        stopwords = detail::load_stopwords(cfg);
        nd = normalize_dataset(input.dataset, rules, stopwords);
    });

    for (Category c : {Category::Adware, Category::HarmfulThreats, Category::UnknownGeneric}) {
        detail::run_stage(report, std::string("fit_") + category_name(c), [&] {
            CategoryIndicatorMatrix X = build_category_matrix(nd, c);
            FactorModel model = fit_single_factor(X, cfg.fit);
            out.write(detail::model_file_name(c), model_to_json(model).dump(2) + "\n");
            report.counts[std::string("iterations_") + category_name(c)] = model.iterations;
        });
    }

    report.counts["records"] = input.dataset.n_records();
    report.counts["apps"] = input.dataset.n_apps();
    report.counts["engines"] = input.dataset.n_engines();
    out.write_manifest(report);
    return report;
}

namespace detail {

inline std::array<FactorModel, 3> load_models(const std::string& dir) {
    namespace fs = std::filesystem;
    std::array<FactorModel, 3> models;
    size_t i = 0;
    for (Category c : {Category::Adware, Category::HarmfulThreats, Category::UnknownGeneric}) {
        fs::path path = fs::path(dir) / model_file_name(c);
        std::ifstream in(path);
        if (!in) throw ValidationError(path.string() + ": cannot open model file");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ": invalid JSON: " + e.what());
        }
        models[i++] = model_from_json(j);
    }
    return models;
}

inline std::string scores_csv(const std::vector<ScoreResult>& scores) {
    std::ostringstream os;
    csv_write_row(os, {"app_id", "z_adware", "z_harmful", "z_unknown", "p_adware",
                       "p_harmful", "p_unknown"});
    for (const auto& s : scores)
        csv_write_row(os, {s.app_id, format_double(s.z[0]), format_double(s.z[1]),
                           format_double(s.z[2]), format_double(s.p[0]),
                           format_double(s.p[1]), format_double(s.p[2])});
    return os.str();
}

} // namespace detail

/// score: apply previously fitted category models to a detections file.
inline RunReport cmd_score(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "score";
    OutputWriter out(cfg.out_dir);

    std::array<FactorModel, 3> models;
    detail::run_stage(report, "models", [&] {
        models = detail::load_models(cfg.models_dir.empty() ? cfg.out_dir : cfg.models_dir);
    });

    detail::LoadedInput input;
    std::vector<ScoreResult> scores;
    detail::run_stage(report, "score", [&] {
        input = detail::load_input(cfg, true);
        RuleSet rules = detail::load_rules(cfg);
        Stopwords stopwords = detail::load_stopwords(cfg);
        auto nd = normalize_dataset(input.dataset, rules, stopwords);
        scores = score_all(nd, models);
    });

    detail::run_stage(report, "emit",
                      [&] { out.write("scores.csv", detail::scores_csv(scores)); });

    report.counts["records"] = input.dataset.n_records();
    report.counts["apps_scored"] = scores.size();
    out.write_manifest(report);
    return report;
}

/// fit + score in one run against the same input; emits the three model files
/// and the scores table under a single manifest.
inline RunReport cmd_fit_and_score(const PipelineConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.command = "fit_and_score";
    OutputWriter out(cfg.out_dir);

    detail::LoadedInput input;
    detail::run_stage(report, "load", [&] { input = detail::load_input(cfg, false); });

    RuleSet rules;
    Stopwords stopwords;
    std::vector<NormalizedDetection> nd;
    detail::run_stage(report, "classify", [&] {
        rules = detail::load_rules(cfg);
        stopwords = detail::load_stopwords(cfg);
        nd = normalize_dataset(input.dataset, rules, stopwords);
    });

    std::array<FactorModel, 3> models;
    size_t mi = 0;
    for (Category c : {Category::Adware, Category::HarmfulThreats, Category::UnknownGeneric}) {
        detail::run_stage(report, std::string("fit_") + category_name(c), [&] {
            CategoryIndicatorMatrix X = build_category_matrix(nd, c);
            models[mi] = fit_single_factor(X, cfg.fit);
            out.write(detail::model_file_name(c), model_to_json(models[mi]).dump(2) + "\n");
            ++mi;
        });
    }

    detail::run_stage(report, "score", [&] {
        auto scores = score_all(nd, models);
        out.write("scores.csv", detail::scores_csv(scores));
        report.counts["apps_scored"] = scores.size();
    });

    report.counts["records"] = input.dataset.n_records();
    out.write_manifest(report);
    return report;
}

// --- manifest verification ----------------------------------------------------

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> lines;  // one human-readable status line per file
};

/// report: re-hash every file listed in out_dir/manifest.json and flag
/// missing files or digest mismatches (e.g. interrupted writes).
inline VerifyResult cmd_report(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out_dir);
    fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw ValidationError(manifest_path.string() + ": cannot open manifest");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(manifest_path.string() + ": invalid JSON: " + e.what());
    }

    VerifyResult result;
    if (!j.contains("files") || !j.at("files").is_array())
        throw ValidationError(manifest_path.string() + ": no files array");
    for (const auto& f : j.at("files")) {
        std::string name = f.at("name").get<std::string>();
        std::string want = f.at("sha256").get<std::string>();
        fs::path path = dir / name;
        std::ifstream fin(path, std::ios::binary);
        if (!fin) {
            result.ok = false;
            result.lines.push_back("MISSING   " + name);
            continue;
        }
        std::ostringstream buf;
        buf << fin.rdbuf();
        std::string got = detail::sha256_hex(buf.str());
        if (got == want) {
            result.lines.push_back("ok        " + name);
        } else {
            result.ok = false;
            result.lines.push_back("MISMATCH  " + name);
        }
    }
    return result;
}

} // namespace avsig
