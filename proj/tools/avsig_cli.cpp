// Command-line front end for the avsig toolkit: normalize raw multi-engine
// detections, compute corpus statistics, detect malware-class communities,
// fit per-category latent models, and score applications.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <avsig/avsig.hpp>

namespace {

struct Flags {
    std::string input;
    std::string format = "delimited";
    std::string rules;
    std::string stopwords;
    std::string out_dir = "out";
    std::string models_dir;
    std::string salt;
    int k = 200;
    int shingle_width = 4;
    int bands = 50;
    int rows = 4;
    std::uint64_t seed = 1;
    std::vector<double> corr_min;
    std::size_t max_iters = 5000;
    double tol = 1e-10;
    bool standardize = false;
    bool anonymize = false;
    std::string config_path;

    CLI::Option* o_input = nullptr;
    CLI::Option* o_format = nullptr;
    CLI::Option* o_rules = nullptr;
    CLI::Option* o_stopwords = nullptr;
    CLI::Option* o_out_dir = nullptr;
    CLI::Option* o_models_dir = nullptr;
    CLI::Option* o_salt = nullptr;
    CLI::Option* o_k = nullptr;
    CLI::Option* o_shingle_width = nullptr;
    CLI::Option* o_bands = nullptr;
    CLI::Option* o_rows = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_corr_min = nullptr;
    CLI::Option* o_max_iters = nullptr;
    CLI::Option* o_tol = nullptr;
    CLI::Option* o_standardize = nullptr;
    CLI::Option* o_anonymize = nullptr;
};

void add_common_flags(CLI::App* cmd, Flags& f, bool with_input, bool with_models) {
    cmd->add_option("--config", f.config_path,
                    "JSON config file; explicit flags override its values");
    if (with_input) {
        f.o_input = cmd->add_option("--input", f.input, "detections file");
        f.o_format = cmd->add_option("--format", f.format, "input format")
                         ->check(CLI::IsMember({"delimited", "csv", "json-lines", "jsonl"}));
        f.o_rules = cmd->add_option("--rules", f.rules,
                                    "rule set TSV (rank, pattern, class, category); "
                                    "default: built-in 41-rule fixture");
        f.o_stopwords =
            cmd->add_option("--stopwords", f.stopwords, "stopword list, one token per line");
        f.o_k = cmd->add_option("--k", f.k, "minhash functions per sketch");
        f.o_shingle_width =
            cmd->add_option("--shingle-width", f.shingle_width, "character shingle width");
        f.o_bands = cmd->add_option("--bands", f.bands, "LSH bands");
        f.o_rows = cmd->add_option("--rows", f.rows, "LSH rows per band");
        f.o_seed = cmd->add_option("--seed", f.seed, "master seed for hashing and fitting");
        f.o_corr_min = cmd->add_option("--corr-min", f.corr_min,
                                       "correlation threshold; repeat for a sweep");
        f.o_max_iters = cmd->add_option("--max-iters", f.max_iters, "fit iteration cap");
        f.o_tol = cmd->add_option("--tol", f.tol, "fit convergence tolerance");
        f.o_standardize = cmd->add_flag("--standardize", f.standardize,
                                        "fit the correlation matrix instead of covariance");
        f.o_anonymize = cmd->add_flag("--anonymize", f.anonymize,
                                      "alias engines to AV1..AVn before processing");
        f.o_salt = cmd->add_option("--salt", f.salt, "salt for engine alias tie-breaking");
    }
    if (with_models)
        f.o_models_dir = cmd->add_option("--models", f.models_dir,
                                         "directory holding model_*.json (default: out dir)");
    f.o_out_dir = cmd->add_option("--out-dir", f.out_dir, "output directory");
}

avsig::PipelineConfig make_config(const Flags& f) {
    avsig::PipelineConfig cfg;
    if (!f.config_path.empty()) cfg = avsig::load_config(f.config_path);
    auto set = [](CLI::Option* o) { return o && o->count() > 0; };
    if (set(f.o_input)) cfg.input = f.input;
    if (set(f.o_format)) cfg.format = avsig::parse_input_format(f.format);
    if (set(f.o_rules)) cfg.rules_path = f.rules;
    if (set(f.o_stopwords)) cfg.stopwords_path = f.stopwords;
    if (set(f.o_k)) cfg.minhash.k = f.k;
    if (set(f.o_shingle_width)) cfg.minhash.shingle_width = f.shingle_width;
    if (set(f.o_bands)) cfg.bands = f.bands;
    if (set(f.o_rows)) cfg.rows = f.rows;
    if (set(f.o_seed)) {
        cfg.minhash.seed = f.seed;
        cfg.fit.seed = f.seed;
    }
    if (set(f.o_corr_min)) cfg.corr_min = f.corr_min;
    if (set(f.o_max_iters)) cfg.fit.max_iters = f.max_iters;
    if (set(f.o_tol)) cfg.fit.tol = f.tol;
    if (set(f.o_standardize)) cfg.fit.standardize = f.standardize;
    if (set(f.o_anonymize)) cfg.anonymize = f.anonymize;
    if (set(f.o_salt)) cfg.salt = f.salt;
    if (set(f.o_models_dir)) cfg.models_dir = f.models_dir;
    if (set(f.o_out_dir)) cfg.out_dir = f.out_dir;
    return cfg;
}

void print_report(const avsig::RunReport& report) {
    for (const auto& [key, value] : report.counts)
        std::cout << key << ": " << value << "\n";
    for (const auto& e : report.files)
        std::cout << "wrote " << e.name << " (" << e.bytes << " bytes)\n";
    for (const auto& [stage, ms] : report.timings_ms)
        std::cerr << "[time] " << stage << ": " << ms << " ms\n";
}

int run(int argc, char** argv) {
    CLI::App app{"antivirus signature normalization and multi-engine consensus toolkit"};
    app.set_version_flag("--version", avsig::kVersion);
    app.require_subcommand(1);

    auto* c_normalize = app.add_subcommand(
        "normalize", "clean, group, and classify raw detections");
    auto* c_stats = app.add_subcommand("stats", "corpus summary tables");
    auto* c_communities =
        app.add_subcommand("communities", "class-correlation graphs and communities");
    auto* c_fit = app.add_subcommand("fit", "fit per-category factor models");
    auto* c_score = app.add_subcommand("score", "score apps with fitted models");
    auto* c_report = app.add_subcommand("report", "verify output digests against the manifest");

    Flags f_normalize, f_stats, f_communities, f_fit, f_score, f_report;
    add_common_flags(c_normalize, f_normalize, true, false);
    add_common_flags(c_stats, f_stats, true, false);
    add_common_flags(c_communities, f_communities, true, false);
    add_common_flags(c_fit, f_fit, true, false);
    add_common_flags(c_score, f_score, true, true);
    add_common_flags(c_report, f_report, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems are validation errors
    }

    try {
        if (c_normalize->parsed()) {
            print_report(avsig::cmd_normalize(make_config(f_normalize)));
        } else if (c_stats->parsed()) {
            print_report(avsig::cmd_stats(make_config(f_stats)));
        } else if (c_communities->parsed()) {
            print_report(avsig::cmd_communities(make_config(f_communities)));
        } else if (c_fit->parsed()) {
            print_report(avsig::cmd_fit(make_config(f_fit)));
        } else if (c_score->parsed()) {
            print_report(avsig::cmd_score(make_config(f_score)));
        } else if (c_report->parsed()) {
            avsig::VerifyResult result = avsig::cmd_report(make_config(f_report));
            for (const auto& line : result.lines) std::cout << line << "\n";
            if (!result.ok) {
                std::cerr << "error: manifest verification failed\n";
                return 1;
            }
            std::cout << "manifest verified\n";
        }
    } catch (const avsig::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
