#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "avsig/common.hpp"
#include "avsig/ingest.hpp"

namespace avsig {

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; stable across platforms,
/// unlike the distribution classes in <random>.
inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

/// Standard normal via Box-Muller on u01 draws.
inline double standard_normal(std::mt19937_64& rng) {
    double u1 = u01(rng), u2 = u01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace detail

/// Pool of vendor-style signature strings covering many malware families and
/// labeling conventions, with near-duplicate variants per family.
inline const std::vector<std::string>& signature_pool() {
    static const std::vector<std::string> pool = [] {
        const std::vector<std::string> families = {
            "Airpush",    "StartApp",   "Dowgin",   "Kuguo",      "Youmi",
            "RevMob",     "Leadbolt",   "Domob",    "Adwo",       "Wooboo",
            "Waps",       "Apperhand",  "Plankton", "GingerMaster",
            "DroidKungFu", "BaseBridge", "Geinimi",  "FakeInst",   "Opfake",
            "SmsSend",    "SmsReg",     "Agent",    "SmsPay",     "Nandrobox",
        };
        std::vector<std::string> out;
        for (std::size_t i = 0; i < families.size(); ++i) {
            const std::string& f = families[i];
            std::string lower = to_lower(f);
            const char variant = static_cast<char>('A' + (i % 4));
            out.push_back("Android/AdDisplay." + f + "." + variant);
            out.push_back("Adware/" + f + "." + variant);
            out.push_back("adware.android." + lower + "." +
                          std::string(1, static_cast<char>('a' + (i % 6))));
            out.push_back("a variant of Android/" + f + "." + variant);
            if (i % 2 == 0) out.push_back("Trojan.AndroidOS." + f + ".origin");
            if (i % 3 == 0)
                out.push_back("HEUR:Trojan.AndroidOS." + f + "." +
                              std::string(1, static_cast<char>('a' + (i % 6))));
            if (i % 3 == 1) out.push_back(f + ".SLF (v)");
            if (i % 4 == 0)
                out.push_back("Gen:Variant." + f + "." + std::to_string(10 + i));
        }
        out.push_back("Artemis!0B54AC9521FD");
        out.push_back("Artemis!7C11E5904041");
        out.push_back("UnclassifiedMalware");
        out.push_back("Malware (ai score=86)");
        out.push_back("Trojan.Generic.12645");
        out.push_back("AndroidOS/GenPua.A");
        out.push_back("not-a-virus:HEUR:AdWare.AndroidOS.Dowgin.i");
        out.push_back("Suspicious_GEN.F47V0215");
        out.push_back("Win32.Troj.Undef.(kcloud)");
        out.push_back("Application.AdLibrary.Generic");
        return out;
    }();
    return pool;
}

struct SynthConfig {
    std::size_t n_apps = 200;
    std::size_t n_engines = 12;
    std::size_t n_records = 2000;  // distinct (app, engine, signature) triples
    std::uint64_t seed = 42;
    bool with_dates = true;
};

/// Deterministically sample a detections dataset: flag-prone apps get many
/// records (quadratically skewed app draw), engines differ in which labeling
/// styles they emit, and families follow a Zipf-like popularity curve.
inline Dataset synth_detections(const SynthConfig& cfg) {
    if (cfg.n_apps == 0 || cfg.n_engines == 0)
        throw ValidationError("synthetic dataset needs apps and engines");
    const auto& pool = signature_pool();
    std::size_t max_distinct = cfg.n_apps * cfg.n_engines * pool.size();
    if (cfg.n_records > max_distinct)
        throw ValidationError("n_records exceeds distinct triple capacity");

    std::mt19937_64 rng(cfg.seed);
    // Zipf-ish weights over the pool.
    std::vector<double> cum(pool.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        total += 1.0 / static_cast<double>(1 + i % 37);
        cum[i] = total;
    }

    std::vector<DetectionRecord> records;
    std::set<std::array<std::string, 3>> seen;
    std::size_t attempts = 0;
    const std::size_t max_attempts = cfg.n_records * 1000 + 1000;
    while (records.size() < cfg.n_records) {
        if (++attempts > max_attempts)
            throw ValidationError("synthetic draw did not reach requested record count");
        double ua = detail::u01(rng);
        std::size_t app = static_cast<std::size_t>(ua * ua * static_cast<double>(cfg.n_apps));
        if (app >= cfg.n_apps) app = cfg.n_apps - 1;
        std::size_t engine = detail::pick(rng, cfg.n_engines);
        double us = detail::u01(rng) * total;
        std::size_t sig = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), us) - cum.begin());
        if (sig >= pool.size()) sig = pool.size() - 1;
        // Engines favor different thirds of the pool, so correlations between
        // engine columns vary.
        if ((engine + sig) % 3 == 0) sig = (sig * 7 + engine) % pool.size();

        DetectionRecord rec;
        char buf[32];
        std::snprintf(buf, sizeof buf, "app_%06zu", app);
        rec.app_id = buf;
        std::snprintf(buf, sizeof buf, "engine_%02zu", engine);
        rec.engine_id = buf;
        rec.raw_signature = pool[sig];
        if (cfg.with_dates && rng() % 4 != 0) {
            std::snprintf(buf, sizeof buf, "2016-%02zu-%02zu", 1 + rng() % 12,
                          1 + rng() % 28);
            rec.scan_date = std::string(buf);
        }
        if (!seen.insert({rec.app_id, rec.engine_id, rec.raw_signature}).second) continue;
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(records));
}

struct PlantedFactorConfig {
    std::size_t n_samples = 50000;
    std::vector<double> loadings;    // planted a_i
    std::vector<double> intercepts;  // b_i; empty means all zero
    std::uint64_t seed = 7;
};

/// Latent-factor generator: draw z ~ N(0,1) per row, then set column i to 1
/// with probability logistic(a_i * z + b_i). The planted loadings are the
/// recovery oracle for factor-fit tests.
inline std::vector<std::vector<double>> synth_planted_factor(const PlantedFactorConfig& cfg) {
    std::size_t p = cfg.loadings.size();
    if (p == 0) throw ValidationError("planted loadings must be non-empty");
    std::vector<double> b = cfg.intercepts.empty() ? std::vector<double>(p, 0.0)
                                                   : cfg.intercepts;
    if (b.size() != p) throw ValidationError("intercept count must match loadings");
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::vector<double>> rows(cfg.n_samples, std::vector<double>(p, 0.0));
    for (auto& row : rows) {
        double z = detail::standard_normal(rng);
        for (std::size_t i = 0; i < p; ++i) {
            double prob = 1.0 / (1.0 + std::exp(-(cfg.loadings[i] * z + b[i])));
            if (detail::u01(rng) < prob) row[i] = 1.0;
        }
    }
    return rows;
}

/// Independent Bernoulli columns: the no-common-factor null for fit tests.
inline std::vector<std::vector<double>> synth_bernoulli_matrix(std::size_t n, std::size_t p,
                                                               double prob,
                                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> rows(n, std::vector<double>(p, 0.0));
    for (auto& row : rows)
        for (std::size_t i = 0; i < p; ++i)
            if (detail::u01(rng) < prob) row[i] = 1.0;
    return rows;
}

} // namespace avsig
