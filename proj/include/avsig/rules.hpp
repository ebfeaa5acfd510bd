#pragma once

#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "avsig/clean.hpp"
#include "avsig/common.hpp"
#include "avsig/ingest.hpp"

namespace avsig {

enum class Category { Adware, HarmfulThreats, UnknownGeneric };

inline constexpr int kNumCategories = 3;

inline const char* category_name(Category c) {
    switch (c) {
        case Category::Adware: return "Adware";
        case Category::HarmfulThreats: return "HarmfulThreats";
        case Category::UnknownGeneric: return "UnknownGeneric";
    }
    return "?";
}

inline const char* category_display_name(Category c) {
    switch (c) {
        case Category::Adware: return "Adware";
        case Category::HarmfulThreats: return "Harmful Threats";
        case Category::UnknownGeneric: return "Unknown/Generic";
    }
    return "?";
}

inline Category parse_category(std::string_view s) {
    std::string t;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c)))
            t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "adware") return Category::Adware;
    if (t == "harmfulthreats" || t == "harmful") return Category::HarmfulThreats;
    if (t == "unknowngeneric" || t == "unknown" || t == "generic")
        return Category::UnknownGeneric;
    throw ValidationError("unknown category: " + std::string(s));
}

/// One normalization rule. Patterns are matched unanchored (leftmost search)
/// against the canonical dot-joined cleaned string; use ^ and $ to anchor.
struct Rule {
    int rank = 0;            // 1 = highest priority
    std::string pattern;
    std::string class_name;
    Category category = Category::UnknownGeneric;
    std::regex re;
};

struct RuleMatch {
    std::string class_name;
    Category category = Category::UnknownGeneric;
    int rank = 0;
};

/// Ordered rule list with first-match semantics. The last rule must be a
/// catch-all so every signature maps to some class.
class RuleSet {
public:
    static RuleSet from_rules(std::vector<Rule> rules) {
        RuleSet rs;
        rs.rules_ = std::move(rules);
        rs.compile_and_validate();
        return rs;
    }

    /// Parses `rank<TAB>pattern<TAB>class<TAB>category` lines; '#' comments.
    static RuleSet parse(std::istream& in, const std::string& origin = "<rules>") {
        std::vector<Rule> rules;
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            auto fields = split(line, '\t');
            if (fields.size() != 4)
                throw ValidationError(origin + ":" + std::to_string(line_no) +
                                      ": expected 4 tab-separated fields");
            Rule r;
            try {
                r.rank = std::stoi(trim(fields[0]));
            } catch (const std::exception&) {
                throw ValidationError(origin + ":" + std::to_string(line_no) +
                                      ": bad rank '" + fields[0] + "'");
            }
            r.pattern = trim(fields[1]);
            r.class_name = trim(fields[2]);
            r.category = parse_category(fields[3]);
            if (r.pattern.empty() || r.class_name.empty())
                throw ValidationError(origin + ":" + std::to_string(line_no) +
                                      ": empty pattern or class");
            rules.push_back(std::move(r));
        }
        return from_rules(std::move(rules));
    }

    static RuleSet load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open rules file: " + path);
        return parse(in, path);
    }

    const std::vector<Rule>& rules() const { return rules_; }
    size_t size() const { return rules_.size(); }

    const Rule& by_rank(int rank) const {
        for (const auto& r : rules_)
            if (r.rank == rank) return r;
        throw ValidationError("no rule with rank " + std::to_string(rank));
    }

    /// Distinct class names in rank order (matrix column order).
    std::vector<std::string> class_names() const {
        std::vector<std::string> out;
        for (const auto& r : rules_)
            if (std::find(out.begin(), out.end(), r.class_name) == out.end())
                out.push_back(r.class_name);
        return out;
    }

    Category category_of_class(const std::string& class_name) const {
        for (const auto& r : rules_)
            if (r.class_name == class_name) return r.category;
        throw ValidationError("unknown class: " + class_name);
    }

private:
    void compile_and_validate() {
        if (rules_.empty()) throw ValidationError("rule set is empty");
        std::sort(rules_.begin(), rules_.end(),
                  [](const Rule& a, const Rule& b) { return a.rank < b.rank; });
        for (size_t i = 1; i < rules_.size(); ++i)
            if (rules_[i].rank == rules_[i - 1].rank)
                throw ValidationError("duplicate rule rank " +
                                      std::to_string(rules_[i].rank));
        for (auto& r : rules_) {
            try {
                r.re = std::regex(r.pattern, std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw ValidationError("rule " + std::to_string(r.rank) +
                                      ": pattern does not compile: " + e.what());
            }
        }
        // The lowest-priority rule must behave as a catch-all.
        const Rule& last = rules_.back();
        for (const char* probe : {"", "x", "zzz.unmatchable"})
            if (!std::regex_search(probe, last.re))
                throw ValidationError("rule set has no catch-all: last rule (rank " +
                                      std::to_string(last.rank) +
                                      ") does not match everything");
    }

    std::vector<Rule> rules_;
};

/// First-match classification: the smallest-rank rule whose pattern matches
/// the dot-joined cleaned string wins. Total thanks to the catch-all.
inline RuleMatch apply_rules(const TokenSet& ts, const RuleSet& rs) {
    std::string s = ts.joined();
    for (const auto& r : rs.rules())
        if (std::regex_search(s, r.re))
            return {r.class_name, r.category, r.rank};
    throw ValidationError("rule set failed to match (missing catch-all?)");
}

/// One detection record mapped to its normalized (class, category).
struct NormalizedDetection {
    std::string app_id;
    std::string engine_id;
    int app_idx = -1;      // dense index from the source Dataset
    int engine_idx = -1;
    std::string class_name;
    Category category = Category::UnknownGeneric;
    int rule_rank = 0;
};

inline std::vector<NormalizedDetection> normalize_dataset(const Dataset& ds,
                                                          const RuleSet& rs,
                                                          const Stopwords& stopwords) {
    std::vector<NormalizedDetection> out;
    out.reserve(ds.n_records());
    for (size_t i = 0; i < ds.n_records(); ++i) {
        const auto& rec = ds.records()[i];
        TokenSet ts = clean_signature(rec.raw_signature, stopwords);
        RuleMatch m = apply_rules(ts, rs);
        NormalizedDetection nd;
        nd.app_id = rec.app_id;
        nd.engine_id = rec.engine_id;
        nd.app_idx = ds.app_index_of_record(i);
        nd.engine_idx = ds.engine_index_of_record(i);
        nd.class_name = std::move(m.class_name);
        nd.category = m.category;
        nd.rule_rank = m.rank;
        out.push_back(std::move(nd));
    }
    return out;
}

} // namespace avsig
