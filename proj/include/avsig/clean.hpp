#pragma once

#include <istream>
#include <string>
#include <unordered_set>
#include <vector>

#include "avsig/common.hpp"

namespace avsig {

using Stopwords = std::unordered_set<std::string>;

/// Domain stop-words carrying no malware information. Extended via config.
inline Stopwords default_stopwords() {
    return {"androidos", "android", "os", "win32", "v", "variant", "a", "of"};
}

/// Cleaned signature: lowercase tokens with punctuation stripped and
/// stop-words removed. Tokens are kept sorted and unique so that joined()
/// is canonical regardless of their order in the source string.
struct TokenSet {
    std::vector<std::string> tokens;  // sorted, unique, lowercase
    std::string source;               // original raw signature

    bool empty() const { return tokens.empty(); }

    bool contains(const std::string& t) const {
        return std::binary_search(tokens.begin(), tokens.end(), t);
    }

    /// Canonical dot-joined form; input to shingling and rule matching.
    std::string joined() const { return join(tokens, "."); }

    bool operator==(const TokenSet& o) const { return tokens == o.tokens; }
};

/// Lower-cases, maps punctuation to separators, splits on separators and
/// dots, and drops stop-words. An input whose tokens are all removed yields
/// an empty TokenSet (downstream the catch-all rule picks it up).
inline TokenSet clean_signature(const std::string& raw, const Stopwords& stopwords) {
    TokenSet ts;
    ts.source = raw;
    std::string token;
    auto flush = [&]() {
        if (!token.empty() && stopwords.find(token) == stopwords.end())
            ts.tokens.push_back(token);
        token.clear();
    };
    for (unsigned char c : raw) {
        if (std::isalnum(c))
            token += static_cast<char>(std::tolower(c));
        else
            flush();
    }
    flush();
    std::sort(ts.tokens.begin(), ts.tokens.end());
    ts.tokens.erase(std::unique(ts.tokens.begin(), ts.tokens.end()), ts.tokens.end());
    return ts;
}

/// J(A,B) = |A∩B| / |A∪B| over sorted unique ranges.
/// Undefined (throws) when both sets are empty.
template <typename T>
double exact_jaccard(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.empty() && b.empty())
        throw ValidationError("undefined Jaccard: both sets empty");
    size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++inter; ++i; ++j; }
    }
    size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double exact_jaccard(const TokenSet& a, const TokenSet& b) {
    return exact_jaccard(a.tokens, b.tokens);
}

/// Loads one stop-word per line; '#' starts a comment, blanks ignored.
/// Words are lower-cased on load.
inline Stopwords parse_stopwords(std::istream& in) {
    Stopwords sw;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string w = trim(line);
        if (!w.empty()) sw.insert(to_lower(w));
    }
    return sw;
}

} // namespace avsig
