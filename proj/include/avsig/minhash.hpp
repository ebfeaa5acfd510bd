#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "avsig/clean.hpp"
#include "avsig/hash.hpp"

namespace avsig {

struct MinHashConfig {
    int k = 200;             // hash functions per sketch
    int shingle_width = 4;   // character shingle width w
    uint64_t seed = 1;       // master seed; per-function seeds derive from it

    bool operator==(const MinHashConfig& o) const {
        return k == o.k && shingle_width == o.shingle_width && seed == o.seed;
    }
};

/// Per-function minima over the shingle set of one cleaned signature.
struct MinHashSignature {
    std::vector<uint64_t> values;  // length k
    MinHashConfig config;
};

/// Character w-shingles of the canonical dot-joined string, deduplicated
/// and sorted. A string shorter than w yields one shingle: the whole string.
inline std::vector<std::string> shingles(const std::string& s, int w) {
    if (w < 1) throw ValidationError("shingle width must be >= 1");
    std::vector<std::string> out;
    if (s.size() < static_cast<size_t>(w)) {
        out.push_back(s);
        return out;
    }
    out.reserve(s.size() - w + 1);
    for (size_t i = 0; i + w <= s.size(); ++i) out.push_back(s.substr(i, w));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::string> shingles(const TokenSet& ts, int w) {
    return shingles(ts.joined(), w);
}

inline MinHashSignature minhash(const TokenSet& ts, const MinHashConfig& cfg) {
    if (cfg.k < 1) throw ValidationError("minhash: k must be >= 1");
    auto sh = shingles(ts, cfg.shingle_width);
    std::vector<uint64_t> base;
    base.reserve(sh.size());
    for (const auto& s : sh) base.push_back(hash_bytes(s));

    SeedStream seeds(cfg.seed);
    MinHashSignature sig;
    sig.config = cfg;
    sig.values.resize(cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
        uint64_t seed = seeds.next();
        uint64_t mn = UINT64_MAX;
        for (uint64_t h : base) {
            uint64_t v = seeded_hash(h, seed);
            if (v < mn) mn = v;
        }
        sig.values[i] = mn;
    }
    return sig;
}

/// Fraction of sketch positions that agree; an unbiased estimate of the
/// Jaccard similarity of the underlying shingle sets.
inline double estimate_similarity(const MinHashSignature& a, const MinHashSignature& b) {
    if (!(a.config == b.config))
        throw ValidationError("estimate_similarity: mismatched minhash configurations");
    if (a.values.size() != b.values.size())
        throw ValidationError("estimate_similarity: mismatched sketch lengths");
    size_t agree = 0;
    for (size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] == b.values[i]) ++agree;
    return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

/// Near-duplicate bucket produced by LSH banding; a human-review unit.
struct SignatureGroup {
    uint64_t bucket_key = 0;          // smallest band key seen in the group
    std::vector<size_t> members;      // indices into the input corpus
    std::string representative;       // most frequent raw signature in the bucket
};

namespace detail {

class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), size_t{0});
    }
    size_t find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<size_t> parent_;
};

} // namespace detail

/// Standard LSH banding over minhash sketches: signatures sharing any of
/// the b band hashes (r rows each, b*r == k) land in one group, merged
/// transitively. Singletons are retained. Output is sorted by descending
/// group size for review, ties by bucket key then first member.
inline std::vector<SignatureGroup> group_signatures(const std::vector<TokenSet>& corpus,
                                                    const MinHashConfig& cfg,
                                                    int bands, int rows) {
    if (bands < 1 || rows < 1 || bands * rows != cfg.k)
        throw ValidationError("group_signatures: bands * rows must equal k");

    std::vector<MinHashSignature> sigs;
    sigs.reserve(corpus.size());
    for (const auto& ts : corpus) sigs.push_back(minhash(ts, cfg));

    detail::UnionFind uf(corpus.size());
    std::vector<uint64_t> min_band_key(corpus.size(), UINT64_MAX);
    std::unordered_map<uint64_t, size_t> bucket_first;
    bucket_first.reserve(corpus.size() * bands);
    for (int band = 0; band < bands; ++band) {
        bucket_first.clear();
        for (size_t i = 0; i < sigs.size(); ++i) {
            uint64_t key = hash_bytes("band") ^ mix64(static_cast<uint64_t>(band));
            for (int r = 0; r < rows; ++r)
                key = hash_combine(key, sigs[i].values[band * rows + r]);
            if (key < min_band_key[i]) min_band_key[i] = key;
            auto [it, inserted] = bucket_first.emplace(key, i);
            if (!inserted) uf.unite(it->second, i);
        }
    }

    std::map<size_t, SignatureGroup> groups;  // root -> group
    for (size_t i = 0; i < corpus.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(uf.find(i));
        auto& g = it->second;
        g.bucket_key = inserted ? min_band_key[i] : std::min(g.bucket_key, min_band_key[i]);
        g.members.push_back(i);
    }

    std::vector<SignatureGroup> out;
    out.reserve(groups.size());
    for (auto& [root, g] : groups) {
        // Representative: most frequent raw signature, ties to the smallest.
        std::map<std::string, size_t> freq;
        for (size_t m : g.members) ++freq[corpus[m].source];
        size_t best = 0;
        for (const auto& [sig, count] : freq) {
            if (count > best) {
                best = count;
                g.representative = sig;
            }
        }
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(), [](const SignatureGroup& a, const SignatureGroup& b) {
        if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
        if (a.bucket_key != b.bucket_key) return a.bucket_key < b.bucket_key;
        return a.members.front() < b.members.front();
    });
    return out;
}

} // namespace avsig
