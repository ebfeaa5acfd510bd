#pragma once

#include <cstdint>
#include <string_view>

// Seeded 64-bit hashing used for minhash sketches, engine-alias tie
// breaking and LSH band keys. All hashes here are stable across runs
// and platforms; std::hash is deliberately avoided on output paths.

namespace avsig {

/// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over bytes, then one mix round for avalanche.
inline uint64_t hash_bytes(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

/// Stream of derived seeds from a master seed (splitmix64 sequence).
class SeedStream {
public:
    explicit SeedStream(uint64_t master) : state_(master) {}
    uint64_t next() { return mix64(state_++); }

private:
    uint64_t state_;
};

/// i-th member of a seeded hash family applied to a pre-hashed element.
inline uint64_t seeded_hash(uint64_t element_hash, uint64_t seed) {
    return mix64(element_hash ^ seed);
}

} // namespace avsig
