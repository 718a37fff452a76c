#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mrgen {

/// Deterministic 64-bit generator (splitmix64). We own the distribution
/// code so that seeded runs reproduce bit-for-bit regardless of the
/// standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        if (lo >= hi) return lo;
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    std::size_t next_index(std::size_t n) {
        return n <= 1 ? 0 : static_cast<std::size_t>(next_u64() % n);
    }

    bool next_bool(double p = 0.5) { return next_unit() < p; }

    double next_real(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[next_index(items.size())];
    }

    /// Independent child stream; consuming it does not advance this one.
    Rng split() { return Rng(next_u64()); }

private:
    std::uint64_t state_;
};

/// Folds a textual tag into a master seed so that pipeline stages draw from
/// disjoint, documented namespaces (e.g. derive_seed(seed, "corpus.train")).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    Rng mix(master ^ h);
    return mix.next_u64();
}

} // namespace mrgen
