#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace scimet {

// splitmix64; used both as a generator and to derive subseeds.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic subseed for a named component: hash the name into the seed.
inline uint64_t derive_seed(uint64_t seed, std::string_view component) {
    uint64_t h = 1469598103934665603ULL; // FNV-1a 64
    for (unsigned char c : component) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    uint64_t s = seed ^ h;
    return splitmix64(s);
}

// xoshiro256** seeded via splitmix64. All draw methods are hand-rolled so the
// stream depends only on this file, not on the standard library's
// implementation-defined distributions.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, n). Lemire's multiply-shift with rejection.
    uint64_t below(uint64_t n) {
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        uint64_t lo = static_cast<uint64_t>(m);
        if (lo < n) {
            uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t between(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller with one cached value.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n). Partial Fisher-Yates on an index pool for
    // small n; rejection sampling when the pool would be large.
    std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k);

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

inline std::vector<uint32_t> Rng::sample_without_replacement(uint32_t n, uint32_t k) {
    std::vector<uint32_t> out;
    out.reserve(k);
    if (k >= n) {
        out.resize(n);
        for (uint32_t i = 0; i < n; ++i) out[i] = i;
        shuffle(out);
        return out;
    }
    if (n <= 4096 || k * 4 >= n) {
        std::vector<uint32_t> pool(n);
        for (uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (uint32_t i = 0; i < k; ++i) {
            uint32_t j = i + static_cast<uint32_t>(below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }
    std::vector<bool> seen(n, false);
    while (out.size() < k) {
        uint32_t x = static_cast<uint32_t>(below(n));
        if (!seen[x]) {
            seen[x] = true;
            out.push_back(x);
        }
    }
    return out;
}

} // namespace scimet
