#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "drdc/tensor.hpp"

namespace drdc {

/// Deterministic random stream. All randomness in the project flows from one
/// master seed through named sub-streams, so any stage can be re-run in
/// isolation and parallel work can use independent streams.
///
/// Gaussian variates use Box-Muller on top of mt19937_64 rather than
/// std::normal_distribution, whose algorithm is implementation-defined.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    /// Sub-stream derived from a master seed and a path-like name,
    /// e.g. substream(7, "infer/stripes_test_003/c8/set1").
    static RngStream substream(uint64_t master_seed, std::string_view name) {
        // FNV-1a over the name, mixed with the seed
        uint64_t h = 14695981039346656037ull;
        for (char ch : name) {
            h ^= static_cast<uint8_t>(ch);
            h *= 1099511628211ull;
        }
        h ^= master_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return RngStream(h);
    }

    uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0,1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive, by rejection (unbiased).
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return lo + static_cast<int64_t>(v % span);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(Tensor& t) {
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = normal();
    }

    Tensor normal_tensor(std::vector<int> shape) {
        Tensor t(std::move(shape));
        fill_normal(t);
        return t;
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace drdc
