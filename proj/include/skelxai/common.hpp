#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skelxai {

// ---------------------------------------------------------------- errors

struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };

struct SequenceTooShort : DataError { using DataError::DataError; };
struct ShapeMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyEnsemble : std::runtime_error { using std::runtime_error::runtime_error; };
struct DivergedLoss : std::runtime_error { using std::runtime_error::runtime_error; };
struct KOutOfRange : std::out_of_range { using std::out_of_range::out_of_range; };
struct MixedMethods : std::runtime_error { using std::runtime_error::runtime_error; };
struct NonPositiveHeight : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyFamily : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoConsistentPerturbation : std::runtime_error { using std::runtime_error::runtime_error; };
struct MissingK : std::runtime_error { using std::runtime_error::runtime_error; };
struct InsufficientSamples : std::runtime_error { using std::runtime_error::runtime_error; };
struct MissingInput : DataError { using DataError::DataError; };

// ------------------------------------------------- deterministic hashing/rng
//
// All randomness in the pipeline is derived from explicit 64-bit keys so that
// results are reproducible across platforms and independent of worker count.

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// uniform in [0, 1) from the top 53 bits
constexpr double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Small counter-based generator; every consumer owns its own stream keyed by
// the quantities that identify the draw (seed, sequence, member, joint, ...).
class Prng {
public:
    explicit Prng(std::uint64_t key) : state_(splitmix64(key)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    double uniform() { return unit_double(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; consumes two uniforms per call.
    double gaussian();

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------- tensors

// Dense (channels, frames, joints) tensor, joint index fastest.
struct Tensor3 {
    int c = 0, t = 0, v = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c_, int t_, int v_)
        : c(c_), t(t_), v(v_), data(static_cast<std::size_t>(c_) * t_ * v_, 0.0) {}

    double& at(int ci, int ti, int vi) {
        return data[(static_cast<std::size_t>(ci) * t + ti) * v + vi];
    }
    double at(int ci, int ti, int vi) const {
        return data[(static_cast<std::size_t>(ci) * t + ti) * v + vi];
    }
    double* plane(int ci, int ti) { return data.data() + (static_cast<std::size_t>(ci) * t + ti) * v; }
    const double* plane(int ci, int ti) const {
        return data.data() + (static_cast<std::size_t>(ci) * t + ti) * v;
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor3& o) const { return c == o.c && t == o.t && v == o.v; }
};

// ---------------------------------------------------------------- misc

// Median with the even-count convention (mean of the two central values).
double median(std::vector<double> values);

std::string format_double(double v);  // shortest round-trip-safe decimal

// Runs fn(i) for i in [0, n) on `workers` threads. Work items must be
// independent; ordering of side effects is up to the caller.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace skelxai
