#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ousv {

/// SplitMix-style 64-bit finalizer. Bijective; statistically strong enough
/// that hash-derived stream keys behave as independent generators.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSeedTag = 0x8f0c2645a1ea3fb1ULL;
constexpr std::uint64_t kStreamTag = 0xd2b74407b1ce6e93ULL;
constexpr std::uint64_t kChildTag = 0xaef17502108ef2d9ULL;

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return mix64(mix64(seed + kSeedTag) ^ mix64(stream_id + kStreamTag));
}

/// Inverse standard normal CDF, Wichura's PPND16 rational approximation.
/// Accurate to ~1e-16 over (0,1); one uniform in, one normal out.
inline double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            ((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0;
        const double den =
            ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0;
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
               3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
             4.63033784615654529590e0) * r + 1.42343711074968357734e0;
        const double den =
            ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
               6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
             2.05319162663775882187e0) * r + 1.0;
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
               2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
             5.46378491116411436990e0) * r + 6.65790464350110377720e0;
        const double den =
            ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
             5.99832206555887937690e-1) * r + 1.0;
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

} // namespace detail

/// Deterministic, splittable random stream.
///
/// A stream is identified by (seed, stream_id); the draw sequence is a pure
/// function of that pair, so results are reproducible across runs and across
/// worker counts. split(i) derives a child keyed by (parent lineage, i) in
/// O(1) without touching the parent's state, which is how path-level
/// parallelism stays deterministic: path k always uses split(k).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : seed_(seed), stream_id_(stream_id),
          key_(detail::stream_key(seed, stream_id)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    /// Number of raw 64-bit draws consumed so far.
    std::uint64_t draw_count() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * detail::kGolden); }

    /// Uniform on [0,1), 53-bit resolution.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on the open interval (0,1); safe under log/pow transforms.
    double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via the inverse CDF; consumes exactly one draw.
    double normal() noexcept { return detail::inverse_normal_cdf(uniform_open()); }

    /// Gamma(shape, scale). Marsaglia-Tsang rejection for shape >= 1;
    /// shape < 1 is boosted exactly via Gamma(shape+1) * U^(1/shape).
    double gamma(double shape, double scale = 1.0) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw std::domain_error("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double boost = std::pow(uniform_open(), 1.0 / shape);
            return gamma_mt(shape + 1.0) * boost * scale;
        }
        return gamma_mt(shape) * scale;
    }

    /// Beta(a, b) on (0,1). a == 1 or b == 1 use the inverse CDF; the
    /// general case uses the two-gamma ratio.
    double beta(double a, double b) {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::domain_error("beta: parameters must be positive");
        double x;
        if (a == 1.0) {
            x = 1.0 - std::pow(uniform_open(), 1.0 / b);
        } else if (b == 1.0) {
            x = std::pow(uniform_open(), 1.0 / a);
        } else {
            const double g1 = gamma(a);
            const double g2 = gamma(b);
            x = (g1 + g2 > 0.0) ? g1 / (g1 + g2) : 0.5;
        }
        if (x <= 0.0) x = 0x1.0p-1074;
        if (x >= 1.0) x = 0x1.fffffffffffffp-1;
        return x;
    }

    /// Beta(1, delta) draw; the stick-breaking fraction used throughout.
    double beta_one(double delta) {
        if (!(delta > 0.0))
            throw std::domain_error("beta_one: delta must be positive");
        double x = 1.0 - std::pow(uniform_open(), 1.0 / delta);
        if (x <= 0.0) x = 0x1.0p-1074;
        if (x >= 1.0) x = 0x1.fffffffffffffp-1;
        return x;
    }

    /// Child stream keyed by (this stream's lineage, index). Does not
    /// advance or share state with the parent.
    RandomStream split(std::uint64_t index) const noexcept {
        const std::uint64_t child_id =
            mix64(stream_id_ ^ mix64(index + detail::kChildTag));
        return RandomStream(seed_, child_id);
    }

private:
    double gamma_mt(double shape) noexcept {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, t;
            do {
                x = normal();
                t = 1.0 + c * x;
            } while (t <= 0.0);
            const double v = t * t * t;
            const double u = uniform_open();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace ousv
