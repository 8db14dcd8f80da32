#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ousv/ggc.hpp"
#include "ousv/rng.hpp"

namespace ousv {

class InvalidDeltaError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DegenerateYError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Constants certifying the coupling: c_h is the lower bound of the
/// Beta(1,delta) density on [0,1] (equal to delta when delta <= 1) and c_y
/// the almost-sure bound on Y.
struct CftpConfig {
    double c_h;
    double c_y;

    static CftpConfig from_spec(const DirichletMeanSpec& spec) {
        if (spec.delta > 1.0)
            throw InvalidDeltaError("CftpConfig: delta must be <= 1");
        return {spec.delta, spec.y_bound()};
    }
};

struct CftpStats {
    std::int64_t stack_size = 0;
    std::int64_t backward_steps = 0;
    std::int64_t forward_rejections = 0;

    void merge(const CftpStats& other) noexcept {
        stack_size += other.stack_size;
        backward_steps += other.backward_steps;
        forward_rejections += other.forward_rejections;
    }
};

namespace detail {

// Primitive-draw budget per sample; converts pathological non-termination
// into an error instead of a hang.
constexpr std::int64_t kCftpDrawCap = 1000000000;

// Weighted density term h((x-m)/(y-m)) / |y-m| with h the Beta(1,delta)
// density. A zero denominator is a measure-zero coincidence; returning
// +inf (immediate acceptance) is the only unbiased choice.
inline double forward_density_term(double x, double m, double y, double delta) {
    const double d = y - m;
    if (d == 0.0) return std::numeric_limits<double>::infinity();
    const double t = (x - m) / d;
    if (t < 0.0 || t > 1.0) return 0.0;
    return delta * std::pow(1.0 - t, delta - 1.0) / std::fabs(d);
}

/// Double coupling-from-the-past over the map M -> (1-V)M + VY for a
/// generic bounded Y source. Backward phase stores (Y, Y') pairs until the
/// coalescence event U <= |Y - Y'| c_h / (2 c_y); the forward phase replays
/// the stored pairs through a rejection step to deliver a draw exactly
/// distributed as the stationary law.
template <class YSample>
std::pair<double, CftpStats> cftp_sample(double delta, double y_bound, YSample&& draw_y,
                                         RandomStream& rng) {
    if (!(delta > 0.0) || delta > 1.0)
        throw InvalidDeltaError("cftp_sample: requires 0 < delta <= 1");
    if (!(y_bound > 0.0) || !std::isfinite(y_bound))
        throw std::domain_error("cftp_sample: Y must have a finite positive bound");

    const double c_h = delta;
    const double c_y = y_bound;
    const double coalesce_scale = c_h / (2.0 * c_y);
    const double accept_level = c_h / c_y;
    const double inv_delta = 1.0 / delta;

    CftpStats stats;
    std::int64_t draws = 0;

    std::vector<std::pair<double, double>> stack;
    double m = 0.0;
    for (;;) {
        const double u = rng.uniform();
        const double ya = draw_y(rng);
        const double yb = draw_y(rng);
        draws += 3;
        stack.emplace_back(ya, yb);
        if (u <= std::fabs(ya - yb) * coalesce_scale) {
            m = std::min(ya, yb) + 2.0 * c_y * u / c_h;
            break;
        }
        if (draws > kCftpDrawCap)
            throw std::runtime_error("cftp_sample: backward phase exceeded draw cap");
    }
    stats.stack_size = static_cast<std::int64_t>(stack.size());
    stats.backward_steps = stats.stack_size;

    for (std::size_t k = stack.size() - 1; k-- > 0;) {
        const auto [yi, yj] = stack[k];
        const double lo = std::min(yi, yj);
        const double hi = std::max(yi, yj);
        for (;;) {
            const double u = rng.uniform();
            const bool pick_first = rng.bernoulli(0.5);
            const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
            draws += 3;
            const double x = (1.0 - v) * m + v * (pick_first ? yi : yj);
            bool accept = (x < lo) || (x > hi);
            if (!accept) {
                const double weight = forward_density_term(x, m, yi, delta) +
                                      forward_density_term(x, m, yj, delta);
                accept = u * weight > accept_level;
            }
            if (accept) {
                m = x;
                break;
            }
            ++stats.forward_rejections;
            if (draws > kCftpDrawCap)
                throw std::runtime_error("cftp_sample: forward phase exceeded draw cap");
        }
    }
    return {m, stats};
}

/// Composite exact draw over a generic Y source: shapes above 1 are split
/// into ceil(delta) equal blocks, sampled independently and recombined with
/// gamma weights.
template <class YSample>
std::pair<double, CftpStats> cftp_sample_composite(double delta, double y_bound,
                                                   YSample&& draw_y, RandomStream& rng) {
    if (delta <= 1.0) return cftp_sample(delta, y_bound, draw_y, rng);
    const auto l = static_cast<std::size_t>(std::ceil(delta));
    const double shape = delta / static_cast<double>(l);
    CftpStats stats;
    std::vector<DirichletBlock> blocks;
    blocks.reserve(l);
    for (std::size_t j = 0; j < l; ++j) {
        auto [m, s] = cftp_sample(shape, y_bound, draw_y, rng);
        stats.merge(s);
        blocks.push_back({shape, m});
    }
    return {compose_dirichlet_mean(blocks, rng), stats};
}

} // namespace detail

/// Exact draw of the Dirichlet mean M for delta <= 1. Throws DegenerateYError
/// when Y is a point mass (the coalescence test can never fire); callers are
/// expected to short-circuit that case to the constant.
inline std::pair<double, CftpStats> sample_exact(const DirichletMeanSpec& spec,
                                                 RandomStream& rng) {
    if (spec.delta > 1.0)
        throw InvalidDeltaError("sample_exact: delta must be <= 1; use sample_exact_composite");
    if (spec.y_degenerate())
        throw DegenerateYError("sample_exact: Y is a point mass; its mean is the constant");
    return detail::cftp_sample(
        spec.delta, spec.y_bound(),
        [&spec](RandomStream& r) { return spec.sample_y(r); }, rng);
}

/// Exact draw for any delta > 0. Delegates to sample_exact for delta <= 1;
/// larger shapes are decomposed into blocks in (0,1], sampled independently
/// and recombined with gamma weights. Point-mass Y returns the constant.
inline std::pair<double, CftpStats> sample_exact_composite(const DirichletMeanSpec& spec,
                                                           RandomStream& rng) {
    if (spec.y_degenerate()) return {spec.scale.c(), CftpStats{}};
    if (spec.delta <= 1.0) return sample_exact(spec, rng);

    const std::vector<double> shapes = decompose_delta(spec.delta);
    CftpStats stats;
    std::vector<DirichletBlock> blocks;
    blocks.reserve(shapes.size());
    for (const double shape : shapes) {
        DirichletMeanSpec block_spec(shape, spec.kernel, spec.lambda, spec.horizon, spec.scale);
        auto [m, s] = sample_exact(block_spec, rng);
        stats.merge(s);
        blocks.push_back({shape, m});
    }
    return {compose_dirichlet_mean(blocks, rng), stats};
}

} // namespace ousv
