#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ousv/rng.hpp"

namespace ousv {

/// Scale random variable R of a gamma-convolution subordinator. Closed enum:
/// a certified almost-sure bound is required by the exact sampler, and these
/// two laws cover every supported model.
class ScaleVariable {
public:
    enum class Kind { Constant, ScaledBeta };

    static ScaleVariable constant(double c) {
        if (!(c > 0.0)) throw std::domain_error("ScaleVariable: c must be positive");
        return ScaleVariable(Kind::Constant, c, 0.0, 0.0);
    }

    /// R = c * Beta(a, b).
    static ScaleVariable scaled_beta(double c, double a, double b) {
        if (!(c > 0.0) || !(a > 0.0) || !(b > 0.0))
            throw std::domain_error("ScaleVariable: parameters must be positive");
        return ScaleVariable(Kind::ScaledBeta, c, a, b);
    }

    Kind kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return kind_ == Kind::Constant; }
    double c() const noexcept { return c_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }

    /// Almost-sure upper bound on R.
    double bound() const noexcept { return c_; }

    double mean() const noexcept {
        return kind_ == Kind::Constant ? c_ : c_ * a_ / (a_ + b_);
    }

    double second_moment() const noexcept {
        if (kind_ == Kind::Constant) return c_ * c_;
        return c_ * c_ * a_ * (a_ + 1.0) / ((a_ + b_) * (a_ + b_ + 1.0));
    }

    double sample(RandomStream& rng) const {
        return kind_ == Kind::Constant ? c_ : c_ * rng.beta(a_, b_);
    }

private:
    ScaleVariable(Kind k, double c, double a, double b) : kind_(k), c_(c), a_(a), b_(b) {}

    Kind kind_;
    double c_, a_, b_;
};

/// Kernel applied to the subordinator inside a stochastic integral over a
/// step of length Delta. Evaluated on a latent pair (R, U):
///   Unit:          Y = R
///   Decay:         Y = R * exp(-lambda U Delta)
///   OneMinusDecay: Y = R * (1 - exp(-lambda U Delta))
enum class KernelKind { Unit, Decay, OneMinusDecay };

inline double kernel_value(KernelKind kernel, double r, double u, double lambda,
                           double horizon) noexcept {
    switch (kernel) {
        case KernelKind::Unit: return r;
        case KernelKind::Decay: return r * std::exp(-lambda * u * horizon);
        case KernelKind::OneMinusDecay: return r * (-std::expm1(-lambda * u * horizon));
    }
    return r;
}

/// Specification of a Dirichlet mean variable M: the stationary solution of
///   M =d B * Y + (1 - B) * M,   B ~ Beta(1, delta),
/// with Y drawn from the kernel/scale law above and delta = theta*lambda*Delta.
struct DirichletMeanSpec {
    double delta;
    KernelKind kernel;
    double lambda;
    double horizon;
    ScaleVariable scale;

    DirichletMeanSpec(double delta_, KernelKind kernel_, double lambda_, double horizon_,
                      ScaleVariable scale_)
        : delta(delta_), kernel(kernel_), lambda(lambda_), horizon(horizon_),
          scale(std::move(scale_)) {
        if (!(delta > 0.0)) throw std::domain_error("DirichletMeanSpec: delta must be positive");
        if (!(lambda > 0.0)) throw std::domain_error("DirichletMeanSpec: lambda must be positive");
        if (!(horizon > 0.0)) throw std::domain_error("DirichletMeanSpec: horizon must be positive");
    }

    /// Almost-sure upper bound on Y.
    double y_bound() const noexcept {
        if (kernel == KernelKind::OneMinusDecay)
            return scale.bound() * (-std::expm1(-lambda * horizon));
        return scale.bound();
    }

    /// A point-mass Y makes the coalescence test of the exact sampler
    /// impossible; callers short-circuit to the constant instead.
    bool y_degenerate() const noexcept {
        return kernel == KernelKind::Unit && scale.is_constant();
    }

    double sample_y(RandomStream& rng) const {
        const double r = scale.sample(rng);
        const double u = rng.uniform();
        return kernel_value(kernel, r, u, lambda, horizon);
    }
};

/// Closed-form (E[Y], E[Y^2]) for the kernel/scale law of a spec.
inline std::pair<double, double> y_moments(const DirichletMeanSpec& spec) {
    const double er = spec.scale.mean();
    const double er2 = spec.scale.second_moment();
    const double x = spec.lambda * spec.horizon;
    switch (spec.kernel) {
        case KernelKind::Unit:
            return {er, er2};
        case KernelKind::Decay: {
            const double k1 = -std::expm1(-x) / x;
            const double k2 = -std::expm1(-2.0 * x) / (2.0 * x);
            return {er * k1, er2 * k2};
        }
        case KernelKind::OneMinusDecay: {
            const double k1 = 1.0 + std::expm1(-x) / x;
            const double k2 = 1.0 + 2.0 * std::expm1(-x) / x - std::expm1(-2.0 * x) / (2.0 * x);
            return {er * k1, er2 * k2};
        }
    }
    return {er, er2};
}

/// (mean, variance) of M via the fixed-point moment identities
/// E[M] = E[Y] and Var[M] = Var[Y] / (delta + 1).
inline std::pair<double, double> dirichlet_mean_moments(const DirichletMeanSpec& spec) {
    const auto [ey, ey2] = y_moments(spec);
    const double var_y = ey2 - ey * ey;
    return {ey, var_y / (spec.delta + 1.0)};
}

/// Splits delta > 1 into l = ceil(delta) equal blocks in (0,1], each of which
/// the exact sampler can handle. Integer delta yields blocks of shape 1,
/// which minimizes the expected total stack size.
inline std::vector<double> decompose_delta(double delta) {
    if (!(delta > 1.0)) throw std::domain_error("decompose_delta: requires delta > 1");
    const auto l = static_cast<std::size_t>(std::ceil(delta));
    return std::vector<double>(l, delta / static_cast<double>(l));
}

/// Recombines independent block samples: M = sum_j (G_j / G) M_j with
/// G_j ~ Gamma(shape_j, 1). Exact when the shapes sum to the target delta
/// and the M_j share the same Y law.
struct DirichletBlock {
    double shape;
    double m;
};

inline double compose_dirichlet_mean(std::span<const DirichletBlock> blocks,
                                     RandomStream& rng) {
    if (blocks.empty()) throw std::invalid_argument("compose_dirichlet_mean: no blocks");
    if (blocks.size() == 1) return blocks[0].m;
    double total = 0.0;
    double acc = 0.0;
    for (const auto& blk : blocks) {
        const double g = rng.gamma(blk.shape, 1.0);
        total += g;
        acc += g * blk.m;
    }
    if (total <= 0.0) return blocks[0].m;
    return acc / total;
}

/// Validation-only heavy-tailed examples. These laws are unbounded with
/// infinite mean, so they are deliberately not admissible as ScaleVariable.
struct GgcExampleSpec {
    double alpha_s;
    double c_et;

    GgcExampleSpec(double alpha, double c) : alpha_s(alpha), c_et(c) {
        if (!(alpha > 0.0) || !(alpha < 1.0))
            throw std::domain_error("GgcExampleSpec: alpha must lie in (0,1)");
        if (!(c > 0.0)) throw std::domain_error("GgcExampleSpec: c_et must be positive");
    }
};

namespace detail {
inline double bfry_transform(double gamma_draw, double u, double alpha) {
    return gamma_draw / std::pow(u, 1.0 / alpha);
}
} // namespace detail

/// Draw from the BFRY law Gamma(1-alpha) / U^(1/alpha); density
/// alpha x^(-alpha-1) (1 - e^-x) / Gamma(1-alpha). Heavy tail of index
/// alpha, so no finite mean.
inline double sample_bfry(double alpha, RandomStream& rng) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::domain_error("sample_bfry: alpha must lie in (0,1)");
    const double g = rng.gamma(1.0 - alpha, 1.0);
    return detail::bfry_transform(g, rng.uniform_open(), alpha);
}

/// Exponentially tilted BFRY draw via rejection: propose from the untilted
/// law and accept with probability exp(-c_et x). Acceptance rate is
/// (c_et+1)^alpha - c_et^alpha.
inline double sample_tilted_bfry(double alpha, double c_et, RandomStream& rng) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::domain_error("sample_tilted_bfry: alpha must lie in (0,1)");
    if (!(c_et > 0.0)) throw std::domain_error("sample_tilted_bfry: c_et must be positive");
    for (std::int64_t i = 0; i < 100000000; ++i) {
        const double x = sample_bfry(alpha, rng);
        if (rng.uniform() < std::exp(-c_et * x)) return x;
    }
    throw std::runtime_error("sample_tilted_bfry: proposal cap exceeded");
}

} // namespace ousv
