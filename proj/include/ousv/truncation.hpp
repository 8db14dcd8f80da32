#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ousv/ggc.hpp"
#include "ousv/rng.hpp"

namespace ousv {

constexpr double kMachineEpsilon = 2.220446049250313e-16;

/// Truncation rule for the stick-breaking representation
/// M = sum_j W_j Y_j, W_j = V_j prod_{i<j}(1 - V_i), V_j ~ Beta(1, delta).
///
///   FixedN(n):          n sticks, tail closed by an extra Y draw.
///   StoppingBounded(e): bounded Y; stop once the remaining stick mass can
///                       no longer move the estimate by more than e. At the
///                       default machine epsilon this runs until the
///                       accumulated weight sum reaches 1 in double
///                       precision, i.e. the estimate has converged exactly
///                       at working precision.
///   StoppingMean(e):    unbounded Y with finite mean; stop when
///                       E|Y| * residual < e (L1 error bound).
struct TruncationRule {
    enum class Kind { FixedN, StoppingBounded, StoppingMean };

    Kind kind = Kind::StoppingBounded;
    int n = 0;
    double epsilon = kMachineEpsilon;

    static TruncationRule fixed_n(int n) {
        if (n < 1) throw std::domain_error("TruncationRule: n must be >= 1");
        return {Kind::FixedN, n, 0.0};
    }
    static TruncationRule stopping_bounded(double epsilon = kMachineEpsilon) {
        if (!(epsilon > 0.0)) throw std::domain_error("TruncationRule: epsilon must be positive");
        return {Kind::StoppingBounded, 0, epsilon};
    }
    static TruncationRule stopping_mean(double epsilon) {
        if (!(epsilon > 0.0)) throw std::domain_error("TruncationRule: epsilon must be positive");
        return {Kind::StoppingMean, 0, epsilon};
    }
};

struct TruncationDraw {
    double value = 0.0;
    std::int64_t n_used = 0;
};

namespace detail {

constexpr std::int64_t kStickCap = 1000000000;

/// Generic truncated sampler over a Y source exposing sample()/bound()/mean().
///
/// FixedN and StoppingMean maintain the residual as the running product
/// prod(1 - V_i), identically equal to 1 - sum W_j, with no cancellation.
/// StoppingBounded at machine epsilon instead anchors the stopping test to
/// the accumulated double-precision weight sum: each stick takes
/// W = V * (1.0 - sum), and the loop ends exactly when sum rounds to 1, the
/// first moment at which no representable stick can change the estimate.
template <class YSource>
TruncationDraw truncated_sample(double delta, const YSource& y, const TruncationRule& rule,
                                RandomStream& rng) {
    if (!(delta > 0.0)) throw std::domain_error("truncated_sample: delta must be positive");
    const double inv_delta = 1.0 / delta;
    TruncationDraw out;

    if (rule.kind == TruncationRule::Kind::FixedN) {
        double prod = 1.0;
        for (int j = 0; j < rule.n; ++j) {
            const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
            out.value += v * prod * y.sample(rng);
            prod *= 1.0 - v;
        }
        out.value += prod * y.sample(rng);
        out.n_used = rule.n;
        return out;
    }

    if (rule.kind == TruncationRule::Kind::StoppingMean) {
        const double ey = y.mean();
        if (!(ey > 0.0) || !std::isfinite(ey))
            throw std::domain_error("truncated_sample: StoppingMean needs finite E[Y]");
        double prod = 1.0;
        while (ey * prod >= rule.epsilon) {
            const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
            out.value += v * prod * y.sample(rng);
            prod *= 1.0 - v;
            if (++out.n_used > kStickCap)
                throw std::runtime_error("truncated_sample: stick cap exceeded");
        }
        out.value += prod * y.sample(rng);
        return out;
    }

    const double cy = y.bound();
    if (!(cy > 0.0) || !std::isfinite(cy))
        throw std::domain_error("truncated_sample: StoppingBounded needs bounded Y");
    const bool machine = rule.epsilon <= kMachineEpsilon;
    double sum = 0.0;
    for (;;) {
        const double residual = 1.0 - sum;
        if (machine ? residual <= 0.0 : cy * residual < rule.epsilon) break;
        const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
        const double w = v * residual;
        out.value += w * y.sample(rng);
        sum += w;
        if (++out.n_used > kStickCap)
            throw std::runtime_error("truncated_sample: stick cap exceeded");
    }
    const double residual = 1.0 - sum;
    if (residual > 0.0) out.value += residual * y.sample(rng);
    return out;
}

struct SpecYSource {
    const DirichletMeanSpec& spec;
    double sample(RandomStream& rng) const { return spec.sample_y(rng); }
    double bound() const { return spec.y_bound(); }
    double mean() const { return y_moments(spec).first; }
};

} // namespace detail

/// Truncated draw of the Dirichlet mean M for a spec. Valid for any delta.
inline TruncationDraw sample_truncated(const DirichletMeanSpec& spec,
                                       const TruncationRule& rule, RandomStream& rng) {
    return detail::truncated_sample(spec.delta, detail::SpecYSource{spec}, rule, rng);
}

/// L1 truncation error bound for the fixed-N estimator:
/// E|M - M^N| <= E[Y] (delta / (delta+1))^(N+1).
inline double l1_error_bound(const DirichletMeanSpec& spec, int n) {
    if (n < 0) throw std::domain_error("l1_error_bound: n must be >= 0");
    const double ey = y_moments(spec).first;
    return ey * std::pow(spec.delta / (spec.delta + 1.0), n + 1);
}

/// Joint draw of the transition pair
///   (o1, o2) = (integral dZ, integral e^{-lambda(T-s)} dZ)
/// over a step of length `horizon`, plus the gamma-component increment.
/// One gamma total mass multiplies a single stick sequence whose atoms
/// (R_j, U_j) are shared between the two kernels, which reproduces the joint
/// dependence of the pair. Sticks run to machine exhaustion, so the
/// approximation error is below one ulp per unit of gamma mass.
struct JointPairDraw {
    double o1 = 0.0;
    double o2 = 0.0;
    double gamma_increment = 0.0;
    std::int64_t n_used = 0;
};

inline JointPairDraw sample_joint_pair(double delta, double lambda, double horizon,
                                       const ScaleVariable& scale, RandomStream& rng) {
    if (!(delta > 0.0)) throw std::domain_error("sample_joint_pair: delta must be positive");
    if (!(lambda > 0.0) || !(horizon > 0.0))
        throw std::domain_error("sample_joint_pair: lambda and horizon must be positive");

    JointPairDraw out;
    out.gamma_increment = rng.gamma(delta, 1.0);
    const double inv_delta = 1.0 / delta;
    const double rate = lambda * horizon;

    double sum = 0.0;
    double unit = 0.0;
    double decayed = 0.0;
    while (1.0 - sum > 0.0) {
        const double residual = 1.0 - sum;
        const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
        const double w = v * residual;
        const double r = scale.sample(rng);
        const double u = rng.uniform();
        unit += w * r;
        decayed += w * r * std::exp(-rate * u);
        sum += w;
        if (++out.n_used > detail::kStickCap)
            throw std::runtime_error("sample_joint_pair: stick cap exceeded");
    }
    out.o1 = out.gamma_increment * unit;
    out.o2 = out.gamma_increment * decayed;
    return out;
}

/// Materialized stick sequence with its latent atoms; diagnostic surface for
/// property checks. The residual is maintained as the exact running product.
struct StickBreak {
    std::vector<double> weights;
    std::vector<double> kernel_u;
    std::vector<double> scale_r;
    double residual = 1.0;
};

inline StickBreak break_sticks(const DirichletMeanSpec& spec, int n_sticks,
                               RandomStream& rng) {
    if (n_sticks < 1) throw std::domain_error("break_sticks: need at least one stick");
    StickBreak out;
    out.weights.reserve(n_sticks);
    out.kernel_u.reserve(n_sticks);
    out.scale_r.reserve(n_sticks);
    const double inv_delta = 1.0 / spec.delta;
    double prod = 1.0;
    for (int j = 0; j < n_sticks; ++j) {
        const double v = 1.0 - std::pow(rng.uniform_open(), inv_delta);
        out.weights.push_back(v * prod);
        out.scale_r.push_back(spec.scale.sample(rng));
        out.kernel_u.push_back(rng.uniform());
        prod *= 1.0 - v;
    }
    out.residual = prod;
    return out;
}

} // namespace ousv
