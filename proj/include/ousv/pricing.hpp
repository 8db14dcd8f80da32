#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ousv/model.hpp"
#include "ousv/parallel.hpp"
#include "ousv/rng.hpp"
#include "ousv/stats.hpp"

namespace ousv {

struct EuropeanCall {
    double strike;
    double maturity;

    EuropeanCall(double k, double t) : strike(k), maturity(t) {
        if (!(k > 0.0) || !(t > 0.0))
            throw std::domain_error("EuropeanCall: strike and maturity must be positive");
    }
};

/// Payoff (S(t2) - k S(t1))^+ paid at t2.
struct ForwardStartOption {
    double k;
    double t1;
    double t2;

    ForwardStartOption(double k_, double t1_, double t2_) : k(k_), t1(t1_), t2(t2_) {
        if (!(k > 0.0)) throw std::domain_error("ForwardStartOption: k must be positive");
        if (!(t1 > 0.0) || !(t2 > t1))
            throw std::domain_error("ForwardStartOption: requires 0 < t1 < t2");
    }
};

/// PSP averages raw discounted payoffs; FSP averages conditional
/// Black-Scholes values, integrating the terminal normal out analytically.
enum class Estimator { PSP, FSP };

struct MonteCarloResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
    double elapsed_seconds = 0.0;
    Estimator estimator = Estimator::PSP;
};

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double black_scholes_call(double spot, double strike, double rate, double dividend,
                                 double sigma, double tenor) {
    if (!(spot > 0.0) || !(strike > 0.0) || !(tenor > 0.0))
        throw std::domain_error("black_scholes_call: spot, strike, tenor must be positive");
    if (sigma < 0.0) throw std::domain_error("black_scholes_call: sigma must be >= 0");
    const double fwd = spot * std::exp(-dividend * tenor);
    const double disc_k = strike * std::exp(-rate * tenor);
    const double vol = sigma * std::sqrt(tenor);
    if (vol <= 0.0) return std::max(fwd - disc_k, 0.0);
    const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * tenor) / vol;
    const double d2 = d1 - vol;
    return fwd * normal_cdf(d1) - disc_k * normal_cdf(d2);
}

struct PricingConfig {
    SamplerChoice sampler = SamplerChoice::exact();
    LeverageCoupling coupling = LeverageCoupling::Shared;
    /// Collapse multi-factor models into the single aggregated draw for
    /// path-independent pricing (same law, far cheaper for small factor
    /// rates).
    bool aggregate_factors = false;
    int threads = 0;
};

namespace detail {

/// One European pricing trial. FSP computes the conditional Black-Scholes
/// value from the volatility draw alone and never touches the terminal
/// normal; PSP draws it.
inline double european_trial(const ModelSpec& model, double s0, const EuropeanCall& opt,
                             Estimator est, RandomStream& rng, const PricingConfig& cfg) {
    const double t = opt.maturity;
    TransitionDraw draw;
    if (cfg.aggregate_factors && model.n_factors() > 1) {
        // Volatility part of the aggregated transition, without the return.
        TransitionDraw d;
        for (const auto& f : model.factors)
            d.tau += f.v0 * (-std::expm1(-f.lambda * t)) / f.lambda;
        if (model.theta > 0.0) {
            const double delta = model.theta * model.total_lambda() * t;
            const MixtureYSource y{model, t};
            const double m =
                cfg.sampler.is_exact()
                    ? cftp_sample_composite(delta, y.bound(),
                                            [&y](RandomStream& r) { return y.sample(r); }, rng)
                          .first
                    : truncated_sample(delta, y, cfg.sampler.rule, rng).value;
            const double g = rng.gamma(delta, 1.0);
            d.tau += g * m;
            const double lev_scale = model.variant == Variant::OuGamma ? model.scale.c() : 1.0;
            d.lev = lev_scale * (cfg.coupling == LeverageCoupling::Shared
                                     ? g
                                     : rng.gamma(delta, 1.0));
        }
        draw = std::move(d);
    } else {
        const auto v0 = initial_vols(model);
        draw = draw_transition_vol(model, v0, t, rng, cfg.sampler, /*path_mode=*/false,
                                   cfg.coupling);
    }

    const double lam_kappa = model.total_lambda() * kappa(model);
    if (est == Estimator::FSP) {
        const double spot_b = s0 * std::exp(-lam_kappa * t + model.rho * draw.lev);
        const double sigma_b = std::sqrt(draw.tau / t);
        return black_scholes_call(spot_b, opt.strike, model.r, model.q, sigma_b, t);
    }
    const double mu = (model.r - model.q - lam_kappa) * t - 0.5 * draw.tau + model.rho * draw.lev;
    const double s_t = s0 * std::exp(mu + std::sqrt(draw.tau) * rng.normal());
    return std::exp(-model.r * t) * std::max(s_t - opt.strike, 0.0);
}

/// One forward-start trial. Both estimators simulate the first interval in
/// full; FSP then values the second interval as a conditional Black-Scholes
/// call on a unit spot, scaled by S(t1).
inline double forward_start_trial(const ModelSpec& model, double s0,
                                  const ForwardStartOption& opt, Estimator est,
                                  RandomStream& rng, const PricingConfig& cfg) {
    const double dt1 = opt.t1;
    const double dt2 = opt.t2 - opt.t1;
    std::vector<double> v = initial_vols(model);
    TransitionDraw first =
        draw_transition_vol(model, v, dt1, rng, cfg.sampler, /*path_mode=*/true, cfg.coupling);
    const double lam_kappa = model.total_lambda() * kappa(model);
    const double mu1 =
        (model.r - model.q - lam_kappa) * dt1 - 0.5 * first.tau + model.rho * first.lev;
    const double s1 = s0 * std::exp(mu1 + std::sqrt(first.tau) * rng.normal());
    if (first.has_factor_states()) v = first.v_end;

    if (est == Estimator::FSP) {
        TransitionDraw second = draw_transition_vol(model, v, dt2, rng, cfg.sampler,
                                                    /*path_mode=*/false, cfg.coupling);
        const double spot_b = std::exp(-lam_kappa * dt2 + model.rho * second.lev);
        const double sigma_b = std::sqrt(second.tau / dt2);
        const double ce = black_scholes_call(spot_b, opt.k, model.r, model.q, sigma_b, dt2);
        return std::exp(-model.r * opt.t1) * s1 * ce;
    }
    TransitionDraw second = draw_transition_vol(model, v, dt2, rng, cfg.sampler,
                                                /*path_mode=*/true, cfg.coupling);
    const double mu2 =
        (model.r - model.q - lam_kappa) * dt2 - 0.5 * second.tau + model.rho * second.lev;
    const double s2 = s1 * std::exp(mu2 + std::sqrt(second.tau) * rng.normal());
    return std::exp(-model.r * opt.t2) * std::max(s2 - opt.k * s1, 0.0);
}

template <class Trial>
MonteCarloResult run_trials(std::int64_t trials, RandomStream base, int threads, Estimator est,
                            Trial&& trial) {
    if (trials < 1) throw std::domain_error("run_trials: trials must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const int nblocks = block_count(trials);
    std::vector<SampleStats> block_stats(nblocks);
    for_each_block(trials, threads, [&](int b, std::int64_t first, std::int64_t last) {
        SampleStats st;
        for (std::int64_t i = first; i < last; ++i) {
            RandomStream rng = base.split(static_cast<std::uint64_t>(i));
            st.add(trial(rng));
        }
        block_stats[b] = st;
    });
    SampleStats total;
    for (const auto& st : block_stats) total.merge(st);
    MonteCarloResult out;
    out.estimate = total.mean();
    out.std_error = total.std_error();
    out.trials = trials;
    out.estimator = est;
    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace detail

inline MonteCarloResult price_european(const ModelSpec& model, double s0,
                                       const EuropeanCall& option, std::int64_t trials,
                                       RandomStream base, Estimator estimator,
                                       const PricingConfig& cfg = {}) {
    if (!(s0 > 0.0)) throw std::domain_error("price_european: s0 must be positive");
    return detail::run_trials(trials, base, cfg.threads, estimator, [&](RandomStream& rng) {
        return detail::european_trial(model, s0, option, estimator, rng, cfg);
    });
}

inline MonteCarloResult price_forward_start(const ModelSpec& model, double s0,
                                            const ForwardStartOption& option,
                                            std::int64_t trials, RandomStream base,
                                            Estimator estimator, const PricingConfig& cfg = {}) {
    if (!(s0 > 0.0)) throw std::domain_error("price_forward_start: s0 must be positive");
    return detail::run_trials(trials, base, cfg.threads, estimator, [&](RandomStream& rng) {
        return detail::forward_start_trial(model, s0, option, estimator, rng, cfg);
    });
}

/// Plain-simulation pricing of a payoff depending on the prices at finitely
/// many dates. `discounted_payoff` receives the simulated price vector.
inline MonteCarloResult price_path_dependent(
    const ModelSpec& model, double s0,
    const std::function<double(std::span<const double>)>& discounted_payoff,
    std::span<const double> times, std::int64_t trials, RandomStream base,
    const PricingConfig& cfg = {}) {
    if (!(s0 > 0.0)) throw std::domain_error("price_path_dependent: s0 must be positive");
    std::vector<double> times_copy(times.begin(), times.end());
    return detail::run_trials(trials, base, cfg.threads, Estimator::PSP, [&](RandomStream& rng) {
        const auto path = sample_path(model, s0, times_copy, rng, cfg.sampler, cfg.coupling);
        std::vector<double> prices;
        prices.reserve(path.size());
        for (const auto& step : path) prices.push_back(step.price);
        return discounted_payoff(prices);
    });
}

} // namespace ousv
