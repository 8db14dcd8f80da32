#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ousv/cftp.hpp"
#include "ousv/ggc.hpp"
#include "ousv/rng.hpp"
#include "ousv/truncation.hpp"

namespace ousv {

/// Model family. OuGamma drives the volatility with a gamma subordinator of
/// shape theta and scale c and puts the same subordinator in the leverage
/// term. GlOuGgc drives the volatility with a gamma-convolution subordinator
/// of scale law R and levers on its extracted gamma component, which keeps
/// the terminal law exactly samplable.
enum class Variant { OuGamma, GlOuGgc };

/// Whether the leverage increment reuses the gamma mass of the volatility
/// jump (the model's joint law) or draws an independent copy. The
/// independent variant is a diagnostic only: it leaves all marginal means
/// intact but changes the return dispersion under leverage.
enum class LeverageCoupling { Shared, Independent };

struct Factor {
    double lambda = 0.0;
    double weight = 0.0;
    double v0 = 0.0;
};

struct ModelSpec {
    Variant variant = Variant::OuGamma;
    double rho = 0.0;
    double theta = 0.0;
    ScaleVariable scale = ScaleVariable::constant(1.0);
    std::vector<Factor> factors;
    double r = 0.0;
    double q = 0.0;

    static ModelSpec ou_gamma(double rho, double theta, double c,
                              std::vector<std::pair<double, double>> lambda_v0, double r,
                              double q) {
        ModelSpec m;
        m.variant = Variant::OuGamma;
        m.rho = rho;
        m.theta = theta;
        m.scale = ScaleVariable::constant(c);
        m.set_factors(std::move(lambda_v0));
        m.r = r;
        m.q = q;
        m.validate();
        return m;
    }

    static ModelSpec gl_ou_ggc(double rho, double theta, ScaleVariable scale,
                               std::vector<std::pair<double, double>> lambda_v0, double r,
                               double q) {
        ModelSpec m;
        m.variant = Variant::GlOuGgc;
        m.rho = rho;
        m.theta = theta;
        m.scale = std::move(scale);
        m.set_factors(std::move(lambda_v0));
        m.r = r;
        m.q = q;
        m.validate();
        return m;
    }

    double total_lambda() const noexcept {
        double s = 0.0;
        for (const auto& f : factors) s += f.lambda;
        return s;
    }

    std::size_t n_factors() const noexcept { return factors.size(); }

    /// Gamma scale c of the OuGamma variant.
    double gamma_scale() const {
        if (variant != Variant::OuGamma)
            throw std::logic_error("gamma_scale: only meaningful for OuGamma");
        return scale.c();
    }

    void validate() const {
        if (factors.empty()) throw std::domain_error("ModelSpec: at least one factor required");
        if (rho > 0.0) throw std::domain_error("ModelSpec: rho must be <= 0");
        if (theta < 0.0) throw std::domain_error("ModelSpec: theta must be >= 0");
        if (variant == Variant::OuGamma && !scale.is_constant())
            throw std::domain_error("ModelSpec: OuGamma requires a constant scale");
        const double lambda = total_lambda();
        if (!(lambda > 0.0)) throw std::domain_error("ModelSpec: total lambda must be positive");
        double wsum = 0.0;
        for (const auto& f : factors) {
            if (!(f.lambda > 0.0)) throw std::domain_error("ModelSpec: lambda_j must be positive");
            if (f.v0 < 0.0) throw std::domain_error("ModelSpec: v0_j must be >= 0");
            if (!(f.weight > 0.0) || f.weight > 1.0)
                throw std::domain_error("ModelSpec: weights must lie in (0,1]");
            if (std::fabs(f.weight - f.lambda / lambda) > 1e-9)
                throw std::domain_error("ModelSpec: weight_j must equal lambda_j / lambda");
            wsum += f.weight;
        }
        if (std::fabs(wsum - 1.0) > 1e-9)
            throw std::domain_error("ModelSpec: weights must sum to 1");
        // The leverage drift needs log(1 - rho c) resp. log(1 - rho).
        const double arg = leverage_log_argument();
        if (!(arg > 0.0)) throw std::domain_error("ModelSpec: leverage log argument must be positive");
    }

    double leverage_log_argument() const noexcept {
        return variant == Variant::OuGamma ? 1.0 - rho * scale.c() : 1.0 - rho;
    }

private:
    void set_factors(std::vector<std::pair<double, double>> lambda_v0) {
        if (lambda_v0.empty()) throw std::domain_error("ModelSpec: at least one factor required");
        double lambda = 0.0;
        for (const auto& [lj, v0] : lambda_v0) lambda += lj;
        factors.clear();
        factors.reserve(lambda_v0.size());
        for (const auto& [lj, v0] : lambda_v0)
            factors.push_back({lj, lj / lambda, v0});
    }
};

/// Cumulant correction kappa(rho) entering the risk-neutral drift:
/// -theta log(1 - rho c) for OuGamma, -theta log(1 - rho) for the
/// gamma-leveraged variant.
inline double kappa(const ModelSpec& model) {
    const double arg = model.leverage_log_argument();
    if (!(arg > 0.0)) throw std::domain_error("kappa: log argument must be positive");
    return -model.theta * std::log(arg);
}

/// Which sampler provides the Dirichlet mean draws.
struct SamplerChoice {
    enum class Kind { Exact, Truncated };
    Kind kind = Kind::Exact;
    TruncationRule rule = TruncationRule::stopping_bounded();

    static SamplerChoice exact() { return {Kind::Exact, TruncationRule::stopping_bounded()}; }
    static SamplerChoice truncated(TruncationRule r) { return {Kind::Truncated, r}; }
    bool is_exact() const noexcept { return kind == Kind::Exact; }
};

/// Per-interval state produced by one simulated transition. tau is the
/// integrated volatility of the step, lev the leverage increment entering
/// the return drift. The per-factor vectors hold the AR(1) innovations
///   v_end = e^{-lambda dt} v_start + o2,   lambda tau = v_start - v_end + o1,
/// and are empty in modes that cannot produce joint factor states
/// (gamma-leveraged exact transitions, which are terminal by construction).
struct TransitionDraw {
    double tau = 0.0;
    double lev = 0.0;
    double log_return = 0.0;
    std::vector<double> v_end;
    std::vector<double> o1;
    std::vector<double> o2;

    bool has_factor_states() const noexcept { return !v_end.empty(); }
};

struct PathStep {
    double time = 0.0;
    double price = 0.0;
    TransitionDraw draw;
};

namespace detail {

inline double draw_dirichlet_mean(const DirichletMeanSpec& spec, const SamplerChoice& choice,
                                  RandomStream& rng) {
    if (choice.is_exact()) return sample_exact_composite(spec, rng).first;
    return sample_truncated(spec, choice.rule, rng).value;
}

/// Volatility-side draw for one step: integrated volatility, leverage
/// increment and (when available) the per-factor AR(1) states. `path_mode`
/// requests joint factor states, which for GlOuGgc routes through the
/// shared-stick pair sampler.
inline TransitionDraw draw_transition_vol(const ModelSpec& model,
                                          std::span<const double> v_start, double dt,
                                          RandomStream& rng, const SamplerChoice& choice,
                                          bool path_mode,
                                          LeverageCoupling coupling = LeverageCoupling::Shared) {
    TransitionDraw out;
    const bool gl = model.variant == Variant::GlOuGgc;
    const bool jumps = model.theta > 0.0;
    // Terminal gamma-leveraged exact draws sample only (gamma, gamma*M);
    // the joint AR(1) innovations exist in every other mode.
    const bool gl_exact_terminal = gl && jumps && choice.is_exact() && !path_mode;
    const bool factor_states = !gl_exact_terminal;

    if (factor_states) {
        out.v_end.resize(model.factors.size());
        out.o1.assign(model.factors.size(), 0.0);
        out.o2.assign(model.factors.size(), 0.0);
    }

    for (std::size_t j = 0; j < model.factors.size(); ++j) {
        const Factor& f = model.factors[j];
        const double decay = std::exp(-f.lambda * dt);
        const double det = v_start[j] * (-std::expm1(-f.lambda * dt)) / f.lambda;
        double jump = 0.0;
        double o1 = 0.0, o2 = 0.0;

        if (jumps) {
            const double delta_j = model.theta * f.lambda * dt;
            if (gl) {
                if (choice.is_exact() && !path_mode) {
                    DirichletMeanSpec spec(delta_j, KernelKind::OneMinusDecay, f.lambda, dt,
                                           model.scale);
                    const double m = draw_dirichlet_mean(spec, choice, rng);
                    const double g = rng.gamma(delta_j, 1.0);
                    jump = g * m;
                    out.lev += coupling == LeverageCoupling::Shared ? g
                                                                    : rng.gamma(delta_j, 1.0);
                } else {
                    const JointPairDraw jp =
                        sample_joint_pair(delta_j, f.lambda, dt, model.scale, rng);
                    o1 = jp.o1;
                    o2 = jp.o2;
                    jump = o1 - o2;
                    out.lev += coupling == LeverageCoupling::Shared ? jp.gamma_increment
                                                                    : rng.gamma(delta_j, 1.0);
                }
            } else {
                const double c = model.scale.c();
                DirichletMeanSpec spec(delta_j, KernelKind::OneMinusDecay, f.lambda, dt,
                                       ScaleVariable::constant(1.0));
                const double m = draw_dirichlet_mean(spec, choice, rng);
                const double g = rng.gamma(delta_j, 1.0);
                jump = c * g * m;
                o1 = c * g;
                o2 = o1 - jump;
                out.lev += coupling == LeverageCoupling::Shared ? o1 : c * rng.gamma(delta_j, 1.0);
            }
        }

        out.tau += det + jump / f.lambda;
        if (factor_states) {
            out.v_end[j] = decay * v_start[j] + o2;
            out.o1[j] = o1;
            out.o2[j] = o2;
        }
    }
    return out;
}

inline std::vector<double> initial_vols(const ModelSpec& model) {
    std::vector<double> v;
    v.reserve(model.factors.size());
    for (const auto& f : model.factors) v.push_back(f.v0);
    return v;
}

inline double return_drift(const ModelSpec& model, double dt) {
    return (model.r - model.q - model.total_lambda() * kappa(model)) * dt;
}

} // namespace detail

/// One-step transition of the asset price over dt: draws the volatility pair
/// and the conditionally normal log-return. Returns (S(t+dt), draw).
inline std::pair<double, TransitionDraw> sample_transition(
    const ModelSpec& model, double s_t, double dt, RandomStream& rng,
    const SamplerChoice& choice = SamplerChoice::exact(),
    LeverageCoupling coupling = LeverageCoupling::Shared) {
    if (!(s_t > 0.0)) throw std::domain_error("sample_transition: price must be positive");
    if (!(dt > 0.0)) throw std::domain_error("sample_transition: dt must be positive");
    const auto v0 = detail::initial_vols(model);
    TransitionDraw draw =
        detail::draw_transition_vol(model, v0, dt, rng, choice, /*path_mode=*/false, coupling);
    const double mu = detail::return_drift(model, dt) - 0.5 * draw.tau + model.rho * draw.lev;
    draw.log_return = mu + std::sqrt(draw.tau) * rng.normal();
    return {s_t * std::exp(draw.log_return), std::move(draw)};
}

/// Path sampling at strictly increasing times. OuGamma steps use the exact
/// pair decomposition (or the requested truncation); gamma-leveraged steps
/// always use the shared-stick joint sampler at machine epsilon, which is
/// the approximate regime of that variant.
inline std::vector<PathStep> sample_path(const ModelSpec& model, double s0,
                                         std::span<const double> times, RandomStream& rng,
                                         const SamplerChoice& choice = SamplerChoice::exact(),
                                         LeverageCoupling coupling = LeverageCoupling::Shared) {
    if (!(s0 > 0.0)) throw std::domain_error("sample_path: price must be positive");
    if (times.empty()) throw std::domain_error("sample_path: need at least one time");
    double prev_t = 0.0;
    for (const double t : times) {
        if (!(t > prev_t)) throw std::domain_error("sample_path: times must be strictly increasing");
        prev_t = t;
    }

    std::vector<PathStep> steps;
    steps.reserve(times.size());
    std::vector<double> v = detail::initial_vols(model);
    double price = s0;
    double t0 = 0.0;
    for (const double t : times) {
        const double dt = t - t0;
        TransitionDraw draw =
            detail::draw_transition_vol(model, v, dt, rng, choice, /*path_mode=*/true, coupling);
        const double mu = detail::return_drift(model, dt) - 0.5 * draw.tau + model.rho * draw.lev;
        draw.log_return = mu + std::sqrt(draw.tau) * rng.normal();
        price *= std::exp(draw.log_return);
        if (draw.has_factor_states()) v = draw.v_end;
        steps.push_back({t, price, std::move(draw)});
        t0 = t;
    }
    return steps;
}

namespace detail {

/// Y law of the aggregated factor mixture: Y = R (1 - e^{-lambda_L U dt}) / lambda_L
/// with P(L = j) proportional to lambda_j.
struct MixtureYSource {
    const ModelSpec& model;
    double dt;

    double bound() const {
        double b = 0.0;
        for (const auto& f : model.factors)
            b = std::max(b, model.scale.bound() * (-std::expm1(-f.lambda * dt)) / f.lambda);
        return b;
    }
    double mean() const {
        double m = 0.0;
        for (const auto& f : model.factors) {
            const double x = f.lambda * dt;
            m += f.weight * model.scale.mean() * (1.0 + std::expm1(-x) / x) / f.lambda;
        }
        return m;
    }
    double second_moment() const {
        double m = 0.0;
        for (const auto& f : model.factors) {
            const double x = f.lambda * dt;
            const double k2 = 1.0 + 2.0 * std::expm1(-x) / x - std::expm1(-2.0 * x) / (2.0 * x);
            m += f.weight * model.scale.second_moment() * k2 / (f.lambda * f.lambda);
        }
        return m;
    }
    double sample(RandomStream& rng) const {
        double u = rng.uniform();
        double lambda_l = model.factors.back().lambda;
        for (const auto& f : model.factors) {
            if (u < f.weight) {
                lambda_l = f.lambda;
                break;
            }
            u -= f.weight;
        }
        const double r = model.scale.sample(rng);
        return r * (-std::expm1(-lambda_l * rng.uniform() * dt)) / lambda_l;
    }
};

} // namespace detail

/// Path-independent transition that aggregates all factors into a single
/// Dirichlet mean draw with the factor-mixture Y law: one gamma mass and one
/// M replace the per-factor sum, in the same joint law. Factor states are
/// not produced.
inline std::pair<double, TransitionDraw> sample_superposed_transition(
    const ModelSpec& model, double s_t, double dt, RandomStream& rng,
    const SamplerChoice& choice = SamplerChoice::exact(),
    LeverageCoupling coupling = LeverageCoupling::Shared) {
    if (!(s_t > 0.0)) throw std::domain_error("sample_superposed_transition: price must be positive");
    if (!(dt > 0.0)) throw std::domain_error("sample_superposed_transition: dt must be positive");

    TransitionDraw draw;
    for (const auto& f : model.factors)
        draw.tau += f.v0 * (-std::expm1(-f.lambda * dt)) / f.lambda;

    if (model.theta > 0.0) {
        const double delta = model.theta * model.total_lambda() * dt;
        const detail::MixtureYSource y{model, dt};
        double m;
        if (choice.is_exact()) {
            m = detail::cftp_sample_composite(
                    delta, y.bound(), [&y](RandomStream& r) { return y.sample(r); }, rng)
                    .first;
        } else {
            m = detail::truncated_sample(delta, y, choice.rule, rng).value;
        }
        const double g = rng.gamma(delta, 1.0);
        draw.tau += g * m;
        const double lev_scale = model.variant == Variant::OuGamma ? model.scale.c() : 1.0;
        draw.lev = lev_scale *
                   (coupling == LeverageCoupling::Shared ? g : rng.gamma(delta, 1.0));
    }

    const double mu = detail::return_drift(model, dt) - 0.5 * draw.tau + model.rho * draw.lev;
    draw.log_return = mu + std::sqrt(draw.tau) * rng.normal();
    return {s_t * std::exp(draw.log_return), std::move(draw)};
}

/// Analytic mean and variance of the one-step log-return, from the moment
/// identities of the gamma/Dirichlet-mean decomposition. Serves as the
/// closed-form oracle for the simulators.
struct ReturnMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline ReturnMoments model_return_moments(const ModelSpec& model, double dt,
                                          LeverageCoupling coupling = LeverageCoupling::Shared) {
    if (!(dt > 0.0)) throw std::domain_error("model_return_moments: dt must be positive");
    double e_tau = 0.0, var_tau = 0.0, e_lev = 0.0, var_lev = 0.0, cov = 0.0;
    for (const auto& f : model.factors) {
        e_tau += f.v0 * (-std::expm1(-f.lambda * dt)) / f.lambda;
        if (model.theta <= 0.0) continue;
        const double delta_j = model.theta * f.lambda * dt;
        const bool gl = model.variant == Variant::GlOuGgc;
        const ScaleVariable y_scale = gl ? model.scale : ScaleVariable::constant(1.0);
        const double s_j = gl ? 1.0 : model.scale.c();
        DirichletMeanSpec spec(delta_j, KernelKind::OneMinusDecay, f.lambda, dt, y_scale);
        const auto [ey, ey2] = y_moments(spec);
        e_tau += s_j * delta_j * ey / f.lambda;
        var_tau += s_j * s_j * delta_j * ey2 / (f.lambda * f.lambda);
        e_lev += s_j * delta_j;
        var_lev += s_j * s_j * delta_j;
        if (coupling == LeverageCoupling::Shared)
            cov += s_j * s_j * delta_j * ey / f.lambda;
    }
    ReturnMoments out;
    out.mean = detail::return_drift(model, dt) - 0.5 * e_tau + model.rho * e_lev;
    out.variance = e_tau + 0.25 * var_tau + model.rho * model.rho * var_lev - model.rho * cov;
    return out;
}

/// CSV export: header `path_id,time,price,tau,lev,v_1..v_l`, one row per
/// (path, time point). Shortest round-trip formatting keeps reruns
/// byte-identical.
inline void write_paths_csv(std::ostream& os, std::span<const std::vector<PathStep>> paths,
                            std::size_t n_factors) {
    os << "path_id,time,price,tau,lev";
    for (std::size_t j = 1; j <= n_factors; ++j) os << ",v_" << j;
    os << "\n";
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (const PathStep& step : paths[p]) {
            os << p << ',';
            put(step.time);
            os << ',';
            put(step.price);
            os << ',';
            put(step.draw.tau);
            os << ',';
            put(step.draw.lev);
            for (std::size_t j = 0; j < n_factors; ++j) {
                os << ',';
                put(step.draw.has_factor_states() ? step.draw.v_end[j] : 0.0);
            }
            os << "\n";
        }
    }
}

} // namespace ousv
