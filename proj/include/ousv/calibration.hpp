#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "ousv/pricing.hpp"
#include "ousv/simplex.hpp"

namespace ousv {

struct OptionQuote {
    double strike;
    double maturity_years;
    double market_price;

    OptionQuote(double k, double t, double p) : strike(k), maturity_years(t), market_price(p) {
        if (!(k > 0.0) || !(t > 0.0) || !(p > 0.0))
            throw std::domain_error("OptionQuote: all fields must be positive");
    }
};

struct CalibrationProblem {
    std::vector<OptionQuote> quotes;
    double s0;
    double r;
    double q;
    Variant variant = Variant::OuGamma;
    int n_factors = 1;
    /// When false the jump block (theta, c, alpha, beta) is frozen at the
    /// start values and only the volatility states (v0_j, lambda_j) are fit.
    bool fit_jumps = true;
    std::int64_t trials = 100000;
    std::uint64_t seed = 1;
    NelderMeadConfig nm = {1.0, 2.0, 0.5, 0.5, 1e-4, 300, 0.1};

    void validate() const {
        if (quotes.empty()) throw std::domain_error("CalibrationProblem: quotes required");
        if (!(s0 > 0.0)) throw std::domain_error("CalibrationProblem: s0 must be positive");
        if (trials < 10000) throw std::domain_error("CalibrationProblem: trials must be >= 10000");
        if (n_factors != 1 && n_factors != 2)
            throw std::domain_error("CalibrationProblem: n_factors must be 1 or 2");
    }
};

/// Bijection between unconstrained simplex coordinates and a valid
/// ModelSpec: positive parameters through exp, rho through a negated exp,
/// and lambda_2 = lambda_1 * sigmoid(u) so the factor rates stay ordered and
/// label switching cannot occur.
struct ParameterTransform {
    Variant variant = Variant::OuGamma;
    int n_factors = 1;
    bool fit_jumps = true;
    double r = 0.0;
    double q = 0.0;
    /// Frozen jump block used when fit_jumps is false.
    double fixed_theta = 0.0;
    double fixed_c = 1.0;
    double fixed_a = 1.0;
    double fixed_b = 1.0;

    int dimension() const noexcept {
        int d = 2 * n_factors; // (v0_j, lambda-coordinate) per factor
        if (fit_jumps) d += (variant == Variant::GlOuGgc) ? 5 : 3; // rho, theta, c [, a, b]
        return d;
    }

    ModelSpec to_model(std::span<const double> u) const {
        if (static_cast<int>(u.size()) != dimension())
            throw std::invalid_argument("ParameterTransform: wrong dimension");
        std::size_t i = 0;
        double rho = 0.0, theta = fixed_theta, c = fixed_c, a = fixed_a, b = fixed_b;
        if (fit_jumps) {
            rho = -std::exp(u[i++]);
            theta = std::exp(u[i++]);
            c = std::exp(u[i++]);
            if (variant == Variant::GlOuGgc) {
                a = std::exp(u[i++]);
                b = std::exp(u[i++]);
            }
        }
        const double v0_1 = std::exp(u[i++]);
        const double lambda_1 = std::exp(u[i++]);
        std::vector<std::pair<double, double>> fac{{lambda_1, v0_1}};
        if (n_factors == 2) {
            const double v0_2 = std::exp(u[i++]);
            const double lambda_2 = lambda_1 / (1.0 + std::exp(-u[i++]));
            fac.push_back({lambda_2, v0_2});
        }
        if (variant == Variant::GlOuGgc)
            return ModelSpec::gl_ou_ggc(rho, theta, ScaleVariable::scaled_beta(c, a, b), fac, r, q);
        return ModelSpec::ou_gamma(rho, theta, c, fac, r, q);
    }

    std::vector<double> from_model(const ModelSpec& m) const {
        std::vector<double> u;
        u.reserve(dimension());
        if (fit_jumps) {
            if (!(m.rho < 0.0))
                throw std::domain_error("ParameterTransform: rho must be negative to calibrate");
            u.push_back(std::log(-m.rho));
            u.push_back(std::log(m.theta));
            u.push_back(std::log(m.scale.c()));
            if (variant == Variant::GlOuGgc) {
                u.push_back(std::log(m.scale.a()));
                u.push_back(std::log(m.scale.b()));
            }
        }
        u.push_back(std::log(m.factors[0].v0));
        u.push_back(std::log(m.factors[0].lambda));
        if (n_factors == 2) {
            u.push_back(std::log(m.factors[1].v0));
            const double ratio = m.factors[1].lambda / m.factors[0].lambda;
            if (!(ratio > 0.0) || !(ratio < 1.0))
                throw std::domain_error("ParameterTransform: requires lambda_1 > lambda_2 > 0");
            u.push_back(std::log(ratio / (1.0 - ratio)));
        }
        return u;
    }

    static ParameterTransform for_problem(const CalibrationProblem& p, const ModelSpec& start) {
        ParameterTransform t;
        t.variant = p.variant;
        t.n_factors = p.n_factors;
        t.fit_jumps = p.fit_jumps;
        t.r = p.r;
        t.q = p.q;
        t.fixed_theta = start.theta;
        t.fixed_c = start.scale.c();
        if (!start.scale.is_constant()) {
            t.fixed_a = start.scale.a();
            t.fixed_b = start.scale.b();
        }
        return t;
    }
};

namespace detail {

/// Quotes grouped by maturity so one volatility draw prices the whole strike
/// ladder of that maturity.
struct MaturityGroup {
    double maturity;
    std::vector<std::size_t> quote_index;
};

inline std::vector<MaturityGroup> group_by_maturity(const std::vector<OptionQuote>& quotes) {
    std::map<double, std::vector<std::size_t>> by_t;
    for (std::size_t i = 0; i < quotes.size(); ++i)
        by_t[quotes[i].maturity_years].push_back(i);
    std::vector<MaturityGroup> groups;
    groups.reserve(by_t.size());
    for (auto& [t, idx] : by_t) groups.push_back({t, std::move(idx)});
    return groups;
}

} // namespace detail

/// Conditional-BS (FSP) model prices for every quote. Streams are derived
/// from (seed, maturity group, trial) only, so two calls with the same seed
/// see identical draws regardless of the parameter values or worker count:
/// this is the common-random-numbers backbone of the objective.
inline std::vector<double> fsp_quote_prices(const CalibrationProblem& problem,
                                            const ModelSpec& params) {
    problem.validate();
    const auto groups = detail::group_by_maturity(problem.quotes);
    const RandomStream root(problem.seed);
    const double lam_kappa = params.total_lambda() * kappa(params);

    std::vector<double> model_price(problem.quotes.size(), 0.0);

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& grp = groups[gi];
        const double t = grp.maturity;
        const RandomStream grp_base = root.split(gi);
        const int nblocks = block_count(problem.trials);
        std::vector<std::vector<CompensatedSum>> block_sums(
            nblocks, std::vector<CompensatedSum>(grp.quote_index.size()));
        for_each_block(problem.trials, 0, [&](int b, std::int64_t first, std::int64_t last) {
            auto& sums = block_sums[b];
            for (std::int64_t i = first; i < last; ++i) {
                RandomStream rng = grp_base.split(static_cast<std::uint64_t>(i));
                // Aggregated volatility draw shared across the strike ladder.
                double tau = 0.0, lev = 0.0;
                for (const auto& f : params.factors)
                    tau += f.v0 * (-std::expm1(-f.lambda * t)) / f.lambda;
                if (params.theta > 0.0) {
                    const double delta = params.theta * params.total_lambda() * t;
                    const detail::MixtureYSource y{params, t};
                    const double m =
                        detail::cftp_sample_composite(
                            delta, y.bound(), [&y](RandomStream& r) { return y.sample(r); }, rng)
                            .first;
                    const double g = rng.gamma(delta, 1.0);
                    tau += g * m;
                    lev = (params.variant == Variant::OuGamma ? params.scale.c() : 1.0) * g;
                }
                const double spot_b =
                    problem.s0 * std::exp(-lam_kappa * t + params.rho * lev);
                const double sigma_b = std::sqrt(tau / t);
                for (std::size_t k = 0; k < grp.quote_index.size(); ++k) {
                    const auto& quote = problem.quotes[grp.quote_index[k]];
                    sums[k].add(black_scholes_call(spot_b, quote.strike, problem.r, problem.q,
                                                   sigma_b, t));
                }
            }
        });
        for (std::size_t k = 0; k < grp.quote_index.size(); ++k) {
            CompensatedSum total;
            for (int b = 0; b < nblocks; ++b) total.merge(block_sums[b][k]);
            model_price[grp.quote_index[k]] = total.value() / problem.trials;
        }
    }
    return model_price;
}

/// Mean-square error between market quotes and the FSP model prices.
inline double mse_objective(const CalibrationProblem& problem, const ModelSpec& params) {
    const std::vector<double> model_price = fsp_quote_prices(problem, params);
    double mse = 0.0;
    for (std::size_t i = 0; i < problem.quotes.size(); ++i) {
        const double err = problem.quotes[i].market_price - model_price[i];
        mse += err * err;
    }
    return mse / static_cast<double>(problem.quotes.size());
}

struct CalibrationResult {
    ModelSpec model;
    double mse = 0.0;
    int iterations = 0;
    bool converged = false;
    std::int64_t objective_evals = 0;
};

/// Simplex search over the transformed coordinates, starting from the
/// supplied model with +-10% steps in the unconstrained space.
inline CalibrationResult calibrate(const CalibrationProblem& problem, const ModelSpec& initial) {
    problem.validate();
    const ParameterTransform transform = ParameterTransform::for_problem(problem, initial);
    const std::vector<double> u0 = transform.from_model(initial);

    std::int64_t evals = 0;
    auto objective = [&](std::span<const double> u) -> double {
        ++evals;
        try {
            return mse_objective(problem, transform.to_model(u));
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    NelderMeadConfig nm = problem.nm;
    nm.initial_step = 0.1;
    const NelderMeadResult res = nelder_mead(objective, u0, nm);

    CalibrationResult out{transform.to_model(res.best), res.value, res.iterations, res.converged,
                          evals};
    return out;
}

} // namespace ousv
