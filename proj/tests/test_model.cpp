#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "ousv/kstest.hpp"
#include "ousv/model.hpp"
#include "ousv/stats.hpp"

using namespace ousv;

namespace {
ModelSpec table_ou_gamma(double rho = 0.0) {
    return ModelSpec::ou_gamma(rho, 1.0, 1.0, {{1.0, 0.0}}, 0.0, 0.0);
}
} // namespace

TEST_CASE("model validation") {
    REQUIRE_THROWS_AS(ModelSpec::ou_gamma(0.5, 1.0, 1.0, {{1.0, 0.0}}, 0.0, 0.0),
                      std::domain_error);
    REQUIRE_THROWS_AS(ModelSpec::ou_gamma(0.0, -1.0, 1.0, {{1.0, 0.0}}, 0.0, 0.0),
                      std::domain_error);
    REQUIRE_THROWS_AS(ModelSpec::ou_gamma(0.0, 1.0, 1.0, {{-1.0, 0.0}}, 0.0, 0.0),
                      std::domain_error);
    REQUIRE_THROWS_AS(ModelSpec::ou_gamma(0.0, 1.0, 1.0, {{1.0, -0.1}}, 0.0, 0.0),
                      std::domain_error);
    const auto m = ModelSpec::ou_gamma(-1.0, 1.0, 1.0, {{2.0, 0.1}, {1.0, 0.2}}, 0.0, 0.0);
    REQUIRE(m.total_lambda() == Catch::Approx(3.0));
    REQUIRE(m.factors[0].weight == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("kappa closed forms") {
    auto flat = ModelSpec::ou_gamma(0.0, 1.0, 1.0, {{1.0, 0.0}}, 0.0, 0.0);
    REQUIRE(kappa(flat) == 0.0);
    auto lev = ModelSpec::ou_gamma(-1.0, 1.0, 1.0, {{1.0, 0.0}}, 0.0, 0.0);
    REQUIRE(kappa(lev) == Catch::Approx(-std::log(2.0)).epsilon(1e-12));
    auto gl = ModelSpec::gl_ou_ggc(-1.0, 1.0, ScaleVariable::scaled_beta(1.0, 2.0, 3.0),
                                   {{1.0, 0.0}}, 0.0, 0.0);
    REQUIRE(kappa(gl) == Catch::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("theta = 0 degenerates to deterministic volatility") {
    auto m = ModelSpec::ou_gamma(0.0, 0.0, 1.0, {{2.0, 0.09}}, 0.01, 0.0);
    RandomStream s(401);
    const double tau_ref = 0.09 * (-std::expm1(-2.0)) / 2.0;
    SampleStats lr;
    for (int i = 0; i < 50000; ++i) {
        RandomStream t = s.split(i);
        auto [price, draw] = sample_transition(m, 100.0, 1.0, t);
        REQUIRE(draw.tau == Catch::Approx(tau_ref).epsilon(1e-12));
        REQUIRE(draw.lev == 0.0);
        lr.add(draw.log_return);
    }
    REQUIRE(std::fabs(lr.mean() - (0.01 - tau_ref / 2.0)) < 4.0 * lr.std_error());
    REQUIRE(std::fabs(lr.variance() - tau_ref) < 4.0 * lr.variance_std_error());
}

TEST_CASE("one-step return moments match the closed-form oracle") {
    const long n = 400000;
    RandomStream root(409);
    struct Case {
        ModelSpec model;
        LeverageCoupling coupling;
    };
    const Case cases[] = {
        {table_ou_gamma(0.0), LeverageCoupling::Shared},
        {table_ou_gamma(-1.0), LeverageCoupling::Shared},
        {table_ou_gamma(-1.0), LeverageCoupling::Independent},
        {ModelSpec::gl_ou_ggc(-1.0, 1.0, ScaleVariable::scaled_beta(1.0, 1.0, 1.0), {{1.0, 0.0}},
                              0.0, 0.0),
         LeverageCoupling::Shared},
        {ModelSpec::gl_ou_ggc(0.0, 1.0, ScaleVariable::scaled_beta(1.0, 1.0, 10.0), {{1.0, 0.0}},
                              0.0, 0.0),
         LeverageCoupling::Shared},
    };
    int idx = 0;
    for (const auto& c : cases) {
        SampleStats st;
        for (long i = 0; i < n; ++i) {
            RandomStream s = root.split(idx * 10000000L + i);
            st.add(sample_transition(c.model, 1.0, 1.0, s, SamplerChoice::exact(), c.coupling)
                       .second.log_return);
        }
        const auto mom = model_return_moments(c.model, 1.0, c.coupling);
        CAPTURE(idx, mom.mean, mom.variance);
        REQUIRE(std::fabs(st.mean() - mom.mean) < 4.0 * st.std_error());
        REQUIRE(std::fabs(st.central_moment(2) - mom.variance) < 4.0 * st.variance_std_error());
        ++idx;
    }
}

TEST_CASE("frozen oracle values for the reference one-step setup") {
    auto m0 = model_return_moments(table_ou_gamma(0.0), 1.0);
    REQUIRE(m0.mean == Catch::Approx(-0.18393972).epsilon(1e-6));
    REQUIRE(m0.variance == Catch::Approx(0.40990).epsilon(1e-4));
    auto m1 = model_return_moments(table_ou_gamma(-1.0), 1.0);
    REQUIRE(m1.mean == Catch::Approx(-0.4907925).epsilon(1e-6));
    REQUIRE(m1.variance == Catch::Approx(1.777781).epsilon(1e-5));
    auto m1i = model_return_moments(table_ou_gamma(-1.0), 1.0, LeverageCoupling::Independent);
    REQUIRE(std::sqrt(m1i.variance) == Catch::Approx(1.18739).epsilon(1e-4));
}

TEST_CASE("AR(1) identities hold along paths") {
    const std::vector<double> times = {0.5, 1.25, 2.0};
    struct Case {
        ModelSpec model;
        SamplerChoice choice;
    };
    const Case cases[] = {
        {ModelSpec::ou_gamma(-0.5, 0.9, 0.8, {{1.3, 0.2}}, 0.02, 0.0), SamplerChoice::exact()},
        {ModelSpec::ou_gamma(-0.5, 0.9, 0.8, {{1.3, 0.2}, {0.4, 0.1}}, 0.02, 0.0),
         SamplerChoice::truncated(TruncationRule::fixed_n(50))},
        {ModelSpec::gl_ou_ggc(-0.5, 0.9, ScaleVariable::scaled_beta(0.8, 2.0, 1.0),
                              {{1.3, 0.2}}, 0.02, 0.0),
         SamplerChoice::exact()},
    };
    RandomStream root(419);
    for (std::size_t ci = 0; ci < std::size(cases); ++ci) {
        const auto& c = cases[ci];
        for (int rep = 0; rep < 200; ++rep) {
            RandomStream s = root.split(ci * 1000 + rep);
            auto path = sample_path(c.model, 100.0, times, s, c.choice);
            std::vector<double> v_prev;
            for (const auto& f : c.model.factors) v_prev.push_back(f.v0);
            double t_prev = 0.0;
            for (const auto& step : path) {
                const double dt = step.time - t_prev;
                REQUIRE(step.draw.tau >= 0.0);
                REQUIRE(step.draw.lev >= 0.0);
                REQUIRE(step.draw.has_factor_states());
                double tau_sum = 0.0;
                for (std::size_t j = 0; j < c.model.factors.size(); ++j) {
                    const double lam = c.model.factors[j].lambda;
                    const double decay = std::exp(-lam * dt);
                    REQUIRE(step.draw.o1[j] >= 0.0);
                    REQUIRE(step.draw.o2[j] >= 0.0);
                    REQUIRE(step.draw.v_end[j] >= 0.0);
                    REQUIRE(step.draw.v_end[j] ==
                            Catch::Approx(decay * v_prev[j] + step.draw.o2[j]).margin(1e-12));
                    tau_sum += (v_prev[j] - step.draw.v_end[j] + step.draw.o1[j]) / lam;
                }
                REQUIRE(step.draw.tau == Catch::Approx(tau_sum).margin(1e-10));
                v_prev = step.draw.v_end;
                t_prev = step.time;
            }
        }
    }
}

TEST_CASE("pair additivity is exact for the gamma-driven variant") {
    auto m = ModelSpec::ou_gamma(-1.0, 1.0, 0.7, {{1.1, 0.05}}, 0.0, 0.0);
    RandomStream root(421);
    for (int rep = 0; rep < 500; ++rep) {
        RandomStream s = root.split(rep);
        auto path = sample_path(m, 100.0, std::vector<double>{1.0}, s);
        const auto& d = path[0].draw;
        // o1 = c gamma, jump = c gamma M, o2 = o1 - jump reassembles exactly.
        REQUIRE(d.o1[0] == Catch::Approx((d.o1[0] - d.o2[0]) + d.o2[0]).epsilon(1e-15));
        REQUIRE(d.lev == d.o1[0]);
    }
}

TEST_CASE("single-interval path has the transition law") {
    auto m = table_ou_gamma(-1.0);
    RandomStream root(431);
    std::vector<double> via_path(60000), via_transition(60000);
    for (std::size_t i = 0; i < via_path.size(); ++i) {
        RandomStream a = root.split(i);
        via_path[i] = sample_path(m, 1.0, std::vector<double>{1.0}, a)[0].draw.log_return;
        RandomStream b = root.split(7000000 + i);
        via_transition[i] = sample_transition(m, 1.0, 1.0, b).second.log_return;
    }
    auto ks = ks_test_two_sample(via_path, via_transition);
    REQUIRE(ks.p_value > 0.001);
}

TEST_CASE("expected decayed innovation matches the stationary moment") {
    // E[o2] = theta c (1 - e^{-lambda dt}) per factor.
    auto m = ModelSpec::ou_gamma(-4.88115, 0.81303, 0.00981, {{2.24323, 0.00437}}, 0.0319, 0.0);
    RandomStream root(433);
    SampleStats o2, v1;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        RandomStream s = root.split(i);
        auto path = sample_path(m, 100.0, std::vector<double>{1.0, 2.0}, s);
        o2.add(path[0].draw.o2[0]);
        v1.add(path[0].draw.v_end[0]);
    }
    const double expected_o2 = 0.81303 * 0.00981 * (-std::expm1(-2.24323));
    REQUIRE(std::fabs(o2.mean() - expected_o2) < 4.0 * o2.std_error());
    const double expected_v1 = std::exp(-2.24323) * 0.00437 + expected_o2;
    REQUIRE(std::fabs(v1.mean() - expected_v1) < 4.0 * v1.std_error());
}

TEST_CASE("superposed transition equals the factor sum in law") {
    SECTION("single factor: distributional identity") {
        auto m = table_ou_gamma(-1.0);
        RandomStream root(439);
        std::vector<double> agg(60000), sum(60000);
        for (std::size_t i = 0; i < agg.size(); ++i) {
            RandomStream a = root.split(i);
            agg[i] = sample_superposed_transition(m, 1.0, 1.0, a).second.log_return;
            RandomStream b = root.split(7000000 + i);
            sum[i] = sample_transition(m, 1.0, 1.0, b).second.log_return;
        }
        auto ks = ks_test_two_sample(agg, sum);
        REQUIRE(ks.p_value > 0.001);
    }
    SECTION("two equal-rate factors collapse to one") {
        // Equal rates merge the two driving subordinators: one factor at the
        // same rate with doubled shape and the summed start volatility.
        auto two = ModelSpec::ou_gamma(-1.0, 1.0, 1.0, {{0.5, 0.1}, {0.5, 0.1}}, 0.0, 0.0);
        auto one = ModelSpec::ou_gamma(-1.0, 2.0, 1.0, {{0.5, 0.2}}, 0.0, 0.0);
        RandomStream root(443);
        std::vector<double> a(60000), b(60000);
        for (std::size_t i = 0; i < a.size(); ++i) {
            RandomStream s = root.split(i);
            a[i] = sample_superposed_transition(two, 1.0, 1.0, s).second.tau;
            RandomStream t = root.split(7000000 + i);
            b[i] = sample_superposed_transition(one, 1.0, 1.0, t).second.tau;
        }
        auto ks = ks_test_two_sample(a, b);
        REQUIRE(ks.p_value > 0.001);
    }
    SECTION("two-factor mixture mean identity and moment agreement") {
        auto m = ModelSpec::ou_gamma(-4.87261, 0.79608, 0.00989,
                                     {{2.27276, 0.00418}, {0.02755, 0.00006}}, 0.0319, 0.0);
        const double theta = 0.79608, c = 0.00989;
        double factor_sum = 0.0;
        for (const auto& f : m.factors)
            factor_sum += theta * c * (1.0 - (-std::expm1(-f.lambda)) / f.lambda);
        RandomStream root(449);
        SampleStats agg_tau, sum_tau;
        const int n = 150000;
        const double det = 0.00418 * (-std::expm1(-2.27276)) / 2.27276 +
                           0.00006 * (-std::expm1(-0.02755)) / 0.02755;
        for (int i = 0; i < n; ++i) {
            RandomStream s = root.split(i);
            agg_tau.add(sample_superposed_transition(m, 1.0, 1.0, s).second.tau);
            RandomStream t = root.split(7000000 + i);
            sum_tau.add(sample_transition(m, 1.0, 1.0, t).second.tau);
        }
        REQUIRE(std::fabs(agg_tau.mean() - det - factor_sum) < 4.0 * agg_tau.std_error());
        const double tol = 4.0 * std::sqrt(agg_tau.std_error() * agg_tau.std_error() +
                                           sum_tau.std_error() * sum_tau.std_error());
        REQUIRE(std::fabs(agg_tau.mean() - sum_tau.mean()) < tol);
        const double vtol =
            4.0 * std::sqrt(agg_tau.variance_std_error() * agg_tau.variance_std_error() +
                            sum_tau.variance_std_error() * sum_tau.variance_std_error());
        REQUIRE(std::fabs(agg_tau.central_moment(2) - sum_tau.central_moment(2)) < vtol);
    }
}

TEST_CASE("heavier scale mixing fattens the return tails") {
    // Beta(1,10) scale mixing produces materially higher kurtosis than the
    // plain gamma-driven model in the reference one-step setup.
    auto ou = table_ou_gamma(0.0);
    auto gl = ModelSpec::gl_ou_ggc(0.0, 1.0, ScaleVariable::scaled_beta(1.0, 1.0, 10.0),
                                   {{1.0, 0.0}}, 0.0, 0.0);
    RandomStream root(487);
    SampleStats ou_st, gl_st;
    for (int i = 0; i < 300000; ++i) {
        RandomStream a = root.split(i);
        ou_st.add(sample_transition(ou, 1.0, 1.0, a).second.log_return);
        RandomStream b = root.split(5000000L + i);
        gl_st.add(sample_transition(gl, 1.0, 1.0, b).second.log_return);
    }
    REQUIRE(gl_st.kurtosis() > ou_st.kurtosis() + 1.0);
}

TEST_CASE("martingale property on a small grid") {
    RandomStream root(457);
    int cell = 0;
    for (const double rho : {0.0, -1.0}) {
        const ModelSpec models[] = {
            ModelSpec::ou_gamma(rho, 0.81303, 0.00981, {{2.24323, 0.00437}}, 0.0319, 0.0),
            ModelSpec::gl_ou_ggc(rho, 0.80124, ScaleVariable::scaled_beta(0.00954, 3.61908,
                                                                          0.10414),
                                 {{2.68545, 0.00414}}, 0.0319, 0.0)};
        for (const auto& m : models) {
            for (const bool exact : {true, false}) {
                const auto choice = exact ? SamplerChoice::exact()
                                          : SamplerChoice::truncated(TruncationRule::fixed_n(100));
                SampleStats st;
                for (int i = 0; i < 150000; ++i) {
                    RandomStream s = root.split(cell * 10000000L + i);
                    st.add(sample_transition(m, 1.0, 1.0, s, choice).first *
                           std::exp(-(m.r - m.q)));
                }
                CAPTURE(cell, rho, exact);
                REQUIRE(std::fabs(st.mean() - 1.0) < 4.0 * st.std_error());
                ++cell;
            }
        }
    }
}

TEST_CASE("exact and truncated samplers agree at the model level") {
    auto m = table_ou_gamma(-1.0);
    RandomStream root(461);
    SampleStats exact, trunc;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        RandomStream a = root.split(i);
        exact.add(sample_transition(m, 1.0, 1.0, a).second.log_return);
        RandomStream b = root.split(9000000 + i);
        trunc.add(sample_transition(m, 1.0, 1.0, b,
                                    SamplerChoice::truncated(TruncationRule::fixed_n(100)))
                      .second.log_return);
    }
    const double mtol = 4.0 * std::sqrt(exact.std_error() * exact.std_error() +
                                        trunc.std_error() * trunc.std_error());
    REQUIRE(std::fabs(exact.mean() - trunc.mean()) < mtol);
    const double vtol = 4.0 * std::sqrt(exact.variance_std_error() * exact.variance_std_error() +
                                        trunc.variance_std_error() * trunc.variance_std_error());
    REQUIRE(std::fabs(exact.central_moment(2) - trunc.central_moment(2)) < vtol);
}

TEST_CASE("leverage covariance: sign and closed form") {
    // De-drifted returns y* = rho * lev + sqrt(tau) W over unit steps; for the
    // gamma-leveraged variant with constant scale,
    // Cov(y*_n, y*^2_{n+1}) = rho theta E[R] (1 - e^{-lambda})^2 / lambda.
    const double rho = -0.5, theta = 1.0, c = 0.5, lambda = 1.0;
    auto m = ModelSpec::gl_ou_ggc(rho, theta, ScaleVariable::constant(c), {{lambda, 0.2}}, 0.0,
                                  0.0);
    const double drift = -m.total_lambda() * kappa(m);
    RandomStream root(463);
    SampleStats prod, first, second;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        RandomStream s = root.split(i);
        auto path = sample_path(m, 1.0, std::vector<double>{1.0, 2.0}, s);
        const double y1 = path[0].draw.log_return - drift + 0.5 * path[0].draw.tau;
        const double y2 = path[1].draw.log_return - drift + 0.5 * path[1].draw.tau;
        prod.add(y1 * y2 * y2);
        first.add(y1);
        second.add(y2 * y2);
    }
    const double cov = prod.mean() - first.mean() * second.mean();
    const double expected = rho * theta * c * std::pow(-std::expm1(-lambda), 2) / lambda;
    REQUIRE(cov < 0.0);
    const double se = prod.std_error() + std::fabs(first.mean()) * second.std_error() +
                      std::fabs(second.mean()) * first.std_error();
    REQUIRE(std::fabs(cov - expected) < 4.0 * se);

    // Sign check on the raw risk-neutral returns as well.
    SampleStats rprod, rfirst, rsecond;
    for (int i = 0; i < n; ++i) {
        RandomStream s = root.split(5000000L + i);
        auto path = sample_path(m, 1.0, std::vector<double>{1.0, 2.0}, s);
        rprod.add(path[0].draw.log_return * path[1].draw.log_return * path[1].draw.log_return);
        rfirst.add(path[0].draw.log_return);
        rsecond.add(path[1].draw.log_return * path[1].draw.log_return);
    }
    REQUIRE(rprod.mean() - rfirst.mean() * rsecond.mean() < 0.0);
}

TEST_CASE("csv path export shape") {
    auto m = ModelSpec::ou_gamma(-1.0, 0.8, 0.01, {{2.0, 0.004}}, 0.03, 0.0);
    RandomStream root(467);
    std::vector<std::vector<PathStep>> paths;
    for (int i = 0; i < 10; ++i) {
        RandomStream s = root.split(i);
        paths.push_back(sample_path(m, 100.0, std::vector<double>{1.0, 2.0}, s));
    }
    std::ostringstream os;
    write_paths_csv(os, paths, m.n_factors());
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    REQUIRE(line == "path_id,time,price,tau,lev,v_1");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 20);
}

TEST_CASE("gamma-leveraged exact transitions do not fabricate factor states") {
    auto m = ModelSpec::gl_ou_ggc(-1.0, 1.0, ScaleVariable::scaled_beta(1.0, 1.0, 1.0),
                                  {{1.0, 0.1}}, 0.0, 0.0);
    RandomStream s(479);
    auto [price, draw] = sample_transition(m, 100.0, 1.0, s);
    REQUIRE(!draw.has_factor_states());
    auto path = sample_path(m, 100.0, std::vector<double>{1.0}, s);
    REQUIRE(path[0].draw.has_factor_states());
}
