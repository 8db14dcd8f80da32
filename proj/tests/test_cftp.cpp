#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ousv/cftp.hpp"
#include "ousv/kstest.hpp"
#include "ousv/stats.hpp"
#include "ousv/truncation.hpp"

using namespace ousv;

namespace {
DirichletMeanSpec reference_spec(double delta) {
    return DirichletMeanSpec(delta, KernelKind::OneMinusDecay, 1.0, 1.0,
                             ScaleVariable::scaled_beta(1.0, 1.0, 1.0));
}
} // namespace

TEST_CASE("cftp config") {
    auto cfg = CftpConfig::from_spec(reference_spec(0.7));
    REQUIRE(cfg.c_h == 0.7);
    REQUIRE(cfg.c_y == Catch::Approx(-std::expm1(-1.0)));
    REQUIRE_THROWS_AS(CftpConfig::from_spec(reference_spec(1.5)), InvalidDeltaError);
}

TEST_CASE("exact sampler reproduces the reference moments and stack sizes") {
    // Reference values: mean 0.18393, variance 0.0222/(delta+1), and mean
    // stack sizes 15.22 / 7.615 at delta 0.5 / 1.
    const int n = 200000;
    RandomStream root(211);
    for (const double delta : {0.5, 1.0}) {
        auto spec = reference_spec(delta);
        SampleStats value, stack;
        for (int i = 0; i < n; ++i) {
            RandomStream s = root.split(static_cast<std::uint64_t>(delta * 10) * 1000000 + i);
            auto [m, st] = sample_exact(spec, s);
            value.add(m);
            stack.add(static_cast<double>(st.stack_size));
            REQUIRE(m >= 0.0);
            REQUIRE(m <= spec.y_bound());
            REQUIRE(st.stack_size >= 1);
        }
        REQUIRE(std::fabs(value.mean() - 0.18394) < 0.0012);
        const double true_var = 0.0221966 / (delta + 1.0);
        REQUIRE(std::fabs(value.central_moment(2) - true_var) < 0.02 * true_var);
        const double ref_stack = delta == 0.5 ? 15.22293 : 7.61515;
        REQUIRE(std::fabs(stack.mean() - ref_stack) < 0.02 * ref_stack);
    }
}

TEST_CASE("composite matches the moment identities for delta > 1") {
    const int n = 200000;
    RandomStream root(223);
    for (const double delta : {2.0, 10.0}) {
        auto spec = reference_spec(delta);
        const auto [em, vm] = dirichlet_mean_moments(spec);
        SampleStats value, stack;
        for (int i = 0; i < n; ++i) {
            RandomStream s = root.split(static_cast<std::uint64_t>(delta) * 1000000 + i);
            auto [m, st] = sample_exact_composite(spec, s);
            value.add(m);
            stack.add(static_cast<double>(st.stack_size));
        }
        REQUIRE(std::fabs(value.mean() - em) < 4.0 * value.std_error());
        REQUIRE(std::fabs(value.central_moment(2) - vm) < 4.0 * value.variance_std_error());
        const double ref_stack = delta == 2.0 ? 15.23131 : 76.14860;
        REQUIRE(std::fabs(stack.mean() - ref_stack) < 0.02 * ref_stack);
    }
}

TEST_CASE("composite at delta 1 has the single-block law") {
    RandomStream root(227);
    std::vector<double> direct(50000), composite(50000);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        RandomStream a = root.split(i);
        direct[i] = sample_exact(reference_spec(1.0), a).first;
        RandomStream b = root.split(1000000 + i);
        composite[i] = sample_exact_composite(reference_spec(1.0), b).first;
    }
    auto ks = ks_test_two_sample(direct, composite);
    REQUIRE(ks.p_value > 0.001);
}

TEST_CASE("exact sampler agrees with the stopping truncation in distribution") {
    RandomStream root(229);
    auto spec = reference_spec(0.8);
    std::vector<double> exact(100000), trunc(100000);
    for (std::size_t i = 0; i < exact.size(); ++i) {
        RandomStream a = root.split(i);
        exact[i] = sample_exact(spec, a).first;
        RandomStream b = root.split(5000000 + i);
        trunc[i] = sample_truncated(spec, TruncationRule::stopping_bounded(), b).value;
    }
    auto ks = ks_test_two_sample(exact, trunc);
    REQUIRE(ks.p_value > 0.001);
}

TEST_CASE("degenerate and invalid inputs") {
    RandomStream s(233);
    DirichletMeanSpec degenerate(0.5, KernelKind::Unit, 1.0, 1.0, ScaleVariable::constant(2.0));
    REQUIRE_THROWS_AS(sample_exact(degenerate, s), DegenerateYError);
    REQUIRE_THROWS_AS(sample_exact(reference_spec(1.0001), s), InvalidDeltaError);

    auto [m, st] = sample_exact_composite(degenerate, s);
    REQUIRE(m == 2.0);
    REQUIRE(st.stack_size == 0);
}

TEST_CASE("stack-size curve falls toward delta 1") {
    RandomStream root(239);
    double prev = 1e30;
    for (const double delta : {0.2, 0.4, 0.7, 1.0}) {
        auto spec = reference_spec(delta);
        SampleStats stack;
        for (int i = 0; i < 30000; ++i) {
            RandomStream s = root.split(static_cast<std::uint64_t>(delta * 10) * 100000 + i);
            stack.add(static_cast<double>(sample_exact(spec, s).second.stack_size));
        }
        REQUIRE(stack.mean() < prev);
        prev = stack.mean();
    }
    REQUIRE(prev == Catch::Approx(7.615).epsilon(0.03));
}
