// ousv: Monte Carlo engine for OU stochastic-volatility models driven by
// gamma and gamma-convolution subordinators.
//
// Subcommands: dmean, returns, price, paths, calibrate, validate.
// Results are written as JSON; the payload written via --out is a pure
// function of (flags, seed), with timing and environment data kept in a
// separate metadata object on stdout.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ousv/calibration.hpp"
#include "ousv/cftp.hpp"
#include "ousv/model.hpp"
#include "ousv/pricing.hpp"
#include "ousv/truncation.hpp"
#include "ousv/validation.hpp"

using nlohmann::json;
using namespace ousv;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct ModelFlags {
    std::string variant = "ou_gamma";
    double rho = 0.0;
    double theta = 0.0;
    double c = 1.0;
    std::vector<double> scale_beta; // c,a,b
    std::vector<std::string> factor_specs; // "lambda,v0"
    double r = 0.0;
    double q = 0.0;
    std::string model_file;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
    cmd->add_option("--variant", mf.variant, "ou_gamma or gl_ou_ggc");
    cmd->add_option("--rho", mf.rho, "leverage parameter (<= 0)");
    cmd->add_option("--theta", mf.theta, "subordinator shape (>= 0)");
    cmd->add_option("--c", mf.c, "constant scale");
    cmd->add_option("--scale-beta", mf.scale_beta,
                    "scaled-beta scale: c a b (R = c*Beta(a,b))")
        ->expected(3);
    cmd->add_option("--factor", mf.factor_specs,
                    "volatility factor as lambda,v0 (repeatable)");
    cmd->add_option("--r", mf.r, "risk-free rate");
    cmd->add_option("--q", mf.q, "dividend yield");
    cmd->add_option("--model", mf.model_file, "model parameter JSON file");
}

ScaleVariable scale_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") return ScaleVariable::constant(j.at("c").get<double>());
    if (type == "scaled_beta")
        return ScaleVariable::scaled_beta(j.at("c").get<double>(), j.at("a").get<double>(),
                                          j.at("b").get<double>());
    throw std::invalid_argument("scale.type must be constant or scaled_beta");
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
}

ModelSpec model_from_json(const json& j) {
    reject_unknown_keys(j, {"variant", "rho", "theta", "scale", "factors", "r", "q"}, "model");
    const std::string variant = j.at("variant").get<std::string>();
    std::vector<std::pair<double, double>> factors;
    for (const auto& f : j.at("factors")) {
        reject_unknown_keys(f, {"lambda", "v0"}, "factor");
        factors.emplace_back(f.at("lambda").get<double>(), f.at("v0").get<double>());
    }
    const double rho = j.at("rho").get<double>();
    const double theta = j.at("theta").get<double>();
    const double r = j.value("r", 0.0);
    const double q = j.value("q", 0.0);
    if (variant == "ou_gamma") {
        const auto scale = scale_from_json(j.at("scale"));
        return ModelSpec::ou_gamma(rho, theta, scale.c(), factors, r, q);
    }
    if (variant == "gl_ou_ggc")
        return ModelSpec::gl_ou_ggc(rho, theta, scale_from_json(j.at("scale")), factors, r, q);
    throw std::invalid_argument("variant must be ou_gamma or gl_ou_ggc");
}

ModelSpec model_from_flags(const ModelFlags& mf) {
    if (!mf.model_file.empty()) {
        std::ifstream in(mf.model_file);
        if (!in) throw std::invalid_argument("cannot open model file " + mf.model_file);
        json j;
        in >> j;
        return model_from_json(j);
    }
    std::vector<std::pair<double, double>> factors;
    for (const auto& spec : mf.factor_specs) {
        double lambda = 0.0, v0 = 0.0;
        if (std::sscanf(spec.c_str(), "%lf,%lf", &lambda, &v0) != 2)
            throw std::invalid_argument("--factor expects lambda,v0");
        factors.emplace_back(lambda, v0);
    }
    if (factors.empty()) throw std::invalid_argument("at least one --factor required");
    if (mf.variant == "ou_gamma")
        return ModelSpec::ou_gamma(mf.rho, mf.theta, mf.c, factors, mf.r, mf.q);
    if (mf.variant == "gl_ou_ggc") {
        ScaleVariable scale =
            mf.scale_beta.size() == 3
                ? ScaleVariable::scaled_beta(mf.scale_beta[0], mf.scale_beta[1], mf.scale_beta[2])
                : ScaleVariable::constant(mf.c);
        return ModelSpec::gl_ou_ggc(mf.rho, mf.theta, scale, factors, mf.r, mf.q);
    }
    throw std::invalid_argument("--variant must be ou_gamma or gl_ou_ggc");
}

json model_echo(const ModelSpec& m) {
    json scale;
    if (m.scale.is_constant())
        scale = {{"type", "constant"}, {"c", m.scale.c()}};
    else
        scale = {{"type", "scaled_beta"}, {"c", m.scale.c()}, {"a", m.scale.a()},
                 {"b", m.scale.b()}};
    json factors = json::array();
    for (const auto& f : m.factors)
        factors.push_back({{"lambda", f.lambda}, {"v0", f.v0}, {"weight", f.weight}});
    return {{"variant", m.variant == Variant::OuGamma ? "ou_gamma" : "gl_ou_ggc"},
            {"rho", m.rho},
            {"theta", m.theta},
            {"scale", scale},
            {"factors", factors},
            {"r", m.r},
            {"q", m.q}};
}

json result_json(const MonteCarloResult& r) {
    return {{"estimate", r.estimate},
            {"std_error", r.std_error},
            {"trials", r.trials},
            {"estimator", r.estimator == Estimator::FSP ? "fsp" : "psp"}};
}

/// Deterministic payload goes to --out (or stdout); metadata (timings,
/// worker counts) goes to stdout only.
void emit(const json& result, const json& metadata, const std::string& out_path) {
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << result.dump(2) << "\n";
        std::cout << json{{"written", out_path}, {"metadata", metadata}}.dump(2) << "\n";
    } else {
        std::cout << json{{"result", result}, {"metadata", metadata}}.dump(2) << "\n";
    }
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

int cmd_dmean(std::uint64_t seed, int threads, const std::string& out_path,
              const std::string& format, const std::string& delta_csv, double lambda,
              double horizon, const std::string& kernel_name, const std::string& sampler_name,
              int fixed_n, double eps, const std::vector<double>& scale_beta, double scale_c,
              bool have_scale_c, std::int64_t trials) {
    KernelKind kernel = KernelKind::OneMinusDecay;
    if (kernel_name == "unit") kernel = KernelKind::Unit;
    else if (kernel_name == "decay") kernel = KernelKind::Decay;
    else if (kernel_name != "one_minus_decay")
        throw std::invalid_argument("--kernel must be unit, decay or one_minus_decay");
    // Default scale is the benchmark law R ~ Uniform(0,1).
    ScaleVariable scale = scale_beta.size() == 3
                              ? ScaleVariable::scaled_beta(scale_beta[0], scale_beta[1],
                                                           scale_beta[2])
                              : (have_scale_c ? ScaleVariable::constant(scale_c)
                                              : ScaleVariable::scaled_beta(1.0, 1.0, 1.0));

    json rows = json::array();
    std::string csv_text = "delta,sampler,mean,variance,avg_stack,avg_components\n";
    for (const double delta : parse_double_list(delta_csv)) {
        DirichletMeanSpec spec(delta, kernel, lambda, horizon, scale);
        SampleStats value, aux;
        const int nblocks = block_count(trials);
        std::vector<SampleStats> bval(nblocks), baux(nblocks);
        const RandomStream base = RandomStream(seed).split(static_cast<std::uint64_t>(delta * 1000));
        for_each_block(trials, threads, [&](int b, std::int64_t first, std::int64_t last) {
            for (std::int64_t i = first; i < last; ++i) {
                RandomStream rng = base.split(static_cast<std::uint64_t>(i));
                if (sampler_name == "cftp") {
                    auto [m, st] = sample_exact_composite(spec, rng);
                    bval[b].add(m);
                    baux[b].add(static_cast<double>(st.stack_size));
                } else {
                    const TruncationRule rule =
                        sampler_name == "fixed" ? TruncationRule::fixed_n(fixed_n)
                                                : TruncationRule::stopping_bounded(eps);
                    auto td = sample_truncated(spec, rule, rng);
                    bval[b].add(td.value);
                    baux[b].add(static_cast<double>(td.n_used));
                }
            }
        });
        for (int b = 0; b < nblocks; ++b) {
            value.merge(bval[b]);
            aux.merge(baux[b]);
        }
        json row = {{"delta", delta},
                    {"sampler", sampler_name},
                    {"mean", value.mean()},
                    {"variance", value.central_moment(2)},
                    {"trials", trials}};
        char line[256];
        if (sampler_name == "cftp") {
            row["avg_stack"] = aux.mean();
            std::snprintf(line, sizeof line, "%g,%s,%.6f,%.6f,%.4f,\n", delta,
                          sampler_name.c_str(), value.mean(), value.central_moment(2), aux.mean());
        } else {
            row["avg_components"] = aux.mean();
            std::snprintf(line, sizeof line, "%g,%s,%.6f,%.6f,,%.4f\n", delta,
                          sampler_name.c_str(), value.mean(), value.central_moment(2), aux.mean());
        }
        csv_text += line;
        rows.push_back(row);
    }

    if (format == "csv") {
        if (!out_path.empty()) {
            std::ofstream out(out_path);
            out << csv_text;
            std::cout << json{{"written", out_path}}.dump(2) << "\n";
        } else {
            std::cout << csv_text;
        }
        return 0;
    }
    emit(json{{"dmean", rows}}, json::object(), out_path);
    return 0;
}

int cmd_returns(const ModelFlags& mf, std::uint64_t seed, int threads, double horizon,
                std::int64_t trials, const std::string& out_path, const std::string& hist_path,
                int bins) {
    const ModelSpec model = model_from_flags(mf);
    const int nblocks = block_count(trials);
    std::vector<SampleStats> bstats(nblocks);
    std::vector<double> sample;
    const bool keep = !hist_path.empty();
    if (keep) sample.resize(static_cast<std::size_t>(trials));
    const RandomStream base(seed);
    for_each_block(trials, threads, [&](int b, std::int64_t first, std::int64_t last) {
        for (std::int64_t i = first; i < last; ++i) {
            RandomStream rng = base.split(static_cast<std::uint64_t>(i));
            const double x = sample_transition(model, 1.0, horizon, rng).second.log_return;
            bstats[b].add(x);
            if (keep) sample[static_cast<std::size_t>(i)] = x;
        }
    });
    SampleStats st;
    for (const auto& b : bstats) st.merge(b);

    if (keep) {
        const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
        const double lo = *lo_it, hi = *hi_it;
        std::vector<std::int64_t> counts(bins, 0);
        for (const double x : sample) {
            int k = static_cast<int>((x - lo) / (hi - lo) * bins);
            counts[std::clamp(k, 0, bins - 1)]++;
        }
        std::ofstream out(hist_path);
        out << "bin_left,bin_right,count\n";
        for (int k = 0; k < bins; ++k)
            out << lo + (hi - lo) * k / bins << ',' << lo + (hi - lo) * (k + 1) / bins << ','
                << counts[k] << "\n";
    }

    json result = {{"horizon", horizon},
                   {"trials", trials},
                   {"mean", st.mean()},
                   {"sd", st.stddev()},
                   {"skewness", st.skewness()},
                   {"kurtosis", st.kurtosis()},
                   {"model_echo", model_echo(model)}};
    emit(result, json::object(), out_path);
    return 0;
}

SamplerChoice sampler_from_name(const std::string& name, int n, double eps) {
    if (name == "exact") return SamplerChoice::exact();
    if (name == "fixed") return SamplerChoice::truncated(TruncationRule::fixed_n(n));
    if (name == "stopping") return SamplerChoice::truncated(TruncationRule::stopping_bounded(eps));
    throw std::invalid_argument("--sampler must be exact, fixed or stopping");
}

int cmd_price(const ModelFlags& mf, std::uint64_t seed, int threads, const std::string& payoff,
              double s0, double strike, double maturity, double k, double t1, double t2,
              std::int64_t trials, const std::string& estimator, const std::string& sampler_name,
              int fixed_n, const std::string& out_path) {
    const ModelSpec model = model_from_flags(mf);
    PricingConfig cfg;
    cfg.threads = threads;
    cfg.sampler = sampler_from_name(sampler_name, fixed_n, kMachineEpsilon);
    const RandomStream base(seed);

    json result;
    json metadata;
    auto run_both = [&](auto&& pricer) {
        json out = json::object();
        double elapsed = 0.0;
        if (estimator == "psp" || estimator == "both") {
            const MonteCarloResult r = pricer(Estimator::PSP);
            out["psp"] = result_json(r);
            elapsed += r.elapsed_seconds;
        }
        if (estimator == "fsp" || estimator == "both") {
            const MonteCarloResult r = pricer(Estimator::FSP);
            out["fsp"] = result_json(r);
            elapsed += r.elapsed_seconds;
        }
        metadata["elapsed_seconds"] = elapsed;
        return out;
    };

    if (payoff == "european") {
        const EuropeanCall opt(strike, maturity);
        result = run_both([&](Estimator est) {
            return price_european(model, s0, opt, trials, base, est, cfg);
        });
        result["payoff"] = {{"type", "european"}, {"strike", strike}, {"maturity", maturity}};
    } else if (payoff == "forward_start") {
        const ForwardStartOption opt(k, t1, t2);
        result = run_both([&](Estimator est) {
            return price_forward_start(model, s0, opt, trials, base, est, cfg);
        });
        result["payoff"] = {{"type", "forward_start"}, {"k", k}, {"t1", t1}, {"t2", t2}};
    } else {
        throw std::invalid_argument("--payoff must be european or forward_start");
    }
    result["s0"] = s0;
    result["model_echo"] = model_echo(model);
    emit(result, metadata, out_path);
    return 0;
}

int cmd_paths(const ModelFlags& mf, std::uint64_t seed, const std::string& times_csv,
              std::int64_t trials, double s0, const std::string& sampler_name, int fixed_n,
              const std::string& out_path) {
    const ModelSpec model = model_from_flags(mf);
    const std::vector<double> times = parse_double_list(times_csv);
    const SamplerChoice choice = sampler_from_name(sampler_name, fixed_n, kMachineEpsilon);
    const RandomStream base(seed);
    std::vector<std::vector<PathStep>> paths;
    paths.reserve(static_cast<std::size_t>(trials));
    for (std::int64_t i = 0; i < trials; ++i) {
        RandomStream rng = base.split(static_cast<std::uint64_t>(i));
        paths.push_back(sample_path(model, s0, times, rng, choice));
    }
    if (out_path.empty()) {
        write_paths_csv(std::cout, paths, model.n_factors());
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        write_paths_csv(out, paths, model.n_factors());
        std::cout << json{{"written", out_path}, {"rows", trials * (std::int64_t)times.size()}}
                         .dump(2)
                  << "\n";
    }
    return 0;
}

int cmd_calibrate(std::uint64_t seed, const std::string& quotes_path, double s0, double r,
                  double q, const std::string& variant, int l, std::int64_t trials,
                  const std::string& start_path, double nm_tol, int nm_max_iter,
                  const std::string& out_path) {
    CalibrationProblem problem;
    problem.s0 = s0;
    problem.r = r;
    problem.q = q;
    problem.n_factors = l;
    problem.trials = trials;
    problem.seed = seed;
    problem.nm.tol = nm_tol;
    problem.nm.max_iter = nm_max_iter;
    if (variant == "ou_gamma") problem.variant = Variant::OuGamma;
    else if (variant == "gl_ou_ggc") problem.variant = Variant::GlOuGgc;
    else throw std::invalid_argument("--variant must be ou_gamma or gl_ou_ggc");

    std::ifstream in(quotes_path);
    if (!in) throw std::invalid_argument("cannot open quotes file " + quotes_path);
    std::string line;
    if (!std::getline(in, line) || line != "strike,maturity_years,price")
        throw std::invalid_argument("quotes file must start with header strike,maturity_years,price");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double strike = 0.0, t = 0.0, px = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &strike, &t, &px) != 3)
            throw std::invalid_argument("bad quote row: " + line);
        problem.quotes.emplace_back(strike, t, px);
    }

    std::ifstream sin(start_path);
    if (!sin) throw std::invalid_argument("cannot open start file " + start_path);
    json sj;
    sin >> sj;
    const ModelSpec start = model_from_json(sj);

    const auto res = calibrate(problem, start);
    json fitted = model_echo(res.model);
    json result = {{"fitted", fitted},
                   {"mse", res.mse},
                   {"iterations", res.iterations},
                   {"converged", res.converged},
                   {"objective_evals", res.objective_evals},
                   {"rho", res.model.rho},
                   {"theta", res.model.theta},
                   {"c", res.model.scale.c()}};
    if (!res.model.scale.is_constant()) {
        result["alpha"] = res.model.scale.a();
        result["beta"] = res.model.scale.b();
    }
    for (std::size_t j = 0; j < res.model.factors.size(); ++j) {
        result["v0_" + std::to_string(j + 1)] = res.model.factors[j].v0;
        result["lambda_" + std::to_string(j + 1)] = res.model.factors[j].lambda;
    }
    emit(result, json::object(), out_path);
    return 0;
}

int cmd_validate(std::uint64_t seed, int threads, const std::string& suite, double trial_scale,
                 const std::string& out_path) {
    ValidationConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.trial_scale = trial_scale;

    std::vector<SuiteResult> results;
    if (suite == "all") {
        results = run_all_suites(cfg);
    } else if (suite == "table2" || suite == "truncation") {
        results = run_suite_table2(cfg);
    } else if (suite == "figure1") {
        results = {run_suite_figure1(cfg)};
    } else if (suite == "table3") {
        results = {run_suite_table3(cfg)};
    } else if (suite == "table5") {
        results = {run_suite_table5(cfg)};
    } else if (suite == "martingale") {
        results = {run_suite_martingale(cfg)};
    } else if (suite == "bs") {
        results = {run_suite_bs(cfg)};
    } else if (suite == "ggc") {
        results = {run_suite_ggc(cfg)};
    } else if (suite == "calibration") {
        results = {run_suite_calibration(cfg)};
    } else if (suite == "determinism") {
        results = {run_suite_determinism(cfg)};
    } else {
        throw std::invalid_argument("unknown suite " + suite);
    }

    bool all_pass = true;
    json suites = json::array();
    for (const auto& s : results) {
        json checks = json::array();
        for (const auto& c : s.checks)
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        suites.push_back({{"suite", s.name}, {"pass", s.passed()}, {"checks", checks}});
        all_pass = all_pass && s.passed();
    }
    emit(json{{"pass", all_pass}, {"suites", suites}}, json::object(), out_path);
    return all_pass ? 0 : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo pricing engine for OU stochastic-volatility models"};
    app.require_subcommand(1);

    std::uint64_t seed = 12345;
    int threads = 0;
    std::string out_path;
    app.add_option("--seed", seed, "root seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = auto)");
    app.add_option("--out", out_path, "write the result payload to this file");

    // dmean
    auto* dmean = app.add_subcommand("dmean", "sample Dirichlet mean variables");
    std::string delta_csv = "1.0", kernel_name = "one_minus_decay", sampler_name = "cftp";
    std::string format = "json";
    double lambda = 1.0, horizon = 1.0, eps = kMachineEpsilon, scale_c = 1.0;
    std::vector<double> scale_beta;
    int fixed_n = 100;
    std::int64_t trials = 100000;
    dmean->add_option("--delta", delta_csv, "shape delta (comma list allowed)")->required();
    dmean->add_option("--lambda", lambda, "decay rate");
    dmean->add_option("--horizon", horizon, "step length");
    dmean->add_option("--kernel", kernel_name, "unit, decay or one_minus_decay");
    dmean->add_option("--sampler", sampler_name, "cftp, fixed or stopping");
    dmean->add_option("--n", fixed_n, "components for --sampler fixed");
    dmean->add_option("--eps", eps, "tolerance for --sampler stopping");
    dmean->add_option("--scale-c", scale_c, "constant scale");
    dmean->add_option("--scale-beta", scale_beta, "scaled-beta scale: c a b")->expected(3);
    dmean->add_option("--trials", trials, "trials per delta");
    dmean->add_option("--format", format, "json or csv");

    // returns
    auto* returns = app.add_subcommand("returns", "one-step log-return statistics");
    ModelFlags ret_mf;
    add_model_flags(returns, ret_mf);
    double ret_horizon = 1.0;
    std::int64_t ret_trials = 1000000;
    std::string hist_path;
    int bins = 200;
    returns->add_option("--horizon", ret_horizon, "step length");
    returns->add_option("--trials", ret_trials, "trials");
    returns->add_option("--hist", hist_path, "histogram CSV output");
    returns->add_option("--bins", bins, "histogram bins");

    // price
    auto* price = app.add_subcommand("price", "price an option");
    ModelFlags price_mf;
    add_model_flags(price, price_mf);
    std::string payoff = "european", estimator = "both", price_sampler = "exact";
    double s0 = 100.0, strike = 100.0, maturity = 1.0, fs_k = 1.0, fs_t1 = 1.0, fs_t2 = 2.0;
    std::int64_t price_trials = 100000;
    int price_fixed_n = 100;
    price->add_option("--payoff", payoff, "european or forward_start");
    price->add_option("--s0", s0, "spot");
    price->add_option("--strike", strike, "strike (european)");
    price->add_option("--maturity", maturity, "maturity (european)");
    price->add_option("--k", fs_k, "floating-strike multiple (forward_start)");
    price->add_option("--t1", fs_t1, "strike-set date (forward_start)");
    price->add_option("--t2", fs_t2, "payoff date (forward_start)");
    price->add_option("--trials", price_trials, "trials");
    price->add_option("--estimator", estimator, "psp, fsp or both");
    price->add_option("--sampler", price_sampler, "exact, fixed or stopping");
    price->add_option("--n", price_fixed_n, "components for --sampler fixed");

    // paths
    auto* paths = app.add_subcommand("paths", "export simulated price paths as CSV");
    ModelFlags paths_mf;
    add_model_flags(paths, paths_mf);
    std::string times_csv = "1.0";
    std::int64_t paths_trials = 10;
    double paths_s0 = 100.0;
    std::string paths_sampler = "exact";
    int paths_fixed_n = 100;
    paths->add_option("--times", times_csv, "comma-separated observation times")->required();
    paths->add_option("--trials", paths_trials, "number of paths");
    paths->add_option("--s0", paths_s0, "spot");
    paths->add_option("--sampler", paths_sampler, "exact, fixed or stopping");
    paths->add_option("--n", paths_fixed_n, "components for --sampler fixed");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit model parameters to option quotes");
    std::string quotes_path, start_path, cal_variant = "ou_gamma";
    double cal_s0 = 100.0, cal_r = 0.0, cal_q = 0.0, nm_tol = 1e-4;
    int cal_l = 1, nm_max_iter = 300;
    std::int64_t cal_trials = 100000;
    cal->add_option("--quotes", quotes_path, "CSV: strike,maturity_years,price")->required();
    cal->add_option("--start", start_path, "initial model parameter JSON")->required();
    cal->add_option("--s0", cal_s0, "spot");
    cal->add_option("--r", cal_r, "risk-free rate");
    cal->add_option("--q", cal_q, "dividend yield");
    cal->add_option("--variant", cal_variant, "ou_gamma or gl_ou_ggc");
    cal->add_option("--l", cal_l, "number of volatility factors (1 or 2)");
    cal->add_option("--trials", cal_trials, "trials per objective evaluation");
    cal->add_option("--nm-tol", nm_tol, "simplex size tolerance");
    cal->add_option("--nm-max-iter", nm_max_iter, "simplex iteration cap");

    // validate
    auto* val = app.add_subcommand("validate", "run the reference validation suites");
    std::string suite = "all";
    double trial_scale = 1.0;
    val->add_option("--suite", suite,
                    "all, table2, truncation, figure1, table3, table5, martingale, bs, ggc, "
                    "calibration, determinism");
    val->add_option("--trial-scale", trial_scale, "scale factor for the reference trial counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (dmean->parsed())
            return cmd_dmean(seed, threads, out_path, format, delta_csv, lambda, horizon,
                             kernel_name, sampler_name, fixed_n, eps, scale_beta, scale_c,
                             dmean->count("--scale-c") > 0, trials);
        if (returns->parsed())
            return cmd_returns(ret_mf, seed, threads, ret_horizon, ret_trials, out_path,
                               hist_path, bins);
        if (price->parsed())
            return cmd_price(price_mf, seed, threads, payoff, s0, strike, maturity, fs_k, fs_t1,
                             fs_t2, price_trials, estimator, price_sampler, price_fixed_n,
                             out_path);
        if (paths->parsed())
            return cmd_paths(paths_mf, seed, times_csv, paths_trials, paths_s0, paths_sampler,
                             paths_fixed_n, out_path);
        if (cal->parsed())
            return cmd_calibrate(seed, quotes_path, cal_s0, cal_r, cal_q, cal_variant, cal_l,
                                 cal_trials, start_path, nm_tol, nm_max_iter, out_path);
        if (val->parsed())
            return cmd_validate(seed, threads, suite, trial_scale, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "validation"}}.dump() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "validation"}}.dump() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "runtime"}}.dump() << "\n";
        return kExitRuntime;
    }
    return 0;
}
