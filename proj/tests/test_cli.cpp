#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using std::string;

namespace {

const string kCli = OUSV_CLI_PATH;

struct RunResult {
    int exit_code;
    string stdout_text;
};

RunResult run(const string& args) {
    const string out_file = "cli_stdout.tmp";
    const string cmd = kCli + " " + args + " > " + out_file + " 2> cli_stderr.tmp";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

string slurp(const string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("dmean subcommand") {
    auto r = run("--seed 9 dmean --delta 1.0 --sampler cftp --trials 20000");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("\"mean\"") != string::npos);
    REQUIRE(r.stdout_text.find("0.18") != string::npos);

    auto fixed = run("--seed 9 dmean --delta 0.5,1.0 --sampler fixed --n 100 --trials 5000");
    REQUIRE(fixed.exit_code == 0);
    REQUIRE(fixed.stdout_text.find("avg_components") != string::npos);

    auto bad = run("dmean --delta 0 --trials 100");
    REQUIRE(bad.exit_code == 2);
}

TEST_CASE("price subcommand with flat volatility equals the analytic value") {
    auto r = run("--seed 4 price --payoff european --variant ou_gamma --theta 0 --rho 0 "
                 "--factor 1.0,0.04 --strike 100 --maturity 1 --s0 100 --trials 2000 "
                 "--estimator fsp");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("\"fsp\"") != string::npos);
    // sigma^2 = 0.04 (1 - e^-1): value 6.3370 at the flat-surface limit.
    REQUIRE(r.stdout_text.find("6.33698") != string::npos);
}

TEST_CASE("price subcommand rejects bad inputs") {
    REQUIRE(run("price --payoff european --variant nope --factor 1,0.1").exit_code == 2);
    REQUIRE(run("price --payoff european --variant ou_gamma --theta -1 --factor 1,0.1")
                .exit_code == 2);
    REQUIRE(run("price --payoff european --variant ou_gamma --model missing.json").exit_code ==
            2);
}

TEST_CASE("paths subcommand exports the documented csv shape") {
    const string out = "paths_test.csv";
    std::remove(out.c_str());
    auto r = run("--seed 21 --out " + out +
                 " paths --times 1,2 --trials 10 --variant ou_gamma --rho -1 --theta 0.8 "
                 "--c 0.01 --factor 2.0,0.004");
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    REQUIRE(in.good());
    string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "path_id,time,price,tau,lev,v_1");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 20);
}

TEST_CASE("rerun with different worker counts is byte-identical") {
    const string out1 = "det_a.json", out2 = "det_b.json";
    std::remove(out1.c_str());
    std::remove(out2.c_str());
    const string base = " price --payoff forward_start --variant ou_gamma --rho -4.88115 "
                        "--theta 0.81303 --c 0.00981 --factor 2.24323,0.00437 --r 0.0319 "
                        "--k 1 --t1 1 --t2 2 --trials 20000 --estimator both";
    auto a = run("--seed 77 --threads 1 --out " + out1 + base);
    auto b = run("--seed 77 --threads 4 --out " + out2 + base);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const string ja = slurp(out1), jb = slurp(out2);
    REQUIRE(!ja.empty());
    REQUIRE(ja == jb);
}

TEST_CASE("calibrate subcommand on a tiny synthetic set") {
    // Quotes straight from the flat-volatility analytic prices.
    {
        std::ofstream q("quotes_test.csv");
        q << "strike,maturity_years,price\n";
        q << "90,1.0,14.218061304121232\n";   // BS(sigma=0.2)
        q << "100,1.0,7.965567455405804\n";
        q << "110,1.0,4.2079564070949756\n";
    }
    {
        std::ofstream s("start_test.json");
        s << R"({"variant":"ou_gamma","rho":-1.0,"theta":0.5,"scale":{"type":"constant","c":0.01},
                 "factors":[{"lambda":1.5,"v0":0.03}],"r":0.0,"q":0.0})";
    }
    auto r = run("--seed 5 calibrate --quotes quotes_test.csv --start start_test.json "
                 "--s0 100 --r 0 --q 0 --variant ou_gamma --l 1 --trials 10000 "
                 "--nm-max-iter 60");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("\"mse\"") != string::npos);
    REQUIRE(r.stdout_text.find("\"lambda_1\"") != string::npos);

    auto bad = run("calibrate --quotes nonexistent.csv --start start_test.json");
    REQUIRE(bad.exit_code == 2);
}

TEST_CASE("validate subcommand smoke run") {
    auto r = run("--seed 3 validate --suite bs");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("\"pass\": true") != string::npos);

    auto unknown = run("validate --suite nonsense");
    REQUIRE(unknown.exit_code == 2);
}

TEST_CASE("returns subcommand") {
    auto r = run("--seed 15 returns --variant ou_gamma --rho -1 --theta 1 --c 1 "
                 "--factor 1.0,0.0 --trials 50000");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("\"sd\"") != string::npos);
    REQUIRE(r.stdout_text.find("\"kurtosis\"") != string::npos);
}
