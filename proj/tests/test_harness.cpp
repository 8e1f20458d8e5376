#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cepred/errors.hpp"
#include "cepred/harness.hpp"

using namespace cepred;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig tiny_run(const std::string& env, const std::string& algo, long iters,
                          int trials) {
    ExperimentConfig cfg = defaults_for_env(env);
    apply_param(cfg, "algo", algo);
    cfg.iters = iters;
    cfg.trials = trials;
    cfg.seed = 99;
    cfg.cadence = 50;
    return cfg;
}

int run_cli(std::initializer_list<const char*> args) {
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>("cepred"));
    for (const char* a : args) argv.push_back(const_cast<char*>(a));
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("defaults: every environment has a parameter table") {
    for (const auto& env : env_names()) CHECK_NOTHROW(defaults_for_env(env));
    CHECK_THROWS_AS(defaults_for_env("no-such-env"), ConfigError);
    // Spot values from the published tables.
    const ExperimentConfig baird = defaults_for_env("baird");
    CHECK(baird.sce.ce.epsilon1 == 0.8);
    CHECK(baird.sce.ce.c0 == 0.01);
    CHECK(baird.sce.ce.alpha.eval(10) == doctest::Approx(0.001));
    const ExperimentConfig vanroy = defaults_for_env("vanroy");
    CHECK(vanroy.sce.ce.r_shape == 1e-6);
    CHECK(vanroy.sce.ce.beta.eval(3) == doctest::Approx(0.9));
    CHECK(vanroy.sce.ce.alpha.eval(4) == doctest::Approx(0.25));
    const ExperimentConfig ring = defaults_for_env("ring10");
    CHECK(ring.sce.ce.c0 == 0.075);
    CHECK(ring.sce.ce.epsilon1 == 0.85);
    CHECK(ring.sce.ce.lambda_mix == 0.001);
}

TEST_CASE("parameter overrides are applied and recorded") {
    ExperimentConfig cfg = defaults_for_env("ring10");
    apply_param(cfg, "rho", "0.2");
    apply_param(cfg, "base_alpha", "t^-0.7");
    apply_param(cfg, "gamma", "0.5");
    CHECK(cfg.sce.ce.rho == 0.2);
    CHECK(cfg.baseline.alpha.eval(1) == doctest::Approx(1.0));
    CHECK(cfg.gamma_override == 0.5);
    CHECK(cfg.overrides.size() == 3);
    CHECK_THROWS_AS(apply_param(cfg, "mystery", "1"), ConfigError);
    CHECK_THROWS_AS(apply_param(cfg, "trials", "0"), ConfigError);
}

TEST_CASE("config files: flat key=value lines with comments") {
    const std::string path = "/tmp/cepred_test_config.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "env=ring10\n";
        out << "algo=td0,lstd\n";
        out << "iters=120\n";
        out << "rho=0.25   # trailing comment\n";
    }
    ExperimentConfig cfg = defaults_for_env("ring10");
    load_config_file(cfg, path);
    CHECK(cfg.algos.size() == 2);
    CHECK(cfg.iters == 120);
    CHECK(cfg.sce.ce.rho == 0.25);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config_file(cfg, "/nonexistent/file"), ConfigError);
}

TEST_CASE("runs are deterministic: same seed, byte-identical output") {
    ExperimentConfig cfg = tiny_run("ring10", "sce-mspbem,td0", 300, 2);
    cfg.out = "/tmp/cepred_det_a.csv";
    write_csv("/tmp/cepred_det_a.csv", cfg, run_experiment(cfg));
    write_csv("/tmp/cepred_det_b.csv", cfg, run_experiment(cfg));
    CHECK(slurp("/tmp/cepred_det_a.csv") == slurp("/tmp/cepred_det_b.csv"));
    CHECK(!slurp("/tmp/cepred_det_a.csv").empty());
    std::remove("/tmp/cepred_det_a.csv");
    std::remove("/tmp/cepred_det_b.csv");
}

TEST_CASE("zero iterations produce a header-only table") {
    ExperimentConfig cfg = tiny_run("ring10", "td0", 0, 1);
    const auto traces = run_experiment(cfg);
    CHECK(traces.size() == 1);
    CHECK(traces[0].records.empty());
    cfg.out = "/tmp/cepred_empty.csv";
    write_csv(cfg.out, cfg, traces);
    const std::string text = slurp(cfg.out);
    CHECK(text.find("trial,t,sqrt_mse,sqrt_mspbe,gamma_p,sigma_fro,T,diverged") !=
          std::string::npos);
    // Nothing after the header row.
    const auto pos = text.find("diverged\n");
    CHECK(text.substr(pos + 9).empty());
    std::remove(cfg.out.c_str());
}

TEST_CASE("every algorithm runs end to end on the ring") {
    for (const auto& algo : algo_names()) {
        if (algo == "sce-msbrm" && false) continue;
        ExperimentConfig cfg = tiny_run("ring10", algo, 200, 1);
        const auto traces = run_experiment(cfg);
        CHECK(traces.size() == 1);
        CHECK(traces[0].records.size() == 4);
        for (const auto& rec : traces[0].records) CHECK(std::isfinite(rec.sqrt_mse));
    }
}

TEST_CASE("nonlinear environments accept only the manifold-capable algorithms") {
    ExperimentConfig cfg = tiny_run("vanroy", "sce-msbrm,td0,gtd2", 200, 1);
    CHECK(run_experiment(cfg).size() == 3);
    ExperimentConfig bad = tiny_run("vanroy", "lstd", 100, 1);
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
    ExperimentConfig bad2 = tiny_run("cartpole", "rg", 100, 1);
    CHECK_THROWS_AS(run_experiment(bad2), ConfigError);
    ExperimentConfig bad3 = tiny_run("ring10", "nope", 100, 1);
    CHECK_THROWS_AS(run_experiment(bad3), ConfigError);
}

TEST_CASE("trial averaging: means, variance, divergence counts") {
    RunTrace a{"td0", 0, {{100, 1.0, 0.5, 0.0, 0.0, 0.0, false},
                          {200, 2.0, 0.5, 0.0, 0.0, 0.0, true}}};
    RunTrace b{"td0", 1, {{100, 3.0, 0.7, 0.0, 0.0, 0.0, false},
                          {200, 4.0, 0.9, 0.0, 0.0, 0.0, true}}};
    const AveragedTrace avg = average_trials({a, b}, "td0");
    REQUIRE(avg.rows.size() == 2);
    CHECK(avg.rows[0].sqrt_mse == doctest::Approx(2.0));
    CHECK(avg.rows[1].sqrt_mse == doctest::Approx(3.0));
    CHECK(avg.rows[0].sqrt_mspbe == doctest::Approx(0.6));
    CHECK(avg.rows[0].n_diverged == 0);
    CHECK(avg.rows[1].n_diverged == 2);
    // Independent variance pass: sample variance of {1,3} and {2,4} is 2.
    CHECK(avg.rows[0].sqrt_mse_var == doctest::Approx(2.0));
    CHECK(avg.rows[1].sqrt_mse_var == doctest::Approx(2.0));

    // Identical traces average to themselves with zero variance.
    const AveragedTrace same = average_trials({a, a}, "td0");
    CHECK(same.rows[0].sqrt_mse == doctest::Approx(1.0));
    CHECK(same.rows[0].sqrt_mse_var == doctest::Approx(0.0));

    RunTrace c{"td0", 2, {{100, 1.0, 0.5, 0.0, 0.0, 0.0, false}}};
    CHECK_THROWS_AS(average_trials({a, c}, "td0"), ConfigError);
    RunTrace d{"td0", 3, {{150, 1.0, 0.5, 0.0, 0.0, 0.0, false},
                          {200, 1.0, 0.5, 0.0, 0.0, 0.0, false}}};
    CHECK_THROWS_AS(average_trials({a, d}, "td0"), ConfigError);
}

TEST_CASE("csv values round-trip at full precision") {
    ExperimentConfig cfg = tiny_run("ring10", "td0", 100, 1);
    const auto traces = run_experiment(cfg);
    cfg.out = "/tmp/cepred_prec.csv";
    write_csv(cfg.out, cfg, traces);
    std::ifstream in(cfg.out);
    std::string line;
    bool seen_header = false;
    std::vector<double> parsed;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col == 2) parsed.push_back(std::stod(cell));
            ++col;
        }
    }
    REQUIRE(parsed.size() == traces[0].records.size());
    for (std::size_t i = 0; i < parsed.size(); ++i)
        CHECK(parsed[i] == traces[0].records[i].sqrt_mse);  // bitwise round trip
    std::remove(cfg.out.c_str());
}

TEST_CASE("cli: list, oracle, run, and error statuses") {
    CHECK(run_cli({"list"}) == 0);
    CHECK(run_cli({"oracle", "--env", "baird"}) == 0);
    CHECK(run_cli({"oracle", "--env", "cartpole"}) == 2);
    CHECK(run_cli({"run", "--env", "nope", "--algo", "td0"}) == 2);
    CHECK(run_cli({"run", "--env", "ring10", "--algo", "td0", "--iters", "100",
                   "--trials", "1", "--out", "/tmp/cepred_cli.csv"}) == 0);
    CHECK(slurp("/tmp/cepred_cli.csv").find("trial,t,") != std::string::npos);
    std::remove("/tmp/cepred_cli.csv");

    // Seed fallback through the environment variable.
    setenv("CEMTD_SEED", "1234", 1);
    CHECK(run_cli({"run", "--env", "ring10", "--algo", "td0", "--iters", "50",
                   "--trials", "1", "--out", "/tmp/cepred_cli2.csv"}) == 0);
    unsetenv("CEMTD_SEED");
    CHECK(slurp("/tmp/cepred_cli2.csv").find("# seed=1234") != std::string::npos);
    std::remove("/tmp/cepred_cli2.csv");
}

TEST_CASE("multiple algorithms fan out into per-algorithm files") {
    ExperimentConfig cfg = tiny_run("ring10", "td0,lstd", 100, 2);
    cfg.out = "/tmp/cepred_multi.csv";
    cfg.avg_out = "/tmp/cepred_multi_avg.csv";
    const auto traces = run_experiment(cfg);
    CHECK(traces.size() == 4);
    // Emulate the run subcommand's fan-out.
    for (const auto& algo : cfg.algos) {
        std::vector<RunTrace> mine;
        for (const auto& tr : traces)
            if (tr.algo == algo) mine.push_back(tr);
        CHECK(mine.size() == 2);
        const AveragedTrace avg = average_trials(traces, algo);
        CHECK(avg.rows.size() == mine[0].records.size());
    }
}
