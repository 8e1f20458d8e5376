#include "cepred/harness.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "cepred/errors.hpp"

namespace cepred {

namespace {

struct EnvDefaults {
    double alpha_const = -1.0;          // >0: constant schedule
    StepSchedule alpha = StepSchedule::constant(0.001);
    StepSchedule beta = StepSchedule::constant(0.05);
    double c = 0.01;
    double lambda = 0.01;
    double eps1 = 0.95;
    double rho = 0.1;
    double r_shape = 0.01;
    long iters = 100000;
    double sigma0 = 1.0;
    double mu0_fill = 0.0;
    std::optional<Eigen::VectorXd> z0;
};

Eigen::VectorXd baird_init() {
    Eigen::VectorXd z0 = Eigen::VectorXd::Ones(8);
    z0[6] = 10.0;
    return z0;
}

EnvDefaults table_for(const std::string& env) {
    EnvDefaults d;
    if (env == "cartpole") {
        d.alpha = StepSchedule::power(1.0);
        d.beta = StepSchedule::power(0.6);
        d.c = 0.01;
        d.lambda = 0.01;
        d.eps1 = 0.95;
        d.r_shape = 1e-8;
        d.iters = 100000;
        d.sigma0 = 150.0;
        d.mu0_fill = 0.0;
    } else if (env == "pendulum5") {
        d.alpha = StepSchedule::constant(0.001);
        d.beta = StepSchedule::constant(0.05);
        d.c = 0.05;
        d.lambda = 0.01;
        d.eps1 = 0.95;
        d.r_shape = 1e-7;
        d.iters = 150000;
        d.sigma0 = 50.0;
    } else if (env == "baird" || env == "baird-imperfect") {
        d.alpha = StepSchedule::constant(0.001);
        d.beta = StepSchedule::constant(0.05);
        d.c = 0.01;
        d.lambda = 0.01;
        d.eps1 = 0.8;
        d.r_shape = env == "baird" ? 0.01 : 1e-4;
        d.iters = env == "baird" ? 2000000 : 2000000;
        d.sigma0 = 2.0;
        d.mu0_fill = 2.0;
        d.z0 = baird_init();
    } else if (env == "ring10") {
        d.alpha = StepSchedule::constant(0.001);
        d.beta = StepSchedule::constant(0.05);
        d.c = 0.075;
        d.lambda = 0.001;
        d.eps1 = 0.85;
        d.r_shape = 1e-3;
        d.iters = 400000;
        d.sigma0 = 30.0;
        d.mu0_fill = 0.0;
    } else if (env == "random-rbf" || env == "random-fourier") {
        d.alpha = StepSchedule::constant(0.001);
        d.beta = StepSchedule::constant(0.05);
        d.c = 0.075;
        d.lambda = 0.001;
        d.eps1 = 0.85;
        d.r_shape = 1e-3;
        d.iters = 300000;
        d.sigma0 = 10.0;
    } else if (env == "vanroy") {
        d.alpha = StepSchedule::power(1.0);
        d.beta = StepSchedule::constant(0.9);
        d.c = 0.03;
        d.lambda = 0.01;
        d.eps1 = 0.95;
        d.rho = 0.1;
        d.r_shape = 1e-6;
        d.iters = 50000;
        d.sigma0 = 2000.0;
        d.z0 = Eigen::VectorXd::Zero(1);
    } else if (env == "baird-nl") {
        d.alpha = StepSchedule::constant(0.02);
        d.beta = StepSchedule::constant(0.1);
        d.c = 0.05;
        d.lambda = 0.001;
        d.eps1 = 0.8;
        d.r_shape = 0.2;
        d.iters = 50000;
        d.sigma0 = 2.0;
        d.z0 = Eigen::VectorXd::Zero(8);
    } else if (env == "ring10-nl") {
        d.alpha = StepSchedule::constant(0.04);
        d.beta = StepSchedule::constant(0.2);
        d.c = 0.08;
        d.lambda = 0.001;
        d.eps1 = 0.8;
        d.r_shape = 0.05;
        d.iters = 50000;
        d.sigma0 = 2.0;
        d.z0 = Eigen::VectorXd::Zero(8);
    } else {
        throw ConfigError("unknown environment '" + env + "'");
    }
    return d;
}

bool is_continuous(const std::string& env) {
    return env == "cartpole" || env == "pendulum5";
}

double parse_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("parameter '" + key + "': cannot parse number '" + value + "'");
    }
}

Eigen::VectorXd parse_vector(const std::string& key, const std::string& value) {
    std::vector<double> vals;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        vals.push_back(parse_num(key, item));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

std::vector<std::string> env_names() {
    return {"baird",      "baird-imperfect", "ring10",  "random-rbf", "random-fourier",
            "cartpole",   "pendulum5",       "vanroy",  "baird-nl",   "ring10-nl"};
}

ExperimentConfig defaults_for_env(const std::string& env) {
    const EnvDefaults d = table_for(env);
    ExperimentConfig cfg;
    cfg.env = env;
    cfg.iters = d.iters;
    cfg.sce.ce.alpha = d.alpha;
    cfg.sce.ce.beta = d.beta;
    cfg.sce.ce.c0 = d.c;
    cfg.sce.ce.lambda_mix = d.lambda;
    cfg.sce.ce.epsilon1 = d.eps1;
    cfg.sce.ce.rho = d.rho;
    cfg.sce.ce.r_shape = d.r_shape;
    cfg.sce.sigma0 = d.sigma0;
    cfg.mu0_fill = d.mu0_fill;
    // Baselines default to the same published step sizes unless overridden.
    cfg.baseline.alpha = d.alpha;
    cfg.baseline.beta = d.beta;
    cfg.z0 = d.z0;
    return cfg;
}

void apply_param(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "env") {
        cfg.env = value;
    } else if (key == "algo") {
        cfg.algos.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.algos.push_back(item);
    } else if (key == "iters") {
        cfg.iters = static_cast<long>(parse_num(key, value));
    } else if (key == "trials") {
        cfg.trials = static_cast<int>(parse_num(key, value));
        if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_num(key, value));
    } else if (key == "cadence") {
        cfg.cadence = static_cast<long>(parse_num(key, value));
        if (cfg.cadence < 1) throw ConfigError("cadence must be >= 1");
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "avg_out") {
        cfg.avg_out = value;
    } else if (key == "rho") {
        cfg.sce.ce.rho = parse_num(key, value);
    } else if (key == "lambda") {
        cfg.sce.ce.lambda_mix = parse_num(key, value);
    } else if (key == "epsilon1") {
        cfg.sce.ce.epsilon1 = parse_num(key, value);
    } else if (key == "r") {
        cfg.sce.ce.r_shape = parse_num(key, value);
    } else if (key == "c") {
        cfg.sce.ce.c0 = parse_num(key, value);
    } else if (key == "c_decay") {
        cfg.sce.ce.c_decay = parse_num(key, value);
    } else if (key == "alpha") {
        cfg.sce.ce.alpha = StepSchedule::parse(value);
    } else if (key == "beta") {
        cfg.sce.ce.beta = StepSchedule::parse(value);
    } else if (key == "sigma0") {
        cfg.sce.sigma0 = parse_num(key, value);
    } else if (key == "mu0") {
        cfg.mu0_fill = parse_num(key, value);
    } else if (key == "tracker_ceiling") {
        cfg.sce.tracker_ceiling = parse_num(key, value);
    } else if (key == "base_alpha") {
        cfg.baseline.alpha = StepSchedule::parse(value);
    } else if (key == "base_beta") {
        cfg.baseline.beta = StepSchedule::parse(value);
    } else if (key == "base_lambda") {
        cfg.baseline.trace_lambda = parse_num(key, value);
    } else if (key == "base_epsilon") {
        cfg.baseline.ls_epsilon = parse_num(key, value);
    } else if (key == "z0") {
        cfg.z0 = parse_vector(key, value);
    } else if (key == "gamma") {
        cfg.gamma_override = parse_num(key, value);
    } else if (key == "n_states") {
        cfg.n_states = static_cast<int>(parse_num(key, value));
    } else if (key == "k") {
        cfg.k_features = static_cast<int>(parse_num(key, value));
    } else if (key == "env_seed") {
        cfg.env_seed = static_cast<std::uint64_t>(parse_num(key, value));
    } else {
        throw ConfigError("unknown parameter '" + key + "'");
    }
    cfg.overrides[key] = value;
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value");
        apply_param(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

namespace {

struct BuiltEnv {
    std::optional<DiscreteEnv> discrete;
    std::optional<ContinuousEnv> continuous;
    std::optional<ContinuousEvaluator> evaluator;
    int model_dim = 0;  // CE search dimension
};

BuiltEnv build_env(const ExperimentConfig& cfg) {
    BuiltEnv built;
    const std::string& env = cfg.env;
    const double g = cfg.gamma_override;
    if (env == "baird") {
        built.discrete = make_baird(BairdFeatures::perfect, g);
    } else if (env == "baird-imperfect") {
        built.discrete = make_baird(BairdFeatures::imperfect, g);
    } else if (env == "ring10") {
        built.discrete = make_ring10(g < 0.0 ? 0.99 : g);
    } else if (env == "random-rbf") {
        built.discrete = make_random_mdp(cfg.n_states, cfg.k_features, BasisKind::rbf,
                                         cfg.env_seed, g < 0.0 ? 0.9 : g);
    } else if (env == "random-fourier") {
        built.discrete = make_random_mdp(cfg.n_states, cfg.k_features, BasisKind::fourier,
                                         cfg.env_seed, g < 0.0 ? 0.9 : g);
    } else if (env == "vanroy") {
        built.discrete = make_vanroy();
    } else if (env == "baird-nl") {
        built.discrete = make_nonlinear_baird();
    } else if (env == "ring10-nl") {
        built.discrete = make_nonlinear_ring();
    } else if (env == "cartpole") {
        built.continuous = make_cartpole();
    } else if (env == "pendulum5") {
        built.continuous = make_pendulum5();
    } else {
        throw ConfigError("unknown environment '" + env + "'");
    }
    if (built.discrete) {
        built.model_dim = built.discrete->nl_a.size() > 0
                              ? 1
                              : built.discrete->feats.k();
    } else {
        built.continuous->noise_std = built.continuous->noise_std;  // keep as built
        built.evaluator.emplace(*built.continuous);
        built.model_dim = built.continuous->k;
    }
    return built;
}

RunTrace run_one(const BuiltEnv& built, const ExperimentConfig& cfg,
                 const std::string& algo_name_str, int trial) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(trial));
    const Algo algo = algo_from_name(algo_name_str);

    SceParams sce = cfg.sce;
    sce.iters = cfg.iters;
    sce.cadence = cfg.cadence;
    if (sce.mu0.size() != built.model_dim)
        sce.mu0 = Eigen::VectorXd::Constant(built.model_dim, cfg.mu0_fill);

    BaselineParams base = cfg.baseline;
    base.iters = cfg.iters;
    base.cadence = cfg.cadence;
    if (cfg.z0) base.z0 = *cfg.z0;

    RunTrace trace;
    trace.algo = algo_name_str;
    trace.trial = trial;
    if (built.discrete) {
        const DiscreteEnv& env = *built.discrete;
        if (algo == Algo::sce_mspbem)
            trace.records = run_sce_mspbem(env, sce, rng);
        else if (algo == Algo::sce_msbrm)
            trace.records = run_sce_msbrm(env, sce, rng);
        else
            trace.records = run_baseline(env, algo, base, rng);
    } else {
        const ContinuousEnv& env = *built.continuous;
        if (algo == Algo::sce_mspbem)
            trace.records = run_sce_mspbem(env, *built.evaluator, sce, rng);
        else if (algo == Algo::sce_msbrm)
            throw ConfigError("sce-msbrm needs double sampling; finite environments only");
        else
            trace.records = run_baseline(env, *built.evaluator, algo, base, rng);
    }
    return trace;
}

}  // namespace

std::vector<RunTrace> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.algos.empty()) throw ConfigError("no algorithm selected");
    for (const auto& a : cfg.algos) algo_from_name(a);  // validate names up front
    const BuiltEnv built = build_env(cfg);

    std::vector<RunTrace> results(cfg.algos.size() * static_cast<std::size_t>(cfg.trials));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= results.size() || failed.load()) break;
            const std::size_t algo_idx = i / static_cast<std::size_t>(cfg.trials);
            const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
            try {
                results[i] = run_one(built, cfg, cfg.algos[algo_idx], trial);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                if (!error) error = std::current_exception();
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min<std::size_t>(hw, results.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) std::rethrow_exception(error);
    return results;
}

AveragedTrace average_trials(const std::vector<RunTrace>& traces,
                             const std::string& algo) {
    std::vector<const RunTrace*> group;
    for (const auto& tr : traces)
        if (tr.algo == algo) group.push_back(&tr);
    if (group.empty()) throw ConfigError("average_trials: no traces for '" + algo + "'");

    const std::size_t len = group.front()->records.size();
    for (const auto* tr : group) {
        if (tr->records.size() != len)
            throw ConfigError("average_trials: mismatched cadences across trials");
        for (std::size_t i = 0; i < len; ++i)
            if (tr->records[i].t != group.front()->records[i].t)
                throw ConfigError("average_trials: mismatched record times across trials");
    }

    AveragedTrace avg;
    avg.algo = algo;
    avg.rows.resize(len);
    const double n = static_cast<double>(group.size());
    for (std::size_t i = 0; i < len; ++i) {
        auto& row = avg.rows[i];
        row.t = group.front()->records[i].t;
        double mean = 0.0, mean_sq = 0.0;
        row.sqrt_mspbe = row.gamma_p = row.sigma_fro = row.T = 0.0;
        row.n_diverged = 0;
        for (const auto* tr : group) {
            const TraceRecord& rec = tr->records[i];
            mean += rec.sqrt_mse;
            mean_sq += rec.sqrt_mse * rec.sqrt_mse;
            row.sqrt_mspbe += rec.sqrt_mspbe;
            row.gamma_p += rec.gamma_p;
            row.sigma_fro += rec.sigma_fro;
            row.T += rec.T;
            row.n_diverged += rec.diverged ? 1 : 0;
        }
        mean /= n;
        row.sqrt_mse = mean;
        row.sqrt_mse_var = n > 1.0 ? std::max(0.0, (mean_sq - n * mean * mean) / (n - 1.0))
                                   : 0.0;
        row.sqrt_mspbe /= n;
        row.gamma_p /= n;
        row.sigma_fro /= n;
        row.T /= n;
    }
    return avg;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_provenance(std::ofstream& out, const ExperimentConfig& cfg) {
    out << "# env=" << cfg.env << "\n";
    out << "# seed=" << cfg.seed << "\n";
    out << "# iters=" << cfg.iters << " trials=" << cfg.trials
        << " cadence=" << cfg.cadence << "\n";
    for (const auto& [k, v] : cfg.overrides) out << "# param " << k << "=" << v << "\n";
}

}  // namespace

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const std::vector<RunTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    write_provenance(out, cfg);
    out << "trial,t,sqrt_mse,sqrt_mspbe,gamma_p,sigma_fro,T,diverged\n";
    for (const auto& tr : traces)
        for (const auto& rec : tr.records)
            out << tr.trial << ',' << rec.t << ',' << fmt(rec.sqrt_mse) << ','
                << fmt(rec.sqrt_mspbe) << ',' << fmt(rec.gamma_p) << ','
                << fmt(rec.sigma_fro) << ',' << fmt(rec.T) << ','
                << (rec.diverged ? 1 : 0) << "\n";
}

void write_avg_csv(const std::string& path, const ExperimentConfig& cfg,
                   const std::vector<AveragedTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    write_provenance(out, cfg);
    out << "t,sqrt_mse,sqrt_mse_var,sqrt_mspbe,gamma_p,sigma_fro,T,n_diverged\n";
    for (const auto& tr : traces)
        for (const auto& row : tr.rows)
            out << row.t << ',' << fmt(row.sqrt_mse) << ',' << fmt(row.sqrt_mse_var) << ','
                << fmt(row.sqrt_mspbe) << ',' << fmt(row.gamma_p) << ','
                << fmt(row.sigma_fro) << ',' << fmt(row.T) << ',' << row.n_diverged
                << "\n";
}

namespace {

std::string algo_suffixed(const std::string& path, const std::string& algo, bool multi) {
    if (!multi) return path;
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return path + "-" + algo;
    return path.substr(0, dot) + "-" + algo + path.substr(dot);
}

int run_command(ExperimentConfig& cfg) {
    if (cfg.out.empty()) cfg.out = "trace.csv";
    const std::vector<RunTrace> traces = run_experiment(cfg);
    const bool multi = cfg.algos.size() > 1;
    for (const auto& algo : cfg.algos) {
        std::vector<RunTrace> mine;
        for (const auto& tr : traces)
            if (tr.algo == algo) mine.push_back(tr);
        write_csv(algo_suffixed(cfg.out, algo, multi), cfg, mine);
        if (!cfg.avg_out.empty()) {
            const AveragedTrace avg = average_trials(traces, algo);
            write_avg_csv(algo_suffixed(cfg.avg_out, algo, multi), cfg, {avg});
        }
    }
    return 0;
}

int oracle_command(const ExperimentConfig& cfg) {
    if (is_continuous(cfg.env))
        throw ConfigError("oracle: exact solutions exist for finite environments only");
    const BuiltEnv built = build_env(cfg);
    const DiscreteEnv& env = *built.discrete;
    const Eigen::IOFormat fmt_vec(Eigen::FullPrecision, 0, ", ", ", ", "", "", "[", "]");

    const Eigen::VectorXd v = solve_value_function(env.mdp);
    std::cout << "env: " << env.name << "\n";
    std::cout << "V_pi: " << v.transpose().format(fmt_vec) << "\n";
    try {
        const Eigen::VectorXd zp = mspbe_minimizer(env.mdp, env.feats);
        std::cout << "mspbe_minimizer: " << zp.transpose().format(fmt_vec) << "\n";
        std::cout << "sqrt_mse_at_mspbe_min: " << fmt(std::sqrt(mse(zp, env.mdp, env.feats)))
                  << "\n";
    } catch (const NumericalError& e) {
        std::cout << "mspbe_minimizer: unavailable (" << e.what() << ")\n";
    }
    const Eigen::VectorXd zb = msbr_minimizer(env.mdp, env.feats);
    std::cout << "msbr_minimizer: " << zb.transpose().format(fmt_vec) << "\n";
    std::cout << "sqrt_mse_at_msbr_min: " << fmt(std::sqrt(mse(zb, env.mdp, env.feats)))
              << "\n";
    return 0;
}

int list_command() {
    std::cout << "environments:\n";
    for (const auto& e : env_names()) std::cout << "  " << e << "\n";
    std::cout << "algorithms:\n";
    for (const auto& a : algo_names()) std::cout << "  " << a << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Cross-entropy policy evaluation benchmarks"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment and write CSV traces");
    std::string env_name, algo_csv, out_path, avg_out_path, config_path;
    long iters = -1;
    int trials = -1;
    long cadence = -1;
    std::int64_t seed = -1;
    std::vector<std::string> params;
    run->add_option("--env", env_name, "environment name (see `list`)");
    run->add_option("--algo", algo_csv, "comma-separated algorithm names");
    run->add_option("--iters", iters, "iteration budget per trial");
    run->add_option("--trials", trials, "independent trials");
    run->add_option("--seed", seed, "master seed (fallback: CEMTD_SEED, then 0)");
    run->add_option("--cadence", cadence, "record metrics every N iterations");
    run->add_option("--out", out_path, "per-trial CSV path");
    run->add_option("--avg-out", avg_out_path, "trial-averaged CSV path");
    run->add_option("--config", config_path, "flat key=value config file");
    run->add_option("--param", params, "explicit key=value override (repeatable)");

    auto* oracle = app.add_subcommand("oracle", "print exact solutions for a finite env");
    std::string oracle_env;
    std::vector<std::string> oracle_params;
    oracle->add_option("--env", oracle_env, "environment name")->required();
    oracle->add_option("--param", oracle_params, "key=value override (repeatable)");

    auto* list = app.add_subcommand("list", "list environments and algorithms");

    try {
        app.parse(argc, argv);

        if (list->parsed()) return list_command();

        if (oracle->parsed()) {
            ExperimentConfig cfg = defaults_for_env(oracle_env);
            for (const auto& p : oracle_params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("--param expects key=value, got '" + p + "'");
                apply_param(cfg, p.substr(0, eq), p.substr(eq + 1));
            }
            return oracle_command(cfg);
        }

        // run
        if (env_name.empty() && config_path.empty())
            throw ConfigError("run: --env or --config is required");
        ExperimentConfig cfg =
            env_name.empty() ? ExperimentConfig{} : defaults_for_env(env_name);
        bool have_defaults = !env_name.empty();
        if (!config_path.empty()) {
            if (!have_defaults) {
                // Peek at the file for the env key to load its defaults first.
                ExperimentConfig probe;
                probe.env.clear();
                std::ifstream in(config_path);
                if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
                std::string line;
                while (std::getline(in, line)) {
                    const auto eq = line.find('=');
                    if (eq != std::string::npos && line.substr(0, eq) == "env") {
                        cfg = defaults_for_env(line.substr(eq + 1));
                        have_defaults = true;
                        break;
                    }
                }
                if (!have_defaults)
                    throw ConfigError("config file must set env= when --env is absent");
            }
            load_config_file(cfg, config_path);
        }
        if (!env_name.empty() && cfg.env != env_name) cfg.env = env_name;
        if (!algo_csv.empty()) apply_param(cfg, "algo", algo_csv);
        if (iters >= 0) cfg.iters = iters;
        if (trials >= 0) {
            if (trials < 1) throw ConfigError("trials must be >= 1");
            cfg.trials = trials;
        }
        if (cadence >= 1) cfg.cadence = cadence;
        if (seed >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed);
        } else if (cfg.overrides.find("seed") == cfg.overrides.end()) {
            if (const char* env_seed = std::getenv("CEMTD_SEED"))
                cfg.seed = static_cast<std::uint64_t>(std::strtoull(env_seed, nullptr, 10));
        }
        if (!out_path.empty()) cfg.out = out_path;
        if (!avg_out_path.empty()) cfg.avg_out = avg_out_path;
        for (const auto& p : params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--param expects key=value, got '" + p + "'");
            apply_param(cfg, p.substr(0, eq), p.substr(eq + 1));
        }
        if (cfg.algos.empty()) throw ConfigError("run: --algo is required");
        return run_command(cfg);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace cepred
