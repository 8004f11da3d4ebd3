#include "cli.hpp"

#include "setid/bench.hpp"
#include "setid/config.hpp"
#include "setid/csv.hpp"
#include "setid/errors.hpp"
#include "setid/spao.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <tuple>
#include <ostream>

namespace setid::cli {

namespace {

struct Options {
    std::string config_path;
    bool paper_v = false;
    bool emit_config = false;
    std::optional<std::uint64_t> seed;
    std::optional<long> runs;
    std::optional<long> horizon;
    std::optional<int> jobs;
    std::string out;
    std::vector<std::string> overrides;
};

Config resolve_config(const Options& opt, std::filesystem::path& base_dir)
{
    Config cfg;
    if (opt.paper_v)
        cfg = reference_preset();
    if (!opt.config_path.empty()) {
        const Config file = Config::load(opt.config_path);
        for (const auto& [key, value] : file.values())
            cfg.set(key, value);
        base_dir = std::filesystem::path(opt.config_path).parent_path();
    }
    if (!opt.paper_v && opt.config_path.empty())
        throw ConfigError("no configuration: give a config file or --paper-v");

    for (const std::string& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opt.seed) {
        cfg.set("mc.seed", std::to_string(*opt.seed));
        cfg.set("sim.noise_seed", std::to_string(*opt.seed));
    }
    if (opt.runs)
        cfg.set("mc.runs", std::to_string(*opt.runs));
    if (opt.horizon)
        cfg.set("sim.length", std::to_string(*opt.horizon));
    if (opt.jobs)
        cfg.set("mc.jobs", std::to_string(*opt.jobs));

    if (!opt.out.empty())
        cfg.set("out.dir", opt.out);
    else if (const char* env = std::getenv("SETVALUED_ID_OUT"); env && *env)
        cfg.set("out.dir", env);
    return cfg;
}

std::filesystem::path output_dir(const Config& cfg)
{
    std::filesystem::path dir = cfg.get_string("out.dir", "out");
    std::filesystem::create_directories(dir);
    return dir;
}

RunTrace simulate_from(const Config& cfg, const std::filesystem::path& base_dir)
{
    const SystemModel system = build_system(cfg, base_dir);
    const InputPlan plan = build_input(cfg);
    const long K = cfg.get_long("sim.length", 1000);
    const auto seed = static_cast<std::uint64_t>(cfg.get_long("sim.noise_seed", 0));
    return simulate_run(system, plan, K, seed, static_cast<int>(cfg.get_long("pe.window", 0)));
}

void print_vector(std::ostream& out, const Vector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << (i ? " " : "") << format_double(v(i));
    out << '\n';
}

int cmd_simulate(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const RunTrace trace = simulate_from(cfg, base);
    const auto path = output_dir(cfg) / "trace.csv";
    write_trace_csv(trace, path);
    out << "wrote " << path.string() << " (" << trace.length() << " steps)\n";
    return 0;
}

int cmd_identify(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const RunTrace trace = simulate_from(cfg, base);
    const StepPolicy policy = build_policy(cfg);
    const Vector init = build_initial_estimate(cfg, trace.system->dim());
    const EstimateTrajectory traj = run_estimator(trace, policy, init);
    const auto path = output_dir(cfg) / "estimates.csv";
    write_trajectory_csv(traj, path);
    out << "theta_hat = ";
    print_vector(out, traj.theta_hat.col(traj.theta_hat.cols() - 1));
    out << "err_sq = " << format_double(traj.err_sq.back()) << '\n';
    return 0;
}

int cmd_spao(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const RunTrace trace = simulate_from(cfg, base);
    const StepPolicy policy = build_policy(cfg);
    if (policy.kind != StepKind::Harmonic)
        throw ConfigError("est.policy: the decomposition needs the harmonic policy");
    const Vector& theta = trace.system->theta;
    const EstimateTrajectory traj =
        run_estimator(trace, policy, build_initial_estimate(cfg, theta.size()));
    const Matrix T = compute_T(trace, policy.beta, theta);
    const SpaoTrace spao = compute_psi(traj, T, theta);

    const Eigen::Index n = theta.size();
    std::vector<std::string> header{"k"};
    for (const char* name : {"T_", "psi_", "theta_err_"})
        for (Eigen::Index i = 1; i <= n; ++i)
            header.push_back(name + std::to_string(i));
    const auto path = output_dir(cfg) / "spao.csv";
    CsvWriter csv(path, header);
    for (Eigen::Index c = 0; c < spao.psi.cols(); ++c) {
        csv << static_cast<long>(spao.first_k + c);
        for (const Matrix* m : {&spao.T, &spao.psi, &spao.theta_err})
            for (Eigen::Index i = 0; i < n; ++i)
                csv << (*m)(i, c);
        csv.end_row();
    }
    out << "recursion_residual = "
        << format_double(psi_recursion_residual(spao, trace, policy.beta)) << '\n';
    return 0;
}

int cmd_rates(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const ExperimentConfig exp = build_experiment(cfg, base);
    const EnsembleResult result = monte_carlo(exp);
    const auto dir = output_dir(cfg);
    write_rates_csv(result.rates, 0, dir / "rates.csv");
    std::ofstream(dir / "rates_summary.json") << rate_summary_json(result.rates) << '\n';
    out << rate_summary_json(result.rates) << '\n';
    return 0;
}

int cmd_crlb(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const SystemModel system = build_system(cfg, base);
    const long K = cfg.get_long("sim.length", 1000);
    const Matrix phi = simulate_regressors(system, build_input(cfg), K);
    const CrlbResult bound = crlb(phi, system.theta, system.noise, system.thresholds);
    out << "k = " << bound.k << '\n';
    out << "crlb_trace = " << format_double(bound.trace) << '\n';
    out << "crlb_k_trace = " << format_double(bound.k_trace) << '\n';
    return 0;
}

int cmd_mc(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    ExperimentConfig exp = build_experiment(cfg, base);
    exp.output_dir = output_dir(cfg);
    const EnsembleResult result = monte_carlo(exp);
    write_experiment(result, exp, exp.output_dir);
    out << "runs = " << exp.runs << ", threads = " << result.threads << ", wall = "
        << result.wall_seconds << " s\n";
    out << "eta = " << format_double(result.rates.eta) << " (" << to_string(result.rates.regime)
        << "), ms_slope = " << format_double(result.rates.ms_slope) << '\n';
    out << "wrote " << exp.output_dir.string() << '\n';
    return 0;
}

int cmd_pecheck(const Config& cfg, const std::filesystem::path& base, std::ostream& out)
{
    const SystemModel system = build_system(cfg, base);
    const InputPlan plan = build_input(cfg);
    const long K = cfg.get_long("sim.length", 1000);
    const Matrix phi = simulate_regressors(system, plan, K);
    int window = static_cast<int>(cfg.get_long("pe.window", 0));
    if (window == 0)
        window = static_cast<int>(std::max<std::size_t>(system.dim(), plan.base_pattern.size()));
    const PECertificate pe = pe_check(phi, window);
    out << "delta = " << format_double(pe.excitation_level) << '\n';
    out << "N = " << pe.window << '\n';
    out << "M = " << format_double(pe.regressor_bound) << '\n';
    out << "valid = " << (pe.valid ? "true" : "false") << '\n';
    out << "worst_window_start = " << pe.worst_window_start << '\n';
    return pe.valid ? 0 : 1;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Set-valued system identification: simulate, estimate, diagnose"};
    app.require_subcommand(1);
    Options opt;

    using Handler = int (*)(const Config&, const std::filesystem::path&, std::ostream&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
        {"simulate", "Simulate one run and write trace.csv", cmd_simulate},
        {"identify", "Run the SA identifier and write estimates.csv", cmd_identify},
        {"spao", "Split the estimation error into T and psi, write spao.csv", cmd_spao},
        {"rates", "Monte Carlo rate diagnostics, rates.csv and rates_summary.json", cmd_rates},
        {"crlb", "Print the Cramer-Rao bound for the simulated regressors", cmd_crlb},
        {"mc", "Full Monte Carlo experiment with all outputs", cmd_mc},
        {"pecheck", "Persistent-excitation check of the regressors", cmd_pecheck},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", opt.config_path, "Config file")->check(CLI::ExistingFile);
        sub->add_flag("--paper-v", opt.paper_v, "Start from the reference preset");
        sub->add_option("--seed", opt.seed, "Noise and Monte Carlo master seed");
        sub->add_option("--runs", opt.runs, "Replications")->check(CLI::PositiveNumber);
        sub->add_option("--horizon", opt.horizon, "Last step K")->check(CLI::PositiveNumber);
        sub->add_option("--jobs", opt.jobs, "Worker threads (0 = all)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--out", opt.out, "Output directory");
        sub->add_option("--set", opt.overrides, "Override a config key: key=value");
        sub->add_flag("--emit-config", opt.emit_config, "Print the resolved config and stop");
        subs.push_back(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        std::filesystem::path base_dir;
        const Config cfg = resolve_config(opt, base_dir);
        if (opt.emit_config) {
            out << cfg.emit();
            return 0;
        }
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed())
                return std::get<2>(commands[i])(cfg, base_dir, out);
    } catch (const NumericalFault& e) {
        err << "numerical fault: " << e.what() << '\n';
        return 3;
    } catch (const SingularityError& e) {
        err << "singular: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

} // namespace setid::cli
