#include "setid/bench.hpp"

#include "setid/csv.hpp"
#include "setid/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <string>

namespace setid {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    // splitmix64 finaliser applied to master + golden-ratio stride * (index + 1)
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void ExperimentConfig::validate() const
{
    policy.validate();
    if (runs < 1)
        throw ConfigError("mc.runs: need at least one replication");
    if (horizon < 1)
        throw ConfigError("sim.length: horizon must be >= 1");
    if (horizon < policy.warm_start)
        throw ConfigError("sim.length: horizon " + std::to_string(horizon) +
                          " is below the warm start est.k0 = " +
                          std::to_string(policy.warm_start));
    if (theta_init.size() != system.dim())
        throw ConfigError("est.init: dimension " + std::to_string(theta_init.size()) +
                          " does not match system.theta dimension " +
                          std::to_string(system.dim()));
    if (record_T && !system.binary())
        throw ConfigError("spao: T_k is only defined for a single threshold");
    if (jobs < 0)
        throw ConfigError("--jobs: must be >= 0");
}

std::vector<long> thinning_grid(long first, long K, const std::vector<long>& extra, double ratio,
                                std::size_t cap)
{
    first = std::max(1L, first);
    if (K < first)
        return {};
    const double span = static_cast<double>(K) / static_cast<double>(first);
    if (cap > 1)
        ratio = std::max(ratio, std::pow(span, 1.0 / static_cast<double>(cap - 1)));
    std::vector<long> grid;
    double x = static_cast<double>(first);
    while (true) {
        const long k = static_cast<long>(std::llround(x));
        if (k > K)
            break;
        if (grid.empty() || k > grid.back())
            grid.push_back(k);
        x *= ratio;
    }
    for (long k : extra)
        if (k >= first && k <= K)
            grid.push_back(k);
    grid.push_back(K);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::size_t EnsembleResult::grid_index(long k) const
{
    auto it = std::lower_bound(grid.begin(), grid.end(), k);
    if (it == grid.end() || *it != k)
        throw ShapeError("k = " + std::to_string(k) + " is not on the ensemble grid");
    return static_cast<std::size_t>(it - grid.begin());
}

ReplicationResult run_replication(const ExperimentConfig& config, const Matrix& phi,
                                  const PECertificate& pe, const std::vector<long>& grid,
                                  std::uint64_t noise_seed, bool keep_trajectory)
{
    const SystemModel& system = config.system;
    const long K = config.horizon;
    const long k0 = config.policy.warm_start;
    const std::size_t G = grid.size();

    ReplicationResult rep;
    rep.noise_seed = noise_seed;
    rep.err_sq.assign(G, 0.0);
    rep.suffix_sup.assign(G, 0.0);
    if (config.record_T)
        rep.T = Matrix::Zero(system.dim(), static_cast<Eigen::Index>(G));

    NoiseSampler noise(system.noise, noise_seed);
    EstimatorState state = EstimatorState::start(system, config.policy, config.theta_init, pe);
    NoiseAverage average(config.policy.beta, system.dim());
    const double C = system.thresholds.front();

    if (keep_trajectory) {
        rep.trajectory.first_k = k0;
        rep.trajectory.theta_hat.resize(system.dim(), K - k0 + 1);
        rep.trajectory.theta_hat.col(0) = state.theta_hat;
        rep.trajectory.err_sq.reserve(static_cast<std::size_t>(K - k0 + 1));
        rep.trajectory.err_sq.push_back((state.theta_hat - system.theta).squaredNorm());
    }

    std::size_t g = 0;
    std::vector<double> segment_max(G, 0.0);
    for (long k = 1; k <= K; ++k) {
        const auto phik = phi.col(k - 1);
        const double y = phik.dot(system.theta) + noise();
        const int s = quantize(system.thresholds, y);
        if (config.record_T)
            average.push(phik, system.noise.cdf(C - phik.dot(system.theta)), s);
        if (k > k0) {
            sa_update(state, phik, s);
            if (keep_trajectory) {
                rep.trajectory.theta_hat.col(k - k0) = state.theta_hat;
                rep.trajectory.err_sq.push_back((state.theta_hat - system.theta).squaredNorm());
            }
        }
        if (g < G && k < grid[g])
            continue;
        // k >= grid[0]: advance to the segment [grid[g], grid[g+1]) containing k
        while (g + 1 < G && k >= grid[g + 1])
            ++g;
        const double err = (state.theta_hat - system.theta).squaredNorm();
        segment_max[g] = std::max(segment_max[g], err);
        if (k == grid[g]) {
            rep.err_sq[g] = err;
            if (config.record_T)
                rep.T.col(static_cast<Eigen::Index>(g)) = average.value();
        }
    }
    double running = 0.0;
    for (std::size_t i = G; i-- > 0;) {
        running = std::max(running, segment_max[i]);
        rep.suffix_sup[i] = running;
    }
    rep.final_estimate = state.theta_hat;
    return rep;
}

namespace {

struct Prepared {
    std::vector<long> grid;
    Matrix phi;
    PECertificate pe;
};

Prepared prepare(const ExperimentConfig& config)
{
    config.validate();
    Prepared p;
    p.phi = simulate_regressors(config.system, config.input, config.horizon);
    int window = config.pe_window;
    if (window == 0) {
        window = static_cast<int>(config.system.dim());
        if (config.input.kind == InputKind::CyclicDither)
            window = std::max(window, static_cast<int>(config.input.base_pattern.size()));
    }
    if (config.horizon >= window)
        p.pe = pe_check(p.phi, window);
    p.grid = thinning_grid(std::max(1L, config.policy.warm_start), config.horizon,
                           config.extra_grid);
    return p;
}

void aggregate(EnsembleResult& result, const ExperimentConfig& config)
{
    const std::size_t G = result.grid.size();
    result.mean_err_sq.assign(G, 0.0);
    std::vector<std::vector<double>> per_run;
    per_run.reserve(result.runs.size());
    for (const ReplicationResult& rep : result.runs) {
        result.final_err.push_back((rep.final_estimate - config.system.theta).norm());
        per_run.push_back(rep.err_sq);
    }

    long lo = config.slope_lo;
    long hi = config.slope_hi;
    if (lo == 0 && hi == 0) {
        lo = std::max(1L, config.horizon / 100);
        hi = config.horizon;
    }
    result.rates = rate_diagnostics(result.grid, per_run, lo, hi, false);
    result.mean_err_sq = result.rates.mean_err_sq;

    double f_lower = std::numeric_limits<double>::infinity();
    for (double c : config.system.thresholds)
        f_lower = std::min(f_lower, lower_density_bound(config.system.noise, c,
                                                        result.pe.regressor_bound,
                                                        config.system.theta.norm(), 0.0));
    const RateCoefficient rc =
        rate_coefficient(config.policy.beta, result.pe.excitation_level, f_lower);
    result.rates.f_lower = f_lower;
    result.rates.eta = rc.eta;
    result.rates.regime = rc.regime;

    std::vector<double> sups(result.runs.size());
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t r = 0; r < result.runs.size(); ++r)
            sups[r] = result.runs[r].suffix_sup[g];
        result.rates.tail_points.push_back(
            tail_estimate(sups, result.grid[g], config.tail_threshold));
    }
}

[[noreturn]] void rethrow_for_seed(const std::exception_ptr& error, std::uint64_t seed, long run)
{
    const std::string where =
        " (replication " + std::to_string(run) + ", noise seed " + std::to_string(seed) + ")";
    try {
        std::rethrow_exception(error);
    } catch (const NumericalFault& e) {
        throw NumericalFault(e.what() + where);
    } catch (const ConfigError& e) {
        throw ConfigError(e.what() + where);
    } catch (const std::exception& e) {
        throw Error(e.what() + where);
    }
}

EnsembleResult run_ensemble(const ExperimentConfig& config, bool parallel)
{
    const auto started = std::chrono::steady_clock::now();
    Prepared prep = prepare(config);

    EnsembleResult result;
    result.grid = std::move(prep.grid);
    result.phi = std::move(prep.phi);
    result.pe = prep.pe;
    result.runs.resize(static_cast<std::size_t>(config.runs));

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.runs));
    const long runs = config.runs;
    auto body = [&](long r) {
        const std::uint64_t seed = split_seed(config.master_seed, static_cast<std::uint64_t>(r));
        try {
            result.runs[static_cast<std::size_t>(r)] =
                run_replication(config, result.phi, result.pe, result.grid, seed,
                                r < config.saved_traces);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    };

    if (parallel) {
        const int threads = config.jobs > 0 ? config.jobs : omp_get_max_threads();
        result.threads = threads;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (long r = 0; r < runs; ++r)
            body(r);
    } else {
        result.threads = 1;
        for (long r = 0; r < runs; ++r)
            body(r);
    }

    for (long r = 0; r < runs; ++r)
        if (errors[static_cast<std::size_t>(r)])
            rethrow_for_seed(errors[static_cast<std::size_t>(r)],
                             split_seed(config.master_seed, static_cast<std::uint64_t>(r)), r);

    aggregate(result, config);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace

EnsembleResult monte_carlo(const ExperimentConfig& config) { return run_ensemble(config, true); }

EnsembleResult monte_carlo_serial(const ExperimentConfig& config)
{
    return run_ensemble(config, false);
}

CrlbResult crlb(const Matrix& phi, const Vector& theta, const NoiseModel& noise,
                const std::vector<double>& thresholds)
{
    if (thresholds.size() != 1)
        throw ShapeError("crlb: defined for a single threshold only");
    if (phi.rows() != theta.size())
        throw ShapeError("crlb: regressor dimension does not match theta");
    const double C = thresholds.front();
    const Eigen::Index n = theta.size();
    Matrix info = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
        const auto p = phi.col(i);
        const double x = C - p.dot(theta);
        const double F = noise.cdf(x);
        const double f = noise.pdf(x);
        const double var = F * (1.0 - F);
        if (!(var > 0.0))
            continue;
        info.noalias() += (f * f / var) * (p * p.transpose());
    }
    Eigen::FullPivLU<Matrix> lu(info);
    lu.setThreshold(1e-12);
    if (lu.rank() < n)
        throw SingularityError("crlb: Fisher information over " + std::to_string(phi.cols()) +
                                   " observations has rank " + std::to_string(lu.rank()) +
                                   " < n = " + std::to_string(n),
                               lu.rank());
    CrlbResult out;
    out.covariance = info.ldlt().solve(Matrix::Identity(n, n));
    out.trace = out.covariance.trace();
    out.k = static_cast<long>(phi.cols());
    out.k_trace = static_cast<double>(out.k) * out.trace;
    return out;
}

Vector baseline_from_phase_means(const Matrix& phase_regressors, const std::vector<double>& means,
                                 double threshold, const NoiseModel& noise)
{
    const Eigen::Index p = phase_regressors.rows();
    if (static_cast<Eigen::Index>(means.size()) != p)
        throw ShapeError("baseline: one phase mean per regressor row required");
    Vector rhs(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double m = means[static_cast<std::size_t>(j)];
        if (!(m > 0.0 && m < 1.0))
            throw InversionError("baseline: phase " + std::to_string(j) + " average " +
                                 std::to_string(m) + " cannot be inverted");
        rhs(j) = threshold - noise.quantile(m);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(phase_regressors);
    qr.setThreshold(1e-12);
    if (qr.rank() < phase_regressors.cols())
        throw SingularityError("baseline: phase regressor matrix has rank " +
                                   std::to_string(qr.rank()) + " < n = " +
                                   std::to_string(phase_regressors.cols()),
                               qr.rank());
    return qr.solve(rhs);
}

Vector empirical_measurement_baseline(const RunTrace& trace, int period,
                                      const Matrix& phase_regressors)
{
    if (!trace.system || !trace.system->binary())
        throw ShapeError("baseline: needs a binary-sensor trace");
    if (period < 1 || phase_regressors.rows() != period ||
        phase_regressors.cols() != trace.phi.rows())
        throw ShapeError("baseline: phase regressors must be period x n");
    std::vector<double> sums(static_cast<std::size_t>(period), 0.0);
    std::vector<long> counts(static_cast<std::size_t>(period), 0);
    for (long k = 1; k <= trace.length(); ++k) {
        const auto j = static_cast<std::size_t>((k - 1) % period);
        const auto row = phase_regressors.row(static_cast<Eigen::Index>(j)).transpose();
        const auto phik = trace.regressor(k);
        if ((phik - row).norm() > 1e-12 * (1.0 + row.norm()))
            throw ConfigError("baseline: inputs are not " + std::to_string(period) +
                              "-periodic at k = " + std::to_string(k));
        sums[j] += trace.s[static_cast<std::size_t>(k - 1)];
        counts[j] += 1;
    }
    std::vector<double> means(static_cast<std::size_t>(period));
    for (std::size_t j = 0; j < means.size(); ++j) {
        if (counts[j] == 0)
            throw ShapeError("baseline: phase " + std::to_string(j) + " never observed");
        means[j] = sums[j] / static_cast<double>(counts[j]);
    }
    return baseline_from_phase_means(phase_regressors, means, trace.system->threshold(),
                                     trace.system->noise);
}

void write_experiment(const EnsembleResult& result, const ExperimentConfig& config,
                      const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const auto& traj = result.runs[r].trajectory;
        if (traj.theta_hat.cols() > 0)
            write_trajectory_csv(traj, dir / ("trace_run" + std::to_string(r) + ".csv"));
    }
    {
        CsvWriter csv(dir / "ensemble.csv", {"k", "mean_err_sq", "k_mean_err_sq"});
        for (std::size_t g = 0; g < result.grid.size(); ++g) {
            csv << result.grid[g] << result.mean_err_sq[g]
                << static_cast<double>(result.grid[g]) * result.mean_err_sq[g];
            csv.end_row();
        }
    }
    write_rates_csv(result.rates, 0, dir / "rates.csv");
    {
        std::ofstream json(dir / "rates_summary.json");
        json << rate_summary_json(result.rates) << '\n';
    }

    std::ofstream out(dir / "summary.txt");
    if (!out)
        throw ConfigError("output: cannot write '" + (dir / "summary.txt").string() + "'");
    out << "runs = " << config.runs << '\n';
    out << "horizon = " << config.horizon << '\n';
    out << "master_seed = " << config.master_seed << '\n';
    out << "pe_window = " << result.pe.window << '\n';
    out << "pe_delta = " << format_double(result.pe.excitation_level) << '\n';
    out << "pe_bound = " << format_double(result.pe.regressor_bound) << '\n';
    out << "f_lower = " << format_double(result.rates.f_lower) << '\n';
    out << "eta = " << format_double(result.rates.eta) << '\n';
    out << "regime = " << to_string(result.rates.regime) << '\n';
    out << "ms_slope = " << format_double(result.rates.ms_slope) << '\n';
    out << "slope_window = " << result.rates.slope_lo << ' ' << result.rates.slope_hi << '\n';
    if (config.system.binary()) {
        try {
            const CrlbResult bound =
                crlb(result.phi, config.system.theta, config.system.noise, config.system.thresholds);
            out << "crlb_trace = " << format_double(bound.trace) << '\n';
            out << "crlb_k_trace = " << format_double(bound.k_trace) << '\n';
        } catch (const SingularityError& e) {
            out << "crlb_trace = singular (rank " << e.rank() << ")\n";
        }
    }
    const double final_k_mse =
        static_cast<double>(result.grid.back()) * result.mean_err_sq.back();
    out << "final_k_mean_err_sq = " << format_double(final_k_mse) << '\n';
}

} // namespace setid
