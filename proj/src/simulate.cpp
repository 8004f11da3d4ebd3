#include "setid/simulate.hpp"

#include "setid/csv.hpp"
#include "setid/errors.hpp"
#include "setid/linalg.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace setid {

std::vector<double> gen_inputs(const InputPlan& plan)
{
    if (plan.length < 0)
        throw ConfigError("sim.length: must be >= 0");
    if (!(plan.dither_halfwidth >= 0.0))
        throw ConfigError("input.dither: half-width must be >= 0");

    const auto count = static_cast<std::size_t>(plan.length) + 1;
    std::vector<double> u(count, 0.0);

    if (plan.kind == InputKind::ExplicitSequence) {
        if (plan.sequence.size() < count)
            throw ConfigError("input.sequence: " + std::to_string(plan.sequence.size()) +
                              " values given, " + std::to_string(count) + " required");
        std::copy_n(plan.sequence.begin(), count, u.begin());
        return u;
    }
    if (plan.kind == InputKind::CyclicDither && plan.base_pattern.empty())
        throw ConfigError("input.pattern: cyclic input needs a non-empty pattern");

    Rng rng(plan.seed);
    std::uniform_real_distribution<double> dither(-plan.dither_halfwidth, plan.dither_halfwidth);
    const double h = plan.dither_halfwidth;
    for (std::size_t i = 0; i < count; ++i) {
        const double e = h > 0.0 ? dither(rng) : 0.0;
        if (plan.kind == InputKind::CyclicDither)
            u[i] = plan.base_pattern[i % plan.base_pattern.size()] + e;
        else
            u[i] = e;
    }
    return u;
}

long regressor_history(int memory) noexcept { return std::max(0, memory - 2); }

Matrix build_regressors(std::span<const double> u, int memory, long offset, const RegressorMap& map)
{
    if (memory < 1)
        throw ConfigError("system.memory: regressor memory must be >= 1");
    const long K = static_cast<long>(u.size()) - 1 - offset;
    if (K < 1)
        return Matrix(map ? 0 : memory, 0);
    if (1 + offset - (memory - 1) < 0)
        throw ShapeError("build_regressors: phi_1 reaches u_" +
                         std::to_string(1 + offset - (memory - 1)) + " before the first input");

    std::vector<double> window(static_cast<std::size_t>(memory));
    Matrix phi;
    for (long k = 1; k <= K; ++k) {
        for (int j = 0; j < memory; ++j)
            window[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(k + offset - j)];
        if (map) {
            Vector v = map(window);
            if (k == 1)
                phi.resize(v.size(), K);
            else if (v.size() != phi.rows())
                throw ShapeError("build_regressors: regressor map changed dimension at k = " +
                                 std::to_string(k));
            phi.col(k - 1) = v;
        } else {
            if (k == 1)
                phi.resize(memory, K);
            for (int j = 0; j < memory; ++j)
                phi(j, k - 1) = window[static_cast<std::size_t>(j)];
        }
    }
    return phi;
}

int quantize(std::span<const double> thresholds, double y) noexcept
{
    int s = 0;
    for (double c : thresholds)
        s += (y <= c) ? 1 : 0;
    return s;
}

Observation observe(const SystemModel& system, const Eigen::Ref<const Vector>& phi, double d)
{
    if (phi.size() != system.dim())
        throw ShapeError("observe: regressor has dimension " + std::to_string(phi.size()) +
                         ", system has " + std::to_string(system.dim()));
    Observation obs;
    obs.y = phi.dot(system.theta) + d;
    obs.s = quantize(system.thresholds, obs.y);
    return obs;
}

namespace {

void validate_window(const Matrix& phi, int window)
{
    if (window < phi.rows())
        throw ConfigError("pe.window: window N = " + std::to_string(window) +
                          " is smaller than the regressor dimension n = " +
                          std::to_string(phi.rows()));
    if (phi.cols() < window)
        throw ConfigError("pe.window: sequence of " + std::to_string(phi.cols()) +
                          " regressors is shorter than the window N = " + std::to_string(window));
}

double window_excitation(const Matrix& phi, long start, int window)
{
    const auto block = phi.middleCols(start, window);
    const Matrix gram = (block * block.transpose()) / static_cast<double>(window);
    return linalg::min_eigenvalue(gram);
}

PECertificate finish(const Matrix& phi, int window, double delta, long argmin)
{
    PECertificate cert;
    cert.window = window;
    cert.excitation_level = std::max(delta, 0.0);
    cert.regressor_bound = phi.colwise().norm().maxCoeff();
    // Rank-deficient windows come back as round-off-sized eigenvalues.
    const double floor = 1e-12 * std::max(1.0, cert.regressor_bound * cert.regressor_bound);
    cert.valid = delta > floor;
    cert.worst_window_start = argmin + 1;
    return cert;
}

} // namespace

PECertificate pe_check_serial(const Matrix& phi, int window)
{
    validate_window(phi, window);
    const long windows = phi.cols() - window + 1;
    double best = std::numeric_limits<double>::infinity();
    long argmin = 0;
    for (long start = 0; start < windows; ++start) {
        const double lam = window_excitation(phi, start, window);
        if (lam < best) {
            best = lam;
            argmin = start;
        }
    }
    return finish(phi, window, best, argmin);
}

PECertificate pe_check(const Matrix& phi, int window)
{
    validate_window(phi, window);
    const long windows = phi.cols() - window + 1;
    double best = std::numeric_limits<double>::infinity();
    long argmin = 0;

#pragma omp parallel
    {
        double local_best = std::numeric_limits<double>::infinity();
        long local_arg = 0;
#pragma omp for schedule(static) nowait
        for (long start = 0; start < windows; ++start) {
            const double lam = window_excitation(phi, start, window);
            if (lam < local_best) {
                local_best = lam;
                local_arg = start;
            }
        }
#pragma omp critical(setid_pe_check)
        {
            if (local_best < best || (local_best == best && local_arg < argmin)) {
                best = local_best;
                argmin = local_arg;
            }
        }
    }
    return finish(phi, window, best, argmin);
}

Matrix simulate_regressors(const SystemModel& system, const InputPlan& plan, long K)
{
    if (K < 1)
        throw ConfigError("sim.length: horizon must be >= 1");
    const long history = regressor_history(system.regressor_memory);
    InputPlan sized = plan;
    sized.length = K + history;
    const std::vector<double> u = gen_inputs(sized);
    Matrix phi = build_regressors(u, system.regressor_memory, history);
    if (phi.rows() != system.dim())
        throw ConfigError("system.memory: delay line of length " +
                          std::to_string(system.regressor_memory) +
                          " does not match parameter dimension " + std::to_string(system.dim()));
    return phi;
}

RunTrace simulate_run(const SystemModel& system, const InputPlan& plan, long K,
                      std::uint64_t noise_seed, int pe_window)
{
    RunTrace trace;
    trace.system = std::make_shared<const SystemModel>(system);
    trace.phi = simulate_regressors(system, plan, K);
    trace.y.resize(K);
    trace.s.resize(static_cast<std::size_t>(K));
    trace.input_seed = plan.seed;
    trace.noise_seed = noise_seed;

    NoiseSampler noise(system.noise, noise_seed);
    for (long k = 1; k <= K; ++k) {
        const Observation obs = observe(system, trace.regressor(k), noise());
        trace.y(k - 1) = obs.y;
        trace.s[static_cast<std::size_t>(k - 1)] = obs.s;
    }

    int window = pe_window;
    if (window == 0) {
        window = static_cast<int>(system.dim());
        if (plan.kind == InputKind::CyclicDither)
            window = std::max(window, static_cast<int>(plan.base_pattern.size()));
    }
    if (K >= window)
        trace.pe = pe_check(trace.phi, window);
    else
        trace.pe.window = window;
    return trace;
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path)
{
    std::vector<std::string> header{"k"};
    for (Eigen::Index j = 1; j <= trace.phi.rows(); ++j)
        header.push_back("phi_" + std::to_string(j));
    header.push_back("y");
    header.push_back("s");
    CsvWriter csv(path, header);
    for (long k = 1; k <= trace.length(); ++k) {
        csv << k;
        for (Eigen::Index j = 0; j < trace.phi.rows(); ++j)
            csv << trace.phi(j, k - 1);
        csv << trace.y(k - 1) << trace.s[static_cast<std::size_t>(k - 1)];
        csv.end_row();
    }
}

} // namespace setid
