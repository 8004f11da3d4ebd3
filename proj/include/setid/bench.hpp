#pragma once

#include "setid/estimate.hpp"
#include "setid/model.hpp"
#include "setid/simulate.hpp"
#include "setid/spao.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace setid {

/// Deterministic 64-bit seed for stream `index` derived from `master`.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept;

struct ExperimentConfig {
    SystemModel system;
    InputPlan input;
    StepPolicy policy;
    Vector theta_init;
    long horizon = 0;
    long runs = 1;
    std::uint64_t master_seed = 0;
    /// 0 picks max(n, pattern period).
    int pe_window = 0;
    /// Worker cap for the parallel kernel; 0 leaves it to OpenMP.
    int jobs = 0;
    /// Replications whose full estimate trajectory is kept.
    long saved_traces = 1;
    /// Keep T_k at every grid point for every run (binary sensors only).
    bool record_T = false;
    /// Grid points that must be present besides the geometric ones and K.
    std::vector<long> extra_grid;
    long slope_lo = 0;
    long slope_hi = 0;
    double tail_threshold = 1.0;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

/// Geometric k grid (ratio >= 1.1, at most `cap` points) from `first` to K, plus extras.
std::vector<long> thinning_grid(long first, long K, const std::vector<long>& extra = {},
                                double ratio = 1.1, std::size_t cap = 500);

struct ReplicationResult {
    std::uint64_t noise_seed = 0;
    /// |theta_err_k|^2 at each grid point.
    std::vector<double> err_sq;
    /// sup_{grid[g] <= j <= K} |theta_err_j|^2.
    std::vector<double> suffix_sup;
    /// T_k at each grid point (columns), when recorded.
    Matrix T;
    Vector final_estimate;
    /// Full trajectory, only for the first `saved_traces` runs.
    EstimateTrajectory trajectory;
};

struct EnsembleResult {
    std::vector<long> grid;
    Matrix phi;
    PECertificate pe;
    std::vector<ReplicationResult> runs;
    std::vector<double> final_err;
    std::vector<double> mean_err_sq;
    RateReport rates;
    double wall_seconds = 0.0;
    int threads = 1;

    std::size_t grid_index(long k) const;
};

/// One replication over shared regressors; the kernel both ensemble drivers call.
ReplicationResult run_replication(const ExperimentConfig& config, const Matrix& phi,
                                  const PECertificate& pe, const std::vector<long>& grid,
                                  std::uint64_t noise_seed, bool keep_trajectory);

/// Replications run concurrently with OpenMP; output independent of scheduling.
EnsembleResult monte_carlo(const ExperimentConfig& config);

/// Sequential reference producing the same result as monte_carlo.
EnsembleResult monte_carlo_serial(const ExperimentConfig& config);

struct CrlbResult {
    Matrix covariance;
    double trace = 0.0;
    long k = 0;
    /// k * trace, the quantity comparable with k * E|theta_err_k|^2.
    double k_trace = 0.0;
};

/**
 * Inverse Fisher information of theta from binary observations of the
 * columns of `phi`: (sum_i f_i^2 / (F_i (1 - F_i)) phi_i phi_i')^{-1}.
 */
CrlbResult crlb(const Matrix& phi, const Vector& theta, const NoiseModel& noise,
                const std::vector<double>& thresholds);

/// theta from phase averages: Phi theta = C - F^{-1}(mean s of each phase), least squares.
Vector baseline_from_phase_means(const Matrix& phase_regressors, const std::vector<double>& means,
                                 double threshold, const NoiseModel& noise);

/**
 * Empirical-measurement estimate for a p-periodic trace; row j of
 * `phase_regressors` must equal phi_k for every k with (k - 1) mod p == j.
 */
Vector empirical_measurement_baseline(const RunTrace& trace, int period,
                                      const Matrix& phase_regressors);

/// trace_run<i>.csv, ensemble.csv, rates.csv, rates_summary.json, summary.txt
void write_experiment(const EnsembleResult& result, const ExperimentConfig& config,
                      const std::filesystem::path& dir);

} // namespace setid
