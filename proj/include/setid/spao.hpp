#pragma once

#include "setid/estimate.hpp"
#include "setid/model.hpp"
#include "setid/simulate.hpp"

#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace setid {

/**
 * Running average T_k = (1/k) sum_{i<=k} beta phi_i (F_i - s_i) of the
 * observation noise, updated in O(n) per step as
 * T_k = ((k-1)/k) T_{k-1} + (beta/k) phi_k (F_k - s_k).
 */
class NoiseAverage {
public:
    NoiseAverage(double beta, Eigen::Index dim);

    /// Adds step k+1 with F = F(C - phi' theta) and returns T at that step.
    const Vector& push(const Eigen::Ref<const Vector>& phi, double F, int s);

    long k() const noexcept { return k_; }
    const Vector& value() const noexcept { return T_; }

private:
    double beta_;
    long k_ = 0;
    Vector T_;
};

/// Column k-1 holds T_k for k = 1..K. Binary sensors only.
Matrix compute_T(const RunTrace& trace, double beta, const Vector& theta);

/// theta_err = psi + T at every recorded step.
struct SpaoTrace {
    long first_k = 0;
    Matrix T;
    Matrix psi;
    Matrix theta_err;

    long last_k() const noexcept { return first_k + psi.cols() - 1; }
};

/// psi_k = (theta_hat_k - theta) - T_k over the trajectory's range (T_0 = 0).
SpaoTrace compute_psi(const EstimateTrajectory& estimates, const Matrix& T, const Vector& theta);

/**
 * Largest |psi_k - rhs_k| where rhs_k is the SPAO recursion
 *   psi_{k-1} + (beta phi_k / k)(F(C - phi'theta - phi'psi_{k-1} - phi'T_{k-1}) - F_k) + T_{k-1}/k
 * evaluated from the stored psi and T, over k = first_k+1..last_k.
 */
double psi_recursion_residual(const SpaoTrace& spao, const RunTrace& trace, double beta);

/// psi_k by iterating the SPAO recursion from psi at first_k, independent of theta_hat.
Matrix propagate_psi(const RunTrace& trace, double beta, const Matrix& T, long first_k,
                     const Vector& psi_first);

/// One step of a recursive set-valued identifier in the generalized form
/// theta_hat_k = theta_hat_{k-1} + rho_k v_k (h_k - s_k).
struct GeneralizedStep {
    std::variant<double, Matrix> rho;
    Vector v;
    Vector phi;
    double threshold = 0.0;
    int s = 0;
    /// h(phi_k, theta_hat_{k-1}) as predicted by the algorithm.
    double predicted = 0.0;
    Vector theta_hat;
};

struct GeneralizedSpao {
    Matrix T;
    Matrix psi;
    double max_residual = 0.0;
};

/**
 * T_k = rho_k sum_{i<=k} v_i (F(C_i - phi_i' theta) - s_i), psi_k = theta_err_k - T_k,
 * and the residual of the generalized psi recursion. theta_hat_0 is the
 * estimate before step 1. Scalar and matrix gains cannot be mixed.
 */
GeneralizedSpao spao_generalized(std::span<const GeneralizedStep> steps,
                                 const Vector& theta_hat_0, const Vector& theta,
                                 const NoiseModel& noise);

/**
 * f_lower(x): right-limit infimum of f over [C - z, C + z] with
 * z = M * theta_norm + x. Nonincreasing and right-continuous in x.
 */
double lower_density_bound(const NoiseModel& noise, double threshold, double regressor_bound,
                           double theta_norm, double x);

enum class RateRegime { Above, Critical, Below };

std::string_view to_string(RateRegime regime);

struct RateCoefficient {
    double eta = 0.0;
    RateRegime regime = RateRegime::Below;
};

/// eta = beta * delta * f_lower, classified against 1/2.
RateCoefficient rate_coefficient(double beta, double delta, double f_lower);

/// Least-squares slope of log(value) against log(k) over lo <= k <= hi.
double fit_loglog_slope(std::span<const long> ks, std::span<const double> values, long lo, long hi);

struct TailPoint {
    long k = 0;
    double threshold = 0.0;
    double probability = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    long exceed = 0;
    long runs = 0;
    /// Fewer than 30 runs: the estimate is produced but not meant for reporting.
    bool reportable = false;
};

struct RateReport {
    std::vector<long> k;
    /// Per run: k |theta_err_k|^2 / ln ln k, NaN where k < 3.
    std::vector<std::vector<double>> as_series;
    std::vector<double> mean_err_sq;
    std::vector<double> mean_k_err_sq;
    double ms_slope = 0.0;
    long slope_lo = 0;
    long slope_hi = 0;
    double eta = 0.0;
    double f_lower = 0.0;
    RateRegime regime = RateRegime::Below;
    std::vector<TailPoint> tail_points;
};

/// k |e|^2 / ln ln k for k >= 3, NaN otherwise.
double as_rate_value(long k, double err_sq);

/**
 * A.s. series per run, ensemble mean of |theta_err_k|^2 and k times it, and
 * the log-log slope of the mean over [window_lo, window_hi] (defaults
 * [K/100, K] when both are 0). Below 10 points in the window this throws
 * StatisticsError, or leaves the slope NaN when `strict` is false.
 */
RateReport rate_diagnostics(std::span<const long> ks,
                            const std::vector<std::vector<double>>& err_sq_per_run,
                            long window_lo = 0, long window_hi = 0, bool strict = true);

/// Wilson score interval at 95%.
TailPoint wilson_tail(long exceed, long runs);

/// Fraction of runs whose sup_{k<=j<=K} |theta_err_j|^2 >= threshold.
TailPoint tail_estimate(std::span<const double> suffix_sup_per_run, long k, double threshold);

/// Same from full per-run error traces that start at first_k.
TailPoint tail_estimate(const std::vector<std::vector<double>>& err_traces, long first_k, long k,
                        double threshold);

/// CSV `k,as_series,mean_k_err_sq` for one run's a.s. series.
void write_rates_csv(const RateReport& report, std::size_t run,
                     const std::filesystem::path& path);

/// `{"eta":..,"f_lower":..,"ms_slope":..,"regime":..}`
std::string rate_summary_json(const RateReport& report);

} // namespace setid
