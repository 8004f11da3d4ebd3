#pragma once

#include "setid/model.hpp"
#include "setid/simulate.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace setid {

enum class StepKind { Harmonic, Normalized, AdaptiveBeta };

/**
 * Step-size rule rho_k.
 *
 *   Harmonic:     beta / k
 *   Normalized:   clamp(beta, beta_lo, beta_hi) / (1 + sum_{i<=k} |phi_i|^2)
 *   AdaptiveBeta: beta_k / k, beta_k = safety_margin / (2 delta f_hat_k)
 *
 * where f_hat_k is the density floor over [C - M|theta_hat|, C + M|theta_hat|]
 * using the certified delta and M.
 *
 * The initial estimate is theta_hat at k = warm_start; updates run for
 * k = warm_start + 1, ..., K and earlier observations are ignored.
 */
struct StepPolicy {
    StepKind kind = StepKind::Harmonic;
    double beta = 1.0;
    double beta_lo = 1.0;
    double beta_hi = 1.0;
    double safety_margin = 1.1;
    long warm_start = 0;

    void validate() const;
};

std::string_view to_string(StepKind kind);
StepKind parse_step_kind(std::string_view name);

struct EstimatorState {
    Vector theta_hat;
    long k = 0;
    StepPolicy policy;
    /// Running sum of |phi_i|^2 over the updates applied so far.
    double normalizer = 0.0;
    std::vector<double> thresholds;
    std::shared_ptr<const NoiseModel> noise;
    /// delta and M used by AdaptiveBeta.
    PECertificate pe;

    static EstimatorState start(const SystemModel& system, const StepPolicy& policy,
                                Vector theta_init, const PECertificate& pe = {});
};

/// sum_j F(C_j - phi' theta_hat): the mean of s given theta_hat.
double expected_output(std::span<const double> thresholds,
                       const Eigen::Ref<const Vector>& phi,
                       const Eigen::Ref<const Vector>& theta_hat, const NoiseModel& noise);

/// rho_k for the update that turns state (at k-1) into k.
double step_size(const StepPolicy& policy, long k, const Eigen::Ref<const Vector>& phi,
                 const EstimatorState& state);

/// In-place form of sa_step; throws NumericalFault on a non-finite estimate.
void sa_update(EstimatorState& state, const Eigen::Ref<const Vector>& phi, int s);

/// theta_hat_k = theta_hat_{k-1} + rho_k phi_k (F_hat_k - s_k), no projection.
EstimatorState sa_step(EstimatorState state, const Eigen::Ref<const Vector>& phi, int s);

struct EstimateTrajectory {
    /// Step index of column 0 (the warm start).
    long first_k = 0;
    /// Column i holds theta_hat at k = first_k + i.
    Matrix theta_hat;
    /// |theta_hat_k - theta|^2 per column; empty when theta is unknown.
    std::vector<double> err_sq;

    long last_k() const noexcept { return first_k + theta_hat.cols() - 1; }
};

/// Folds sa_update over k = warm_start + 1..K of the trace.
EstimateTrajectory run_estimator(const RunTrace& trace, const StepPolicy& policy,
                                 const Vector& theta_init, bool theta_known = true);

/// CSV `k,theta_hat_1..theta_hat_n[,err_sq]`.
void write_trajectory_csv(const EstimateTrajectory& traj, const std::filesystem::path& path);

} // namespace setid
