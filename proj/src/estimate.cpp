#include "setid/estimate.hpp"

#include "setid/csv.hpp"
#include "setid/errors.hpp"
#include "setid/spao.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace setid {

std::string_view to_string(StepKind kind)
{
    switch (kind) {
    case StepKind::Harmonic: return "harmonic";
    case StepKind::Normalized: return "normalized";
    case StepKind::AdaptiveBeta: return "adaptive";
    }
    return "unknown";
}

StepKind parse_step_kind(std::string_view name)
{
    if (name == "harmonic") return StepKind::Harmonic;
    if (name == "normalized") return StepKind::Normalized;
    if (name == "adaptive") return StepKind::AdaptiveBeta;
    throw ConfigError("est.policy: unknown step policy '" + std::string(name) + "'");
}

void StepPolicy::validate() const
{
    if (warm_start < 0)
        throw ConfigError("est.k0: warm start must be >= 0");
    switch (kind) {
    case StepKind::Harmonic:
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw ConfigError("est.beta: must be finite and > 0");
        break;
    case StepKind::Normalized:
        if (!(beta_lo > 0.0) || !(beta_lo <= beta_hi) || !std::isfinite(beta_hi))
            throw ConfigError("est.beta_lo/est.beta_hi: need 0 < beta_lo <= beta_hi < inf");
        break;
    case StepKind::AdaptiveBeta:
        if (!(safety_margin > 1.0) || !std::isfinite(safety_margin))
            throw ConfigError("est.margin: safety margin must be finite and > 1");
        break;
    }
}

EstimatorState EstimatorState::start(const SystemModel& system, const StepPolicy& policy,
                                     Vector theta_init, const PECertificate& pe)
{
    policy.validate();
    if (theta_init.size() != system.dim())
        throw ShapeError("est.init: initial estimate has dimension " +
                         std::to_string(theta_init.size()) + ", system has " +
                         std::to_string(system.dim()));
    if (policy.kind == StepKind::AdaptiveBeta && !(pe.valid && pe.excitation_level > 0.0))
        throw ConfigError("est.policy: adaptive step size needs a valid excitation certificate");
    EstimatorState state;
    state.theta_hat = std::move(theta_init);
    state.k = policy.warm_start;
    state.policy = policy;
    state.thresholds = system.thresholds;
    state.noise = std::make_shared<const NoiseModel>(system.noise);
    state.pe = pe;
    return state;
}

double expected_output(std::span<const double> thresholds, const Eigen::Ref<const Vector>& phi,
                       const Eigen::Ref<const Vector>& theta_hat, const NoiseModel& noise)
{
    const double mean = phi.dot(theta_hat);
    double total = 0.0;
    for (double c : thresholds)
        total += noise.cdf(c - mean);
    return total;
}

double step_size(const StepPolicy& policy, long k, const Eigen::Ref<const Vector>& phi,
                 const EstimatorState& state)
{
    if (k <= policy.warm_start)
        throw ConfigError("step_size: k = " + std::to_string(k) + " is not past the warm start " +
                          std::to_string(policy.warm_start));
    const double kd = static_cast<double>(k);
    switch (policy.kind) {
    case StepKind::Harmonic:
        return policy.beta / kd;
    case StepKind::Normalized: {
        const double beta_k = std::clamp(policy.beta, policy.beta_lo, policy.beta_hi);
        return beta_k / (1.0 + state.normalizer + phi.squaredNorm());
    }
    case StepKind::AdaptiveBeta: {
        const double radius = state.theta_hat.norm();
        double floor = std::numeric_limits<double>::infinity();
        for (double c : state.thresholds)
            floor = std::min(floor, lower_density_bound(*state.noise, c, state.pe.regressor_bound,
                                                        radius, 0.0));
        if (!(floor > 0.0))
            throw NumericalFault("adaptive step size at k = " + std::to_string(k) +
                                 ": density floor is zero, beta_k would be unbounded");
        const double beta_k =
            policy.safety_margin / (2.0 * state.pe.excitation_level * floor);
        return beta_k / kd;
    }
    }
    return 0.0;
}

void sa_update(EstimatorState& state, const Eigen::Ref<const Vector>& phi, int s)
{
    const long k = state.k + 1;
    const double rho = step_size(state.policy, k, phi, state);
    const double predicted = expected_output(state.thresholds, phi, state.theta_hat, *state.noise);
    state.theta_hat.noalias() += (rho * (predicted - static_cast<double>(s))) * phi;
    state.normalizer += phi.squaredNorm();
    state.k = k;
    if (!state.theta_hat.allFinite())
        throw NumericalFault("estimate became non-finite at k = " + std::to_string(k));
}

EstimatorState sa_step(EstimatorState state, const Eigen::Ref<const Vector>& phi, int s)
{
    sa_update(state, phi, s);
    return state;
}

EstimateTrajectory run_estimator(const RunTrace& trace, const StepPolicy& policy,
                                 const Vector& theta_init, bool theta_known)
{
    if (trace.length() == 0)
        throw ShapeError("run_estimator: empty trace");
    if (!trace.system)
        throw ShapeError("run_estimator: trace carries no system model");
    const SystemModel& system = *trace.system;
    const long K = trace.length();
    if (policy.warm_start > K)
        throw ConfigError("est.k0: warm start " + std::to_string(policy.warm_start) +
                          " exceeds the horizon " + std::to_string(K));

    EstimatorState state = EstimatorState::start(system, policy, theta_init, trace.pe);
    EstimateTrajectory traj;
    traj.first_k = policy.warm_start;
    traj.theta_hat.resize(system.dim(), K - policy.warm_start + 1);
    traj.theta_hat.col(0) = state.theta_hat;
    if (theta_known) {
        traj.err_sq.reserve(static_cast<std::size_t>(traj.theta_hat.cols()));
        traj.err_sq.push_back((state.theta_hat - system.theta).squaredNorm());
    }
    for (long k = policy.warm_start + 1; k <= K; ++k) {
        sa_update(state, trace.regressor(k), trace.s[static_cast<std::size_t>(k - 1)]);
        traj.theta_hat.col(k - policy.warm_start) = state.theta_hat;
        if (theta_known)
            traj.err_sq.push_back((state.theta_hat - system.theta).squaredNorm());
    }
    return traj;
}

void write_trajectory_csv(const EstimateTrajectory& traj, const std::filesystem::path& path)
{
    std::vector<std::string> header{"k"};
    for (Eigen::Index j = 1; j <= traj.theta_hat.rows(); ++j)
        header.push_back("theta_hat_" + std::to_string(j));
    const bool with_err = !traj.err_sq.empty();
    if (with_err)
        header.push_back("err_sq");
    CsvWriter csv(path, header);
    for (Eigen::Index c = 0; c < traj.theta_hat.cols(); ++c) {
        csv << traj.first_k + static_cast<long>(c);
        for (Eigen::Index j = 0; j < traj.theta_hat.rows(); ++j)
            csv << traj.theta_hat(j, c);
        if (with_err)
            csv << traj.err_sq[static_cast<std::size_t>(c)];
        csv.end_row();
    }
}

} // namespace setid
