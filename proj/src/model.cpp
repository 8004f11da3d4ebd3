#include "setid/model.hpp"

#include "setid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace setid {

SystemModel::SystemModel(Vector theta_, std::vector<double> thresholds_, NoiseModel noise_,
                         int regressor_memory_)
    : theta(std::move(theta_)), thresholds(std::move(thresholds_)), noise(std::move(noise_)),
      regressor_memory(regressor_memory_)
{
    if (theta.size() < 1)
        throw ConfigError("system.theta: parameter dimension must be >= 1");
    if (!theta.allFinite())
        throw ConfigError("system.theta: entries must be finite");
    if (regressor_memory < 1)
        throw ConfigError("system.memory: regressor memory must be >= 1");
    if (thresholds.empty())
        throw ConfigError("system.thresholds: at least one threshold is required");
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
        if (!std::isfinite(thresholds[j]))
            throw ConfigError("system.thresholds: entries must be finite");
        if (j > 0 && !(thresholds[j] > thresholds[j - 1]))
            throw ConfigError("system.thresholds: thresholds must be strictly ascending");
    }
}

} // namespace setid
