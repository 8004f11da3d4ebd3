#pragma once

#include "setid/bench.hpp"
#include "setid/estimate.hpp"
#include "setid/simulate.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace setid {

/**
 * Flat key/value tree with dotted keys, read from INI-style text:
 *
 *     # comment
 *     [noise]
 *     family = "gaussian"
 *     sigma2 = 25
 *     est.beta = 20
 *
 * Keys are checked against a fixed schema and numeric values are
 * range-checked when set. Lists are comma separated, optionally in [].
 */
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    /// Sorted `key = value` lines; parse(emit()) reproduces the tree.
    std::string emit() const;

    /// Validates key and value; throws ConfigError naming the key.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    bool operator==(const Config&) const = default;

private:
    std::map<std::string, std::string> values_;
};

/// Every key the schema accepts.
const std::vector<std::string>& known_config_keys();

/// The reference experiment: theta = (3, -1), C = 1, Gaussian sigma^2 = 25,
/// inputs (-1, 2, 0) cycled with +-0.1 dither, beta = 20, k0 = 20,
/// theta_hat_init = (1, 1), 200 replications.
Config reference_preset();

NoiseModel build_noise(const Config& cfg, const std::filesystem::path& base_dir = {});
SystemModel build_system(const Config& cfg, const std::filesystem::path& base_dir = {});
InputPlan build_input(const Config& cfg);
StepPolicy build_policy(const Config& cfg);
Vector build_initial_estimate(const Config& cfg, Eigen::Index dim);
ExperimentConfig build_experiment(const Config& cfg, const std::filesystem::path& base_dir = {});

} // namespace setid
