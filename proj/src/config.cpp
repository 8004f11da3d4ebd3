#include "setid/config.hpp"

#include "setid/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace setid {

namespace {

enum class ValueType { Real, Integer, RealList, Text };

struct KeySpec {
    const char* key;
    ValueType type;
    double min;
    double max;
    bool min_exclusive;
    std::vector<std::string> choices;
};

constexpr double inf = std::numeric_limits<double>::infinity();

const std::vector<KeySpec>& schema()
{
    static const std::vector<KeySpec> specs = {
        {"system.theta", ValueType::RealList, -inf, inf, false, {}},
        {"system.thresholds", ValueType::RealList, -inf, inf, false, {}},
        {"system.memory", ValueType::Integer, 1, 1e6, false, {}},
        {"noise.family", ValueType::Text, 0, 0, false, {"gaussian", "laplacian", "student_t", "custom"}},
        {"noise.sigma2", ValueType::Real, 0, inf, false, {}},
        {"noise.dof", ValueType::Real, 2, inf, true, {}},
        {"noise.table_path", ValueType::Text, 0, 0, false, {}},
        {"input.kind", ValueType::Text, 0, 0, false, {"cyclic_dither", "iid_uniform", "explicit"}},
        {"input.pattern", ValueType::RealList, -inf, inf, false, {}},
        {"input.dither", ValueType::Real, 0, inf, false, {}},
        {"input.seed", ValueType::Integer, 0, 9.2e18, false, {}},
        {"input.sequence", ValueType::RealList, -inf, inf, false, {}},
        {"sim.length", ValueType::Integer, 1, 1e12, false, {}},
        {"sim.noise_seed", ValueType::Integer, 0, 9.2e18, false, {}},
        {"pe.window", ValueType::Integer, 1, 1e9, false, {}},
        {"est.policy", ValueType::Text, 0, 0, false, {"harmonic", "normalized", "adaptive"}},
        {"est.beta", ValueType::Real, 0, inf, true, {}},
        {"est.beta_lo", ValueType::Real, 0, inf, true, {}},
        {"est.beta_hi", ValueType::Real, 0, inf, true, {}},
        {"est.margin", ValueType::Real, 1, inf, true, {}},
        {"est.k0", ValueType::Integer, 0, 1e12, false, {}},
        {"est.init", ValueType::RealList, -inf, inf, false, {}},
        {"mc.runs", ValueType::Integer, 1, 1e9, false, {}},
        {"mc.seed", ValueType::Integer, 0, 9.2e18, false, {}},
        {"mc.jobs", ValueType::Integer, 0, 4096, false, {}},
        {"mc.save_traces", ValueType::Integer, 0, 1e9, false, {}},
        {"mc.grid_extra", ValueType::RealList, 1, 1e12, false, {}},
        {"rates.slope_lo", ValueType::Integer, 0, 1e12, false, {}},
        {"rates.slope_hi", ValueType::Integer, 0, 1e12, false, {}},
        {"rates.tail_threshold", ValueType::Real, 0, inf, false, {}},
        {"out.dir", ValueType::Text, 0, 0, false, {}},
    };
    return specs;
}

const KeySpec& spec_for(const std::string& key)
{
    for (const KeySpec& s : schema())
        if (key == s.key)
            return s;
    throw ConfigError(key + ": unknown configuration key");
}

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s)
{
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

double parse_real(const std::string& key, std::string_view text)
{
    const std::string t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": '" + t + "' is not a number");
    return value;
}

std::vector<double> parse_list(const std::string& key, std::string_view text)
{
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[' && t.back() == ']')
        t = t.substr(1, t.size() - 2);
    std::vector<double> out;
    if (trim(t).empty())
        return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_real(key, item));
    return out;
}

void check_range(const KeySpec& spec, const std::string& key, double v)
{
    const bool below = spec.min_exclusive ? !(v > spec.min) : !(v >= spec.min);
    if (below || !(v <= spec.max) || std::isnan(v)) {
        std::ostringstream msg;
        msg << key << ": value " << v << " outside " << (spec.min_exclusive ? "(" : "[")
            << spec.min << ", " << spec.max << "]";
        throw ConfigError(msg.str());
    }
}

void validate_value(const KeySpec& spec, const std::string& key, const std::string& value)
{
    switch (spec.type) {
    case ValueType::Real:
        check_range(spec, key, parse_real(key, value));
        break;
    case ValueType::Integer: {
        const double v = parse_real(key, value);
        if (v != std::floor(v))
            throw ConfigError(key + ": '" + value + "' is not an integer");
        check_range(spec, key, v);
        break;
    }
    case ValueType::RealList:
        for (double v : parse_list(key, value)) {
            if (!std::isfinite(v))
                throw ConfigError(key + ": list entries must be finite");
            check_range(spec, key, v);
        }
        break;
    case ValueType::Text:
        if (!spec.choices.empty() &&
            std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end())
            throw ConfigError(key + ": '" + value + "' is not one of the accepted values");
        break;
    }
}

} // namespace

const std::vector<std::string>& known_config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const KeySpec& s : schema())
            k.emplace_back(s.key);
        return k;
    }();
    return keys;
}

void Config::set(const std::string& key, const std::string& raw)
{
    const KeySpec& spec = spec_for(key);
    const std::string value = unquote(trim(raw));
    validate_value(spec, key, value);
    values_[key] = value;
}

Config Config::parse(std::string_view text)
{
    Config cfg;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (!section.empty())
            key = section + "." + key;
        cfg.set(key, t.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Config::emit() const
{
    std::string out;
    for (const auto& [key, value] : values_)
        out += key + " = " + value + "\n";
    return out;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_real(key, it->second);
}

long Config::get_long(const std::string& key, long fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : static_cast<long>(parse_real(key, it->second));
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_list(key, it->second);
}

Config reference_preset()
{
    Config cfg;
    cfg.set("system.theta", "3, -1");
    cfg.set("system.thresholds", "1");
    cfg.set("system.memory", "2");
    cfg.set("noise.family", "gaussian");
    cfg.set("noise.sigma2", "25");
    cfg.set("input.kind", "cyclic_dither");
    cfg.set("input.pattern", "-1, 2, 0");
    cfg.set("input.dither", "0.1");
    cfg.set("input.seed", "1");
    cfg.set("sim.length", "100000");
    cfg.set("sim.noise_seed", "2");
    cfg.set("pe.window", "3");
    cfg.set("est.policy", "harmonic");
    cfg.set("est.beta", "20");
    cfg.set("est.k0", "20");
    cfg.set("est.init", "1, 1");
    cfg.set("mc.runs", "200");
    cfg.set("mc.seed", "20");
    cfg.set("out.dir", "out");
    return cfg;
}

NoiseModel build_noise(const Config& cfg, const std::filesystem::path& base_dir)
{
    const NoiseFamily family = parse_noise_family(cfg.get_string("noise.family", "gaussian"));
    const double sigma2 = cfg.get_double("noise.sigma2", 1.0);
    switch (family) {
    case NoiseFamily::Gaussian: return NoiseModel::gaussian(sigma2);
    case NoiseFamily::Laplacian: return NoiseModel::laplacian(sigma2);
    case NoiseFamily::StudentT:
        if (!cfg.has("noise.dof"))
            throw ConfigError("noise.dof: required for student_t");
        return NoiseModel::student_t(cfg.get_double("noise.dof", 0.0), sigma2);
    case NoiseFamily::TabulatedCustom: {
        if (!cfg.has("noise.table_path"))
            throw ConfigError("noise.table_path: required for custom noise");
        std::filesystem::path path = cfg.get_string("noise.table_path", "");
        if (path.is_relative() && !base_dir.empty())
            path = base_dir / path;
        return NoiseModel::tabulated_from_csv(path);
    }
    }
    throw ConfigError("noise.family: unsupported");
}

SystemModel build_system(const Config& cfg, const std::filesystem::path& base_dir)
{
    if (!cfg.has("system.theta"))
        throw ConfigError("system.theta: required");
    const std::vector<double> theta = cfg.get_list("system.theta", {});
    Vector t = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const long memory = cfg.get_long("system.memory", static_cast<long>(theta.size()));
    return SystemModel(t, cfg.get_list("system.thresholds", {0.0}), build_noise(cfg, base_dir),
                       static_cast<int>(memory));
}

InputPlan build_input(const Config& cfg)
{
    InputPlan plan;
    const std::string kind = cfg.get_string("input.kind", "cyclic_dither");
    if (kind == "cyclic_dither")
        plan.kind = InputKind::CyclicDither;
    else if (kind == "iid_uniform")
        plan.kind = InputKind::IIDUniform;
    else
        plan.kind = InputKind::ExplicitSequence;
    plan.base_pattern = cfg.get_list("input.pattern", plan.base_pattern);
    plan.dither_halfwidth = cfg.get_double("input.dither", 0.0);
    plan.seed = static_cast<std::uint64_t>(cfg.get_long("input.seed", 0));
    plan.sequence = cfg.get_list("input.sequence", {});
    plan.length = cfg.get_long("sim.length", 1000);
    if (plan.kind == InputKind::ExplicitSequence && !cfg.has("input.sequence"))
        throw ConfigError("input.sequence: required for explicit inputs");
    if (plan.kind == InputKind::CyclicDither && plan.base_pattern.empty())
        throw ConfigError("input.pattern: must not be empty");
    return plan;
}

StepPolicy build_policy(const Config& cfg)
{
    StepPolicy policy;
    policy.kind = parse_step_kind(cfg.get_string("est.policy", "harmonic"));
    policy.beta = cfg.get_double("est.beta", 1.0);
    policy.beta_lo = cfg.get_double("est.beta_lo", policy.beta);
    policy.beta_hi = cfg.get_double("est.beta_hi", policy.beta);
    policy.safety_margin = cfg.get_double("est.margin", 1.1);
    policy.warm_start = cfg.get_long("est.k0", 0);
    policy.validate();
    return policy;
}

Vector build_initial_estimate(const Config& cfg, Eigen::Index dim)
{
    if (!cfg.has("est.init"))
        return Vector::Zero(dim);
    const std::vector<double> init = cfg.get_list("est.init", {});
    if (static_cast<Eigen::Index>(init.size()) != dim)
        throw ConfigError("est.init: " + std::to_string(init.size()) + " entries, expected " +
                          std::to_string(dim));
    return Eigen::Map<const Vector>(init.data(), dim);
}

ExperimentConfig build_experiment(const Config& cfg, const std::filesystem::path& base_dir)
{
    SystemModel system = build_system(cfg, base_dir);
    const Eigen::Index n = system.dim();
    ExperimentConfig exp{.system = std::move(system)};
    exp.input = build_input(cfg);
    exp.policy = build_policy(cfg);
    exp.theta_init = build_initial_estimate(cfg, n);
    exp.horizon = cfg.get_long("sim.length", 1000);
    exp.runs = cfg.get_long("mc.runs", 1);
    exp.master_seed = static_cast<std::uint64_t>(cfg.get_long("mc.seed", 0));
    exp.pe_window = static_cast<int>(cfg.get_long("pe.window", 0));
    exp.jobs = static_cast<int>(cfg.get_long("mc.jobs", 0));
    exp.saved_traces = cfg.get_long("mc.save_traces", 1);
    for (double k : cfg.get_list("mc.grid_extra", {}))
        exp.extra_grid.push_back(static_cast<long>(k));
    exp.slope_lo = cfg.get_long("rates.slope_lo", 0);
    exp.slope_hi = cfg.get_long("rates.slope_hi", 0);
    exp.tail_threshold = cfg.get_double("rates.tail_threshold", 1.0);
    exp.output_dir = cfg.get_string("out.dir", "out");
    exp.validate();
    return exp;
}

} // namespace setid
