#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "llc/experiment/sweep.hpp"
#include "llc/samplers/config.hpp"
#include "llc/samplers/langevin.hpp"
#include "llc/training/sgd.hpp"

namespace llc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Config files are INI text:
//
//   # comment
//   [sampler]
//   epsilon = 1e-4
//   preconditioner = 1,1,0.25
//
// Sections and keys are case-sensitive; unknown sections or keys are errors.
// Lists are comma-separated. See README.md for every key.

using ConfigTree = boost::property_tree::ptree;

inline ConfigTree read_config(std::istream& is) {
    ConfigTree tree;
    try {
        boost::property_tree::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return tree;
}

inline ConfigTree load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    return read_config(in);
}

inline std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item.substr(b), &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + item + "'");
        }
        if (item.find_first_not_of(" \t", b + used) != std::string::npos) throw ConfigError("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(text)) {
        if (v < 0 || v != std::floor(v)) throw ConfigError("expected a non-negative integer, got " + std::to_string(v));
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

namespace detail {

inline void check_keys(const ConfigTree& section, const std::string& name, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : section) {
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + name + "]");
    }
}

template <class T>
T get_value(const ConfigTree& section, const std::string& section_name, const std::string& key, T fallback) {
    const auto child = section.get_child_optional(key);
    if (!child) return fallback;
    try {
        return child->get_value<T>();
    } catch (const boost::property_tree::ptree_bad_data&) {
        throw ConfigError("config: bad value for " + section_name + "." + key + ": '" + child->data() + "'");
    }
}

}  // namespace detail

/// Sampler keys: epsilon, gamma, beta, steps, burnin_frac, batch_size, chains,
/// seed, preconditioner, mala_probe_stride, plus precondition_mode,
/// probe_source, tally_full_batch and sampler (sgld | mala).
struct SamplerSection {
    SamplerConfig config;
    SamplerKind kind = SamplerKind::sgld;
};

inline SamplerSection apply_sampler_section(const ConfigTree& tree, SamplerSection base = {}) {
    const auto section = tree.get_child_optional("sampler");
    if (!section) return base;
    static const std::set<std::string> keys{"epsilon", "gamma", "beta", "steps", "burnin_frac", "batch_size", "chains", "seed",
                                            "preconditioner", "mala_probe_stride", "precondition_mode", "probe_source",
                                            "tally_full_batch", "sampler"};
    detail::check_keys(*section, "sampler", keys);
    auto& c = base.config;
    const std::string s = "sampler";
    c.epsilon = detail::get_value(*section, s, "epsilon", c.epsilon);
    c.gamma = detail::get_value(*section, s, "gamma", c.gamma);
    if (section->count("beta")) c.beta = detail::get_value(*section, s, "beta", 0.0);
    c.steps = detail::get_value(*section, s, "steps", c.steps);
    c.burnin_frac = detail::get_value(*section, s, "burnin_frac", c.burnin_frac);
    c.batch_size = detail::get_value(*section, s, "batch_size", c.batch_size);
    c.chains = detail::get_value(*section, s, "chains", c.chains);
    c.seed = detail::get_value(*section, s, "seed", c.seed);
    c.mala_probe_stride = detail::get_value(*section, s, "mala_probe_stride", c.mala_probe_stride);
    c.tally_full_batch = detail::get_value(*section, s, "tally_full_batch", c.tally_full_batch);
    if (auto v = section->get_optional<std::string>("preconditioner")) c.preconditioner = parse_double_list(*v);
    try {
        if (auto v = section->get_optional<std::string>("precondition_mode")) c.precondition_mode = parse_precondition_mode(*v);
        if (auto v = section->get_optional<std::string>("probe_source")) c.probe_source = parse_probe_source(*v);
        if (auto v = section->get_optional<std::string>("sampler")) base.kind = parse_sampler_kind(*v);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return base;
}

/// Train keys: learning_rate, momentum, batch_size, steps, seed.
inline TrainConfig apply_train_section(const ConfigTree& tree, TrainConfig base = {}) {
    const auto section = tree.get_child_optional("train");
    if (!section) return base;
    detail::check_keys(*section, "train", {"learning_rate", "momentum", "batch_size", "steps", "seed"});
    const std::string s = "train";
    base.learning_rate = detail::get_value(*section, s, "learning_rate", base.learning_rate);
    base.momentum = detail::get_value(*section, s, "momentum", base.momentum);
    base.batch_size = detail::get_value(*section, s, "batch_size", base.batch_size);
    base.steps = detail::get_value(*section, s, "steps", base.steps);
    base.seed = detail::get_value(*section, s, "seed", base.seed);
    return base;
}

/// Sweep keys: tier, runs, evaluate_at, seed, layers (lo,hi), widths (lo,hi),
/// epsilon, steps, n, batch_size, gamma, beta, burnin_frac, chains,
/// mala_probe_stride, probe_source, weight_scale, input_range, truncate_prob.
/// `tier` is applied first so the remaining keys override its defaults.
inline SweepConfig apply_sweep_section(const ConfigTree& tree, SweepConfig base = {}) {
    base.train = apply_train_section(tree, base.train);
    const auto section = tree.get_child_optional("sweep");
    if (!section) return base;
    detail::check_keys(*section, "sweep",
                       {"tier", "runs", "evaluate_at", "seed", "layers", "widths", "epsilon", "steps", "n", "batch_size", "gamma",
                        "beta", "burnin_frac", "chains", "mala_probe_stride", "probe_source", "weight_scale", "input_range",
                        "truncate_prob"});
    const std::string s = "sweep";
    auto pair = [&](const std::string& key, std::size_t& lo, std::size_t& hi) {
        if (auto v = section->get_optional<std::string>(key)) {
            const auto r = parse_size_list(*v);
            if (r.size() != 2) throw ConfigError("config: sweep." + key + " expects lo,hi");
            lo = r[0];
            hi = r[1];
        }
    };
    try {
        if (auto v = section->get_optional<std::string>("tier")) base.tier = sweep_tier(*v);
        if (auto v = section->get_optional<std::string>("evaluate_at")) base.evaluate_at = parse_evaluate_at(*v);
        if (auto v = section->get_optional<std::string>("probe_source")) base.probe_source = parse_probe_source(*v);
        if (auto v = section->get_optional<std::string>("weight_scale")) base.weight_scale = parse_weight_scale(*v);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    pair("layers", base.tier.layers_lo, base.tier.layers_hi);
    pair("widths", base.tier.width_lo, base.tier.width_hi);
    base.tier.runs = detail::get_value(*section, s, "runs", base.tier.runs);
    base.tier.epsilon = detail::get_value(*section, s, "epsilon", base.tier.epsilon);
    base.tier.steps = detail::get_value(*section, s, "steps", base.tier.steps);
    base.tier.n = detail::get_value(*section, s, "n", base.tier.n);
    base.base_seed = detail::get_value(*section, s, "seed", base.base_seed);
    base.batch_size = detail::get_value(*section, s, "batch_size", base.batch_size);
    base.gamma = detail::get_value(*section, s, "gamma", base.gamma);
    if (section->count("beta")) base.beta = detail::get_value(*section, s, "beta", 0.0);
    base.burnin_frac = detail::get_value(*section, s, "burnin_frac", base.burnin_frac);
    base.chains = detail::get_value(*section, s, "chains", base.chains);
    base.mala_probe_stride = detail::get_value(*section, s, "mala_probe_stride", base.mala_probe_stride);
    base.input_range = detail::get_value(*section, s, "input_range", base.input_range);
    base.truncate_prob = detail::get_value(*section, s, "truncate_prob", base.truncate_prob);
    return base;
}

/// Rejects sections other than `allowed`.
inline void check_sections(const ConfigTree& tree, const std::set<std::string>& allowed) {
    for (const auto& [name, section] : tree) {
        if (section.empty()) throw ConfigError("config: key '" + name + "' outside a section");
        if (!allowed.count(name)) throw ConfigError("config: unknown section [" + name + "]");
    }
}

}  // namespace llc
