#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace llc {

/// How a diagonal preconditioner A enters the Langevin step
///   dw = (eps/2) * P * (-n*beta*grad L + prior force) + N(0, eps*C).
enum class PreconditionMode {
    drift,        ///< P = A on the whole drift, C = I
    drift_noise,  ///< P = A on the whole drift, C = A (preconditioned Langevin)
    metric,       ///< P = A on the likelihood drift only, C = A; the localizing
                  ///< prior is measured in the A^-1 metric
};

inline PreconditionMode parse_precondition_mode(const std::string& s) {
    if (s == "drift") return PreconditionMode::drift;
    if (s == "drift_noise") return PreconditionMode::drift_noise;
    if (s == "metric") return PreconditionMode::metric;
    throw std::invalid_argument("unknown preconditioner mode: " + s);
}

inline std::string to_string(PreconditionMode m) {
    switch (m) {
        case PreconditionMode::drift: return "drift";
        case PreconditionMode::drift_noise: return "drift_noise";
        case PreconditionMode::metric: return "metric";
    }
    return "?";
}

/// Source of the log-target used by MALA acceptance probes.
enum class ProbeSource { automatic, full_batch, minibatch };

inline ProbeSource parse_probe_source(const std::string& s) {
    if (s == "auto") return ProbeSource::automatic;
    if (s == "full") return ProbeSource::full_batch;
    if (s == "minibatch") return ProbeSource::minibatch;
    throw std::invalid_argument("unknown probe source: " + s);
}

inline std::string to_string(ProbeSource s) {
    switch (s) {
        case ProbeSource::automatic: return "auto";
        case ProbeSource::full_batch: return "full";
        case ProbeSource::minibatch: return "minibatch";
    }
    return "?";
}

/// Full-batch probes are used up to this many parameters under ProbeSource::automatic.
inline constexpr std::size_t kFullBatchProbeLimit = 100000;

struct SamplerConfig {
    double epsilon = 1e-4;
    double gamma = 1.0;
    std::optional<double> beta;  ///< defaults to 1/log n
    std::size_t steps = 1000;
    double burnin_frac = 0.9;
    std::size_t batch_size = 500;
    std::size_t chains = 1;
    std::uint64_t seed = 0;
    std::vector<double> preconditioner;  ///< diagonal of A; empty means identity
    std::size_t mala_probe_stride = 20;  ///< 0 disables probes

    PreconditionMode precondition_mode = PreconditionMode::drift;
    ProbeSource probe_source = ProbeSource::automatic;
    bool tally_full_batch = false;  ///< also record L_n(w_t) after burn-in

    double resolved_beta(std::size_t n) const {
        if (beta) return *beta;
        return 1.0 / std::log(static_cast<double>(n));
    }

    void validate(std::size_t n, std::size_t dim) const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("sampler: epsilon must be > 0");
        if (!(gamma >= 0.0)) throw std::invalid_argument("sampler: gamma must be >= 0");
        if (beta && !(*beta > 0.0)) throw std::invalid_argument("sampler: beta must be > 0");
        if (!beta && n < 2) throw std::invalid_argument("sampler: default beta needs n >= 2");
        if (!(burnin_frac >= 0.0 && burnin_frac < 1.0)) throw std::invalid_argument("sampler: burnin_frac must lie in [0,1)");
        if (steps == 0) throw std::invalid_argument("sampler: steps must be > 0");
        if (chains == 0) throw std::invalid_argument("sampler: chains must be > 0");
        if (batch_size == 0 || batch_size > n) throw std::invalid_argument("sampler: batch size must lie in [1, n]");
        if (!preconditioner.empty()) {
            if (preconditioner.size() != dim) throw std::invalid_argument("sampler: preconditioner length must equal parameter count");
            for (double a : preconditioner)
                if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("sampler: preconditioner entries must be positive");
        }
    }

    /// Index of the first post-burn-in step.
    std::size_t burnin_steps() const { return static_cast<std::size_t>(std::floor(burnin_frac * static_cast<double>(steps))); }
};

struct ProbeRecord {
    std::size_t step = 0;
    double accept = 0.0;
};

/// Per-chain record of a sampling run.
struct ChainTrace {
    std::size_t chain = 0;
    std::vector<double> losses;        ///< L_m(w_t) (SGLD) or L_n(w_t) (MALA), recorded before each update
    std::vector<double> full_losses;   ///< L_n(w_t) for post-burn-in steps when tallied full-batch, else empty
    std::vector<ProbeRecord> probes;   ///< MALA acceptance diagnostics (SGLD) or per-step acceptance (MALA)
    std::vector<double> final_params;
    std::size_t accepted = 0;          ///< MALA only
    bool diverged = false;
    bool probes_approximate = false;   ///< probes used the minibatch surrogate
    double seconds = 0.0;

    std::size_t steps() const { return losses.size(); }

    double mean_accept() const {
        if (probes.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (const auto& p : probes) s += p.accept;
        return s / static_cast<double>(probes.size());
    }
};

}  // namespace llc
