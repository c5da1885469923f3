#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "llc/estimator/burnin.hpp"
#include "llc/numerics/stats.hpp"
#include "llc/samplers/config.hpp"
#include "llc/samplers/langevin.hpp"

namespace llc {

/// Raised when no usable chain remains.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LlcFlags {
    bool negative_estimate = false;
    std::size_t diverged_chains = 0;
    bool insufficient_burnin = false;

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        if (negative_estimate) out.emplace_back("negative_estimate");
        if (diverged_chains > 0) out.emplace_back("diverged_chains=" + std::to_string(diverged_chains));
        if (insufficient_burnin) out.emplace_back("insufficient_burnin");
        return out;
    }
};

struct LlcEstimate {
    double lambda_hat = 0.0;
    std::vector<double> per_chain;
    double std_error = 0.0;
    std::size_t n = 0;
    double beta = 0.0;
    double init_loss = 0.0;  ///< full-batch L_n(w*)
    double wbic_hat = 0.0;   ///< n * mean post-burn-in loss
    double mean_tail_loss = 0.0;
    double mean_accept = std::numeric_limits<double>::quiet_NaN();
    LlcFlags flags;
    std::vector<BurninStatus> burnin;

    /// Troubleshooting advice attached to a negative estimate.
    std::vector<std::string> hints() const {
        if (!flags.negative_estimate) return {};
        return {"reduce the step size epsilon", "shorten the chain",
                "raise the localization gamma (keep it within 1.0-10.0)"};
    }
};

namespace detail {
/// Standard error of a correlated series mean by non-overlapping batch means.
inline double batch_means_stderr(std::span<const double> v, std::size_t batches = 10) {
    if (v.size() < 2 * batches) return 0.0;
    const std::size_t len = v.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += v[b * len + i];
        means.push_back(s / static_cast<double>(len));
    }
    return mean_and_stderr(means).std_error;
}
}  // namespace detail

/// Minimum post-burn-in samples per chain.
inline constexpr std::size_t kMinTailSamples = 10;

/// LLC estimate from completed traces:
///   lambda_hat_c = n beta (mean of post-burn-in losses of chain c - L_n(w*)),
/// averaged over non-diverged chains. The standard error is taken across chains,
/// or from batch means of the single chain's tail when only one chain is usable.
/// Full-batch tallies are used when the traces carry them.
inline LlcEstimate estimate_from_traces(std::span<const ChainTrace> traces, std::size_t n, double beta, double init_loss,
                                        double burnin_frac) {
    if (traces.empty()) throw std::invalid_argument("estimate: no traces");
    if (!(burnin_frac >= 0.0 && burnin_frac < 1.0)) throw std::invalid_argument("estimate: burnin_frac must lie in [0,1)");
    LlcEstimate est;
    est.n = n;
    est.beta = beta;
    est.init_loss = init_loss;
    const double nb = static_cast<double>(n) * beta;
    double tail_sum = 0.0;
    std::size_t tail_count = 0;
    std::vector<double> single_tail;
    double accept_sum = 0.0;
    std::size_t accept_count = 0;
    for (const auto& tr : traces) {
        if (tr.diverged) {
            ++est.flags.diverged_chains;
            continue;
        }
        std::span<const double> tail;
        if (!tr.full_losses.empty()) {
            tail = tr.full_losses;
        } else {
            const auto burnin = static_cast<std::size_t>(std::floor(burnin_frac * static_cast<double>(tr.losses.size())));
            tail = std::span<const double>(tr.losses).subspan(burnin);
        }
        if (tail.size() < kMinTailSamples)
            throw std::invalid_argument("estimate: burn-in leaves fewer than " + std::to_string(kMinTailSamples) + " samples");
        double s = 0.0;
        for (double v : tail) s += v;
        est.per_chain.push_back(nb * (s / static_cast<double>(tail.size()) - init_loss));
        tail_sum += s;
        tail_count += tail.size();
        single_tail.assign(tail.begin(), tail.end());
        const auto rep = burnin_diagnostic(tr.losses);
        est.burnin.push_back(rep.status);
        if (rep.status != BurninStatus::flat) est.flags.insufficient_burnin = true;
        for (const auto& p : tr.probes) {
            accept_sum += p.accept;
            ++accept_count;
        }
    }
    if (est.per_chain.empty()) throw EstimationError("all chains diverged");
    const auto ms = mean_and_stderr(est.per_chain);
    est.lambda_hat = ms.mean;
    est.std_error = est.per_chain.size() > 1 ? ms.std_error : nb * detail::batch_means_stderr(single_tail);
    est.mean_tail_loss = tail_sum / static_cast<double>(tail_count);
    est.wbic_hat = static_cast<double>(n) * est.mean_tail_loss;
    est.flags.negative_estimate = est.lambda_hat < 0.0;
    if (accept_count > 0) est.mean_accept = accept_sum / static_cast<double>(accept_count);
    return est;
}

/// Runs the configured chains from w* and estimates the LLC there.
template <Objective Obj>
LlcEstimate estimate_llc(const Obj& objective, std::span<const double> w_star, const SamplerConfig& cfg,
                         SamplerKind kind = SamplerKind::sgld, std::vector<ChainTrace>* traces_out = nullptr) {
    Obj probe = objective;
    const double init_loss = probe.full_loss(w_star);
    auto traces = run_chains(objective, w_star, cfg, kind);
    const std::size_t n = objective.sample_size();
    auto est = estimate_from_traces(traces, n, cfg.resolved_beta(n), init_loss, cfg.burnin_frac);
    if (traces_out) *traces_out = std::move(traces);
    return est;
}

}  // namespace llc
