#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/numerics/parallel.hpp"
#include "llc/numerics/rng.hpp"
#include "llc/samplers/config.hpp"
#include "llc/samplers/objective.hpp"

namespace llc {

/// Point on a log-target: location, log pi and grad log pi.
struct TargetPoint {
    std::span<const double> w;
    double log_pi = 0.0;
    std::span<const double> grad_log_pi;
};

/// Metropolis-Hastings acceptance probability min(1, pi(w')q(w|w') / (pi(w)q(w'|w)))
/// for the Langevin proposal q(x'|x) = N(x + (eps/2) P grad log pi(x), eps C),
/// with diagonal P = `drift_scale` and C = `noise_scale` (empty spans mean identity).
inline double mala_acceptance_probe(const TargetPoint& cur, const TargetPoint& prop, double eps,
                                    std::span<const double> drift_scale = {}, std::span<const double> noise_scale = {}) {
    const std::size_t d = cur.w.size();
    double log_q_forward = 0.0;   // log q(prop | cur)
    double log_q_backward = 0.0;  // log q(cur | prop)
    for (std::size_t i = 0; i < d; ++i) {
        const double p = drift_scale.empty() ? 1.0 : drift_scale[i];
        const double c = noise_scale.empty() ? 1.0 : noise_scale[i];
        const double fwd = prop.w[i] - cur.w[i] - 0.5 * eps * p * cur.grad_log_pi[i];
        const double bwd = cur.w[i] - prop.w[i] - 0.5 * eps * p * prop.grad_log_pi[i];
        log_q_forward -= fwd * fwd / (2.0 * eps * c);
        log_q_backward -= bwd * bwd / (2.0 * eps * c);
    }
    const double log_ratio = prop.log_pi - cur.log_pi + log_q_backward - log_q_forward;
    if (std::isnan(log_ratio)) return 0.0;
    if (log_ratio >= 0.0) return 1.0;
    return std::clamp(std::exp(log_ratio), 0.0, 1.0);
}

/// The localized tempered posterior
///   log pi(w) = -n beta L(w) - (gamma/2) sum_i m_i (w_i - w*_i)^2
/// together with the Langevin step geometry chosen by the sampler config.
/// m_i = 1/A_i in metric mode, otherwise 1.
class LocalizedPosterior {
public:
    LocalizedPosterior(std::span<const double> w_star, double n_beta, const SamplerConfig& cfg)
        : w_star_(w_star.begin(), w_star.end()), n_beta_(n_beta), gamma_(cfg.gamma), eps_(cfg.epsilon),
          mode_(cfg.precondition_mode), a_(cfg.preconditioner) {
        const bool pre = !a_.empty();
        if (pre) drift_scale_ = a_;
        if (pre && mode_ != PreconditionMode::drift) noise_scale_ = a_;
        if (pre && mode_ == PreconditionMode::metric) {
            prior_weight_.resize(a_.size());
            for (std::size_t i = 0; i < a_.size(); ++i) prior_weight_[i] = 1.0 / a_[i];
        }
        noise_sd_.resize(w_star_.size());
        for (std::size_t i = 0; i < noise_sd_.size(); ++i) noise_sd_[i] = std::sqrt(eps_ * (noise_scale_.empty() ? 1.0 : noise_scale_[i]));
    }

    double n_beta() const noexcept { return n_beta_; }
    std::span<const double> w_star() const noexcept { return w_star_; }
    std::span<const double> drift_scale() const noexcept { return drift_scale_; }
    std::span<const double> noise_scale() const noexcept { return noise_scale_; }

    double log_pi(double loss, std::span<const double> w) const {
        double prior = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double dw = w[i] - w_star_[i];
            prior += prior_weight(i) * dw * dw;
        }
        return -n_beta_ * loss - 0.5 * gamma_ * prior;
    }

    void grad_log_pi(std::span<const double> loss_grad, std::span<const double> w, std::span<double> out) const {
        for (std::size_t i = 0; i < w.size(); ++i) out[i] = -n_beta_ * loss_grad[i] - gamma_ * prior_weight(i) * (w[i] - w_star_[i]);
    }

    /// Langevin increment from the loss gradient at w, with standard normal draws `xi`.
    void step(std::span<const double> loss_grad, std::span<const double> w, std::span<const double> xi,
              std::span<double> delta) const {
        const double half = 0.5 * eps_;
        const std::size_t d = w.size();
        if (a_.empty()) {
            for (std::size_t i = 0; i < d; ++i)
                delta[i] = half * (-n_beta_ * loss_grad[i] + gamma_ * (w_star_[i] - w[i])) + noise_sd_[i] * xi[i];
        } else if (mode_ == PreconditionMode::metric) {
            for (std::size_t i = 0; i < d; ++i)
                delta[i] = half * (a_[i] * (-n_beta_ * loss_grad[i]) + gamma_ * (w_star_[i] - w[i])) + noise_sd_[i] * xi[i];
        } else {
            for (std::size_t i = 0; i < d; ++i)
                delta[i] = a_[i] * (half * (-n_beta_ * loss_grad[i] + gamma_ * (w_star_[i] - w[i]))) + noise_sd_[i] * xi[i];
        }
    }

    double acceptance(const TargetPoint& cur, const TargetPoint& prop) const {
        return mala_acceptance_probe(cur, prop, eps_, drift_scale_, noise_scale_);
    }

private:
    double prior_weight(std::size_t i) const { return prior_weight_.empty() ? 1.0 : prior_weight_[i]; }

    std::vector<double> w_star_;
    double n_beta_;
    double gamma_;
    double eps_;
    PreconditionMode mode_;
    std::vector<double> a_;
    std::vector<double> drift_scale_;
    std::vector<double> noise_scale_;
    std::vector<double> prior_weight_;
    std::vector<double> noise_sd_;
};

namespace detail {

/// Chains stop when a value is non-finite or the loss exceeds 1e6 x max(|L_0|, 1).
struct DivergenceGuard {
    double limit = 0.0;
    bool armed = false;

    bool bad(double loss) {
        if (!std::isfinite(loss)) return true;
        if (!armed) {
            limit = 1e6 * std::max(std::abs(loss), 1.0);
            armed = true;
        }
        return std::abs(loss) > limit;
    }
};

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// SGLD on the localized tempered posterior, started at w*.
///
/// Each step draws the next minibatch of a fixed shuffled partition, records
/// the minibatch loss L_m(w_t) from the forward pass, then applies
///   dw = (eps/2) (-n beta grad L_m(w_t) + gamma (w* - w_t)) + N(0, eps)
/// (with the configured diagonal preconditioner, if any). Every
/// `mala_probe_stride` steps the MALA acceptance probability of the step is
/// recorded as a diagnostic; no step is ever rejected.
template <Objective Obj>
ChainTrace sgld_chain(Obj obj, std::span<const double> w_star, const SamplerConfig& cfg, Rng rng, std::size_t chain_index = 0) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t d = obj.dimension();
    const std::size_t n = obj.sample_size();
    if (w_star.size() != d) throw std::invalid_argument("sgld_chain: w* length does not match objective");
    cfg.validate(n, d);
    const LocalizedPosterior post(w_star, static_cast<double>(n) * cfg.resolved_beta(n), cfg);
    MinibatchSchedule schedule(obj.row_count(), std::min(cfg.batch_size, obj.row_count()), rng);

    const bool full_probe = cfg.probe_source == ProbeSource::full_batch ||
                            (cfg.probe_source == ProbeSource::automatic && d <= kFullBatchProbeLimit);
    const std::size_t burnin = cfg.burnin_steps();

    ChainTrace trace;
    trace.chain = chain_index;
    trace.probes_approximate = cfg.mala_probe_stride > 0 && !full_probe;
    trace.losses.reserve(cfg.steps);
    std::vector<double> w(w_star.begin(), w_star.end()), grad(d), delta(d), xi(d);
    std::vector<double> w_prop, grad_cur, grad_prop, glp_cur, glp_prop;
    detail::DivergenceGuard guard;

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const auto rows = schedule.next_batch();
        const double loss = obj.batch_loss_grad(w, rows, grad);
        if (guard.bad(loss) || !detail::all_finite(grad)) {
            trace.diverged = true;
            break;
        }
        trace.losses.push_back(loss);
        if (cfg.tally_full_batch && t >= burnin) trace.full_losses.push_back(obj.full_loss(w));

        fill_gaussian(rng, xi, 1.0);
        post.step(grad, w, xi, delta);

        if (cfg.mala_probe_stride > 0 && t % cfg.mala_probe_stride == 0) {
            w_prop.resize(d);
            grad_cur.resize(d);
            grad_prop.resize(d);
            glp_cur.resize(d);
            glp_prop.resize(d);
            for (std::size_t i = 0; i < d; ++i) w_prop[i] = w[i] + delta[i];
            double loss_cur = loss, loss_prop = 0.0;
            if (full_probe) {
                loss_cur = obj.full_loss_grad(w, grad_cur);
                loss_prop = obj.full_loss_grad(w_prop, grad_prop);
            } else {
                grad_cur = grad;
                loss_prop = obj.batch_loss_grad(w_prop, rows, grad_prop);
            }
            post.grad_log_pi(grad_cur, w, glp_cur);
            post.grad_log_pi(grad_prop, w_prop, glp_prop);
            const TargetPoint cur{w, post.log_pi(loss_cur, w), glp_cur};
            const TargetPoint prop{w_prop, post.log_pi(loss_prop, w_prop), glp_prop};
            trace.probes.push_back({t, post.acceptance(cur, prop)});
        }

        for (std::size_t i = 0; i < d; ++i) w[i] += delta[i];
        if (!detail::all_finite(w)) {
            trace.diverged = true;
            break;
        }
    }
    trace.final_params = std::move(w);
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

/// Full-batch MALA on the same localized tempered posterior. Proposals use the
/// SGLD step geometry; rejected proposals repeat the current state. Records
/// L_n(w_t) before each transition and the acceptance probability of every step.
template <Objective Obj>
ChainTrace mala_chain(Obj obj, std::span<const double> w_star, const SamplerConfig& cfg, Rng rng, std::size_t chain_index = 0) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t d = obj.dimension();
    const std::size_t n = obj.sample_size();
    if (w_star.size() != d) throw std::invalid_argument("mala_chain: w* length does not match objective");
    cfg.validate(n, d);
    const LocalizedPosterior post(w_star, static_cast<double>(n) * cfg.resolved_beta(n), cfg);

    ChainTrace trace;
    trace.chain = chain_index;
    trace.losses.reserve(cfg.steps);
    std::vector<double> w(w_star.begin(), w_star.end()), grad(d), glp(d), xi(d), delta(d);
    std::vector<double> w_prop(d), grad_prop(d), glp_prop(d);
    detail::DivergenceGuard guard;

    double loss = obj.full_loss_grad(w, grad);
    post.grad_log_pi(grad, w, glp);
    double lp = post.log_pi(loss, w);
    const std::size_t burnin = cfg.burnin_steps();

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        if (guard.bad(loss)) {
            trace.diverged = true;
            break;
        }
        trace.losses.push_back(loss);
        if (cfg.tally_full_batch && t >= burnin) trace.full_losses.push_back(loss);

        fill_gaussian(rng, xi, 1.0);
        post.step(grad, w, xi, delta);
        for (std::size_t i = 0; i < d; ++i) w_prop[i] = w[i] + delta[i];
        const double loss_prop = obj.full_loss_grad(w_prop, grad_prop);
        double accept = 0.0;
        double lp_prop = 0.0;
        if (std::isfinite(loss_prop) && detail::all_finite(grad_prop)) {
            post.grad_log_pi(grad_prop, w_prop, glp_prop);
            lp_prop = post.log_pi(loss_prop, w_prop);
            accept = post.acceptance({w, lp, glp}, {w_prop, lp_prop, glp_prop});
        }
        trace.probes.push_back({t, accept});
        if (rng.uniform(0.0, 1.0) < accept) {
            w.swap(w_prop);
            grad.swap(grad_prop);
            glp.swap(glp_prop);
            loss = loss_prop;
            lp = lp_prop;
            ++trace.accepted;
        }
    }
    trace.final_params = std::move(w);
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

enum class SamplerKind { sgld, mala };

inline SamplerKind parse_sampler_kind(const std::string& s) {
    if (s == "sgld") return SamplerKind::sgld;
    if (s == "mala") return SamplerKind::mala;
    throw std::invalid_argument("unknown sampler: " + s);
}

/// Runs cfg.chains independent chains in parallel; chain c uses seed cfg.seed + c.
template <Objective Obj>
std::vector<ChainTrace> run_chains(const Obj& proto, std::span<const double> w_star, const SamplerConfig& cfg,
                                   SamplerKind kind = SamplerKind::sgld, std::size_t workers = worker_count()) {
    std::vector<ChainTrace> traces(cfg.chains);
    parallel_for(
        cfg.chains,
        [&](std::size_t c) {
            Rng rng(cfg.seed + c);
            traces[c] = kind == SamplerKind::sgld ? sgld_chain(proto, w_star, cfg, rng, c) : mala_chain(proto, w_star, cfg, rng, c);
        },
        workers);
    return traces;
}

}  // namespace llc
