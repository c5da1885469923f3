#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llc/samplers/langevin.hpp"

namespace llc {

class TuningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TuneOptions {
    double target_low = 0.90;
    double target_high = 0.95;
    /// The search aims inside [low + margin, high - margin] so that a fresh
    /// chain at the returned step size stays in the target band.
    double margin = 0.01;
    std::size_t pilot_steps = 2000;
    std::size_t probe_stride = 5;  ///< overrides the sampler's probe stride during tuning
    std::size_t max_bisections = 30;
    std::size_t refine_steps = 4;
};

struct TunePoint {
    double epsilon = 0.0;
    double accept = 0.0;
    bool diverged = false;
};

struct TuneResult {
    double epsilon = 0.0;
    double accept = 0.0;
    std::vector<TunePoint> history;

    std::string report() const {
        std::ostringstream os;
        for (const auto& p : history) os << "eps=" << p.epsilon << " accept=" << p.accept << (p.diverged ? " (diverged)" : "") << '\n';
        return os.str();
    }
};

/// Mean MALA acceptance probe over a short SGLD pilot chain from w*. A
/// diverged pilot counts as zero acceptance. Every pilot reuses the same seed.
template <Objective Obj>
TunePoint pilot_acceptance(const Obj& objective, std::span<const double> w_star, SamplerConfig cfg, double epsilon,
                           std::size_t pilot_steps, std::size_t probe_stride = 0) {
    cfg.epsilon = epsilon;
    cfg.steps = pilot_steps;
    cfg.tally_full_batch = false;
    if (probe_stride > 0) cfg.mala_probe_stride = probe_stride;
    if (cfg.mala_probe_stride == 0) cfg.mala_probe_stride = 20;
    const auto trace = sgld_chain(objective, w_star, cfg, Rng(cfg.seed), 0);
    TunePoint p{epsilon, trace.diverged ? 0.0 : trace.mean_accept(), trace.diverged};
    if (std::isnan(p.accept)) p.accept = 0.0;
    return p;
}

/// Bisection over log(epsilon) until the mean probe acceptance of a pilot
/// chain lands in the target band, followed by a few refinement steps toward
/// the band centre; returns the in-band step size closest to the centre.
template <Objective Obj>
TuneResult tune_step_size(const Obj& objective, std::span<const double> w_star, const SamplerConfig& base,
                          const TuneOptions& opt = {}) {
    const double lo_band = opt.target_low + opt.margin;
    const double hi_band = opt.target_high - opt.margin;
    TuneResult res;
    auto eval = [&](double eps) {
        auto p = pilot_acceptance(objective, w_star, base, eps, opt.pilot_steps, opt.probe_stride);
        res.history.push_back(p);
        return p;
    };
    auto in_band = [&](const TunePoint& p) { return !p.diverged && p.accept >= lo_band && p.accept <= hi_band; };

    // Bracket: acceptance too high at `lo`, too low at `hi`.
    double lo = base.epsilon, hi = base.epsilon;
    TunePoint p = eval(base.epsilon);
    std::size_t budget = opt.max_bisections;
    const TunePoint* found = nullptr;
    TunePoint best{};
    if (in_band(p)) {
        best = p;
        found = &best;
    }
    if (!found) {
        if (p.accept > hi_band) {
            while (budget-- > 0) {
                hi *= 10.0;
                p = eval(hi);
                if (in_band(p)) { best = p; found = &best; break; }
                if (p.accept < lo_band) break;
                lo = hi;
            }
        } else {
            while (budget-- > 0) {
                lo /= 10.0;
                p = eval(lo);
                if (in_band(p)) { best = p; found = &best; break; }
                if (p.accept > hi_band) break;
                hi = lo;
            }
        }
    }
    while (!found && budget-- > 0) {
        const double mid = std::sqrt(lo * hi);
        p = eval(mid);
        if (in_band(p)) {
            best = p;
            found = &best;
        } else if (p.accept > hi_band) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (!found) throw TuningError("no step size reached the target acceptance band within budget:\n" + res.report());

    // Refine toward the middle of the band so that pilot noise in either
    // direction keeps a fresh chain inside it.
    const double centre = 0.5 * (lo_band + hi_band);
    if (best.accept > centre) {
        lo = best.epsilon;
        if (hi <= lo) hi = lo * 10.0;
    } else {
        hi = best.epsilon;
        if (lo >= hi) lo = hi / 10.0;
    }
    for (std::size_t i = 0; i < opt.refine_steps; ++i) {
        const double mid = std::sqrt(lo * hi);
        p = eval(mid);
        if (in_band(p) && std::abs(p.accept - centre) < std::abs(best.accept - centre)) best = p;
        if (!p.diverged && p.accept > centre) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    res.epsilon = best.epsilon;
    res.accept = best.accept;
    return res;
}

}  // namespace llc
