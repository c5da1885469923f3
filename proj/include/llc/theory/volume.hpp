#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "llc/numerics/parallel.hpp"
#include "llc/numerics/rng.hpp"
#include "llc/numerics/stats.hpp"
#include "llc/theory/potential.hpp"

namespace llc {

struct VolumeEstimate {
    double volume = 0.0;
    double std_error = 0.0;
    std::size_t hits = 0;
    std::size_t samples = 0;
    bool zero_hits = false;  ///< tolerance too small for the sample budget

    double hit_fraction() const { return samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0; }
};

inline constexpr std::size_t kMinVolumeSamples = 1000;

/// Rejection-sampled volume of {w in B(w*) : L(w) - L(w*) < eps}.
inline VolumeEstimate mc_volume(const Potential& potential, double eps, std::size_t samples, Rng& rng) {
    if (!(eps > 0.0)) throw std::invalid_argument("mc_volume: eps must be positive");
    if (samples < kMinVolumeSamples) throw std::invalid_argument("mc_volume: need at least 1000 samples");
    const double floor = potential.min_value();
    const double r = potential.radius;
    std::vector<double> w(potential.dim);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = potential.minimum[i] + rng.uniform(-r, r);
        if (potential(w) - floor < eps) ++hits;
    }
    VolumeEstimate est;
    est.hits = hits;
    est.samples = samples;
    est.zero_hits = hits == 0;
    const double p = est.hit_fraction();
    const double vol = potential.box_volume();
    est.volume = p * vol;
    est.std_error = vol * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return est;
}

struct VolumeGridOptions {
    std::size_t points = 13;             ///< eps0 * 2^-k, k = 0..points-1
    std::size_t samples = 1'000'000;     ///< per grid point
    std::size_t pilot_samples = 200'000;
    double min_hit_fraction = 1e-2;      ///< target at the smallest eps
    double max_hit_fraction = 0.5;       ///< cap at the largest eps
    double eps0 = 0.0;                   ///< 0 selects eps0 from the pilot
    std::uint64_t seed = 0;
};

struct VolumeScaling {
    std::vector<double> eps;
    std::vector<VolumeEstimate> volumes;
    ScalingFit fit;
};

/// Picks eps0 so the smallest grid tolerance still catches about
/// `min_hit_fraction` of uniform draws, keeping the largest at most
/// `max_hit_fraction` and below 1.
inline double choose_eps0(const Potential& potential, const VolumeGridOptions& opt, Rng& rng) {
    const double floor = potential.min_value();
    std::vector<double> excess(opt.pilot_samples);
    std::vector<double> w(potential.dim);
    for (auto& e : excess) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = potential.minimum[i] + rng.uniform(-potential.radius, potential.radius);
        e = potential(w) - floor;
    }
    const double span = std::ldexp(1.0, static_cast<int>(opt.points) - 1);
    double eps0 = quantile(excess, opt.min_hit_fraction) * span;
    eps0 = std::min(eps0, quantile(excess, opt.max_hit_fraction));
    eps0 = std::min(eps0, 0.5);
    if (!(eps0 > 0.0)) throw std::runtime_error("choose_eps0: potential is flat around its minimum");
    return eps0;
}

/// Volumes on the geometric tolerance grid and the fitted (lambda, m). Each
/// grid point draws from its own seeded stream.
inline VolumeScaling volume_scaling(const Potential& potential, const VolumeGridOptions& opt = {}) {
    if (opt.points < 4) throw std::invalid_argument("volume_scaling: need at least 4 grid points");
    Rng pilot = Rng(opt.seed).derive(0x9e3779b9ULL);
    VolumeScaling out;
    const double eps0 = opt.eps0 > 0.0 ? opt.eps0 : choose_eps0(potential, opt, pilot);
    for (std::size_t k = 0; k < opt.points; ++k) out.eps.push_back(std::ldexp(eps0, -static_cast<int>(k)));
    out.volumes.resize(opt.points);
    parallel_for(opt.points, [&](std::size_t k) {
        Rng rng = Rng(opt.seed).derive(k);
        out.volumes[k] = mc_volume(potential, out.eps[k], opt.samples, rng);
    });
    std::vector<double> eps, vols;
    for (std::size_t k = 0; k < opt.points; ++k) {
        if (out.volumes[k].zero_hits) continue;
        eps.push_back(out.eps[k]);
        vols.push_back(out.volumes[k].volume);
    }
    out.fit = fit_scaling_law(eps, vols);
    return out;
}

}  // namespace llc
