#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace llc {

enum class BurninStatus { flat, sloped, insufficient };

inline std::string to_string(BurninStatus s) {
    switch (s) {
        case BurninStatus::flat: return "flat";
        case BurninStatus::sloped: return "sloped";
        case BurninStatus::insufficient: return "insufficient";
    }
    return "?";
}

struct BurninReport {
    BurninStatus status = BurninStatus::insufficient;
    double slope = 0.0;       ///< fitted loss change per step over the final window
    double change = 0.0;      ///< slope * window length
    double threshold = 0.0;   ///< 0.5% of the trace's loss range
    double slope_stderr = 0.0;
};

/// Checks whether the loss trace has levelled off: a line is fitted to the
/// final 10% of the trace. The tail is flat when its fitted change is below
/// 0.5% of the loss range, or is not distinguishable from zero at two standard
/// errors (autocorrelation-corrected). Otherwise a rising tail is "sloped".
inline BurninReport burnin_diagnostic(std::span<const double> losses) {
    BurninReport rep;
    if (losses.size() < 100) return rep;
    const std::size_t window = std::max<std::size_t>(10, losses.size() / 10);
    const auto tail = losses.subspan(losses.size() - window);
    const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
    rep.threshold = 0.005 * (*hi - *lo);

    const double m = static_cast<double>(window);
    const double tx = (m - 1.0) / 2.0;
    const double ty = std::accumulate(tail.begin(), tail.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        sxx += (static_cast<double>(i) - tx) * (static_cast<double>(i) - tx);
        sxy += (static_cast<double>(i) - tx) * (tail[i] - ty);
    }
    rep.slope = sxy / sxx;
    rep.change = rep.slope * m;

    std::vector<double> resid(window);
    for (std::size_t i = 0; i < window; ++i) resid[i] = tail[i] - ty - rep.slope * (static_cast<double>(i) - tx);
    double ss = 0.0, lag = 0.0;
    for (std::size_t i = 0; i < window; ++i) ss += resid[i] * resid[i];
    for (std::size_t i = 1; i < window; ++i) lag += resid[i] * resid[i - 1];
    const double rho = ss > 0.0 ? std::clamp(lag / ss, 0.0, 0.99) : 0.0;
    const double n_eff = std::max(3.0, m * (1.0 - rho) / (1.0 + rho));
    const double sigma2 = ss / (m - 2.0);
    rep.slope_stderr = std::sqrt(sigma2 / sxx * (m / n_eff));

    const bool negligible = std::abs(rep.change) <= rep.threshold;
    const bool insignificant = std::abs(rep.slope) <= 2.0 * rep.slope_stderr;
    rep.status = (negligible || insignificant) ? BurninStatus::flat : BurninStatus::sloped;
    return rep;
}

}  // namespace llc
