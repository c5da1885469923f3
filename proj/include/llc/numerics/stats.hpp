#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace llc {

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Arithmetic mean and standard error (sample standard deviation / sqrt(count)).
/// A single value has zero standard error.
inline MeanStderr mean_and_stderr(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_and_stderr: empty input");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

/// Linear-interpolated quantile, q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
    return {sxy / sxx, my - (sxy / sxx) * mx};
}

namespace detail {
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j);
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}
}  // namespace detail

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need >= 2 paired points");
    const auto rx = detail::ranks(x);
    const auto ry = detail::ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Result of fitting V(eps) = c * eps^lambda * (-log eps)^(m-1).
struct ScalingFit {
    double lambda = 0.0;
    int multiplicity = 1;
    double c = 0.0;
    double residual = 0.0;                 ///< sum of squared log residuals for the chosen m
    std::vector<double> residual_by_m;     ///< index m-1
};

inline constexpr int kMaxMultiplicity = 4;

/// Least-squares fit of log V = lambda*log eps + (m-1)*log(-log eps) + log c,
/// with m chosen over 1..4 by minimum residual.
inline ScalingFit fit_scaling_law(std::span<const double> eps_grid, std::span<const double> volumes) {
    if (eps_grid.size() != volumes.size()) throw std::invalid_argument("fit_scaling_law: size mismatch");
    if (eps_grid.size() < 4) throw std::invalid_argument("fit_scaling_law: need >= 4 grid points");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0 && eps_grid[i] < 1.0)) throw std::invalid_argument("fit_scaling_law: eps must lie in (0,1)");
        if (!(volumes[i] > 0.0)) throw std::invalid_argument("fit_scaling_law: volumes must be positive");
    }
    const auto k = static_cast<Eigen::Index>(eps_grid.size());
    Eigen::MatrixXd design(k, 2);
    Eigen::VectorXd log_v(k), loglog(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        design(i, 0) = std::log(eps_grid[i]);
        design(i, 1) = 1.0;
        loglog(i) = std::log(-std::log(eps_grid[i]));
        log_v(i) = std::log(volumes[i]);
    }
    const auto qr = design.colPivHouseholderQr();
    ScalingFit best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= kMaxMultiplicity; ++m) {
        const Eigen::VectorXd rhs = log_v - static_cast<double>(m - 1) * loglog;
        const Eigen::Vector2d coef = qr.solve(rhs);
        const double res = (design * coef - rhs).squaredNorm();
        best.residual_by_m.push_back(res);
        if (res < best.residual) {
            best.residual = res;
            best.lambda = coef(0);
            best.multiplicity = m;
            best.c = std::exp(coef(1));
        }
    }
    return best;
}

}  // namespace llc
