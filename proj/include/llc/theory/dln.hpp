#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "llc/numerics/rng.hpp"

namespace llc {

/// Raised when the index set of the DLN learning-coefficient formula cannot be
/// determined uniquely.
class SignatureError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Rank-deficiency structure of a deep linear network with widths H_0..H_M
/// and end-to-end rank r, and the learning coefficient it determines.
struct DlnSignature {
    std::vector<std::size_t> widths;
    std::size_t rank = 0;
    std::vector<std::int64_t> deficiencies;  ///< Delta_j = H_j - r, j = 0..M
    std::vector<std::size_t> sigma;          ///< indices in the selected set, by ascending Delta
    std::int64_t ell = 0;                    ///< |sigma| - 1
    std::int64_t a = 0;                      ///< (sum of Delta over sigma) mod ell, 0 when ell = 0
    double lambda = 0.0;

    std::size_t param_count() const {
        std::size_t d = 0;
        for (std::size_t j = 1; j < widths.size(); ++j) d += widths[j] * widths[j - 1];
        return d;
    }
};

namespace detail {

/// The three conditions on a candidate index set `in` (mask over 0..M).
inline bool sigma_conditions(std::span<const std::int64_t> delta, const std::vector<bool>& in) {
    std::int64_t max_in = std::numeric_limits<std::int64_t>::min();
    std::int64_t min_out = std::numeric_limits<std::int64_t>::max();
    std::int64_t sum = 0, size = 0;
    bool has_out = false;
    for (std::size_t j = 0; j < delta.size(); ++j) {
        if (in[j]) {
            max_in = std::max(max_in, delta[j]);
            sum += delta[j];
            ++size;
        } else {
            min_out = std::min(min_out, delta[j]);
            has_out = true;
        }
    }
    if (size == 0) return false;
    const std::int64_t ell = size - 1;
    // An empty complement has minimum +infinity.
    if (has_out && !(max_in < min_out)) return false;
    if (!(sum >= ell * max_in)) return false;
    if (has_out && !(sum < ell * min_out)) return false;
    return true;
}

inline double lambda_from_set(std::size_t r, std::size_t h_in, std::size_t h_out, std::span<const std::int64_t> chosen,
                              std::int64_t& a_out) {
    const double rr = static_cast<double>(r);
    const double base = (-rr * rr + rr * static_cast<double>(h_in + h_out)) / 2.0;
    const auto ell = static_cast<std::int64_t>(chosen.size()) - 1;
    if (ell <= 0) {
        a_out = 0;
        return base;
    }
    const std::int64_t sum = std::accumulate(chosen.begin(), chosen.end(), std::int64_t{0});
    const std::int64_t a = sum % ell;
    a_out = a;
    const double l = static_cast<double>(ell);
    double pairs = 0.0;
    for (std::size_t i = 0; i < chosen.size(); ++i)
        for (std::size_t j = i + 1; j < chosen.size(); ++j) pairs += static_cast<double>(chosen[i] * chosen[j]);
    const double mean_term = static_cast<double>(sum) / l;
    return base + static_cast<double>(a * (ell - a)) / (4.0 * l) - (l * (l - 1.0) / 4.0) * mean_term * mean_term + 0.5 * pairs;
}

}  // namespace detail

/// Learning coefficient of a DLN with widths H_0..H_M whose true end-to-end
/// map has rank r. The index set is found by sorting the deficiencies
/// Delta_j = H_j - r and testing each prefix against the three set conditions;
/// exactly one prefix must qualify.
inline DlnSignature dln_lambda(std::span<const std::size_t> widths, std::size_t r) {
    if (widths.size() < 2) throw std::invalid_argument("dln_lambda: need at least one layer");
    const std::size_t min_width = *std::min_element(widths.begin(), widths.end());
    if (r > min_width) throw std::invalid_argument("dln_lambda: rank " + std::to_string(r) + " exceeds the smallest width " + std::to_string(min_width));

    DlnSignature sig;
    sig.widths.assign(widths.begin(), widths.end());
    sig.rank = r;
    for (auto h : widths) sig.deficiencies.push_back(static_cast<std::int64_t>(h) - static_cast<std::int64_t>(r));

    std::vector<std::size_t> order(widths.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sig.deficiencies[x] < sig.deficiencies[y]; });

    std::vector<std::size_t> passing;
    std::vector<bool> mask(widths.size(), false);
    for (std::size_t k = 1; k <= widths.size(); ++k) {
        mask[order[k - 1]] = true;
        if (detail::sigma_conditions(sig.deficiencies, mask)) passing.push_back(k);
    }
    if (passing.size() != 1) {
        std::string msg = "dln_lambda: expected exactly one admissible index set, found " + std::to_string(passing.size()) + " for widths (";
        for (std::size_t j = 0; j < widths.size(); ++j) msg += (j ? "," : "") + std::to_string(widths[j]);
        throw SignatureError(msg + "), r=" + std::to_string(r));
    }
    const std::size_t k = passing.front();
    sig.sigma.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::int64_t> chosen;
    for (auto j : sig.sigma) chosen.push_back(sig.deficiencies[j]);
    sig.ell = static_cast<std::int64_t>(k) - 1;
    sig.lambda = detail::lambda_from_set(r, widths.front(), widths.back(), chosen, sig.a);
    return sig;
}

struct DepthStudyRow {
    std::size_t depth = 0;  ///< number of weight matrices M
    std::size_t params = 0;
    std::size_t rank = 0;
    double lambda = 0.0;
    std::vector<std::size_t> widths;
};

/// Random DLN signatures: M ~ U{depth_lo..depth_hi}, each H_j ~ U{width_lo..width_hi}
/// (j = 0..M, including the input), r ~ U{0..min H_j}.
inline std::vector<DepthStudyRow> dln_depth_study(std::size_t width_lo, std::size_t width_hi, std::size_t depth_lo,
                                                  std::size_t depth_hi, std::size_t draws, Rng& rng) {
    if (width_lo == 0 || width_lo > width_hi || depth_lo == 0 || depth_lo > depth_hi)
        throw std::invalid_argument("dln_depth_study: invalid ranges");
    std::vector<DepthStudyRow> rows;
    rows.reserve(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        DepthStudyRow row;
        row.depth = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(depth_lo), static_cast<std::int64_t>(depth_hi)));
        for (std::size_t j = 0; j <= row.depth; ++j)
            row.widths.push_back(static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(width_lo), static_cast<std::int64_t>(width_hi))));
        const auto min_w = *std::min_element(row.widths.begin(), row.widths.end());
        row.rank = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(min_w)));
        const auto sig = dln_lambda(row.widths, row.rank);
        row.lambda = sig.lambda;
        row.params = sig.param_count();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace llc
