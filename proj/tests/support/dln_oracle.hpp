#pragma once

#include <algorithm>
#include <climits>
#include <optional>
#include <vector>

namespace llc_test {

// Independent oracle: search every nonempty subset of {0..M} for the index
// set satisfying the three conditions, then evaluate the closed form directly.
struct BruteResult {
    int admissible = 0;
    double lambda = 0.0;
};

inline BruteResult brute_force_lambda(const std::vector<std::size_t>& widths, std::size_t r) {
    const std::size_t m1 = widths.size();
    std::vector<long long> delta;
    for (auto h : widths) delta.push_back(static_cast<long long>(h) - static_cast<long long>(r));
    BruteResult out;
    for (unsigned mask = 1; mask < (1u << m1); ++mask) {
        long long max_in = LLONG_MIN, sum = 0;
        std::optional<long long> min_out;
        std::vector<long long> chosen;
        for (std::size_t j = 0; j < m1; ++j) {
            if (mask & (1u << j)) {
                max_in = std::max(max_in, delta[j]);
                sum += delta[j];
                chosen.push_back(delta[j]);
            } else {
                min_out = min_out ? std::min(*min_out, delta[j]) : delta[j];
            }
        }
        const long long ell = static_cast<long long>(chosen.size()) - 1;
        const bool c1 = !min_out || max_in < *min_out;
        const bool c2 = sum >= ell * max_in;
        const bool c3 = !min_out || sum < ell * *min_out;
        if (!(c1 && c2 && c3)) continue;
        ++out.admissible;
        const double rr = static_cast<double>(r);
        double lam = (-rr * rr + rr * static_cast<double>(widths.front() + widths.back())) / 2.0;
        if (ell > 0) {
            const double l = static_cast<double>(ell);
            const long long a = sum % ell;
            double pairs = 0.0;
            for (std::size_t i = 0; i < chosen.size(); ++i)
                for (std::size_t j = i + 1; j < chosen.size(); ++j) pairs += static_cast<double>(chosen[i] * chosen[j]);
            const double mean = static_cast<double>(sum) / l;
            lam += static_cast<double>(a * (ell - a)) / (4.0 * l) - l * (l - 1.0) / 4.0 * mean * mean + 0.5 * pairs;
        }
        out.lambda = lam;
    }
    return out;
}

}  // namespace llc_test
