#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace llc {

/// Analytic population loss with a known minimum, used as an oracle target.
/// The neighbourhood B(w*) is the axis-aligned cube of half-width `radius`
/// around the minimum.
struct Potential {
    std::string name;
    std::size_t dim = 0;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::vector<double> minimum;
    double radius = 1.0;
    std::optional<double> lambda;
    std::optional<int> multiplicity;

    double operator()(std::span<const double> w) const { return value(w); }

    double min_value() const { return value(minimum); }

    double box_volume() const { return std::pow(2.0 * radius, static_cast<double>(dim)); }

    /// Value and gradient in one call.
    double value_grad(std::span<const double> w, std::span<double> g) const {
        gradient(w, g);
        return value(w);
    }
};

/// Constant potential L(w) = c on [-radius, radius]^dim.
inline Potential constant_potential(std::size_t dim, double c, double radius = 1.0) {
    Potential p;
    p.name = "constant";
    p.dim = dim;
    p.value = [c](std::span<const double>) { return c; };
    p.gradient = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    p.minimum.assign(dim, 0.0);
    p.radius = radius;
    p.lambda = 0.0;
    return p;
}

/// L(w) = scale * ||w||^2, regular with lambda = dim/2.
inline Potential quadratic_potential(std::size_t dim, double scale, std::string name) {
    Potential p;
    p.name = std::move(name);
    p.dim = dim;
    p.value = [scale](std::span<const double> w) {
        double s = 0.0;
        for (double x : w) s += x * x;
        return scale * s;
    };
    p.gradient = [scale](std::span<const double> w, std::span<double> g) {
        for (std::size_t i = 0; i < w.size(); ++i) g[i] = 2.0 * scale * w[i];
    };
    p.minimum.assign(dim, 0.0);
    p.lambda = 0.5 * static_cast<double>(dim);
    p.multiplicity = 1;
    return p;
}

/// L(w) = w1^(2a) * w2^(2b) for integers a, b >= 1.
inline Potential monomial_potential(int a, int b, std::string name) {
    if (a < 1 || b < 1) throw std::invalid_argument("monomial_potential: exponents must be >= 1");
    Potential p;
    p.name = std::move(name);
    p.dim = 2;
    p.value = [a, b](std::span<const double> w) { return std::pow(w[0], 2 * a) * std::pow(w[1], 2 * b); };
    p.gradient = [a, b](std::span<const double> w, std::span<double> g) {
        g[0] = 2.0 * a * std::pow(w[0], 2 * a - 1) * std::pow(w[1], 2 * b);
        g[1] = 2.0 * b * std::pow(w[0], 2 * a) * std::pow(w[1], 2 * b - 1);
    };
    p.minimum = {0.0, 0.0};
    // Volume scaling of {w1^2a w2^2b < eps}: lambda = min(1/2a, 1/2b), m = 2 on a tie.
    const double la = 1.0 / (2.0 * a), lb = 1.0 / (2.0 * b);
    p.lambda = std::min(la, lb);
    p.multiplicity = la == lb ? 2 : 1;
    return p;
}

/// Named catalog used by the CLI and the oracle tests:
///   quad1d  L = w^2                 (lambda 1/2, m 1)
///   quad2d  L = (w1^2 + w2^2) / 2   (lambda 1,   m 1)
///   w2w4    L = w1^2 w2^4           (lambda 1/4, m 1)
///   w2w2    L = w1^2 w2^2           (lambda 1/2, m 2)
inline Potential potential_by_name(const std::string& name) {
    if (name == "quad1d") return quadratic_potential(1, 1.0, "quad1d");
    if (name == "quad2d") return quadratic_potential(2, 0.5, "quad2d");
    if (name == "w2w4") return monomial_potential(1, 2, "w2w4");
    if (name == "w2w2") return monomial_potential(1, 1, "w2w2");
    throw std::invalid_argument("unknown potential: " + name + " (expected quad1d, quad2d, w2w4, w2w2)");
}

inline std::vector<std::string> potential_names() { return {"quad1d", "quad2d", "w2w4", "w2w2"}; }

}  // namespace llc
