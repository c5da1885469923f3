#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "llc/theory/potential.hpp"

namespace llc {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    double rel_tolerance = 1e-6;      ///< required agreement between successive refinements
    std::size_t max_refinements = 5;  ///< each refinement halves every panel
    std::size_t panels = 30;          ///< geometric panels per side of the minimum
};

namespace detail {

using Integrand1d = std::function<double(double)>;

/// Integral over [c - r, c + r] of f. Each side is cut into panels that shrink
/// geometrically toward c, so a sharp peak at the minimum is resolved, and
/// every panel is further split into `splits` equal pieces for a fixed
/// 20-point Gauss-Legendre rule.
inline double peaked_integral(const Integrand1d& f, double c, double r, std::size_t panels, std::size_t splits) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    double total = 0.0;
    auto piece = [&](double a, double b) {
        const double h = (b - a) / static_cast<double>(splits);
        for (std::size_t s = 0; s < splits; ++s) total += Rule::integrate(f, a + h * static_cast<double>(s), a + h * static_cast<double>(s + 1));
    };
    for (double side : {-1.0, 1.0}) {
        double outer = r;
        for (std::size_t k = 0; k < panels; ++k) {
            const double inner = outer / 2.0;
            if (side < 0) piece(c - outer, c - inner);
            else piece(c + inner, c + outer);
            outer = inner;
        }
        if (side < 0) piece(c - outer, c);
        else piece(c, c + outer);
    }
    return total;
}

/// Nested tensor-product integral of exp(-n (L(w) - L*)) over the cube.
inline double boltzmann_integral(const Potential& p, double n, std::size_t panels, std::size_t splits) {
    const double floor = p.min_value();
    std::vector<double> w(p.minimum);
    std::function<double(std::size_t)> integrate_dim = [&](std::size_t dim) -> double {
        Integrand1d f = [&, dim](double x) {
            w[dim] = x;
            if (dim + 1 == p.dim) return std::exp(-n * (p(w) - floor));
            return integrate_dim(dim + 1);
        };
        const double v = peaked_integral(f, p.minimum[dim], p.radius, panels, splits);
        w[dim] = p.minimum[dim];
        return v;
    };
    return integrate_dim(0);
}

}  // namespace detail

/// F_n = -log of the integral of exp(-n L(w)) over B(w*) with a flat,
/// unnormalised prior. The panel grid is refined until two successive
/// results agree to `rel_tolerance`.
inline double quadrature_free_energy(const Potential& potential, double n, const QuadratureOptions& opt = {}) {
    if (potential.dim == 0 || potential.dim > 3) throw std::invalid_argument("quadrature_free_energy: dimension must be 1..3");
    if (!(n >= 10.0)) throw std::invalid_argument("quadrature_free_energy: n must be at least 10");
    std::size_t splits = 1;
    double prev = detail::boltzmann_integral(potential, n, opt.panels, splits);
    for (std::size_t i = 0; i < opt.max_refinements; ++i) {
        splits *= 2;
        const double next = detail::boltzmann_integral(potential, n, opt.panels, splits);
        if (!(next > 0.0) || !std::isfinite(next)) break;
        if (std::abs(next - prev) <= opt.rel_tolerance * next) return n * potential.min_value() - std::log(next);
        prev = next;
    }
    throw ConvergenceError("quadrature_free_energy: no convergence for " + potential.name + " at n=" + std::to_string(n));
}

/// Idealised LLC estimate (F_n - n L(w*)) / log n, evaluated with the prior
/// normalised over B(w*) so a constant potential gives exactly zero.
inline double idealized_llc(const Potential& potential, double n, const QuadratureOptions& opt = {}) {
    const double f = quadrature_free_energy(potential, n, opt);
    return (f + std::log(potential.box_volume()) - n * potential.min_value()) / std::log(n);
}

}  // namespace llc
