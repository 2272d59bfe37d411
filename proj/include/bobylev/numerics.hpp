#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace bobylev {

inline constexpr double kPi = std::numbers::pi;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const { return x.size(); }
};

GaussRule gauss_legendre(std::size_t n);

/// Legendre P_0..P_lmax at x, written to out (size lmax+1).
void legendre_all(int lmax, double x, std::span<double> out);
double legendre(int l, double x);

/// Result of an adaptive integral: value and an a-posteriori error estimate.
struct Integral {
    double value = 0.0;
    double error = 0.0;
};

/// Gauss-Kronrod integral of f on [a, b], bisecting at most max_depth times.
/// max_depth = 0 gives a single 31-point rule with its Kronrod error estimate.
Integral integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, unsigned max_depth = 12);

/// Composite fixed Gauss-Legendre rule on [a,b] with `panels` equal panels.
double integrate_gauss(const std::function<double(double)>& f, double a, double b,
                       std::size_t panels, const GaussRule& rule);

// 8-point Lagrange stencil on a uniform grid; weights for value or first
// derivative at fractional offset t (node spacing 1) from base index.
inline constexpr int kStencil = 8;

struct Stencil {
    int base = 0;
    std::array<double, kStencil> w{};
};

/// Stencil for evaluating at position `pos` (in node units) on a grid of n nodes.
Stencil lagrange_stencil(double pos, int n);

/// Derivative stencil (d/dpos) at position `pos`.
Stencil lagrange_derivative_stencil(double pos, int n);

/// Derivative weights at offset t from an explicit stencil base.
Stencil lagrange_derivative_weights(int base, double t);

/// 1 - sin(x)/x without cancellation near 0.
double one_minus_sinc(double x);

/// sign(x) * |x|^p for p > 0, and 0 at 0.
inline double powabs(double x, double p) { return x == 0.0 ? 0.0 : std::pow(std::abs(x), p); }

}  // namespace bobylev
