#include "bobylev/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bobylev/errors.hpp"

namespace bobylev {

GaussRule gauss_legendre(std::size_t n) {
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = z;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        if (n == 1) {
            z = 0.0;
            dp = 1.0;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.w[i] = wt;
        rule.w[n - 1 - i] = wt;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    if (n == 1) rule.w[0] = 2.0;
    return rule;
}

void legendre_all(int lmax, double x, std::span<double> out) {
    out[0] = 1.0;
    if (lmax == 0) return;
    out[1] = x;
    for (int l = 2; l <= lmax; ++l)
        out[l] = ((2.0 * l - 1.0) * x * out[l - 1] - (l - 1.0) * out[l - 2]) / l;
}

double legendre(int l, double x) {
    std::vector<double> p(static_cast<std::size_t>(l) + 1);
    legendre_all(l, x, p);
    return p[static_cast<std::size_t>(l)];
}

Integral integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, unsigned max_depth) {
    if (a == b) return {};
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    if (!std::isfinite(v)) throw QuadratureError("adaptive quadrature produced a non-finite value");
    return {v, err * std::abs(v)};
}

double integrate_gauss(const std::function<double(double)>& f, double a, double b,
                       std::size_t panels, const GaussRule& rule) {
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        double s = 0.0;
        for (std::size_t k = 0; k < rule.size(); ++k) s += rule.w[k] * f(lo + 0.5 * h * (rule.x[k] + 1.0));
        sum += 0.5 * h * s;
    }
    return sum;
}

namespace {

int stencil_base(double pos, int n) {
    const int centre = static_cast<int>(std::floor(pos));
    return std::clamp(centre - kStencil / 2 + 1, 0, n - kStencil);
}

// Barycentric weights of the equispaced 8-point stencil: (-1)^k C(7,k).
constexpr std::array<double, kStencil> kBary = {1, -7, 21, -35, 35, -21, 7, -1};

}  // namespace

Stencil lagrange_stencil(double pos, int n) {
    Stencil s;
    s.base = stencil_base(pos, n);
    const double t = pos - s.base;
    for (int k = 0; k < kStencil; ++k) {
        if (t == static_cast<double>(k)) {
            s.w.fill(0.0);
            s.w[static_cast<std::size_t>(k)] = 1.0;
            return s;
        }
    }
    double sum = 0.0;
    for (int k = 0; k < kStencil; ++k) {
        const double v = kBary[static_cast<std::size_t>(k)] / (t - k);
        s.w[static_cast<std::size_t>(k)] = v;
        sum += v;
    }
    for (auto& v : s.w) v /= sum;
    return s;
}

Stencil lagrange_derivative_stencil(double pos, int n) {
    const int base = stencil_base(pos, n);
    return lagrange_derivative_weights(base, pos - base);
}

Stencil lagrange_derivative_weights(int base, double t) {
    // l_k'(t) as a sum of products, valid at the nodes themselves.
    Stencil s;
    s.base = base;
    for (int k = 0; k < kStencil; ++k) {
        double denom = 1.0;
        for (int m = 0; m < kStencil; ++m)
            if (m != k) denom *= static_cast<double>(k - m);
        double deriv = 0.0;
        for (int j = 0; j < kStencil; ++j) {
            if (j == k) continue;
            double prod = 1.0;
            for (int m = 0; m < kStencil; ++m)
                if (m != k && m != j) prod *= (t - m);
            deriv += prod;
        }
        s.w[static_cast<std::size_t>(k)] = deriv / denom;
    }
    return s;
}

double one_minus_sinc(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-2) {
        const double x2 = x * x;
        return x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
    }
    return 1.0 - std::sin(x) / x;
}

}  // namespace bobylev
