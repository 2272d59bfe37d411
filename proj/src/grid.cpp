#include "bobylev/grid.hpp"

#include <algorithm>
#include <cmath>

#include "bobylev/errors.hpp"

namespace bobylev {

RadialGrid::RadialGrid(const GridSpec& spec) : spec_(spec) {
    if (spec.n < 16) throw DomainError("radial grid needs at least 16 nodes");
    if (!(spec.r_min > 0.0 && spec.r_max > spec.r_min && spec.scale > 0.0))
        throw DomainError("radial grid needs 0 < r_min < r_max and scale > 0");
    y0_ = y_of(spec.r_min);
    const double y1 = y_of(spec.r_max);
    dy_ = (y1 - y0_) / (spec.n - 1);
    r_.resize(static_cast<std::size_t>(spec.n));
    drdy_.resize(r_.size());
    for (int i = 0; i < spec.n; ++i) {
        const double y = y0_ + i * dy_;
        // softplus, stable for both signs of y
        const double sp = y > 0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y));
        r_[static_cast<std::size_t>(i)] = spec.scale * sp;
        drdy_[static_cast<std::size_t>(i)] = spec.scale / (1.0 + std::exp(-y));
    }
    r_.front() = spec.r_min;
    r_.back() = spec.r_max;
}

double RadialGrid::y_of(double r) const {
    const double x = r / spec_.scale;
    // inverse softplus: log(e^x - 1)
    return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
}

double RadialGrid::drdy_at(double r) const { return spec_.scale * (-std::expm1(-r / spec_.scale)); }

Stencil RadialGrid::stencil(double r) const {
    const int n = size();
    Stencil st = lagrange_stencil(std::clamp(position(r), 0.0, n - 1.0), n);
    for (int j = 0; j < kStencil; ++j) {
        const double q = r / r_[static_cast<std::size_t>(st.base + j)];
        st.w[static_cast<std::size_t>(j)] *= q * q;
    }
    return st;
}

bool RadialGrid::same_as(const RadialGrid& other) const {
    return spec_.n == other.spec_.n && spec_.r_min == other.spec_.r_min &&
           spec_.r_max == other.spec_.r_max && spec_.scale == other.spec_.scale;
}

}  // namespace bobylev
