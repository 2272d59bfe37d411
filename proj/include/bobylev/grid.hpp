#pragma once

#include <memory>
#include <vector>

#include "bobylev/numerics.hpp"

namespace bobylev {

struct GridSpec {
    int n = 512;
    double r_min = 1e-5;
    double r_max = 20.0;
    double scale = 0.5;  // log-to-linear crossover radius
};

/// Radii r = scale·log(1 + e^y) on a uniform y-grid: log-spaced near 0,
/// linear far out. Interpolation is done in y.
class RadialGrid {
public:
    explicit RadialGrid(const GridSpec& spec);

    int size() const { return static_cast<int>(r_.size()); }
    double r(int i) const { return r_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& radii() const { return r_; }
    double r_min() const { return r_.front(); }
    double r_max() const { return r_.back(); }
    double dy() const { return dy_; }
    const GridSpec& spec() const { return spec_; }

    double y_of(double r) const;
    /// Fractional node index of radius r (0 at the first node).
    double position(double r) const { return (y_of(r) - y0_) / dy_; }
    /// dr/dy at node i.
    double drdy(int i) const { return drdy_[static_cast<std::size_t>(i)]; }
    double drdy_at(double r) const;
    /// Weights for w(r) at r_min ≤ r ≤ r_max. The 8-point interpolation acts on w/r²,
    /// which is nearly flat in y near the origin, and is scaled back by r².
    Stencil stencil(double r) const;

    bool same_as(const RadialGrid& other) const;

private:
    GridSpec spec_;
    double y0_ = 0.0;
    double dy_ = 0.0;
    std::vector<double> r_;
    std::vector<double> drdy_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(const GridSpec& spec) { return std::make_shared<const RadialGrid>(spec); }

}  // namespace bobylev
