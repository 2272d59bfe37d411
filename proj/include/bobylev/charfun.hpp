#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bobylev/grid.hpp"

namespace bobylev {

/// w(r) ≈ a1 r^p1 + a2 r^p2 below the first grid node.
struct SmallRModel {
    double p1 = 2.0;
    double p2 = 4.0;
    double a1 = 0.0;
    double a2 = 0.0;

    double eval(double r) const { return a1 * std::pow(r, p1) + a2 * std::pow(r, p2); }
    double r_deriv(double r) const { return p1 * a1 * std::pow(r, p1) + p2 * a2 * std::pow(r, p2); }
};

/// Gridded characteristic function φ = 1 - w of an even density.
///
/// The state is stored as w = 1 - φ so that w(0) = 0 holds structurally and
/// small values near the origin keep full relative precision. The radial
/// layout has one mode; the axisymmetric layout stores Legendre coefficients
/// w(r,u) = Σ_k c_k(r) P_{2k}(u), u the cosine to the symmetry axis.
class CharFn {
public:
    CharFn() = default;
    CharFn(GridPtr grid, int modes, double alpha_hat, int axis = 2, int nu = 33);

    static CharFn radial_w(GridPtr grid, const std::function<double(double)>& w, double alpha_hat = 2.0);
    static CharFn radial_phi(GridPtr grid, const std::function<double(double)>& phi,
                             double alpha_hat = 2.0);
    /// Projects w(r,u) onto modes 0..modes-1 with an oversampled Gauss rule in u.
    static CharFn axisymmetric_w(GridPtr grid, int modes, const std::function<double(double, double)>& w,
                                 double alpha_hat = 2.0, int axis = 2, int nu = 33);
    /// Promotes radial data to the axisymmetric layout (higher modes zero).
    static CharFn promote(const CharFn& radial, int modes, int axis = 2, int nu = 33);

    bool radial() const { return modes_ == 1; }
    int modes() const { return modes_; }
    int axis() const { return axis_; }
    int size() const { return grid_->size(); }
    double alpha_hat() const { return alpha_hat_; }
    const RadialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& u_nodes() const { return u_nodes_; }

    std::span<const double> mode(int k) const;
    std::span<double> mode(int k);
    const std::vector<double>& data() const { return w_; }
    std::vector<double>& data() { return w_; }
    const SmallRModel& model(int k) const { return models_[static_cast<std::size_t>(k)]; }

    /// Refit the small-r models after editing the data.
    void refit();

    /// Mode coefficient k at radius r (model below the first node).
    double w_mode(int k, double r) const;
    /// w at (r, u); radial data ignore u.
    double w(double r, double u = 1.0) const;
    double eval(double r) const;
    double eval(double r, double u) const;
    /// φ at node i and polar cosine u.
    double node_phi(int i, double u) const;

private:
    GridPtr grid_;
    int modes_ = 1;
    int axis_ = 2;
    double alpha_hat_ = 2.0;
    std::vector<double> w_;  // mode-major
    std::vector<SmallRModel> models_;
    std::vector<double> u_nodes_;
};

/// Collocation node used with node 0 to fit the small-r model.
inline constexpr int kModelNode = 16;
/// Model orders of mode k given the state's small-r order α̂.
std::pair<double, double> model_orders(int k, double alpha_hat);

/// Trace-free symmetric P_jl(0) and the decay constant A of P̃.
struct Deviator {
    std::array<std::array<double, 3>, 3> P{};
    double A = 0.0;
    std::string cutoff = "quintic";

    void validate() const;
    bool zero(double tol = 0.0) const;
    /// P̃(t, ξ) = -½ e^{-At} ξᵀPξ X(|ξ|).
    double ptilde(double t, const std::array<double, 3>& xi) const;
};

/// Smooth cutoff: 1 on [0,1], 0 on [2,∞), quintic smoothstep in |ξ|² between.
double cutoff_X(double radius);

struct MetricOptions {
    double r_floor = 0.0;     // grid nodes below this radius are skipped
    int refine_levels = 24;   // near-zero sequence r0·2^{-k}
    double zero_rel_tol = 1e-8;
};

struct DMetric {
    double value = 0.0;
    bool infinite = false;
    double r_at = 0.0;           // radius of the supremum (0 for the origin limit)
    double origin_limit = 0.0;   // analytic ξ→0 limit from the model difference
    double truncation_bound = 0.0;  // 2/r_max^α bound on the part beyond the grid
};

DMetric d_alpha(const CharFn& phi, const CharFn& psi, double alpha, const MetricOptions& opt = {});

DMetric d_metric_with_correction(const CharFn& f_hat, const CharFn& g_hat, const Deviator& dev, double t,
                                 double delta, const MetricOptions& opt = {});

/// ((2π)^{-3} ∫ (1+|ξ|²)^N |φ|² dξ)^{1/2}.
double sobolev_norm(const CharFn& phi, int N);
/// Same norm of φ - ψ on a shared grid.
double sobolev_norm_diff(const CharFn& phi, const CharFn& psi, int N);

struct KAlphaReport {
    double d_alpha_to_1 = 0.0;
    bool infinite = false;
    double near_zero_order = 0.0;
    double bound_violation = 0.0;
};

KAlphaReport k_alpha_diagnostic(const CharFn& phi, double alpha);

/// φ ≡ 1 on the grid and layout of `like`.
CharFn unit_charfn(const CharFn& like);

void write_charfn_csv(const CharFn& phi, const std::string& path);
void write_series_csv(const std::vector<std::pair<double, double>>& series, const std::string& path);

}  // namespace bobylev
