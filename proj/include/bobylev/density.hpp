#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bobylev/charfun.hpp"
#include "bobylev/selfsim.hpp"

namespace bobylev {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// weight · N(shift, diag(T)).
struct GaussianAtom {
    Vec3 T{1.0, 1.0, 1.0};
    Vec3 shift{};
    double weight = 1.0;

    double eval(const Vec3& v) const;
};

/// Radial density tabulated at Gauss nodes of uniform ρ panels, with a tail
/// Σ C_j ρ^{-p_j} beyond rho_max. Built by inverting a radial characteristic function.
struct RadialTable {
    double rho_max = 40.0;
    double panel = 0.05;
    int order = 12;
    std::vector<double> rho, weight, f;  // nodes, plain Gauss weights, density values
    std::vector<std::pair<double, double>> tail;  // (C_j, p_j), all p_j > 3

    double eval(double rho) const;
    /// 4π∫ρ² f over [0, ∞) and the part of it carried by the tail.
    double mass() const;
    double tail_mass() const;
};

struct ProfileAtom {
    std::shared_ptr<const SelfSimilarProfile> profile;
    std::shared_ptr<const RadialTable> table;
    double weight = 1.0;
};

enum class Family { maxwellian, aniso_gaussian, shifted_gaussian, mixture, selfsim_profile, perturbed_profile };

/// Analytic velocity-space density: a signed combination of Gaussian atoms and
/// self-similar profile atoms. Immutable.
class DensitySpec {
public:
    static DensitySpec maxwellian(double T = 1.0);
    static DensitySpec aniso_gaussian(double T1, double T2, double T3);
    static DensitySpec shifted_gaussian(double T, const Vec3& shift);
    static DensitySpec mixture(const std::vector<double>& weights, const std::vector<DensitySpec>& parts);
    /// The profile density is tabulated once by inverting Ψ̂.
    static DensitySpec selfsim_profile(std::shared_ptr<const SelfSimilarProfile> profile, double rho_max = 40.0);
    /// Ψ + ε(h₁ - h₂), h₁ = aniso_gaussian(T), h₂ = maxwellian(trace/3).
    static DensitySpec perturbed_profile(const DensitySpec& profile, double eps, const Vec3& T);

    Family family() const { return family_; }
    const std::string& name() const { return name_; }
    const std::vector<GaussianAtom>& gaussians() const { return gauss_; }
    const std::vector<ProfileAtom>& profiles() const { return prof_; }

    double mass() const;
    Vec3 mean() const;
    /// ∫ v vᵀ f; empty when a profile atom carries infinite energy.
    std::optional<Mat3> second_moment() const;
    bool radial() const;
    /// Symmetry axis of the Gaussian part (2 when radial); ShapeError if not axisymmetric.
    int axis() const;
    double eval(const Vec3& v) const;

    /// f̂ on the grid as w = 1 - f̂: Gaussians in closed form, profile atoms through Ψ̂.
    CharFn charfn(GridPtr grid, int modes, int axis = -1) const;

private:
    Family family_ = Family::maxwellian;
    std::string name_;
    std::vector<GaussianAtom> gauss_;
    std::vector<ProfileAtom> prof_;
};

/// f - g with profile atoms cancelled; MomentDivergenceError when they do not.
std::vector<GaussianAtom> finite_energy_difference(const DensitySpec& f, const DensitySpec& g);

/// P_jl = ∫(v_j v_l - δ_jl|v|²/3)(f - g) dv, with the decay rate A left at zero.
Deviator second_moment_deviator(const DensitySpec& f, const DensitySpec& g);

struct EnergyCheck {
    double residual = 0.0;  // ∫|v|²(f - g)
    bool zero = false;
};
EnergyCheck check_zero_energy_perturbation(const DensitySpec& f, const DensitySpec& g, double tol = 1e-8);

struct BallRule {
    int panels_per_unit = 4;
    int order = 16;
    int n_u = 32;
    int n_phi = 64;
};

/// Normalized, recentred truncation f_{0R}(v) = f X_R(v + a_R) / Z.
struct CutoffApprox {
    double R = 0.0;
    Vec3 a_R{};
    double Z = 0.0;        // ∫ f X_R
    double mass = 0.0;     // ∫ f_{0R}
    Vec3 mean{};           // ∫ v f_{0R}
    Mat3 second{};         // ∫ v vᵀ f_{0R}
};

CutoffApprox cutoff_approx(const DensitySpec& f, double R, const BallRule& rule = {});

struct DeviatorRow {
    double R = 0.0;
    Mat3 P{};
    double max_dev = 0.0;
};

std::vector<DeviatorRow> deviator_convergence_sweep(const DensitySpec& f, const DensitySpec& g,
                                                    const std::vector<double>& R_list, const BallRule& rule = {});

/// φ(r) = 4π∫ρ² f sinc(rρ) dρ for radial f, by Gauss panels to rho_max (plus the table tail).
CharFn radial_transform(const DensitySpec& f, GridPtr grid, double rho_max = 40.0, double tail_tol = 1e-10);
/// f(ρ) = (2π²)^{-1}∫ r² sinc(rρ) φ(r) dr. When alpha < 2 and K > 0 the table gets the
/// analytic tail C ρ^{-3-α} of w ≈ K r^α plus a ρ^{-3-2α} correction fitted near rho_max.
RadialTable inverse_radial_transform(const CharFn& phi, double rho_max = 40.0, double alpha = 2.0, double K = 0.0);
/// Forward transform of a tabulated density including its analytic tail.
CharFn radial_transform(const RadialTable& table, GridPtr grid, double alpha_hat = 2.0);

struct MomentMetricReport {
    double lhs = 0.0;   // ‖f̂ - ĝ - P̃(0)‖ in D^{2+δ}
    double rhs = 0.0;   // ∫(1 + |v|^{2+δ})|f - g|
    double ratio = 0.0;
    bool rhs_finite = true;
    bool lhs_finite = true;
    bool skipped = false;
};

MomentMetricReport moment_metric_bound_check(const DensitySpec& f, const DensitySpec& g, double delta,
                                             GridPtr grid, int modes = 9, const BallRule& rule = {});

struct NonnegativityReport {
    double min_value = 0.0;
    double rho_at = 0.0;
    double u_at = 0.0;
};
/// Minimum of f over a (ρ, u) sampling grid up to rho_max in the symmetry frame.
NonnegativityReport nonnegativity(const DensitySpec& f, double rho_max = 20.0, int n_rho = 400, int n_u = 41);

}  // namespace bobylev
