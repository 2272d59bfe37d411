#pragma once

#include <span>
#include <vector>

#include "bobylev/charfun.hpp"
#include "bobylev/kernel.hpp"

namespace bobylev {

enum class FlowMode { direct, normalized_cutoff };

struct ThetaRuleSpec {
    double theta_min = 1e-6;  // Taylor-corrected panel below this angle
    double ratio = 0.5;       // geometric grading of panel edges
    double max_width = 0.1;   // panels wider than this are subdivided
    int order = 8;            // Gauss points per panel
};

/// Nodes on [theta_min, π/2] with weights 2π B(θ) sinθ w_q.
struct ThetaRule {
    std::vector<double> theta;
    std::vector<double> weight;
    double theta_min = 0.0;
};

ThetaRule make_theta_rule(const KernelSpec& kernel, const ThetaRuleSpec& spec);

/// G_{lnL}(θ) = (2L+1)/2 ∫ P_L(u) avg_ϕ P_l(u⁺) P_n(u⁻) du for even l, n, L < 2·modes,
/// u⁺ = c u + s√(1-u²) cosϕ, u⁻ = s u - c√(1-u²) cosϕ, c = cos(θ/2), s = sin(θ/2).
/// Dense, index ((k_l·modes + k_n)·modes + k_L).
std::vector<double> galerkin_tensor(int modes, double theta);

/// Right-hand side dw/dt of the Fourier-side collision flow in w = 1 - φ form.
///
/// direct: dw/dt = -∫B (w - w⁺ - w⁻ + w⁺w⁻) dσ, never split into gain and loss.
/// normalized_cutoff: dw/dt = σ̄⁻¹∫B_n (w⁺ + w⁻ - w⁺w⁻) dσ - w, bounded kernels only.
/// Angles below theta_min are integrated by a Taylor expansion against closed-form
/// kernel moments and the small-r models of the state.
class CollisionOperator {
public:
    CollisionOperator(const KernelSpec& kernel, GridPtr grid, int modes, FlowMode mode,
                      const ThetaRuleSpec& rule = {});

    /// out has modes·n entries, mode-major like CharFn::data().
    void apply(const CharFn& state, std::span<double> out) const;
    /// Same operator, single-threaded.
    void apply_serial(const CharFn& state, std::span<double> out) const;

    /// Upper estimate of the largest decay rate of the linearized operator.
    double rate_bound(const CharFn& state) const;

    const ThetaRule& rule() const { return rule_; }
    const KernelSpec& kernel() const { return kernel_; }
    FlowMode mode() const { return mode_; }
    int modes() const { return modes_; }
    /// σ̄ seen by the quadrature (rule plus inner-panel moment); normalized mode only.
    double sigma_bar() const { return sigma_; }

private:
    struct Point {
        int base;  // -1: below the first node, use the small-r model at x
        double x;
        std::array<double, kStencil> w;
    };

    void node(const CharFn& state, int i, std::span<double> out) const;

    KernelSpec kernel_;
    GridPtr grid_;
    int modes_;
    FlowMode mode_;
    ThetaRule rule_;
    std::vector<Point> plus_, minus_;        // per (i, q), i-major
    std::vector<double> pc_, ps_;            // P_{2k}(cos θ/2), P_{2k}(sin θ/2) per (q, k)
    struct Entry {
        int l, n, L;
        double g;
    };
    std::vector<std::vector<Entry>> tensor_; // per q
    std::vector<double> g0_;                 // dense G at θ = 0
    std::vector<double> p_at0_;              // P_{2k}(0)
    double m0_ = 0.0, m2_ = 0.0;             // 2π∫_0^{θm} B sinθ θ^p, p = 0, 2
    std::vector<Stencil> deriv_;             // d/dy stencils at nodes
    double sigma_ = 0.0;
};

struct ReferenceOptions {
    int theta_order = 12;
    double theta_min = 1e-8;
    double max_width = 0.05;
    int n_phi = 0;  // 0: 4·modes + 1
    int n_u = 0;    // 0: 3·modes + 2
};

/// Brute-force serial evaluation in (θ, ϕ, u) space for selected nodes: evaluates
/// w(ξ⁺), w(ξ⁻) through CharFn::w and projects onto Legendre modes by quadrature.
/// Returns dw/dt for each mode at each requested node, node-major.
std::vector<double> collision_rhs_reference(const KernelSpec& kernel, const CharFn& state, FlowMode mode,
                                            const std::vector<int>& nodes, const ReferenceOptions& opt = {});

}  // namespace bobylev
