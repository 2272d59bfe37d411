#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bobylev/charfun.hpp"
#include "bobylev/collision.hpp"
#include "bobylev/kernel.hpp"

namespace bobylev {

struct FlowOptions {
    FlowMode mode = FlowMode::direct;
    ThetaRuleSpec theta;
    double dt_max = 0.05;
    double cfl = 2.5;         // dt ≤ cfl / rate bound
    double dilation_mu = 0.0; // rescaled frame ξ → e^{μτ}ξ adds -μ r ∂_r w
    double bound_slack = 1e-7;
    int max_halvings = 20;
};

struct FlowDiagnostics {
    double min_abs_phi = 1.0;
    double max_abs_phi = 1.0;
    double max_mass_drift = 0.0;  // |extrapolated w(0)| before the structural w(0) = 0
    double energy_initial = 0.0;  // r² coefficient of mode 0
    double max_energy_rel_change = 0.0;
    long steps = 0;
    long rejected = 0;
};

struct FlowState {
    CharFn phi;
    double t = 0.0;
    KernelSpec kernel;
    FlowMode mode = FlowMode::direct;
    FlowDiagnostics diag;
};

using Observer = std::function<void(const FlowState&)>;

struct Trajectory {
    std::vector<double> times;
    FlowState final;
};

class Flow {
public:
    Flow(const KernelSpec& kernel, GridPtr grid, int modes, const FlowOptions& opt = {});

    FlowState make_state(CharFn phi, double t = 0.0) const;

    /// dw/dt including the dilation drift when set.
    void rhs(const CharFn& state, std::vector<double>& out) const;
    double stable_dt(const CharFn& state) const;

    /// One RK4 step of size dt; a step breaking |φ| ≤ 1 + slack is redone as two halves.
    FlowState step(const FlowState& state, double dt) const;

    /// Advances to t_end with adaptive dt, landing exactly on every observer time.
    Trajectory evolve(FlowState state, double t_end, const std::vector<double>& observe_at,
                      const Observer& observer = {}) const;

    const CollisionOperator& collision() const { return *op_; }
    const FlowOptions& options() const { return opt_; }

private:
    FlowState step_impl(const FlowState& state, double dt, int depth) const;
    void update_diagnostics(FlowState& s) const;

    KernelSpec kernel_;
    GridPtr grid_;
    int modes_;
    FlowOptions opt_;
    std::shared_ptr<const CollisionOperator> op_;
    std::vector<Stencil> upwind_;
    double drift_rate_ = 0.0;
};

/// Checks min and max of the w = 1 - φ samples; returns false when |φ| > 1 + slack.
bool within_bounds(const CharFn& phi, double slack, double* min_abs = nullptr, double* max_abs = nullptr);

struct CoercivityReport {
    double kappa = 0.0;
    int violations = 0;
    int samples = 0;
    double min_integral = 0.0;
};

/// ∫B(1 - |φ(ξ⁻)|)dσ at |ξ| ≥ r_min against κ e^{2sμt}|ξ|^{2s}.
CoercivityReport coercivity_check(const FlowState& state, double mu_alpha, double s, double t1,
                                  double r_min = 2.0, int node_stride = 8);

}  // namespace bobylev
