#include "bobylev/flow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "bobylev/errors.hpp"

namespace bobylev {

Flow::Flow(const KernelSpec& kernel, GridPtr grid, int modes, const FlowOptions& opt)
    : kernel_(kernel), grid_(std::move(grid)), modes_(modes), opt_(opt) {
    op_ = std::make_shared<const CollisionOperator>(kernel_, grid_, modes_, opt_.mode, opt_.theta);
    const int n = grid_->size();
    if (opt_.dilation_mu != 0.0) {
        // Upwind-biased for outward drift: five nodes behind, two ahead.
        upwind_.resize(static_cast<std::size_t>(n));
        double fastest = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i + 2 < n || i < kStencil) {
                const int base = std::clamp(i - 5, 0, n - kStencil);
                upwind_[static_cast<std::size_t>(i)] = lagrange_derivative_weights(base, i - base);
            } else {
                // Fully one-sided high-order stencils are unstable at the outflow end.
                Stencil s;
                s.base = i - (kStencil - 1);
                s.w[kStencil - 3] = 0.5;
                s.w[kStencil - 2] = -2.0;
                s.w[kStencil - 1] = 1.5;
                upwind_[static_cast<std::size_t>(i)] = s;
            }
            fastest = std::max(fastest, grid_->r(i) / (grid_->drdy(i) * grid_->dy()));
        }
        // Largest |symbol| of the interior stencil over the resolved wavenumbers.
        const Stencil in = lagrange_derivative_weights(0, 5.0);
        double symbol = 0.0;
        for (int q = 0; q <= 512; ++q) {
            std::complex<double> z = 0.0;
            for (int j = 0; j < kStencil; ++j)
                z += in.w[static_cast<std::size_t>(j)] * std::polar(1.0, kPi * q / 512.0 * (j - 5));
            symbol = std::max(symbol, std::abs(z));
        }
        drift_rate_ = symbol * std::abs(opt_.dilation_mu) * fastest;
    }
}

FlowState Flow::make_state(CharFn phi, double t) const {
    if (phi.modes() != modes_ || !phi.grid().same_as(*grid_)) throw ShapeError("state does not match flow");
    FlowState s;
    s.phi = std::move(phi);
    s.t = t;
    s.kernel = kernel_;
    s.mode = opt_.mode;
    const auto& m = s.phi.model(0);
    s.diag.energy_initial = m.p1 == 2.0 ? m.a1 : 0.0;
    double lo = 1.0, hi = 1.0;
    if (!within_bounds(s.phi, opt_.bound_slack, &lo, &hi)) throw DomainError("initial state violates |phi| <= 1");
    s.diag.min_abs_phi = lo;
    s.diag.max_abs_phi = hi;
    return s;
}

void Flow::rhs(const CharFn& state, std::vector<double>& out) const {
    out.resize(state.data().size());
    op_->apply(state, out);
    if (opt_.dilation_mu == 0.0) return;
    const int n = grid_->size();
    for (int k = 0; k < modes_; ++k) {
        const auto c = state.mode(k);
        const auto& model = state.model(k);
        for (int i = 0; i < n; ++i) {
            double rdw = 0.0;
            if (i < 5) {
                rdw = model.r_deriv(grid_->r(i));
            } else {
                const auto& st = upwind_[static_cast<std::size_t>(i)];
                double d = 0.0;
                for (int j = 0; j < kStencil; ++j) d += st.w[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(st.base + j)];
                rdw = grid_->r(i) / (grid_->drdy(i) * grid_->dy()) * d;
            }
            out[static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] -=
                opt_.dilation_mu * rdw;
        }
    }
}

double Flow::stable_dt(const CharFn& state) const {
    const double rate = op_->rate_bound(state) + drift_rate_;
    return std::min(opt_.dt_max, opt_.cfl / std::max(rate, 1e-12));
}

bool within_bounds(const CharFn& phi, double slack, double* min_abs, double* max_abs) {
    std::vector<double> us = phi.u_nodes();
    if (!phi.radial()) {
        us.push_back(0.0);
        us.push_back(1.0);
    }
    const int m = phi.modes();
    std::vector<std::vector<double>> pl(us.size(), std::vector<double>(static_cast<std::size_t>(2 * m - 1)));
    for (std::size_t j = 0; j < us.size(); ++j) legendre_all(2 * (m - 1), us[j], pl[j]);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < phi.size(); ++i)
        for (std::size_t j = 0; j < us.size(); ++j) {
            double v = 1.0;
            for (int k = 0; k < m; ++k) v -= phi.mode(k)[static_cast<std::size_t>(i)] * pl[j][static_cast<std::size_t>(2 * k)];
            lo = std::min(lo, std::abs(v));
            hi = std::max(hi, std::abs(v));
        }
    if (min_abs) *min_abs = lo;
    if (max_abs) *max_abs = hi;
    return std::isfinite(hi) && hi <= 1.0 + slack;
}

FlowState Flow::step(const FlowState& state, double dt) const {
    if (!(dt > 0.0)) throw DomainError("step size must be positive");
    return step_impl(state, dt, 0);
}

FlowState Flow::step_impl(const FlowState& state, double dt, int depth) const {
    const auto& w0 = state.phi.data();
    const std::size_t sz = w0.size();
    std::vector<double> k1, k2, k3, k4;
    CharFn stage = state.phi;
    auto set_stage = [&](const std::vector<double>& k, double h) {
        auto& ws = stage.data();
        for (std::size_t j = 0; j < sz; ++j) ws[j] = w0[j] + h * k[j];
        stage.refit();
    };
    rhs(state.phi, k1);
    set_stage(k1, 0.5 * dt);
    rhs(stage, k2);
    set_stage(k2, 0.5 * dt);
    rhs(stage, k3);
    set_stage(k3, dt);
    rhs(stage, k4);

    FlowState next = state;
    auto& w = next.phi.data();
    bool finite = true;
    for (std::size_t j = 0; j < sz; ++j) {
        w[j] = w0[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        finite = finite && std::isfinite(w[j]);
    }
    next.phi.refit();
    double lo = 1.0, hi = 1.0;
    if (!finite || !within_bounds(next.phi, opt_.bound_slack, &lo, &hi)) {
        if (depth >= opt_.max_halvings) throw StiffnessError("step size underflow after repeated rejection");
        FlowState half = step_impl(state, 0.5 * dt, depth + 1);
        half.diag.rejected += 1;
        return step_impl(half, 0.5 * dt, depth + 1);
    }
    next.t = state.t + dt;
    next.diag.steps += 1;
    next.diag.min_abs_phi = std::min(next.diag.min_abs_phi, lo);
    next.diag.max_abs_phi = std::max(next.diag.max_abs_phi, hi);
    update_diagnostics(next);
    return next;
}

void Flow::update_diagnostics(FlowState& s) const {
    // Constant term of w ≈ c0 + a1 r^p1 + a2 r^p2 through the first three nodes.
    const auto c = s.phi.mode(0);
    const auto& m = s.phi.model(0);
    double A[3][4];
    for (int i = 0; i < 3; ++i) {
        const double r = grid_->r(i);
        const double sc = std::pow(grid_->r(0), m.p1);
        A[i][0] = 1.0;
        A[i][1] = std::pow(r, m.p1) / sc;
        A[i][2] = std::pow(r, m.p2) / (sc * std::pow(grid_->r(0), m.p2 - m.p1));
        A[i][3] = c[static_cast<std::size_t>(i)];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(A[row][col]) > std::abs(A[piv][col])) piv = row;
        std::swap(A[col], A[piv]);
        for (int row = 0; row < 3; ++row) {
            if (row == col) continue;
            const double f = A[row][col] / A[col][col];
            for (int j = col; j < 4; ++j) A[row][j] -= f * A[col][j];
        }
    }
    const double c0 = A[0][3] / A[0][0];
    if (std::isfinite(c0)) s.diag.max_mass_drift = std::max(s.diag.max_mass_drift, std::abs(c0));
    if (m.p1 == 2.0 && s.diag.energy_initial != 0.0)
        s.diag.max_energy_rel_change =
            std::max(s.diag.max_energy_rel_change, std::abs(m.a1 / s.diag.energy_initial - 1.0));
}

Trajectory Flow::evolve(FlowState state, double t_end, const std::vector<double>& observe_at,
                        const Observer& observer) const {
    Trajectory traj;
    if (!(t_end >= state.t)) throw DomainError("t_end precedes the current time");
    std::vector<double> marks;
    for (double t : observe_at)
        if (t >= state.t - 1e-12 && t <= t_end + 1e-12) marks.push_back(t);
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    std::size_t next_mark = 0;
    auto fire = [&] {
        while (next_mark < marks.size() && std::abs(marks[next_mark] - state.t) <= 1e-12) {
            traj.times.push_back(state.t);
            if (observer) observer(state);
            ++next_mark;
        }
    };
    fire();
    while (state.t < t_end - 1e-12) {
        const double target = next_mark < marks.size() ? std::min(marks[next_mark], t_end) : t_end;
        const double span = target - state.t;
        const double dt0 = stable_dt(state.phi);
        const double n = std::ceil(span / dt0 - 1e-9);
        const double dt = span / std::max(1.0, n);
        state = step(state, dt);
        if (std::abs(state.t - target) < 1e-12) state.t = target;
        fire();
    }
    traj.final = std::move(state);
    return traj;
}

CoercivityReport coercivity_check(const FlowState& state, double mu_alpha, double s, double t1, double r_min,
                                  int node_stride) {
    if (state.t < t1 - 1e-12) throw DomainError("coercivity check requires t >= t1");
    const auto rule = make_theta_rule(state.kernel, {});
    const auto& phi = state.phi;
    const std::vector<double> us = phi.radial() ? std::vector<double>{1.0}
                                                : std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0};
    const int nphi = phi.radial() ? 1 : 8;
    CoercivityReport rep;
    rep.kappa = std::numeric_limits<double>::infinity();
    rep.min_integral = std::numeric_limits<double>::infinity();
    const double growth = std::exp(2.0 * s * mu_alpha * state.t);
    for (int i = 0; i < phi.size(); i += std::max(1, node_stride)) {
        const double r = phi.grid().r(i);
        if (r < r_min) continue;
        for (double u : us) {
            const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
            double integral = 0.0;
            for (std::size_t q = 0; q < rule.theta.size(); ++q) {
                const double c = std::cos(0.5 * rule.theta[q]), sn = std::sin(0.5 * rule.theta[q]);
                double avg = 0.0;
                for (int p = 0; p < nphi; ++p) {
                    const double cp = std::cos(2.0 * kPi * p / nphi);
                    const double um = std::clamp(sn * u - c * su * cp, -1.0, 1.0);
                    avg += 1.0 - std::abs(phi.eval(r * sn, phi.radial() ? 1.0 : um));
                }
                integral += rule.weight[q] * avg / nphi;
            }
            ++rep.samples;
            if (integral <= 0.0) ++rep.violations;
            rep.min_integral = std::min(rep.min_integral, integral);
            rep.kappa = std::min(rep.kappa, integral / (growth * std::pow(r, 2.0 * s)));
        }
    }
    if (rep.samples == 0) throw DomainError("no grid nodes with |xi| >= r_min");
    return rep;
}

}  // namespace bobylev
