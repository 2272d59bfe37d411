#include "bobylev/selfsim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "bobylev/errors.hpp"
#include "bobylev/flow.hpp"

namespace bobylev {

namespace {

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double fit_K(const CharFn& psi_hat, double alpha) {
    const auto& g = psi_hat.grid();
    const double r_hi = g.r_min() * 1e3;
    // Near α = 2 the r^{2-α} column is collinear with the constant; drop it there.
    const bool middle = 2.0 - alpha >= 0.2;
    std::vector<int> rows;
    for (int i = 0; i < g.size() && g.r(i) <= r_hi; ++i) rows.push_back(i);
    const int cols = middle ? 3 : 2;
    if (static_cast<int>(rows.size()) < cols + 2) throw DomainError("too few nodes in the three smallest decades");
    Eigen::MatrixXd M(rows.size(), cols);
    Eigen::VectorXd y(rows.size());
    const auto w = psi_hat.mode(0);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const double r = g.r(rows[j]);
        int c = 0;
        M(j, c++) = 1.0;
        if (middle) M(j, c++) = std::pow(r, 2.0 - alpha);
        M(j, c++) = std::pow(r, alpha);
        y(j) = w[static_cast<std::size_t>(rows[j])] / std::pow(r, alpha);
    }
    const Eigen::VectorXd x = M.colPivHouseholderQr().solve(y);
    return x(0);
}

SelfSimilarProfile construct_profile(const KernelSpec& kernel, double alpha, double K, const ProfileOptions& opt) {
    kernel.validate();
    const double floor = kernel.singular() ? 2.0 * kernel.s : 0.0;
    if (!(alpha > floor && alpha < 2.0)) throw DomainError("self-similar profiles need 2s < alpha < 2");
    if (!(K > 0.0)) throw DomainError("K must be positive");
    const KernelConstants kc = constants(kernel, alpha, 0.0);

    SelfSimilarProfile out;
    out.alpha = alpha;
    out.K = K;
    out.kernel = kernel;
    out.mu_alpha = kc.mu_alpha;
    out.lambda_alpha = kc.lambda_alpha;

    const GridPtr grid = make_grid(opt.grid);
    FlowOptions fo;
    fo.theta = opt.theta;
    fo.dilation_mu = kc.mu_alpha;
    const Flow flow(kernel, grid, 1, fo);
    FlowState st = flow.make_state(
        CharFn::radial_w(grid, [&](double r) { return -std::expm1(-K * std::pow(r, alpha)); }, alpha));

    std::vector<double> rate;
    long n = 0;
    while (true) {
        if (n % opt.check_every == 0) {
            flow.rhs(st.phi, rate);
            const double res = sup_abs(rate);
            out.history.emplace_back(st.t, res);
            if (res < opt.tol) {
                out.residual = res;
                break;
            }
            if (st.t >= opt.tau_max)
                throw RelaxationError("rescaled flow did not reach the residual tolerance", out.history);
        }
        st = flow.step(st, flow.stable_dt(st.phi));
        ++n;
    }
    out.tau = st.t;
    out.psi_hat = std::move(st.phi);
    out.K_fit = fit_K(out.psi_hat, alpha);
    return out;
}

CharFn self_similar_at(const SelfSimilarProfile& profile, double t, GridPtr target) {
    if (!(t >= 0.0)) throw DomainError("self_similar_at needs t >= 0");
    const double scale = std::exp(profile.mu_alpha * t);
    if (target->r_max() * scale > profile.psi_hat.grid().r_max() * (1.0 + 1e-12))
        throw OutOfRangeError("dilated radius exceeds the profile grid");
    const CharFn& psi = profile.psi_hat;
    if (t == 0.0 && target->same_as(psi.grid())) return psi;
    return CharFn::radial_w(target, [&](double r) { return psi.w(std::min(scale * r, psi.grid().r_max())); },
                            profile.alpha);
}

CharFn self_similar_at(const SelfSimilarProfile& profile, double t) {
    const auto& spec = profile.psi_hat.grid().spec();
    GridSpec g = spec;
    g.r_max = spec.r_max * std::exp(-profile.mu_alpha * t);
    return self_similar_at(profile, t, make_grid(g));
}

StationarityReport verify_stationarity(const SelfSimilarProfile& profile, double dt, const ThetaRuleSpec& theta) {
    StationarityReport rep;
    rep.dt = dt;
    GridSpec g = profile.psi_hat.grid().spec();
    g.r_max *= std::exp(-profile.mu_alpha * dt);
    const GridPtr grid = make_grid(g);
    rep.r_max = grid->r_max();
    FlowOptions fo;
    fo.theta = theta;
    const Flow flow(profile.kernel, grid, 1, fo);
    const auto traj = flow.evolve(flow.make_state(self_similar_at(profile, 0.0, grid)), dt, {});
    const CharFn expect = self_similar_at(profile, dt, grid);
    const auto& a = traj.final.phi.data();
    const auto& b = expect.data();
    for (std::size_t i = 0; i < a.size(); ++i) rep.discrepancy = std::max(rep.discrepancy, std::abs(a[i] - b[i]));
    return rep;
}

}  // namespace bobylev
