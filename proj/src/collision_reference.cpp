#include <algorithm>
#include <cmath>

#include "bobylev/collision.hpp"
#include "bobylev/errors.hpp"

namespace bobylev {

// Direct (θ, ϕ, u) quadrature with no precomputed tensors. Angles below
// theta_min are dropped in direct mode (contribution O(θm^{min(2,α̂)-2s})),
// and approximated by w·M(0) in the gain of the normalized mode.
std::vector<double> collision_rhs_reference(const KernelSpec& kernel, const CharFn& state, FlowMode mode,
                                            const std::vector<int>& nodes, const ReferenceOptions& opt) {
    if (mode == FlowMode::normalized_cutoff && kernel.singular())
        throw DomainError("normalized_cutoff mode needs a bounded kernel");
    const int m = state.modes();
    const ThetaRule rule = make_theta_rule(kernel, {opt.theta_min, 0.5, opt.max_width, opt.theta_order});
    const int nphi = opt.n_phi > 0 ? opt.n_phi : 4 * m + 1;
    const auto ur = gauss_legendre(static_cast<std::size_t>(opt.n_u > 0 ? opt.n_u : 3 * m + 2));
    const double m0 =
        mode == FlowMode::normalized_cutoff ? 2.0 * kPi * kernel_moment(kernel, 0.0, opt.theta_min, 0.0) : 0.0;
    double sigma = m0;
    for (double w : rule.weight) sigma += w;

    std::vector<double> out;
    out.reserve(nodes.size() * static_cast<std::size_t>(m));
    std::vector<double> pl(static_cast<std::size_t>(2 * m - 1));
    for (int i : nodes) {
        const double r = state.grid().r(i);
        std::vector<double> modal(static_cast<std::size_t>(m), 0.0);
        for (std::size_t j = 0; j < ur.size(); ++j) {
            const double u = m == 1 ? 1.0 : ur.x[j];
            const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
            const double w0 = state.w(r, u);
            double integral = 0.0;
            for (std::size_t q = 0; q < rule.theta.size(); ++q) {
                const double c = std::cos(0.5 * rule.theta[q]);
                const double s = std::sin(0.5 * rule.theta[q]);
                double avg = 0.0;
                for (int p = 0; p < nphi; ++p) {
                    const double cp = std::cos(2.0 * kPi * p / nphi);
                    const double wp = state.w(r * c, std::clamp(c * u + s * su * cp, -1.0, 1.0));
                    const double wm = state.w(r * s, std::clamp(s * u - c * su * cp, -1.0, 1.0));
                    avg += mode == FlowMode::direct ? (w0 - wp - wm + wp * wm) : (wp + wm - wp * wm);
                }
                integral += rule.weight[q] * avg / nphi;
            }
            double rate = 0.0;
            if (mode == FlowMode::direct) {
                rate = -integral;
            } else {
                integral += w0 * m0;
                rate = integral / sigma - w0;
            }
            if (m == 1) {
                modal[0] = rate;
                break;
            }
            legendre_all(2 * (m - 1), u, pl);
            for (int k = 0; k < m; ++k)
                modal[static_cast<std::size_t>(k)] += 0.5 * (4 * k + 1) * ur.w[j] * pl[static_cast<std::size_t>(2 * k)] * rate;
        }
        out.insert(out.end(), modal.begin(), modal.end());
    }
    return out;
}

}  // namespace bobylev
