#include "bobylev/collision.hpp"

#include <algorithm>
#include <cmath>

#include "bobylev/errors.hpp"

namespace bobylev {

namespace {
constexpr int kMaxModes = 32;
}

ThetaRule make_theta_rule(const KernelSpec& kernel, const ThetaRuleSpec& spec) {
    if (!(spec.theta_min > 0.0 && spec.theta_min < kPi / 2)) throw DomainError("theta_min must lie in (0, pi/2)");
    if (!(spec.ratio > 0.0 && spec.ratio < 1.0)) throw DomainError("panel ratio must lie in (0,1)");
    if (spec.order < 2 || !(spec.max_width > 0.0)) throw DomainError("invalid theta panel settings");
    std::vector<double> edges{kPi / 2};
    for (double e = kPi / 2; e > spec.theta_min;) {
        e = std::max(e * spec.ratio, spec.theta_min);
        edges.push_back(e);
    }
    const double tb = kernel.bound_breakpoint();
    if (tb > spec.theta_min && tb < kPi / 2) edges.push_back(tb);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const auto gl = gauss_legendre(static_cast<std::size_t>(spec.order));
    ThetaRule rule;
    rule.theta_min = spec.theta_min;
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        const int parts = std::max(1, static_cast<int>(std::ceil((edges[j + 1] - edges[j]) / spec.max_width)));
        const double h = (edges[j + 1] - edges[j]) / parts;
        for (int p = 0; p < parts; ++p) {
            const double lo = edges[j] + p * h;
            for (std::size_t q = 0; q < gl.size(); ++q) {
                const double th = lo + 0.5 * h * (gl.x[q] + 1.0);
                rule.theta.push_back(th);
                rule.weight.push_back(2.0 * kPi * eval_kernel(kernel, th) * std::sin(th) * 0.5 * h * gl.w[q]);
            }
        }
    }
    return rule;
}

std::vector<double> galerkin_tensor(int modes, double theta) {
    const int m = modes;
    const int lmax = 2 * (m - 1);
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const auto ur = gauss_legendre(static_cast<std::size_t>(3 * m + 2));
    const int nphi = 4 * m + 1;
    std::vector<double> G(static_cast<std::size_t>(m * m * m), 0.0);
    std::vector<double> pp(static_cast<std::size_t>(lmax) + 1), pm(pp.size()), pu(pp.size());
    std::vector<double> Q(static_cast<std::size_t>(m * m));
    for (std::size_t j = 0; j < ur.size(); ++j) {
        const double u = ur.x[j];
        const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
        std::fill(Q.begin(), Q.end(), 0.0);
        for (int p = 0; p < nphi; ++p) {
            const double cp = std::cos(2.0 * kPi * p / nphi);
            const double up = std::clamp(c * u + s * su * cp, -1.0, 1.0);
            const double um = std::clamp(s * u - c * su * cp, -1.0, 1.0);
            legendre_all(lmax, up, pp);
            legendre_all(lmax, um, pm);
            for (int l = 0; l < m; ++l)
                for (int n = 0; n < m; ++n)
                    Q[static_cast<std::size_t>(l * m + n)] += pp[static_cast<std::size_t>(2 * l)] * pm[static_cast<std::size_t>(2 * n)];
        }
        legendre_all(lmax, u, pu);
        for (int l = 0; l < m; ++l)
            for (int n = 0; n < m; ++n) {
                const double q = Q[static_cast<std::size_t>(l * m + n)] / nphi;
                for (int L = 0; L < m; ++L)
                    G[static_cast<std::size_t>((l * m + n) * m + L)] +=
                        0.5 * (4 * L + 1) * ur.w[j] * pu[static_cast<std::size_t>(2 * L)] * q;
            }
    }
    return G;
}

CollisionOperator::CollisionOperator(const KernelSpec& kernel, GridPtr grid, int modes, FlowMode mode,
                                     const ThetaRuleSpec& rule)
    : kernel_(kernel), grid_(std::move(grid)), modes_(modes), mode_(mode) {
    kernel_.validate();
    if (modes < 1 || modes > kMaxModes) throw ShapeError("mode count must lie in [1, 32]");
    if (mode == FlowMode::normalized_cutoff && kernel.singular())
        throw DomainError("normalized_cutoff mode needs a bounded kernel");
    rule_ = make_theta_rule(kernel_, rule);
    const int n = grid_->size();
    const std::size_t nq = rule_.theta.size();
    const double r0 = grid_->r_min();

    auto point = [&](double x) {
        Point p{};
        p.x = x;
        if (x <= r0) {
            p.base = -1;
        } else {
            const auto st = grid_->stencil(std::min(x, grid_->r_max()));
            p.base = st.base;
            p.w = st.w;
        }
        return p;
    };
    plus_.resize(static_cast<std::size_t>(n) * nq);
    minus_.resize(plus_.size());
    for (int i = 0; i < n; ++i) {
        const double r = grid_->r(i);
        for (std::size_t q = 0; q < nq; ++q) {
            const double th = rule_.theta[q];
            plus_[static_cast<std::size_t>(i) * nq + q] = point(r * std::cos(0.5 * th));
            minus_[static_cast<std::size_t>(i) * nq + q] = point(r * std::sin(0.5 * th));
        }
    }
    const int lmax = 2 * (modes - 1);
    pc_.resize(nq * static_cast<std::size_t>(modes));
    ps_.resize(pc_.size());
    std::vector<double> tmp(static_cast<std::size_t>(lmax) + 1);
    for (std::size_t q = 0; q < nq; ++q) {
        legendre_all(lmax, std::cos(0.5 * rule_.theta[q]), tmp);
        for (int k = 0; k < modes; ++k) pc_[q * static_cast<std::size_t>(modes) + static_cast<std::size_t>(k)] = tmp[static_cast<std::size_t>(2 * k)];
        legendre_all(lmax, std::sin(0.5 * rule_.theta[q]), tmp);
        for (int k = 0; k < modes; ++k) ps_[q * static_cast<std::size_t>(modes) + static_cast<std::size_t>(k)] = tmp[static_cast<std::size_t>(2 * k)];
    }
    legendre_all(lmax, 0.0, tmp);
    for (int k = 0; k < modes; ++k) p_at0_.push_back(tmp[static_cast<std::size_t>(2 * k)]);
    if (modes > 1) {
        tensor_.resize(nq);
        for (std::size_t q = 0; q < nq; ++q) {
            const auto G = galerkin_tensor(modes, rule_.theta[q]);
            for (int l = 0; l < modes; ++l)
                for (int m = 0; m < modes; ++m)
                    for (int L = 0; L < modes; ++L) {
                        const double g = G[static_cast<std::size_t>((l * modes + m) * modes + L)];
                        if (std::abs(g) > 1e-15) tensor_[q].push_back({l, m, L, g});
                    }
        }
        g0_ = galerkin_tensor(modes, 0.0);
    } else {
        g0_ = {1.0};
    }
    const double tm = rule_.theta_min;
    m2_ = 2.0 * kPi * kernel_moment(kernel_, 0.0, tm, 2.0);
    double total = 0.0;
    for (double w : rule_.weight) total += w;
    if (!kernel_.singular()) {
        m0_ = 2.0 * kPi * kernel_moment(kernel_, 0.0, tm, 0.0);
        sigma_ = total + m0_;
    }
    deriv_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) deriv_[static_cast<std::size_t>(i)] = lagrange_derivative_stencil(i, n);
}

void CollisionOperator::node(const CharFn& state, int i, std::span<double> out) const {
    const int m = modes_;
    const int n = grid_->size();
    const std::size_t nq = rule_.theta.size();
    const double r = grid_->r(i);
    std::array<double, kMaxModes> ci{}, acc{}, a{}, b{}, quad{};
    std::array<const double*, kMaxModes> cm{};
    for (int k = 0; k < m; ++k) {
        cm[static_cast<std::size_t>(k)] = state.mode(k).data();
        ci[static_cast<std::size_t>(k)] = cm[static_cast<std::size_t>(k)][i];
    }
    auto interp = [&](const Point& p, std::array<double, kMaxModes>& dst) {
        if (p.base < 0) {
            for (int k = 0; k < m; ++k) dst[static_cast<std::size_t>(k)] = state.model(k).eval(p.x);
            return;
        }
        for (int k = 0; k < m; ++k) {
            const double* c = cm[static_cast<std::size_t>(k)] + p.base;
            double v = 0.0;
            for (int j = 0; j < kStencil; ++j) v += p.w[static_cast<std::size_t>(j)] * c[j];
            dst[static_cast<std::size_t>(k)] = v;
        }
    };
    const Point* pp = plus_.data() + static_cast<std::size_t>(i) * nq;
    const Point* pm = minus_.data() + static_cast<std::size_t>(i) * nq;
    for (std::size_t q = 0; q < nq; ++q) {
        interp(pp[q], a);
        interp(pm[q], b);
        const double wq = rule_.weight[q];
        if (m == 1) {
            acc[0] += wq * (ci[0] - a[0] - b[0] + a[0] * b[0]);
            continue;
        }
        std::fill(quad.begin(), quad.begin() + m, 0.0);
        for (const auto& e : tensor_[q])
            quad[static_cast<std::size_t>(e.L)] += e.g * a[static_cast<std::size_t>(e.l)] * b[static_cast<std::size_t>(e.n)];
        const double* pcq = pc_.data() + q * static_cast<std::size_t>(m);
        const double* psq = ps_.data() + q * static_cast<std::size_t>(m);
        for (int k = 0; k < m; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            acc[kk] += wq * (ci[kk] - a[kk] * pcq[k] - b[kk] * psq[k] + quad[kk]);
        }
    }

    // Inner panel [0, θm]: F_L ≈ θ²/8 (r c_L' + L(L+1)/2 c_L) + Σ_n coef_{nL} ĉ_n(rθ/2).
    const auto& st = deriv_[static_cast<std::size_t>(i)];
    const double r_over = r / (grid_->drdy(i) * grid_->dy());
    std::array<double, kMaxModes> mhat{};
    for (int k = 0; k < m; ++k) {
        const auto& md = state.model(k);
        const double tm = rule_.theta_min;
        mhat[static_cast<std::size_t>(k)] =
            2.0 * kPi *
            (md.a1 * std::pow(0.5 * r, md.p1) * kernel_moment(kernel_, 0.0, tm, md.p1) +
             md.a2 * std::pow(0.5 * r, md.p2) * kernel_moment(kernel_, 0.0, tm, md.p2));
    }
    for (int L = 0; L < m; ++L) {
        const auto LL = static_cast<std::size_t>(L);
        const double* c = cm[LL] + st.base;
        double dcdy = 0.0;
        for (int j = 0; j < kStencil; ++j) dcdy += st.w[static_cast<std::size_t>(j)] * c[j];
        const double ll = 2.0 * L * (2.0 * L + 1.0);
        double inner = m2_ / 8.0 * (r_over * dcdy + 0.5 * ll * ci[LL]);
        for (int k = 0; k < m; ++k) {
            double coef = (k == L ? -p_at0_[LL] : 0.0);
            for (int l = 0; l < m; ++l) coef += ci[static_cast<std::size_t>(l)] * g0_[static_cast<std::size_t>((l * m + k) * m + L)];
            inner += coef * mhat[static_cast<std::size_t>(k)];
        }
        const std::size_t idx = LL * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
        if (mode_ == FlowMode::direct) {
            out[idx] = -(acc[LL] + inner);
        } else {
            const double gain = ((sigma_ - m0_) * ci[LL] - acc[LL] + m0_ * ci[LL] - inner) / sigma_;
            out[idx] = gain - ci[LL];
        }
    }
}

void CollisionOperator::apply(const CharFn& state, std::span<double> out) const {
    if (state.modes() != modes_ || !state.grid().same_as(*grid_)) throw ShapeError("state does not match operator");
    const int n = grid_->size();
    if (out.size() != static_cast<std::size_t>(modes_) * static_cast<std::size_t>(n)) throw ShapeError("output size");
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) node(state, i, out);
}

void CollisionOperator::apply_serial(const CharFn& state, std::span<double> out) const {
    if (state.modes() != modes_ || !state.grid().same_as(*grid_)) throw ShapeError("state does not match operator");
    const int n = grid_->size();
    if (out.size() != static_cast<std::size_t>(modes_) * static_cast<std::size_t>(n)) throw ShapeError("output size");
    for (int i = 0; i < n; ++i) node(state, i, out);
}

double CollisionOperator::rate_bound(const CharFn& state) const {
    const int n = grid_->size();
    const std::size_t nq = rule_.theta.size();
    const double lmax = 2.0 * (modes_ - 1);
    const double ang = 0.5 * lmax * (lmax + 1.0);
    const auto c0 = state.mode(0);
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double transport = grid_->r(i) / (grid_->drdy(i) * grid_->dy()) + ang;
        double lam = m2_ / 8.0 * transport;
        for (std::size_t q = 0; q < nq; ++q) {
            const Point& p = minus_[static_cast<std::size_t>(i) * nq + q];
            double wm = 0.0;
            if (p.base < 0) {
                wm = state.model(0).eval(p.x);
            } else {
                for (int j = 0; j < kStencil; ++j) wm += p.w[static_cast<std::size_t>(j)] * c0[static_cast<std::size_t>(p.base + j)];
            }
            const double th = rule_.theta[q];
            lam += rule_.weight[q] * std::min(2.0, std::abs(wm) + th * th / 8.0 * transport);
        }
        if (mode_ == FlowMode::normalized_cutoff) lam = lam / sigma_ + 1.0;
        best = std::max(best, lam);
    }
    return best;
}

}  // namespace bobylev
