#include "bobylev/charfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>

#include "bobylev/errors.hpp"

namespace bobylev {

std::pair<double, double> model_orders(int k, double alpha_hat) {
    if (k == 0) return alpha_hat >= 2.0 ? std::pair{2.0, 4.0} : std::pair{alpha_hat, 2.0 * alpha_hat};
    return {2.0, 2.0 + alpha_hat};
}

CharFn::CharFn(GridPtr grid, int modes, double alpha_hat, int axis, int nu)
    : grid_(std::move(grid)), modes_(modes), axis_(axis), alpha_hat_(alpha_hat) {
    if (!grid_) throw ShapeError("charfn needs a grid");
    if (modes < 1) throw ShapeError("charfn needs at least one mode");
    if (axis < 0 || axis > 2) throw ShapeError("symmetry axis must be 0, 1 or 2");
    if (!(alpha_hat > 0.0 && alpha_hat <= 2.0)) throw DomainError("small-r order must lie in (0,2]");
    w_.assign(static_cast<std::size_t>(modes) * static_cast<std::size_t>(grid_->size()), 0.0);
    models_.resize(static_cast<std::size_t>(modes));
    for (int k = 0; k < modes; ++k) {
        const auto [p1, p2] = model_orders(k, alpha_hat);
        models_[static_cast<std::size_t>(k)].p1 = p1;
        models_[static_cast<std::size_t>(k)].p2 = p2;
    }
    if (modes > 1) u_nodes_ = gauss_legendre(static_cast<std::size_t>(nu)).x;
    else u_nodes_ = {1.0};
}

CharFn CharFn::radial_w(GridPtr grid, const std::function<double(double)>& w, double alpha_hat) {
    CharFn out(std::move(grid), 1, alpha_hat);
    for (int i = 0; i < out.size(); ++i) out.w_[static_cast<std::size_t>(i)] = w(out.grid().r(i));
    out.refit();
    return out;
}

CharFn CharFn::radial_phi(GridPtr grid, const std::function<double(double)>& phi, double alpha_hat) {
    return radial_w(std::move(grid), [&](double r) { return 1.0 - phi(r); }, alpha_hat);
}

CharFn CharFn::axisymmetric_w(GridPtr grid, int modes, const std::function<double(double, double)>& w,
                              double alpha_hat, int axis, int nu) {
    CharFn out(std::move(grid), modes, alpha_hat, axis, nu);
    const auto rule = gauss_legendre(static_cast<std::size_t>(std::max(64, 4 * modes + 8)));
    const int lmax = 2 * (modes - 1);
    std::vector<std::vector<double>> pl(rule.size(), std::vector<double>(static_cast<std::size_t>(lmax) + 1));
    for (std::size_t q = 0; q < rule.size(); ++q) legendre_all(lmax, rule.x[q], pl[q]);
    const int n = out.size();
    for (int i = 0; i < n; ++i) {
        const double r = out.grid().r(i);
        std::vector<double> wq(rule.size());
        for (std::size_t q = 0; q < rule.size(); ++q) wq[q] = w(r, rule.x[q]);
        for (int k = 0; k < modes; ++k) {
            double c = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q) c += rule.w[q] * wq[q] * pl[q][static_cast<std::size_t>(2 * k)];
            out.mode(k)[static_cast<std::size_t>(i)] = 0.5 * (4 * k + 1) * c;
        }
    }
    out.refit();
    return out;
}

CharFn CharFn::promote(const CharFn& radial, int modes, int axis, int nu) {
    if (!radial.radial()) throw ShapeError("promote expects radial data");
    CharFn out(radial.grid_, modes, radial.alpha_hat_, axis, nu);
    std::copy(radial.w_.begin(), radial.w_.end(), out.w_.begin());
    out.refit();
    return out;
}

std::span<const double> CharFn::mode(int k) const {
    const auto n = static_cast<std::size_t>(size());
    return {w_.data() + static_cast<std::size_t>(k) * n, n};
}

std::span<double> CharFn::mode(int k) {
    const auto n = static_cast<std::size_t>(size());
    return {w_.data() + static_cast<std::size_t>(k) * n, n};
}

void CharFn::refit() {
    const int j = std::min(kModelNode, size() - 1);
    const double r0 = grid_->r(0);
    const double rj = grid_->r(j);
    for (int k = 0; k < modes_; ++k) {
        auto& m = models_[static_cast<std::size_t>(k)];
        const auto c = mode(k);
        // [r0^p1 r0^p2; rj^p1 rj^p2] a = [w0; wj], scaled by r0^p1 for conditioning
        const double x = rj / r0;
        const double e = std::pow(r0, m.p2 - m.p1);
        const double b0 = c[0] / std::pow(r0, m.p1);
        const double bj = c[static_cast<std::size_t>(j)] / std::pow(rj, m.p1);
        // b0 = a1 + a2 e, bj = a1 + a2 e x^{p2-p1}
        const double ex = e * std::pow(x, m.p2 - m.p1);
        m.a2 = (bj - b0) / (ex - e);
        m.a1 = b0 - m.a2 * e;
    }
}

double CharFn::w_mode(int k, double r) const {
    if (!(r >= 0.0)) throw DomainError("radius must be non-negative");
    const auto& g = *grid_;
    if (r <= g.r_min()) return model(k).eval(r);
    if (r > g.r_max() * (1.0 + 1e-12)) throw OutOfRangeError("radius beyond r_max");
    const auto st = g.stencil(r);
    const auto c = mode(k);
    double v = 0.0;
    for (int q = 0; q < kStencil; ++q) v += st.w[static_cast<std::size_t>(q)] * c[static_cast<std::size_t>(st.base + q)];
    return v;
}

double CharFn::w(double r, double u) const {
    if (modes_ == 1) return w_mode(0, r);
    std::vector<double> p(static_cast<std::size_t>(2 * modes_ - 1));
    legendre_all(2 * (modes_ - 1), u, p);
    double v = 0.0;
    for (int k = 0; k < modes_; ++k) v += w_mode(k, r) * p[static_cast<std::size_t>(2 * k)];
    return v;
}

double CharFn::eval(double r) const {
    if (modes_ != 1) throw ShapeError("axisymmetric charfn needs a polar cosine");
    return 1.0 - w_mode(0, r);
}

double CharFn::eval(double r, double u) const {
    if (!(u >= -1.0 && u <= 1.0)) throw DomainError("polar cosine outside [-1,1]");
    return 1.0 - w(r, u);
}

double CharFn::node_phi(int i, double u) const {
    if (modes_ == 1) return 1.0 - mode(0)[static_cast<std::size_t>(i)];
    std::vector<double> p(static_cast<std::size_t>(2 * modes_ - 1));
    legendre_all(2 * (modes_ - 1), u, p);
    double v = 1.0;
    for (int k = 0; k < modes_; ++k) v -= mode(k)[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(2 * k)];
    return v;
}

CharFn unit_charfn(const CharFn& like) {
    CharFn out(like.grid_ptr(), like.modes(), like.alpha_hat(), like.axis(),
               like.radial() ? 33 : static_cast<int>(like.u_nodes().size()));
    return out;
}

void Deviator::validate() const {
    double scale = 0.0;
    for (const auto& row : P)
        for (double v : row) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * std::max(1.0, scale);
    if (std::abs(P[0][0] + P[1][1] + P[2][2]) > tol) throw DomainError("deviator must be trace-free");
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < j; ++l)
            if (std::abs(P[j][l] - P[l][j]) > tol) throw DomainError("deviator must be symmetric");
}

bool Deviator::zero(double tol) const {
    for (const auto& row : P)
        for (double v : row)
            if (std::abs(v) > tol) return false;
    return true;
}

double Deviator::ptilde(double t, const std::array<double, 3>& xi) const {
    double q = 0.0;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) q += xi[j] * xi[l] * P[j][l];
    const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    return -0.5 * std::exp(-A * t) * q * cutoff_X(r);
}

double cutoff_X(double radius) {
    if (radius <= 1.0) return 1.0;
    if (radius >= 2.0) return 0.0;
    const double t = (radius * radius - 1.0) / 3.0;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

namespace {

struct Sample {
    std::vector<double> p;  // P_{2k}(u), k < modes
    double q = 0.0;         // ξ̂ᵀPξ̂ along this direction
};

void check_compatible(const CharFn& a, const CharFn& b) {
    if (!a.grid().same_as(b.grid())) throw ShapeError("charfns live on different grids");
    if (!a.radial() && !b.radial() && a.axis() != b.axis())
        throw ShapeError("charfns have different symmetry axes");
}

std::vector<Sample> make_samples(const CharFn& f, const CharFn& g, const Deviator* dev) {
    const int modes = std::max(f.modes(), g.modes());
    std::vector<Sample> out;
    if (modes == 1) {
        if (dev && !dev->zero()) {
            Eigen::Matrix3d m;
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) m(j, l) = dev->P[j][l];
            const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
            out.push_back({{1.0}, es.eigenvalues()(0)});
            out.push_back({{1.0}, es.eigenvalues()(2)});
        } else {
            out.push_back({{1.0}, 0.0});
        }
        return out;
    }
    const int axis = f.radial() ? g.axis() : f.axis();
    double p_par = 0.0, p_perp = 0.0;
    if (dev) {
        const int b = (axis + 1) % 3, c = (axis + 2) % 3;
        const auto& P = dev->P;
        double scale = 0.0;
        for (const auto& row : P)
            for (double v : row) scale = std::max(scale, std::abs(v));
        const double tol = 1e-12 * std::max(1.0, scale);
        if (std::abs(P[b][b] - P[c][c]) > tol || std::abs(P[0][1]) > tol || std::abs(P[0][2]) > tol ||
            std::abs(P[1][2]) > tol)
            throw ShapeError("deviator is not axisymmetric about the charfn axis");
        p_par = P[axis][axis];
        p_perp = P[b][b];
    }
    std::vector<double> us = f.radial() ? g.u_nodes() : f.u_nodes();
    us.push_back(0.0);
    us.push_back(1.0);
    for (double u : us) {
        if (u < 0.0) continue;  // even in u
        Sample s;
        s.p.resize(static_cast<std::size_t>(modes));
        std::vector<double> pl(static_cast<std::size_t>(2 * modes - 1));
        legendre_all(2 * (modes - 1), u, pl);
        for (int k = 0; k < modes; ++k) s.p[static_cast<std::size_t>(k)] = pl[static_cast<std::size_t>(2 * k)];
        s.q = p_par * u * u + p_perp * (1.0 - u * u);
        out.push_back(std::move(s));
    }
    return out;
}

struct Term {
    double order;
    double coef;
    double mag;
};

DMetric metric_impl(const CharFn& f, const CharFn& g, const Deviator* dev, double t, double alpha,
                    const MetricOptions& opt) {
    if (!(alpha > 0.0)) throw DomainError("metric order must be positive");
    check_compatible(f, g);
    if (dev) dev->validate();
    const auto samples = make_samples(f, g, dev);
    const double c = dev ? 0.5 * std::exp(-dev->A * t) : 0.0;
    const auto& grid = f.grid();
    DMetric out;
    out.truncation_bound = 2.0 / std::pow(grid.r_max(), alpha);

    // φ_f - φ_g - P̃ = (w_g - w_f) + c X r² q
    auto node_value = [&](int i, const Sample& s) {
        double v = 0.0;
        for (std::size_t k = 0; k < s.p.size(); ++k) {
            const int kk = static_cast<int>(k);
            const double wg = kk < g.modes() ? g.mode(kk)[static_cast<std::size_t>(i)] : 0.0;
            const double wf = kk < f.modes() ? f.mode(kk)[static_cast<std::size_t>(i)] : 0.0;
            v += (wg - wf) * s.p[k];
        }
        const double r = grid.r(i);
        return v + c * cutoff_X(r) * r * r * s.q;
    };
    for (int i = 0; i < grid.size(); ++i) {
        const double r = grid.r(i);
        if (r < opt.r_floor) continue;
        for (const auto& s : samples) {
            const double v = std::abs(node_value(i, s)) / std::pow(r, alpha);
            if (v > out.value) {
                out.value = v;
                out.r_at = r;
            }
        }
    }

    // Origin: merge model terms by order and take the analytic limit.
    const double r0 = grid.r_min();
    for (const auto& s : samples) {
        std::vector<Term> terms;
        for (std::size_t k = 0; k < s.p.size(); ++k) {
            const int kk = static_cast<int>(k);
            auto add = [&](const SmallRModel& m, double sign) {
                terms.push_back({m.p1, sign * m.a1 * s.p[k], std::abs(m.a1 * s.p[k])});
                terms.push_back({m.p2, sign * m.a2 * s.p[k], std::abs(m.a2 * s.p[k])});
            };
            if (kk < g.modes()) add(g.model(kk), 1.0);
            if (kk < f.modes()) add(f.model(kk), -1.0);
        }
        if (c != 0.0) terms.push_back({2.0, c * s.q, std::abs(c * s.q)});
        std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.order < b.order; });
        std::vector<Term> merged;
        for (const auto& tm : terms) {
            if (!merged.empty() && std::abs(merged.back().order - tm.order) < 1e-9) {
                merged.back().coef += tm.coef;
                merged.back().mag += tm.mag;
            } else {
                merged.push_back(tm);
            }
        }
        std::erase_if(merged, [&](const Term& tm) {
            return tm.mag == 0.0 || std::abs(tm.coef) <= opt.zero_rel_tol * tm.mag;
        });
        if (merged.empty()) continue;
        const Term& lead = merged.front();
        if (lead.order < alpha - 1e-9) {
            out.infinite = true;
            out.value = std::numeric_limits<double>::infinity();
            out.r_at = 0.0;
            return out;
        }
        const double limit = std::abs(lead.order - alpha) <= 1e-9 ? std::abs(lead.coef) : 0.0;
        out.origin_limit = std::max(out.origin_limit, limit);
        if (limit > out.value) {
            out.value = limit;
            out.r_at = 0.0;
        }
        if (r0 < opt.r_floor) continue;
        for (int lvl = 1; lvl <= opt.refine_levels; ++lvl) {
            const double r = r0 * std::ldexp(1.0, -lvl);
            double v = 0.0;
            for (const auto& tm : merged) v += tm.coef * std::pow(r, tm.order);
            v = std::abs(v) / std::pow(r, alpha);
            if (v > out.value) {
                out.value = v;
                out.r_at = r;
            }
        }
    }
    return out;
}

// ∫_{S²} of squared Legendre expansion Σ e_k P_{2k}(u): 2π Σ e_k² 2/(4k+1).
double sphere_sq(const std::vector<double>& e) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) s += e[k] * e[k] * 2.0 / (4.0 * static_cast<double>(k) + 1.0);
    return 2.0 * kPi * s;
}

double radial_norm(const RadialGrid& grid, const std::function<double(int)>& sph, int N, double origin_sph) {
    const int n = grid.size();
    std::vector<double> G(static_cast<std::size_t>(n));
    double I = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = grid.r(i);
        G[static_cast<std::size_t>(i)] = r * r * std::pow(1.0 + r * r, N) * sph(i);
        const double wt = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        I += wt * G[static_cast<std::size_t>(i)] * grid.drdy(i) * grid.dy();
    }
    const double r0 = grid.r_min();
    I += origin_sph * r0 * r0 * r0 / 3.0;
    const double g_end = G.back();
    // Amplitudes at r_max below 1e-11 are rounding and time-integration noise of the
    // w = 1 - φ storage (the far-field RHS is ~1e-13 per unit time), not an untruncated tail.
    const double floor_amp = 1e-11;
    if (g_end * grid.r_max() > 1e-9 * I && sph(n - 1) > floor_amp * floor_amp) {
        const int m = std::min(20, n - 1);
        const double g_prev = G[static_cast<std::size_t>(n - 1 - m)];
        const double dr = grid.r_max() - grid.r(n - 1 - m);
        const double kappa = (g_prev > 0.0 && g_end > 0.0) ? std::log(g_prev / g_end) / dr : 0.0;
        const double tail = kappa > 0.0 ? g_end / kappa : std::numeric_limits<double>::infinity();
        if (!(tail <= 1e-6 * I))
            throw TruncationError("Sobolev norm tail beyond r_max estimated at " + std::to_string(tail) +
                                  " of " + std::to_string(I));
    }
    return std::sqrt(I / std::pow(2.0 * kPi, 3));
}

}  // namespace

DMetric d_alpha(const CharFn& phi, const CharFn& psi, double alpha, const MetricOptions& opt) {
    return metric_impl(phi, psi, nullptr, 0.0, alpha, opt);
}

DMetric d_metric_with_correction(const CharFn& f_hat, const CharFn& g_hat, const Deviator& dev, double t,
                                 double delta, const MetricOptions& opt) {
    if (!(t >= 0.0)) throw DomainError("time must be non-negative");
    if (!(delta > 0.0 && delta <= 2.0)) throw DomainError("delta must lie in (0,2]");
    return metric_impl(f_hat, g_hat, &dev, t, 2.0 + delta, opt);
}

double sobolev_norm(const CharFn& phi, int N) {
    if (N < 0) throw DomainError("Sobolev order must be non-negative");
    std::vector<double> e(static_cast<std::size_t>(phi.modes()));
    return radial_norm(
        phi.grid(),
        [&](int i) {
            for (int k = 0; k < phi.modes(); ++k)
                e[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 0.0) - phi.mode(k)[static_cast<std::size_t>(i)];
            return sphere_sq(e);
        },
        N, 4.0 * kPi);
}

double sobolev_norm_diff(const CharFn& phi, const CharFn& psi, int N) {
    if (N < 0) throw DomainError("Sobolev order must be non-negative");
    check_compatible(phi, psi);
    const int modes = std::max(phi.modes(), psi.modes());
    std::vector<double> e(static_cast<std::size_t>(modes));
    return radial_norm(
        phi.grid(),
        [&](int i) {
            for (int k = 0; k < modes; ++k) {
                const double a = k < phi.modes() ? phi.mode(k)[static_cast<std::size_t>(i)] : 0.0;
                const double b = k < psi.modes() ? psi.mode(k)[static_cast<std::size_t>(i)] : 0.0;
                e[static_cast<std::size_t>(k)] = b - a;
            }
            return sphere_sq(e);
        },
        N, 0.0);
}

KAlphaReport k_alpha_diagnostic(const CharFn& phi, double alpha) {
    KAlphaReport rep;
    const auto one = unit_charfn(phi);
    const auto d = d_alpha(phi, one, alpha);
    rep.d_alpha_to_1 = d.value;
    rep.infinite = d.infinite;
    const auto c = phi.mode(0);
    const int j = std::min(kModelNode, phi.size() - 1);
    if (c[0] > 0.0 && c[static_cast<std::size_t>(j)] > 0.0)
        rep.near_zero_order = std::log(c[static_cast<std::size_t>(j)] / c[0]) /
                              std::log(phi.grid().r(j) / phi.grid().r(0));
    const auto& us = phi.u_nodes();
    for (int i = 0; i < phi.size(); ++i)
        for (double u : us) rep.bound_violation = std::max(rep.bound_violation, std::abs(phi.node_phi(i, u)) - 1.0);
    return rep;
}

void write_charfn_csv(const CharFn& phi, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    char buf[128];
    if (phi.radial()) {
        os << "r,re,im\n";
        for (int i = 0; i < phi.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,0\n", phi.grid().r(i), phi.node_phi(i, 1.0));
            os << buf;
        }
    } else {
        os << "r,u,re,im\n";
        for (int i = 0; i < phi.size(); ++i)
            for (double u : phi.u_nodes()) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,0\n", phi.grid().r(i), u, phi.node_phi(i, u));
                os << buf;
            }
    }
    if (!os) throw Error("write failed for " + path);
}

void write_series_csv(const std::vector<std::pair<double, double>>& series, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << "t,value\n";
    char buf[96];
    for (const auto& [t, v] : series) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, v);
        os << buf;
    }
    if (!os) throw Error("write failed for " + path);
}

}  // namespace bobylev
