#include "bobylev/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bobylev/errors.hpp"

namespace bobylev {

namespace {

// Density below e^{-70} of its peak is dropped from ball quadratures.
constexpr double kGaussReach = 70.0;

bool isotropic(const GaussianAtom& g) { return g.T[0] == g.T[1] && g.T[1] == g.T[2]; }
bool centred(const GaussianAtom& g) { return g.shift[0] == 0.0 && g.shift[1] == 0.0 && g.shift[2] == 0.0; }

// Index of the distinct temperature, -1 if isotropic, -2 if all three differ.
int atom_axis(const GaussianAtom& g) {
    if (isotropic(g)) return -1;
    if (g.T[1] == g.T[2]) return 0;
    if (g.T[0] == g.T[2]) return 1;
    if (g.T[0] == g.T[1]) return 2;
    return -2;
}

Mat3 gaussian_second(const std::vector<GaussianAtom>& atoms) {
    Mat3 M{};
    for (const auto& g : atoms)
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l)
                M[j][l] += g.weight * ((j == l ? g.T[j] : 0.0) + g.shift[j] * g.shift[l]);
    return M;
}

Mat3 trace_free(const Mat3& M) {
    Mat3 P = M;
    const double tr = (M[0][0] + M[1][1] + M[2][2]) / 3.0;
    for (int j = 0; j < 3; ++j) P[j][j] -= tr;
    return P;
}

// Radius beyond which every Gaussian atom is below e^{-kGaussReach} of its peak.
double gaussian_reach(const std::vector<GaussianAtom>& atoms) {
    double reach = 0.0;
    for (const auto& g : atoms) {
        const double tmax = std::max({g.T[0], g.T[1], g.T[2]});
        const double s = std::sqrt(g.shift[0] * g.shift[0] + g.shift[1] * g.shift[1] + g.shift[2] * g.shift[2]);
        reach = std::max(reach, s + std::sqrt(2.0 * kGaussReach * tmax));
    }
    return reach;
}

// Spherical product rule on the ball |v| ≤ radius: Gauss panels in ρ, Gauss in
// u = cos of the polar angle about z, trapezoid in the azimuth.
template <class F>
void ball_sum(double radius, const BallRule& rule, F&& visit) {
    const int panels = std::max(1, static_cast<int>(std::ceil(radius * rule.panels_per_unit)));
    const auto gr = gauss_legendre(static_cast<std::size_t>(rule.order));
    const auto gu = gauss_legendre(static_cast<std::size_t>(rule.n_u));
    const double h = radius / panels;
    std::vector<double> cphi(static_cast<std::size_t>(rule.n_phi)), sphi(cphi.size());
    for (int p = 0; p < rule.n_phi; ++p) {
        cphi[static_cast<std::size_t>(p)] = std::cos(2.0 * kPi * p / rule.n_phi);
        sphi[static_cast<std::size_t>(p)] = std::sin(2.0 * kPi * p / rule.n_phi);
    }
    const double wphi = 2.0 * kPi / rule.n_phi;
    for (int k = 0; k < panels; ++k)
        for (std::size_t q = 0; q < gr.size(); ++q) {
            const double rho = h * (k + 0.5 * (gr.x[q] + 1.0));
            const double wr = 0.5 * h * gr.w[q] * rho * rho;
            for (std::size_t j = 0; j < gu.size(); ++j) {
                const double u = gu.x[j];
                const double su = std::sqrt(1.0 - u * u);
                for (int p = 0; p < rule.n_phi; ++p) {
                    const Vec3 v{rho * su * cphi[static_cast<std::size_t>(p)],
                                 rho * su * sphi[static_cast<std::size_t>(p)], rho * u};
                    visit(v, wr * gu.w[j] * wphi);
                }
            }
        }
}

// ∫_a^∞ x^{-1-β}(1 - sinc x) dx for β > 0, a > 0.
double sinc_tail(double a, double beta) {
    constexpr double kSeries = 0.5, kAsym = 60.0;
    double acc = 0.0;
    double lo = a;
    if (lo < kSeries) {
        // Termwise over the Taylor series of 1 - sinc on [a, 0.5].
        double term = 1.0;
        for (int k = 1; k <= 12; ++k) {
            term /= (2.0 * k) * (2.0 * k + 1.0);
            const double e = 2.0 * k - beta;
            const double piece = std::abs(e) < 1e-12 ? std::log(kSeries / lo)
                                                     : (std::pow(kSeries, e) - std::pow(lo, e)) / e;
            acc += (k % 2 ? 1.0 : -1.0) * term * piece;
        }
        lo = kSeries;
    }
    if (lo < kAsym) {
        static const GaussRule rule = gauss_legendre(12);
        const auto panels = static_cast<std::size_t>(std::ceil((kAsym - lo) / 0.5));
        acc += integrate_gauss([&](double x) { return std::pow(x, -1.0 - beta) * one_minus_sinc(x); }, lo, kAsym,
                               panels, rule);
        lo = kAsym;
    }
    // lo^{-β}/β minus the asymptotic series of ∫_lo^∞ x^{-1-β} sin x / x dx.
    const double g = 2.0 + beta;
    double s = 0.0, coef = 1.0;
    for (int k = 0; k < 6; ++k) {
        const double p = std::pow(lo, -(g + k));
        switch (k % 4) {
            case 0: s += coef * std::cos(lo) * p; break;
            case 1: s += coef * std::sin(lo) * p; break;
            case 2: s -= coef * std::cos(lo) * p; break;
            default: s -= coef * std::sin(lo) * p; break;
        }
        coef *= g + k;
    }
    return acc + std::pow(lo, -beta) / beta - s;
}

// Gauss nodes of uniform panels on [0, end].
void panel_nodes(double end, double width, int order, std::vector<double>& x, std::vector<double>& w) {
    const auto g = gauss_legendre(static_cast<std::size_t>(order));
    const int panels = std::max(1, static_cast<int>(std::ceil(end / width - 1e-9)));
    const double h = end / panels;
    x.clear();
    w.clear();
    for (int k = 0; k < panels; ++k)
        for (std::size_t q = 0; q < g.size(); ++q) {
            x.push_back(h * (k + 0.5 * (g.x[q] + 1.0)));
            w.push_back(0.5 * h * g.w[q]);
        }
}

// w(r) = 4π Σ ρ² f (1 - sinc(rρ)) over the given nodes.
std::vector<double> forward_w(const GridPtr& grid, const std::vector<double>& rho, const std::vector<double>& wq,
                              const std::vector<double>& f) {
    std::vector<double> w(static_cast<std::size_t>(grid->size()));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < grid->size(); ++i) {
        const double r = grid->r(i);
        double acc = 0.0;
        for (std::size_t q = 0; q < rho.size(); ++q) acc += wq[q] * rho[q] * rho[q] * f[q] * one_minus_sinc(r * rho[q]);
        w[static_cast<std::size_t>(i)] = 4.0 * kPi * acc;
    }
    return w;
}

}  // namespace

double GaussianAtom::eval(const Vec3& v) const {
    double q = 0.0;
    for (int j = 0; j < 3; ++j) q += (v[j] - shift[j]) * (v[j] - shift[j]) / T[j];
    return weight * std::exp(-0.5 * q) / std::sqrt(8.0 * kPi * kPi * kPi * T[0] * T[1] * T[2]);
}

double RadialTable::eval(double r) const {
    if (r < 0.0) throw DomainError("radius must be non-negative");
    if (r > rho_max) {
        double acc = 0.0;
        for (const auto& [C, p] : tail) acc += C * std::pow(r, -p);
        return acc;
    }
    const int panels = static_cast<int>(rho.size()) / order;
    const int k = std::clamp(static_cast<int>(r / panel), 0, panels - 1);
    const std::size_t off = static_cast<std::size_t>(k) * static_cast<std::size_t>(order);
    // Lagrange through the panel's Gauss nodes.
    double acc = 0.0;
    for (int a = 0; a < order; ++a) {
        double l = 1.0;
        const double xa = rho[off + static_cast<std::size_t>(a)];
        for (int b = 0; b < order; ++b)
            if (b != a) {
                const double xb = rho[off + static_cast<std::size_t>(b)];
                l *= (r - xb) / (xa - xb);
            }
        acc += l * f[off + static_cast<std::size_t>(a)];
    }
    return acc;
}

double RadialTable::tail_mass() const {
    double m = 0.0;
    for (const auto& [C, p] : tail) m += 4.0 * kPi * C * std::pow(rho_max, 3.0 - p) / (p - 3.0);
    return m;
}

double RadialTable::mass() const {
    double m = 0.0;
    for (std::size_t q = 0; q < rho.size(); ++q) m += weight[q] * rho[q] * rho[q] * f[q];
    return 4.0 * kPi * m + tail_mass();
}

DensitySpec DensitySpec::maxwellian(double T) { return aniso_gaussian(T, T, T); }

DensitySpec DensitySpec::aniso_gaussian(double T1, double T2, double T3) {
    if (!(T1 > 0.0 && T2 > 0.0 && T3 > 0.0)) throw DomainError("temperatures must be positive");
    DensitySpec d;
    d.gauss_.push_back({{T1, T2, T3}, {}, 1.0});
    const bool iso = T1 == T2 && T2 == T3;
    d.family_ = iso ? Family::maxwellian : Family::aniso_gaussian;
    d.name_ = iso ? "maxwellian(" + std::to_string(T1) + ")"
                  : "aniso_gaussian(" + std::to_string(T1) + "," + std::to_string(T2) + "," + std::to_string(T3) + ")";
    return d;
}

DensitySpec DensitySpec::shifted_gaussian(double T, const Vec3& shift) {
    if (!(T > 0.0)) throw DomainError("temperature must be positive");
    DensitySpec d;
    d.gauss_.push_back({{T, T, T}, shift, 1.0});
    d.family_ = Family::shifted_gaussian;
    d.name_ = "shifted_gaussian";
    return d;
}

DensitySpec DensitySpec::mixture(const std::vector<double>& weights, const std::vector<DensitySpec>& parts) {
    if (weights.size() != parts.size() || parts.empty()) throw DomainError("mixture needs one weight per part");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("mixture weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
    DensitySpec d;
    d.family_ = Family::mixture;
    d.name_ = "mixture";
    for (std::size_t j = 0; j < parts.size(); ++j) {
        for (auto g : parts[j].gauss_) {
            g.weight *= weights[j];
            d.gauss_.push_back(g);
        }
        for (auto p : parts[j].prof_) {
            p.weight *= weights[j];
            d.prof_.push_back(p);
        }
    }
    return d;
}

DensitySpec DensitySpec::selfsim_profile(std::shared_ptr<const SelfSimilarProfile> profile, double rho_max) {
    if (!profile) throw DomainError("null profile");
    DensitySpec d;
    d.family_ = Family::selfsim_profile;
    d.name_ = "selfsim_profile";
    auto table = std::make_shared<const RadialTable>(
        inverse_radial_transform(profile->psi_hat, rho_max, profile->alpha, profile->K));
    d.prof_.push_back({std::move(profile), std::move(table), 1.0});
    return d;
}

DensitySpec DensitySpec::perturbed_profile(const DensitySpec& profile, double eps, const Vec3& T) {
    if (profile.family_ != Family::selfsim_profile) throw DomainError("perturbed_profile needs a selfsim_profile base");
    if (!(T[0] > 0.0 && T[1] > 0.0 && T[2] > 0.0)) throw DomainError("temperatures must be positive");
    DensitySpec d = profile;
    d.family_ = Family::perturbed_profile;
    d.name_ = "perturbed_profile";
    const double Tm = (T[0] + T[1] + T[2]) / 3.0;
    d.gauss_.push_back({T, {}, eps});
    d.gauss_.push_back({{Tm, Tm, Tm}, {}, -eps});
    return d;
}

double DensitySpec::mass() const {
    double m = 0.0;
    for (const auto& g : gauss_) m += g.weight;
    for (const auto& p : prof_) m += p.weight;
    return m;
}

Vec3 DensitySpec::mean() const {
    Vec3 m{};
    for (const auto& g : gauss_)
        for (int j = 0; j < 3; ++j) m[j] += g.weight * g.shift[j];
    return m;
}

std::optional<Mat3> DensitySpec::second_moment() const {
    for (const auto& p : prof_)
        if (p.weight != 0.0) return std::nullopt;
    return gaussian_second(gauss_);
}

bool DensitySpec::radial() const {
    return std::all_of(gauss_.begin(), gauss_.end(), [](const GaussianAtom& g) { return isotropic(g) && centred(g); });
}

int DensitySpec::axis() const {
    int axis = -1;
    for (const auto& g : gauss_) {
        if (g.weight == 0.0) continue;
        const int a = atom_axis(g);
        if (a == -2) throw ShapeError("density is not axisymmetric");
        if (a == -1) continue;
        if (axis != -1 && axis != a) throw ShapeError("Gaussian parts have different symmetry axes");
        axis = a;
    }
    return axis == -1 ? 2 : axis;
}

double DensitySpec::eval(const Vec3& v) const {
    double f = 0.0;
    for (const auto& g : gauss_) f += g.eval(v);
    if (!prof_.empty()) {
        const double rho = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (const auto& p : prof_) f += p.weight * p.table->eval(rho);
    }
    return f;
}

CharFn DensitySpec::charfn(GridPtr grid, int modes, int ax) const {
    for (const auto& g : gauss_)
        if (!centred(g)) throw ShapeError("shifted densities have complex characteristic functions");
    if (modes == 1 && !radial()) throw ShapeError("anisotropic density needs more than one mode");
    const int own = axis();
    if (ax < 0) ax = own;
    if (!radial() && ax != own) throw ShapeError("requested axis differs from the density's symmetry axis");
    double alpha_hat = 2.0;
    for (const auto& p : prof_) alpha_hat = std::min(alpha_hat, p.profile->alpha);
    const double other = 1.0 - mass();
    auto w = [&](double r, double u) {
        double acc = other;
        for (const auto& g : gauss_) {
            const double ta = g.T[static_cast<std::size_t>(ax)];
            const double tp = g.T[static_cast<std::size_t>((ax + 1) % 3)];
            acc -= g.weight * std::expm1(-0.5 * r * r * (ta * u * u + tp * (1.0 - u * u)));
        }
        for (const auto& p : prof_) acc += p.weight * p.profile->psi_hat.w(r);
        return acc;
    };
    if (modes == 1) return CharFn::radial_w(grid, [&](double r) { return w(r, 1.0); }, alpha_hat);
    return CharFn::axisymmetric_w(grid, modes, w, alpha_hat, ax);
}

std::vector<GaussianAtom> finite_energy_difference(const DensitySpec& f, const DensitySpec& g) {
    std::map<const SelfSimilarProfile*, double> net;
    for (const auto& p : f.profiles()) net[p.profile.get()] += p.weight;
    for (const auto& p : g.profiles()) net[p.profile.get()] -= p.weight;
    for (const auto& [ptr, w] : net)
        if (std::abs(w) > 1e-14)
            throw MomentDivergenceError("infinite-energy profile parts of f and g do not cancel");
    std::vector<GaussianAtom> out = f.gaussians();
    for (auto a : g.gaussians()) {
        a.weight = -a.weight;
        out.push_back(a);
    }
    return out;
}

Deviator second_moment_deviator(const DensitySpec& f, const DensitySpec& g) {
    Deviator d;
    d.P = trace_free(gaussian_second(finite_energy_difference(f, g)));
    return d;
}

EnergyCheck check_zero_energy_perturbation(const DensitySpec& f, const DensitySpec& g, double tol) {
    const Mat3 M = gaussian_second(finite_energy_difference(f, g));
    EnergyCheck e;
    e.residual = M[0][0] + M[1][1] + M[2][2];
    e.zero = std::abs(e.residual) < tol;
    return e;
}

CutoffApprox cutoff_approx(const DensitySpec& f, double R, const BallRule& rule) {
    if (!(R > 0.0)) throw DomainError("cutoff radius must be positive");
    double radius = 2.0 * R;
    if (f.profiles().empty()) radius = std::min(radius, gaussian_reach(f.gaussians()));
    double S0 = 0.0;
    Vec3 S1{};
    Mat3 S2{};
    ball_sum(radius, rule, [&](const Vec3& v, double w) {
        const double rho = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        const double fx = w * f.eval(v) * cutoff_X(rho / R);
        S0 += fx;
        for (int j = 0; j < 3; ++j) {
            S1[j] += fx * v[j];
            for (int l = 0; l < 3; ++l) S2[j][l] += fx * v[j] * v[l];
        }
    });
    if (S0 < 0.5) throw CutoffRadiusError("mass inside the cutoff is below 1/2; increase R");
    CutoffApprox c;
    c.R = R;
    c.Z = S0;
    for (int j = 0; j < 3; ++j) c.a_R[j] = S1[j] / S0;
    // Moments of f̃(v + a): shift the moments of f̃ by -a.
    c.mass = S0 / c.Z;
    for (int j = 0; j < 3; ++j) c.mean[j] = S1[j] / c.Z - c.a_R[j] * c.mass;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
            c.second[j][l] = S2[j][l] / c.Z - c.a_R[j] * S1[l] / c.Z - c.a_R[l] * S1[j] / c.Z +
                             c.a_R[j] * c.a_R[l] * c.mass;
    return c;
}

std::vector<DeviatorRow> deviator_convergence_sweep(const DensitySpec& f, const DensitySpec& g,
                                                    const std::vector<double>& R_list, const BallRule& rule) {
    const Deviator target = second_moment_deviator(f, g);
    std::vector<DeviatorRow> rows;
    for (double R : R_list) {
        const auto cf = cutoff_approx(f, R, rule);
        const auto cg = cutoff_approx(g, R, rule);
        Mat3 D{};
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) D[j][l] = cf.second[j][l] - cg.second[j][l];
        DeviatorRow row;
        row.R = R;
        row.P = trace_free(D);
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) row.max_dev = std::max(row.max_dev, std::abs(row.P[j][l] - target.P[j][l]));
        rows.push_back(row);
    }
    return rows;
}

RadialTable inverse_radial_transform(const CharFn& phi, double rho_max, double alpha, double K) {
    if (!phi.radial()) throw ShapeError("inverse transform needs radial data");
    RadialTable t;
    t.rho_max = rho_max;
    panel_nodes(rho_max, t.panel, t.order, t.rho, t.weight);
    // r-integration stops where |φ| has fallen below 1e-16 for good.
    const auto& g = phi.grid();
    int last = g.size() - 1;
    while (last > 0 && std::abs(1.0 - phi.mode(0)[static_cast<std::size_t>(last)]) < 1e-16) --last;
    const double r_end = g.r(std::min(g.size() - 1, last + 1));
    std::vector<double> r, wr;
    panel_nodes(r_end, 0.05, 12, r, wr);
    std::vector<double> phr(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) phr[j] = wr[j] * r[j] * r[j] * phi.eval(r[j]);
    t.f.assign(t.rho.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < t.rho.size(); ++q) {
        double acc = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double x = r[j] * t.rho[q];
            acc += phr[j] * (x < 1e-8 ? 1.0 : std::sin(x) / x);
        }
        t.f[q] = acc / (2.0 * kPi * kPi);
    }
    if (alpha < 2.0 && K > 0.0) {
        // Leading term of the density tail behind w ≈ K r^α.
        const double p1 = 3.0 + alpha, p2 = 3.0 + 2.0 * alpha;
        const double C1 = K * std::pow(2.0, alpha) * std::tgamma(0.5 * p1) /
                          (std::pow(kPi, 1.5) * std::abs(std::tgamma(-0.5 * alpha)));
        // Next order from the table's last fifth, by least squares on ρ^{-p2}.
        double num = 0.0, den = 0.0;
        for (std::size_t q = 0; q < t.rho.size(); ++q) {
            if (t.rho[q] < 0.8 * rho_max) continue;
            const double b = std::pow(t.rho[q], -p2);
            num += b * (t.f[q] - C1 * std::pow(t.rho[q], -p1));
            den += b * b;
        }
        t.tail = {{C1, p1}, {den > 0.0 ? num / den : 0.0, p2}};
    }
    return t;
}

CharFn radial_transform(const RadialTable& table, GridPtr grid, double alpha_hat) {
    std::vector<double> w = forward_w(grid, table.rho, table.weight, table.f);
    for (const auto& [C, p] : table.tail) {
        const double beta = p - 3.0;
        for (int i = 0; i < grid->size(); ++i) {
            const double r = grid->r(i);
            w[static_cast<std::size_t>(i)] += 4.0 * kPi * C * std::pow(r, beta) * sinc_tail(r * table.rho_max, beta);
        }
    }
    CharFn out(grid, 1, alpha_hat);
    out.data() = std::move(w);
    out.refit();
    return out;
}

CharFn radial_transform(const DensitySpec& f, GridPtr grid, double rho_max, double tail_tol) {
    if (!f.radial()) throw ShapeError("radial transform needs a radial density");
    std::vector<double> rho, wq;
    panel_nodes(rho_max, 0.05, 12, rho, wq);
    std::vector<double> vals(rho.size());
    for (std::size_t q = 0; q < rho.size(); ++q) {
        double acc = 0.0;
        for (const auto& g : f.gaussians()) acc += g.eval({0.0, 0.0, rho[q]});
        vals[q] = acc;
    }
    // Gaussian mass beyond rho_max (the 1 - sinc factor is at most 1.2).
    double tail = 0.0;
    for (const auto& g : f.gaussians()) {
        const double x = rho_max / std::sqrt(g.T[0]);
        tail += std::abs(g.weight) * (std::erfc(x / std::sqrt(2.0)) + std::sqrt(2.0 / kPi) * x * std::exp(-0.5 * x * x));
    }
    if (1.2 * tail > tail_tol) throw TruncationError("Gaussian tail beyond rho_max exceeds the tolerance");
    std::vector<double> w = forward_w(grid, rho, wq, vals);
    double alpha_hat = 2.0;
    for (const auto& p : f.profiles()) {
        const CharFn part = radial_transform(*p.table, grid, p.profile->alpha);
        for (int i = 0; i < grid->size(); ++i) w[static_cast<std::size_t>(i)] += p.weight * part.mode(0)[static_cast<std::size_t>(i)];
        alpha_hat = std::min(alpha_hat, p.profile->alpha);
    }
    const double other = 1.0 - f.mass();
    CharFn out(grid, 1, alpha_hat);
    for (auto& x : w) x += other;
    out.data() = std::move(w);
    out.refit();
    return out;
}

MomentMetricReport moment_metric_bound_check(const DensitySpec& f, const DensitySpec& g, double delta,
                                             GridPtr grid, int modes, const BallRule& rule) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0,1]");
    for (const auto* d : {&f, &g}) {
        const Vec3 m = d->mean();
        if (std::abs(m[0]) + std::abs(m[1]) + std::abs(m[2]) > 1e-12)
            throw HypothesisError("zero mean", d->name() + " has nonzero mean");
    }
    MomentMetricReport rep;
    std::vector<GaussianAtom> diff;
    try {
        diff = finite_energy_difference(f, g);
    } catch (const MomentDivergenceError&) {
        rep.rhs_finite = false;
        rep.skipped = true;
        return rep;
    }
    double net = 0.0;
    for (const auto& a : diff) net += std::abs(a.weight);
    const double reach = gaussian_reach(diff);
    if (net > 0.0) {
        ball_sum(reach, rule, [&](const Vec3& v, double w) {
            double d = 0.0;
            for (const auto& a : diff) d += a.eval(v);
            const double rho = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            rep.rhs += w * (1.0 + std::pow(rho, 2.0 + delta)) * std::abs(d);
        });
    }
    if (rep.rhs == 0.0) return rep;
    const int ax = f.radial() ? g.axis() : f.axis();
    const Deviator dev = second_moment_deviator(f, g);
    const DMetric m = d_metric_with_correction(f.charfn(grid, modes, ax), g.charfn(grid, modes, ax), dev, 0.0, delta);
    rep.lhs = m.value;
    rep.lhs_finite = !m.infinite;
    rep.ratio = rep.lhs / rep.rhs;
    return rep;
}

NonnegativityReport nonnegativity(const DensitySpec& f, double rho_max, int n_rho, int n_u) {
    const int ax = f.axis();
    const int px = (ax + 1) % 3;
    NonnegativityReport rep;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_rho; ++i) {
        const double rho = rho_max * i / n_rho;
        for (int j = 0; j < n_u; ++j) {
            const double u = n_u == 1 ? 1.0 : -1.0 + 2.0 * j / (n_u - 1);
            Vec3 v{};
            v[static_cast<std::size_t>(ax)] = rho * u;
            v[static_cast<std::size_t>(px)] = rho * std::sqrt(std::max(0.0, 1.0 - u * u));
            const double val = f.eval(v);
            if (val < rep.min_value) {
                rep.min_value = val;
                rep.rho_at = rho;
                rep.u_at = u;
            }
        }
    }
    return rep;
}

}  // namespace bobylev
