#include "bobylev/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "bobylev/errors.hpp"
#include "bobylev/numerics.hpp"

namespace bobylev {

void KernelSpec::validate() const {
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw DomainError("kernel strength b0 must be positive");
    if (form == KernelForm::inverse_power && !(s > 0.0 && s < 1.0))
        throw DomainError("singularity exponent s must lie in (0,1)");
    if (bound && !(*bound > 0.0)) throw DomainError("kernel bound n must be positive");
}

double KernelSpec::bound_breakpoint() const {
    if (!bound) return 0.0;
    if (form == KernelForm::constant_test) return b0 > *bound ? kPi / 2 : 0.0;
    return std::min(kPi / 2, std::pow(b0 / *bound, 1.0 / (2.0 + 2.0 * s)));
}

std::string KernelSpec::key() const {
    std::ostringstream os;
    os.precision(17);
    os << (form == KernelForm::inverse_power ? "ip" : "ct") << ':' << s << ':' << b0 << ':'
       << (bound ? *bound : -1.0);
    return os.str();
}

double eval_kernel(const KernelSpec& spec, double theta) {
    if (!(theta >= 0.0 && theta <= kPi / 2 + 1e-15))
        throw DomainError("kernel angle outside [0, pi/2]");
    double b = 0.0;
    if (spec.form == KernelForm::constant_test) {
        b = spec.b0;
    } else {
        b = theta == 0.0 ? std::numeric_limits<double>::infinity()
                         : spec.b0 * std::pow(theta, -2.0 - 2.0 * spec.s);
    }
    if (spec.bound) b = std::min(b, *spec.bound);
    return b;
}

namespace {

// ∫_a^b sinθ θ^q dθ, q > -2 (so the θ^{q+1} leading term is integrable at 0).
double sin_power_integral(double a, double b, double q) {
    double sum = 0.0;
    double fact = 1.0;  // (2k+1)!
    for (int k = 0; k < 40; ++k) {
        if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
        const double e = q + 2.0 * k + 2.0;
        const double term = (std::pow(b, e) - (a > 0.0 ? std::pow(a, e) : 0.0)) / (fact * e);
        sum += (k % 2 == 0 ? term : -term);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace

double kernel_moment(const KernelSpec& spec, double a, double b, double p) {
    if (b <= a) return 0.0;
    if (spec.form == KernelForm::constant_test) {
        const double c = spec.bound ? std::min(spec.b0, *spec.bound) : spec.b0;
        return c * sin_power_integral(a, b, p);
    }
    const double q = p - 2.0 - 2.0 * spec.s;
    if (!spec.bound) {
        if (a == 0.0 && !(q > -2.0)) throw IntegrabilityError("kernel moment diverges at theta = 0");
        return spec.b0 * sin_power_integral(a, b, q);
    }
    const double tb = spec.bound_breakpoint();
    double total = 0.0;
    if (a < tb) total += *spec.bound * sin_power_integral(a, std::min(b, tb), p);
    if (b > tb) total += spec.b0 * sin_power_integral(std::max(a, tb), b, q);
    return total;
}

double weight_lambda(double theta, double alpha) {
    const double s = std::sin(0.5 * theta);
    return std::pow(s, alpha) + std::expm1(0.5 * alpha * std::log1p(-s * s));
}

double weight_A(double theta) {
    const double st = std::sin(theta);
    return 0.75 * st * st;
}

double weight_B(double theta, double delta) {
    const double s = std::sin(0.5 * theta);
    return -std::expm1(0.5 * (2.0 + delta) * std::log1p(-s * s)) - std::pow(s, 2.0 + delta);
}

namespace {

constexpr double kThetaTiny = 1e-10;

std::vector<double> panel_edges(const KernelSpec& spec) {
    std::vector<double> edges;
    for (double t = kPi / 2; t > kThetaTiny; t *= 0.5) edges.push_back(t);
    edges.push_back(kThetaTiny);
    const double tb = spec.bound_breakpoint();
    if (tb > kThetaTiny && tb < kPi / 2) edges.push_back(tb);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

double panel_sum(const std::function<double(double)>& g, const std::vector<double>& edges, int split,
                 double rel_tol) {
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        const double h = (edges[j + 1] - edges[j]) / split;
        for (int k = 0; k < split; ++k) {
            const double lo = edges[j] + k * h;
            sum += integrate_adaptive(g, lo, lo + h, rel_tol, 0).value;
        }
    }
    return sum;
}

}  // namespace

AngularIntegral angular_integral(const KernelSpec& spec, const std::function<double(double)>& weight,
                                 double rel_tol) {
    spec.validate();
    const auto g = [&](double th) {
        const double w = weight(th);
        return w == 0.0 ? 0.0 : eval_kernel(spec, th) * w * std::sin(th);
    };
    // Power-law tail on [0, θ_tiny]: g ≈ C θ^q fitted from two points.
    const double g1 = g(kThetaTiny);
    const double g2 = g(0.5 * kThetaTiny);
    double tail = 0.0;
    if (g1 != 0.0 || g2 != 0.0) {
        if (g1 == 0.0 || g2 == 0.0 || (g1 > 0.0) != (g2 > 0.0))
            throw IntegrabilityError("angular integrand changes sign near theta = 0");
        const double q = std::log2(g1 / g2);
        if (!(q > -1.0 + 1e-6))
            throw IntegrabilityError("angular integrand ~ theta^" + std::to_string(q) +
                                     " is not integrable at theta = 0");
        tail = g1 * kThetaTiny / (q + 1.0);
    }
    const auto edges = panel_edges(spec);
    const double inner = 0.01 * rel_tol;
    const double coarse = panel_sum(g, edges, 1, inner) + tail;
    const double fine = panel_sum(g, edges, 2, inner) + tail;
    // Cancellation-free weights can integrate to ~0; judge the error against ∫|g|.
    const double scale =
        panel_sum([&](double th) { return std::abs(g(th)); }, edges, 1, inner) + std::abs(tail);
    AngularIntegral out;
    out.value = 2.0 * kPi * fine;
    out.tolerance = 2.0 * kPi * std::abs(fine - coarse);
    const double floor = 1e-14 * std::max(1.0, spec.b0);
    if (out.tolerance > std::max(rel_tol * std::max(std::abs(out.value), 1e-6 * 2.0 * kPi * scale), floor))
        throw QuadratureError("angular integral failed refinement check: estimate " +
                              std::to_string(out.tolerance) + " for value " + std::to_string(out.value));
    return out;
}

namespace {

std::mutex g_cache_mutex;
std::map<std::string, KernelConstants> g_cache;

}  // namespace

KernelConstants constants(const KernelSpec& spec, double alpha, double delta, double rel_tol) {
    spec.validate();
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0,2]");
    if (!(delta >= 0.0 && delta <= 2.0)) throw DomainError("delta must lie in [0,2]");
    if (spec.singular() && alpha <= 2.0 * spec.s)
        throw IntegrabilityError("lambda_alpha requires alpha > 2s for a singular kernel");

    std::ostringstream key;
    key.precision(17);
    key << spec.key() << '|' << alpha << '|' << delta << '|' << rel_tol;
    {
        std::lock_guard lock(g_cache_mutex);
        if (auto it = g_cache.find(key.str()); it != g_cache.end()) return it->second;
    }

    KernelConstants k;
    k.alpha = alpha;
    k.delta = delta;
    const auto lam = angular_integral(spec, [&](double t) { return weight_lambda(t, alpha); }, rel_tol);
    const auto a = angular_integral(spec, weight_A, rel_tol);
    const auto b = delta == 0.0 ? AngularIntegral{}
                                : angular_integral(spec, [&](double t) { return weight_B(t, delta); }, rel_tol);
    k.lambda_alpha = lam.value;
    k.tol_lambda = lam.tolerance;
    k.mu_alpha = lam.value / alpha;
    k.A = a.value;
    k.tol_A = a.tolerance;
    k.B_delta = b.value;
    k.tol_B = b.tolerance;
    k.eta0 = std::min(k.A - delta * k.mu_alpha, k.B_delta);
    k.eta1 = std::min(k.A, k.B_delta);
    if (!spec.singular()) {
        const auto sig = angular_integral(spec, [](double) { return 1.0; }, rel_tol);
        k.sigma_bar = sig.value;
        k.tol_sigma = sig.tolerance;
        k.A_n = k.A / sig.value;
        k.B_n = k.B_delta / sig.value;
        k.lambda_n = k.lambda_alpha / sig.value;
        k.mu_n = *k.lambda_n / alpha;
        k.eta0_n = std::min(*k.A_n - delta * *k.mu_n, *k.B_n);
    }
    std::lock_guard lock(g_cache_mutex);
    g_cache.emplace(key.str(), k);
    return k;
}

std::vector<CutoffRow> cutoff_limit_sweep(const KernelSpec& spec, double alpha, double delta,
                                          const std::vector<double>& n_list, double rel_tol) {
    if (n_list.empty()) throw DomainError("cutoff sweep needs at least one bound");
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
        throw DomainError("cutoff sweep bounds must be strictly increasing");
    std::vector<CutoffRow> rows;
    for (double n : n_list) {
        KernelSpec bounded = spec;
        bounded.bound = n;
        const auto k = constants(bounded, alpha, delta, rel_tol);
        const double sig = *k.sigma_bar;
        rows.push_back({n, sig * *k.A_n, sig * *k.B_n, sig * *k.lambda_n, sig * *k.eta0_n});
    }
    return rows;
}

}  // namespace bobylev
