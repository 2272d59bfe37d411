#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bobylev {

enum class KernelForm { inverse_power, constant_test };

/// Angular cross section B(cos θ) on θ ∈ [0, π/2]. For inverse_power,
/// B = b0·θ^{-2-2s}; for constant_test, B ≡ b0. With `bound`, B_n = min(B, n).
struct KernelSpec {
    KernelForm form = KernelForm::inverse_power;
    double s = 0.25;
    double b0 = 1.0;
    std::optional<double> bound;

    void validate() const;
    bool singular() const { return form == KernelForm::inverse_power && !bound; }
    /// θ below which the bound is active (0 when unbounded or never active).
    double bound_breakpoint() const;
    std::string key() const;
};

double eval_kernel(const KernelSpec& spec, double theta);

/// ∫_a^b B(θ) sinθ θ^p dθ in closed form (series in sinθ), for 0 ≤ a < b ≤ π/2.
/// Requires p - 2s > 0 on the unbounded singular part.
double kernel_moment(const KernelSpec& spec, double a, double b, double p);

struct AngularIntegral {
    double value = 0.0;
    double tolerance = 0.0;  // |coarse - refined| estimate
};

/// 2π ∫_0^{π/2} B(θ) weight(θ) sinθ dθ on geometrically graded panels.
AngularIntegral angular_integral(const KernelSpec& spec, const std::function<double(double)>& weight,
                                 double rel_tol = 1e-8);

struct KernelConstants {
    double alpha = 2.0;
    double delta = 0.0;
    double lambda_alpha = 0.0;
    double mu_alpha = 0.0;
    double A = 0.0;
    double B_delta = 0.0;
    double eta0 = 0.0;
    double eta1 = 0.0;
    std::optional<double> sigma_bar;
    // Normalized by sigma_bar (bounded kernels only).
    std::optional<double> A_n, B_n, lambda_n, mu_n, eta0_n;
    // Quadrature error estimates.
    double tol_lambda = 0.0, tol_A = 0.0, tol_B = 0.0, tol_sigma = 0.0;
};

KernelConstants constants(const KernelSpec& spec, double alpha, double delta, double rel_tol = 1e-8);

struct CutoffRow {
    double n = 0.0;
    double sigma_A = 0.0;      // σ̄_n A_n
    double sigma_B = 0.0;      // σ̄_n B_n
    double sigma_lambda = 0.0; // σ̄_n λ^n_α
    double sigma_eta0 = 0.0;   // σ̄_n η0^n
};

std::vector<CutoffRow> cutoff_limit_sweep(const KernelSpec& spec, double alpha, double delta,
                                          const std::vector<double>& n_list, double rel_tol = 1e-8);

// Cancellation-free integrand weights, with c = cos(θ/2), s = sin(θ/2).
double weight_lambda(double theta, double alpha);  // s^α + c^α - 1
double weight_A(double theta);                      // (3/4) sin²θ
double weight_B(double theta, double delta);        // 1 - c^{2+δ} - s^{2+δ}

}  // namespace bobylev
