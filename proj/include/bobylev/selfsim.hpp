#pragma once

#include <utility>
#include <vector>

#include "bobylev/charfun.hpp"
#include "bobylev/collision.hpp"
#include "bobylev/kernel.hpp"

namespace bobylev {

struct ProfileOptions {
    GridSpec grid;
    ThetaRuleSpec theta;
    double tol = 1e-6;        // sup |∂τ w| at convergence
    double tau_max = 80.0;    // relaxation budget
    int check_every = 25;     // steps between residual evaluations
};

struct SelfSimilarProfile {
    double alpha = 1.5;
    double K = 1.0;
    CharFn psi_hat;
    double mu_alpha = 0.0;
    double lambda_alpha = 0.0;
    double residual = 0.0;
    double K_fit = 0.0;
    double tau = 0.0;
    KernelSpec kernel;
    std::vector<std::pair<double, double>> history;  // (τ, residual)
};

/// Relaxes the rescaled flow ∂τ w = Q(w) - μ_α r ∂_r w from w = 1 - exp(-K r^α).
SelfSimilarProfile construct_profile(const KernelSpec& kernel, double alpha, double K,
                                     const ProfileOptions& opt = {});

/// Least-squares limit of w / r^α over the three smallest decades of the grid.
double fit_K(const CharFn& psi_hat, double alpha);

/// ξ ↦ Ψ̂(e^{μ_α t} ξ) sampled on `target`; OutOfRangeError past the profile grid.
CharFn self_similar_at(const SelfSimilarProfile& profile, double t, GridPtr target);
CharFn self_similar_at(const SelfSimilarProfile& profile, double t);

struct StationarityReport {
    double dt = 0.0;
    double discrepancy = 0.0;
    double r_max = 0.0;  // radius up to which the comparison runs
};

/// Evolves the t = 0 profile with the direct flow for dt and compares with the t = dt profile.
StationarityReport verify_stationarity(const SelfSimilarProfile& profile, double dt = 0.5,
                                       const ThetaRuleSpec& theta = {});

}  // namespace bobylev
