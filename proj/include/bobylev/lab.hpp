#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bobylev/charfun.hpp"
#include "bobylev/config.hpp"
#include "bobylev/density.hpp"
#include "bobylev/flow.hpp"
#include "bobylev/kernel.hpp"
#include "bobylev/selfsim.hpp"

namespace bobylev {

enum class ExperimentKind {
    theorem_1_1,
    theorem_1_2,
    corollary_1_3,
    cutoff_limits,
    constants_report,
    deviator_sweep,
    evolve,
    selfsim,
};

ExperimentKind parse_kind(const std::string& s);
std::string kind_name(ExperimentKind k);

struct ScenarioConfig {
    ExperimentKind kind = ExperimentKind::constants_report;
    std::string name = "scenario";
    KernelSpec kernel;
    double alpha = 2.0;
    double delta = 0.5;
    double K = 1.0;
    std::string f0 = "maxwellian(1)";
    std::string g0 = "maxwellian(1)";

    GridSpec grid;
    int modes = 9;
    FlowOptions flow;
    double quad_tol = 1e-8;

    double t_end = 8.0;
    double t1 = 1.0;
    double burn_in = 1.0;  // fit windows start here
    double observe_dt = 0.25;
    std::vector<int> sobolev_N{0, 1};
    double bound_factor = 2.0;   // max/min of the H^N series
    double rate_slack = 0.10;    // fitted slope ≥ (1 - slack)·target
    double envelope_rel_tol = 1e-9;
    double contraction_slack = 1e-8;
    double coercivity_r_min = 2.0;

    std::vector<double> cutoff_n{10.0, 1e2, 1e4, 1e6};
    double cutoff_rel_err = 1e-3;
    std::vector<double> R_list{2.0, 4.0, 8.0, 16.0};
    double deviator_tol = 1e-6;
    double moment_tol = 1e-8;

    ProfileOptions profile;
    double profile_rho_max = 40.0;
    double K_rel_tol = 1e-2;
    double scaling_factor = 0.0;  // K' = factor·K for the covariance check; 0 skips
    double scaling_tol = 1e-5;
    double stationarity_dt = 0.5;
    double stationarity_tol = 1e-5;

    std::vector<std::string> observers{"d_alpha_to_one", "sup_abs_phi"};
    std::vector<double> snapshots;
    double bound_tol = 1e-7;  // |φ| ≤ 1 + bound_tol
    double growth_tol = 1e-9;  // slack on the e^{λt} growth bound of evolved data
    // Evolved states cancel their r² terms only to time-integration accuracy.
    double metric_zero_tol = 1e-5;
    double metric_r_floor = 0.0;
    double noise_floor = 1e-9;  // decay-series values at or below this are numerical zero
};

/// Reads a scenario; unknown keys are rejected.
ScenarioConfig load_scenario(const KeyValues& kv);
ScenarioConfig load_scenario_file(const std::string& path);

/// Lazily built self-similar profile shared by the densities of one scenario.
struct DensityContext {
    KernelSpec kernel;
    double alpha = 1.5;
    double K = 1.0;
    ProfileOptions profile;
    double rho_max = 40.0;
    std::shared_ptr<const SelfSimilarProfile> built;
    std::shared_ptr<DensitySpec> base;

    const DensitySpec& profile_density();
};

/// maxwellian(T), aniso_gaussian(T1,T2,T3), shifted_gaussian(T,c1,c2,c3),
/// mixture(w1*<density>, w2*<density>, ...), selfsim_profile, perturbed_profile(eps,T1,T2,T3).
DensitySpec parse_density(const std::string& text, DensityContext& ctx);

struct RateFit {
    double slope = 0.0;      // γ in value ≈ C e^{-γ t}
    double intercept = 0.0;  // C
    double t_lo = 0.0, t_hi = 0.0;
    double max_rel_residual = 0.0;
    int points = 0;
};

/// Least squares on (t, log value) over t_lo ≤ t ≤ t_hi.
RateFit fit_rate(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi);

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;  // optional leading text column (constants tables)
};

struct Report {
    std::string kind;
    std::string name;
    std::vector<std::pair<std::string, std::string>> summary;
    std::vector<Check> checks;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, CharFn>> charfns;

    void add(const std::string& key, double value);
    void add(const std::string& key, const std::string& value);
    void check(const std::string& name, bool pass, const std::string& detail);
    bool passed() const;
};

Report run_theorem_1_1(const ScenarioConfig& cfg);
Report run_theorem_1_2(const ScenarioConfig& cfg);
Report run_corollary_1_3(const ScenarioConfig& cfg);
Report run_cutoff_limits(const ScenarioConfig& cfg);
Report run_constants_report(const ScenarioConfig& cfg);
Report run_deviator_sweep(const ScenarioConfig& cfg);
Report run_evolve(const ScenarioConfig& cfg);
Report run_selfsim(const ScenarioConfig& cfg);
Report run_scenario(const ScenarioConfig& cfg);

/// Writes summary.txt, each table as CSV and each CharFn as CSV into out_dir.
void emit_report(const Report& report, const std::string& out_dir);

/// Mirrors KernelConstants into the report summary.
void add_constants(Report& report, const KernelConstants& kc);

}  // namespace bobylev
