// Acceptance driver: one PASS/FAIL line per criterion. With --known-failing the exit
// code is 0 iff exactly the listed criteria fail; otherwise it is 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bobylev/errors.hpp"
#include "bobylev/flow.hpp"
#include "bobylev/lab.hpp"

using namespace bobylev;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string scenario_path(const std::string& name) { return std::string(BOBYLEV_SCENARIO_DIR) + "/" + name + ".cfg"; }

Report run_named(const std::string& name) { return run_scenario(load_scenario_file(scenario_path(name))); }

const Check* find(const Report& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

// Folds the named checks of a report into one outcome; a missing check fails.
Outcome require(const Report& r, const std::vector<std::string>& names) {
    Outcome o{true, ""};
    for (const auto& n : names) {
        const Check* c = find(r, n);
        const bool ok = c && c->pass;
        o.pass = o.pass && ok;
        if (!ok) o.detail += (o.detail.empty() ? "" : "; ") + n + (c ? ": " + c->detail : ": missing");
    }
    if (o.pass) o.detail = "checks " + std::to_string(names.size()) + "/" + std::to_string(names.size());
    return o;
}

std::string summary_value(const Report& r, const std::string& key) {
    for (const auto& [k, v] : r.summary)
        if (k == key) return v;
    return "?";
}

CharFn maxwellian(GridPtr g, double T) {
    return CharFn::radial_w(g, [T](double r) { return -std::expm1(-0.5 * T * r * r); });
}

double sup(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double sup_diff(const CharFn& a, const CharFn& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s = std::max(s, std::abs(a.data()[i] - b.data()[i]));
    return s;
}

KernelSpec constant_kernel() {
    KernelSpec k;
    k.form = KernelForm::constant_test;
    return k;
}

// Theorem reports, run once and shared between criteria 6, 8, 9 and 10.
struct Runs {
    std::optional<Report> t11_, t12_, cor_;
    const Report& get(std::optional<Report>& slot, const char* name) {
        if (!slot) slot = run_named(name);
        return *slot;
    }
    const Report& t11() { return get(t11_, "theorem_1_1_aniso"); }
    const Report& t12() { return get(t12_, "theorem_1_2"); }
    const Report& cor() { return get(cor_, "corollary_1_3"); }
};

Outcome constants_exactness() {
    const auto c = constants(constant_kernel(), 2.0, 2.0);
    const double pi = 3.14159265358979323846;
    const double eA = std::abs(c.A / pi - 1), eB = std::abs(c.B_delta / (2 * pi / 3) - 1),
                 eS = std::abs(*c.sigma_bar / (2 * pi) - 1);
    double lam = 0.0;
    for (const auto& k : {constant_kernel(), KernelSpec{}}) lam = std::max(lam, std::abs(constants(k, 2.0, 0.5).lambda_alpha));
    const auto s = constants(KernelSpec{}, 2.0, 2.0);
    const double eBA = std::abs(s.B_delta / (2.0 / 3.0 * s.A) - 1);
    const Report rc = run_named("constants_constant_kernel"), rs = run_named("constants_singular");
    const bool ok = eA < 1e-10 && eB < 1e-10 && eS < 1e-10 && lam < 1e-12 && eBA < 1e-10 && rc.passed() && rs.passed();
    return {ok, "A " + fmt(eA) + ", B_2 " + fmt(eB) + ", sigma_bar " + fmt(eS) + ", |lambda_2| " + fmt(lam) +
                    ", B_2/(2A/3) " + fmt(eBA) + " (tol 1e-10/1e-12)"};
}

Outcome cutoff_limits() {
    const Report r = run_named("cutoff_limits");
    Outcome o = require(r, {"cutoff_A", "cutoff_B", "cutoff_lambda"});
    if (o.pass) o.detail = "A, B, lambda monotone with final rel err < 1e-3";
    return o;
}

Outcome fixed_points() {
    const auto g = make_grid(GridSpec{});
    double rhs = 0.0, moved = 0.0;
    for (const auto& k : {KernelSpec{}, constant_kernel()}) {
        const Flow flow(k, g, 1);
        std::vector<double> out;
        for (double T : {0.5, 1.0, 2.0}) {
            const auto mx = maxwellian(g, T);
            flow.rhs(mx, out);
            rhs = std::max(rhs, sup(out));
            moved = std::max(moved, sup_diff(flow.evolve(flow.make_state(mx), 5.0, {}).final.phi, mx));
        }
        const auto one = unit_charfn(maxwellian(g, 1.0));
        flow.rhs(one, out);
        rhs = std::max(rhs, sup(out));
        moved = std::max(moved, sup_diff(flow.evolve(flow.make_state(one), 5.0, {}).final.phi, one));
    }
    return {rhs < 1e-8 && moved < 1e-6, "sup RHS " + fmt(rhs) + " (tol 1e-8), moved over t=5 " + fmt(moved) + " (tol 1e-6)"};
}

Outcome bkw_oracle() {
    const auto g = make_grid(GridSpec{});
    const KernelSpec k = constant_kernel();
    const double A = constants(k, 2.0, 0.5).A;
    const double c0 = -0.2, a0 = 0.5;
    // b' = -(A/3) b closes the flow on e^{-a r²}(1 + b r²) with a - b fixed by the energy.
    auto bkw = [&](double t, double r) {
        const double b = c0 * std::exp(-A * t / 3.0);
        return std::exp(-(a0 + b - c0) * r * r) * (1 + b * r * r);
    };
    const Flow flow(k, g, 1);
    std::vector<double> at;
    for (int j = 1; j <= 20; ++j) at.push_back(0.25 * j);
    double worst = 0.0;
    flow.evolve(flow.make_state(CharFn::radial_w(g, [&](double r) {
                    return -std::expm1(-a0 * r * r) - c0 * r * r * std::exp(-a0 * r * r);
                })), 5.0, at,
                [&](const FlowState& s) {
                    for (int i = 0; i < g->size(); ++i)
                        worst = std::max(worst, std::abs(s.phi.eval(g->r(i)) - bkw(s.t, g->r(i))));
                });
    return {worst < 1e-5, "sup error over [0, 5] " + fmt(worst) + " (tol 1e-5)"};
}

Outcome symmetry_reduction() {
    const auto g = make_grid(GridSpec{});
    const KernelSpec k;
    const auto rad = CharFn::radial_w(g, [](double r) {
        return 0.5 * -std::expm1(-0.25 * r * r) + 0.5 * -std::expm1(-0.75 * r * r);
    });
    const int m = 5;
    const Flow f1(k, g, 1), fm(k, g, m);
    auto gap = [&](const CharFn& a, const CharFn& b) {
        double d = 0.0;
        for (int i = 0; i < g->size(); ++i) {
            const auto ii = static_cast<std::size_t>(i);
            d = std::max(d, std::abs(a.mode(0)[ii] - b.mode(0)[ii]));
            for (int kk = 1; kk < m; ++kk) d = std::max(d, std::abs(b.mode(kk)[ii]));
        }
        return d;
    };
    const double dt = 0.05;
    const double step = gap(f1.step(f1.make_state(rad), dt).phi, fm.step(fm.make_state(CharFn::promote(rad, m)), dt).phi);
    const double over = gap(f1.evolve(f1.make_state(rad), 2.0, {}).final.phi,
                            fm.evolve(fm.make_state(CharFn::promote(rad, m)), 2.0, {}).final.phi);
    return {step < 1e-8 && over < 1e-6, "one step " + fmt(step) + " (tol 1e-8), over t=2 " + fmt(over) + " (tol 1e-6)"};
}

Outcome contraction_growth(Runs& runs) {
    Outcome o{true, ""};
    int n = 0;
    for (const Report* r : {&runs.t11(), &runs.t12(), &runs.cor()}) {
        for (const auto& c : r->checks) {
            const bool relevant = c.name == "contraction_D2" || c.name.rfind("growth_bound", 0) == 0;
            if (!relevant) continue;
            ++n;
            if (!c.pass) {
                o.pass = false;
                o.detail += (o.detail.empty() ? "" : "; ") + r->name + "/" + c.name + ": " + c.detail;
            }
        }
    }
    if (n == 0) return {false, "no contraction or growth checks were produced"};
    if (o.pass) o.detail = std::to_string(n) + " contraction/growth checks across theorem runs";
    return o;
}

Outcome selfsim_profile() {
    const Report r = run_named("selfsim");
    Outcome o = require(r, {"K_fit", "stationarity_residual", "scaling_covariance"});
    o.detail += " (K_fit " + summary_value(r, "K_fit") + ", residual " + summary_value(r, "residual") + ")";
    return o;
}

Outcome theorem_1_1(Runs& runs) {
    const Report& r = runs.t11();
    Outcome o = require(r, {"metric_finite", "metric_envelope", "metric_slope"});
    o.detail += " (slope " + summary_value(r, "metric.fit_slope") + " vs eta0 " + summary_value(r, "constants.eta0") + ")";
    return o;
}

Outcome theorem_1_2(Runs& runs) {
    const Report& r = runs.t12();
    Outcome o = require(r, {"H0_bounded", "H1_bounded", "H0_diff_envelope", "H0_diff_slope",
                                    "H1_diff_envelope", "H1_diff_slope", "coercivity"});
    o.detail += " (H0 slope " + summary_value(r, "H0_diff.fit_slope") + ", H1 slope " +
                summary_value(r, "H1_diff.fit_slope") + ")";
    return o;
}

Outcome corollary_1_3(Runs& runs) {
    const Report& r = runs.cor();
    Outcome o = require(r, {"metric_finite", "metric_envelope", "metric_slope", "eta1_at_least_eta0"});
    o.detail += " (slope " + summary_value(r, "metric.fit_slope") + " vs eta1 " + summary_value(r, "constants.eta1") + ")";
    return o;
}

Outcome moment_machinery() {
    const Report r = run_named("deviator_sweep");
    return require(r, {"deviator_converges", "cutoff_unit_mass", "cutoff_zero_mean"});
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "bobylev_acceptance_determinism";
    std::filesystem::remove_all(root);
    int files = 0;
    std::string diff;
    for (const std::string name : {"evolve_mixture", "deviator_sweep"}) {
        const auto cfg = load_scenario_file(scenario_path(name));
        const auto a = root / (name + "_a"), b = root / (name + "_b");
        emit_report(run_scenario(cfg), a.string());
        emit_report(run_scenario(cfg), b.string());
        for (const auto& e : std::filesystem::directory_iterator(a)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            const auto other = b / e.path().filename();
            if (!std::filesystem::exists(other) || slurp(e.path()) != slurp(other)) diff += " " + e.path().filename().string();
        }
    }
    std::filesystem::remove_all(root);
    if (files == 0) return {false, "no CSV outputs to compare"};
    return {diff.empty(), diff.empty() ? std::to_string(files) + " CSV files byte-identical across reruns"
                                       : "differing:" + diff};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> known_failing, only;
    app.add_option("--known-failing", known_failing, "criteria expected to fail")->delimiter(',');
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    Runs runs;
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "constants_exactness", constants_exactness},
        {2, "cutoff_limits", cutoff_limits},
        {3, "fixed_points", fixed_points},
        {4, "bkw_oracle", bkw_oracle},
        {5, "symmetry_reduction", symmetry_reduction},
        {6, "contraction_growth_bounds", [&] { return contraction_growth(runs); }},
        {7, "selfsim_profile", selfsim_profile},
        {8, "theorem_1_1_envelope", [&] { return theorem_1_1(runs); }},
        {9, "theorem_1_2_stability", [&] { return theorem_1_2(runs); }},
        {10, "corollary_1_3_maxwellian_limit", [&] { return corollary_1_3(runs); }},
        {11, "moment_machinery", moment_machinery},
        {12, "determinism", determinism},
    };
    const std::set<int> want(only.begin(), only.end());
    std::set<int> failed;
    for (const auto& c : criteria) {
        if (!want.empty() && !want.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) failed.insert(c.id);
        std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::set<int> expected;
    for (int id : known_failing)
        if (want.empty() || want.count(id)) expected.insert(id);
    std::printf("%zu failing", failed.size());
    if (!known_failing.empty()) std::printf(", %s the known-failing list", failed == expected ? "matching" : "NOT matching");
    std::printf("\n");
    return (known_failing.empty() ? failed.empty() : failed == expected) ? 0 : 1;
}
