#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bobylev/errors.hpp"
#include "bobylev/lab.hpp"
#include "doctest.h"

using namespace bobylev;

namespace {

ScenarioConfig scenario(const std::string& text) { return load_scenario(KeyValues::parse(text, "test")); }

// Few modes and a short horizon for the cheap end-to-end cases.
const std::string kSmall = "modes = 3\nburn_in = 0.5\nobserve_dt = 0.25\n";
const std::string kShort = kSmall + "t_end = 2\n";

std::string hypothesis_of(const ScenarioConfig& cfg) {
    try {
        run_scenario(cfg);
    } catch (const HypothesisError& e) {
        return e.name;
    }
    return "";
}

const Check* find_check(const Report& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("key-value parsing") {
    const auto kv = KeyValues::parse("a = 1  # comment\nlist = [1, 2.5, 3]\nname = x y\n\n# only comment\n");
    CHECK(kv.num("a") == 1.0);
    CHECK(kv.nums("list", {}) == std::vector<double>{1, 2.5, 3});
    CHECK(kv.str("name") == "x y");
    CHECK(kv.unused().empty());
    CHECK(kv.strs("missing", {"d"}) == std::vector<std::string>{"d"});
    CHECK_THROWS_AS(KeyValues::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KeyValues::parse("just text\n"), ConfigError);
    CHECK_THROWS_AS(KeyValues::parse("a = x\n").num("a"), ConfigError);
    CHECK(split_top_level("mixture(0.5*a(1,2), 0.5*b), c") == std::vector<std::string>{"mixture(0.5*a(1,2), 0.5*b)", "c"});
    CHECK(KeyValues::parse("l = []\n").strs("l", {"x"}).empty());
}

TEST_CASE("scenario loading") {
    const auto c = scenario("kind = theorem_1_1\nalpha = 1.5\nsobolev_N = [0, 2]\nmode = direct\n");
    CHECK(c.kind == ExperimentKind::theorem_1_1);
    CHECK(c.alpha == 1.5);
    CHECK(c.sobolev_N == std::vector<int>{0, 2});
    CHECK(c.burn_in == 1.0);
    CHECK_THROWS_AS(scenario("kind = theorem_1_1\nalpah = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(scenario("kind = theorem_9\n"), ConfigError);
    CHECK_THROWS_AS(scenario("alpha = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(scenario("kind = evolve\nkernel = hard_spheres\n"), ConfigError);
    for (const auto k : {ExperimentKind::theorem_1_1, ExperimentKind::selfsim, ExperimentKind::deviator_sweep})
        CHECK(parse_kind(kind_name(k)) == k);
}

TEST_CASE("every committed scenario loads") {
    const std::filesystem::path dir = BOBYLEV_SCENARIO_DIR;
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".cfg") continue;
        CHECK_NOTHROW(load_scenario_file(e.path().string()));
        ++n;
    }
    CHECK(n >= 10);
}

TEST_CASE("density grammar") {
    DensityContext ctx;
    CHECK(parse_density("maxwellian(2)", ctx).family() == Family::maxwellian);
    const auto a = parse_density("aniso_gaussian(2, 1, 1)", ctx);
    CHECK(a.axis() == 0);
    const auto s = parse_density("shifted_gaussian(1, 0.5, 0, 0)", ctx);
    CHECK(s.mean()[0] == 0.5);
    const auto m = parse_density("mixture(0.25*maxwellian(1), 0.75*aniso_gaussian(1, 1, 2))", ctx);
    CHECK(m.mass() == doctest::Approx(1.0));
    CHECK((*m.second_moment())[2][2] == doctest::Approx(0.25 + 1.5));
    CHECK_THROWS_AS(parse_density("maxwellian(1, 2)", ctx), ConfigError);
    CHECK_THROWS_AS(parse_density("maxwellian(x)", ctx), ConfigError);
    CHECK_THROWS_AS(parse_density("gaussian(1)", ctx), ConfigError);
    CHECK_THROWS_AS(parse_density("maxwellian(1", ctx), ConfigError);
    CHECK(!ctx.built);  // no profile was needed
}

TEST_CASE("fit_rate") {
    std::vector<std::pair<double, double>> exact, flat, noisy;
    std::mt19937 rng(12345);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int j = 0; j <= 40; ++j) {
        const double t = 0.2 * j;
        exact.emplace_back(t, 3.0 * std::exp(-2.0 * t));
        flat.emplace_back(t, 0.7);
        noisy.emplace_back(t, std::exp(-1.3 * t) * (1.0 + noise(rng)));
    }
    const auto f = fit_rate(exact, 1.0, 8.0);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.max_rel_residual < 1e-12);
    CHECK(f.t_lo == doctest::Approx(1.0));
    CHECK(std::abs(fit_rate(flat, 0, 8).slope) < 1e-14);
    CHECK(fit_rate(noisy, 1.0, 8.0).slope == doctest::Approx(1.3).epsilon(0.03));
    auto bad = exact;
    bad[10].second = -1.0;
    CHECK_THROWS_AS(fit_rate(bad, 0.0, 8.0), DomainError);
    CHECK_THROWS_AS(fit_rate(exact, 0.0, 0.5), DomainError);
}

TEST_CASE("hypothesis gates name the violated condition") {
    const std::string base = "kind = theorem_1_1\n" + kShort;
    CHECK(hypothesis_of(scenario(base + "alpha = 0.9\n")) == "alpha range");
    CHECK(hypothesis_of(scenario(base + "alpha = 1.5\ndelta = 1.8\n")) == "delta range");
    CHECK(hypothesis_of(scenario(base + "alpha = 2\nf0 = aniso_gaussian(2, 1, 1)\ng0 = maxwellian(1)\n")) ==
          "zero energy perturbation");
    CHECK(hypothesis_of(scenario(base + "alpha = 2\nf0 = shifted_gaussian(0.9866666666666667, 0.2, 0, 0)\ng0 = maxwellian(1)\n")) ==
          "zero mean");
    CHECK(hypothesis_of(scenario("kind = corollary_1_3\n" + kShort + "f0 = maxwellian(2)\n")) ==
          "energy normalization");
    CHECK(hypothesis_of(scenario("kind = theorem_1_2\n" + kShort + "alpha = 1.9\ng0 = maxwellian(1)\n")) ==
          "self-similar reference");
    CHECK(hypothesis_of(scenario("kind = theorem_1_2\n" + kShort + "alpha = 2\ng0 = selfsim_profile\n")) ==
          "alpha range");
}

TEST_CASE("trivial pairs") {
    const auto r = run_scenario(scenario("kind = theorem_1_1\n" + kShort + "alpha = 2\nf0 = maxwellian(1)\ng0 = maxwellian(1)\n"));
    CHECK(r.passed());
    REQUIRE(find_check(r, "metric_envelope"));
    CHECK(find_check(r, "metric_envelope")->detail == "series identically ~0");
    const auto c = run_scenario(scenario("kind = corollary_1_3\n" + kShort + "f0 = maxwellian(1)\n"));
    CHECK(c.passed());
    CHECK(find_check(c, "eta1_at_least_eta0")->pass);
}

TEST_CASE("constants report") {
    const auto r = run_scenario(scenario("kind = constants_report\nkernel = constant_test\nb0 = 2\n"));
    CHECK(r.passed());
    CHECK(find_check(r, "A_equals_pi_b0"));
    REQUIRE(!r.tables.empty());
    CHECK(r.tables.front().header == std::vector<std::string>{"name", "value", "tolerance"});
    bool has_eta0 = false;
    for (const auto& [k, v] : r.summary) has_eta0 = has_eta0 || k == "constants.eta0";
    CHECK(has_eta0);
}

TEST_CASE("emit_report formats") {
    const auto dir = std::filesystem::temp_directory_path() / "bobylev_lab_emit";
    std::filesystem::remove_all(dir);
    const auto r = run_scenario(scenario("kind = theorem_1_1\n" + kShort + "alpha = 2\nf0 = aniso_gaussian(2, 1, 1)\n"
                                         "g0 = maxwellian(1.3333333333333333)\n"));
    emit_report(r, dir.string());
    const std::string verify = slurp(dir / "verify.csv");
    CHECK(verify.rfind("t,metric,hN_norm,envelope_bound\n", 0) == 0);
    const std::string summary = slurp(dir / "summary.txt");
    CHECK(summary.find("kind = theorem_1_1\n") == 0);
    CHECK(summary.find("check.metric_envelope = pass") != std::string::npos);
    CHECK(summary.find("constants.A = 3.81114607498728") != std::string::npos);
    std::filesystem::remove_all(dir);

    // No observers and no snapshots: the summary is the only file.
    const auto e = run_scenario(scenario("kind = evolve\n" + kSmall + "t_end = 0.5\nobservers = []\n"));
    emit_report(e, dir.string());
    int files = 0;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        CHECK(f.path().filename() == "summary.txt");
        ++files;
    }
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("failed checks surface by name") {
    // An impossible slope target must fail its check rather than pass quietly.
    const auto r = run_scenario(scenario("kind = theorem_1_1\n" + kShort + "alpha = 2\nf0 = aniso_gaussian(2, 1, 1)\n"
                                         "g0 = maxwellian(1.3333333333333333)\nrate_slack = -10\n"));
    CHECK(!r.passed());
    REQUIRE(find_check(r, "metric_slope"));
    CHECK(!find_check(r, "metric_slope")->pass);
}
