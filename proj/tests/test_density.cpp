#include <cmath>

#include "bobylev/density.hpp"
#include "bobylev/errors.hpp"
#include "doctest.h"

using namespace bobylev;

namespace {

double max_abs(const Mat3& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s = std::max(s, std::abs(v));
    return s;
}

const DensitySpec kAniso = DensitySpec::aniso_gaussian(2, 1, 1);
const DensitySpec kIso = DensitySpec::maxwellian(4.0 / 3.0);

}  // namespace

TEST_CASE("families and closed-form moments") {
    CHECK(kAniso.mass() == 1.0);
    const auto M = kAniso.second_moment();
    REQUIRE(M);
    CHECK((*M)[0][0] == 2.0);
    CHECK((*M)[1][1] == 1.0);
    CHECK(kAniso.axis() == 0);
    CHECK(!kAniso.radial());
    CHECK(kIso.radial());
    const auto sh = DensitySpec::shifted_gaussian(1.0, {0.5, 0, 0});
    CHECK(sh.mean()[0] == 0.5);
    // Independent density evaluation: N(0, diag(2,1,1)) at (1, 0.5, 0).
    const double v = std::exp(-0.25 - 0.125) / std::pow(2 * kPi, 1.5) / std::sqrt(2.0);
    CHECK(kAniso.eval({1, 0.5, 0}) == doctest::Approx(v).epsilon(1e-14));
    const auto mix = DensitySpec::mixture({0.3, 0.7}, {DensitySpec::maxwellian(1), DensitySpec::maxwellian(2)});
    CHECK(mix.mass() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((*mix.second_moment())[2][2] == doctest::Approx(1.7).epsilon(1e-15));
    CHECK_THROWS_AS(DensitySpec::mixture({0.3, 0.6}, {kIso, kIso}), DomainError);
    CHECK_THROWS_AS(DensitySpec::aniso_gaussian(1, 2, 3).axis(), ShapeError);
}

TEST_CASE("second moment deviator") {
    const auto d = second_moment_deviator(kAniso, kIso);
    CHECK(d.P[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(d.P[1][1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(d.P[0][0] + d.P[1][1] + d.P[2][2] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(max_abs(second_moment_deviator(kIso, DensitySpec::maxwellian(1)).P) == 0.0);
}

TEST_CASE("zero energy perturbation") {
    CHECK(check_zero_energy_perturbation(kIso, kIso).zero);
    const auto e = check_zero_energy_perturbation(kAniso, kIso);
    CHECK(e.zero);
    CHECK(std::abs(e.residual) < 1e-14);
    const auto e1 = check_zero_energy_perturbation(kAniso, DensitySpec::maxwellian(1));
    CHECK(!e1.zero);
    CHECK(e1.residual == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cutoff approximations") {
    const auto c = cutoff_approx(DensitySpec::maxwellian(1), 8.0);
    CHECK(c.Z > 1 - 1e-10);
    CHECK(c.Z <= 1.0);
    CHECK(std::abs(c.a_R[0]) < 1e-15);
    CHECK(std::abs(c.mass - 1.0) < 1e-8);
    for (double R : {2.0, 4.0}) {
        const auto a = cutoff_approx(kAniso, R);
        CHECK(std::abs(a.mass - 1.0) < 1e-8);
        CHECK(std::abs(a.mean[0]) + std::abs(a.mean[1]) + std::abs(a.mean[2]) < 1e-8);
    }
    // The recentring shift tracks the mean of a shifted density.
    const auto sh = DensitySpec::shifted_gaussian(0.25, {0.5, 0, 0});
    const auto s1 = cutoff_approx(sh, 1.0), s4 = cutoff_approx(sh, 4.0);
    CHECK(std::abs(s4.a_R[0] - 0.5) < std::abs(s1.a_R[0] - 0.5));
    CHECK(s4.a_R[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK_THROWS_AS(cutoff_approx(DensitySpec::maxwellian(1), 0.1), CutoffRadiusError);
}

TEST_CASE("deviator sweep") {
    const auto rows = deviator_convergence_sweep(kAniso, kIso, {2, 4, 8, 16});
    REQUIRE(rows.size() == 4);
    for (std::size_t j = 1; j < rows.size(); ++j) CHECK(rows[j].max_dev <= rows[j - 1].max_dev);
    CHECK(rows.back().max_dev < 1e-6);
    for (const auto& r : deviator_convergence_sweep(kIso, DensitySpec::maxwellian(1), {2, 4})) CHECK(max_abs(r.P) < 1e-12);
    for (const auto& r : deviator_convergence_sweep(kAniso, kAniso, {2, 4})) CHECK(r.max_dev == 0.0);
}

TEST_CASE("radial transform") {
    const auto g = make_grid(GridSpec{});
    for (double T : {0.5, 1.0, 2.0}) {
        const auto phi = radial_transform(DensitySpec::maxwellian(T), g);
        double worst = 0.0;
        for (int i = 0; i < g->size(); ++i) worst = std::max(worst, std::abs(phi.eval(g->r(i)) - std::exp(-0.5 * T * g->r(i) * g->r(i))));
        CHECK(worst < 1e-8);
    }
    // Narrowing Gaussians approach the Dirac mass: φ → 1.
    const auto narrow = radial_transform(DensitySpec::maxwellian(1e-6), g);
    CHECK(narrow.eval(5.0) > 1 - 1e-4);
    CHECK_THROWS_AS(radial_transform(kAniso, g), ShapeError);
    CHECK_THROWS_AS(radial_transform(DensitySpec::maxwellian(100.0), g, 4.0), TruncationError);
}

TEST_CASE("inverse transform round trip") {
    const auto g = make_grid(GridSpec{});
    const auto phi = CharFn::radial_w(g, [](double r) { return -std::expm1(-0.5 * r * r); });
    const auto tab = inverse_radial_transform(phi, 12.0);
    CHECK(tab.mass() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(tab.eval(1.0) == doctest::Approx(std::exp(-0.5) / std::pow(2 * kPi, 1.5)).epsilon(1e-8));
}

TEST_CASE("moment metric bound") {
    const auto g = make_grid(GridSpec{});
    const auto same = moment_metric_bound_check(kIso, kIso, 0.5, g, 5);
    CHECK(same.lhs == 0.0);
    CHECK(same.ratio == 0.0);
    const auto r = moment_metric_bound_check(kAniso, kIso, 0.5, g, 5);
    CHECK(r.rhs_finite);
    CHECK(r.lhs_finite);
    CHECK(r.ratio > 0.0);
    CHECK(r.ratio < 1.0);
    const auto sh = DensitySpec::shifted_gaussian(4.0 / 3.0, {0.3, 0, 0});
    CHECK_THROWS_AS(moment_metric_bound_check(sh, kIso, 0.5, g, 5), HypothesisError);
    CHECK_THROWS_AS(moment_metric_bound_check(kAniso, kIso, 1.5, g, 5), DomainError);
}

TEST_CASE("nonnegativity report") {
    CHECK(nonnegativity(kAniso).min_value > 0.0);
    CHECK_THROWS_AS(DensitySpec::mixture({1.5, -0.5}, {kIso, kIso}), DomainError);
}
