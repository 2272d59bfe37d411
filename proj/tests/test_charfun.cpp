#include <cmath>
#include <filesystem>
#include <fstream>

#include "bobylev/charfun.hpp"
#include "bobylev/errors.hpp"
#include "doctest.h"

using namespace bobylev;

namespace {

GridPtr default_grid() { return make_grid(GridSpec{}); }

CharFn gaussian(GridPtr g, double a) {
    return CharFn::radial_w(g, [a](double r) { return -std::expm1(-0.5 * a * r * r); });
}

CharFn stable(GridPtr g, double K, double alpha) {
    return CharFn::radial_w(g, [=](double r) { return -std::expm1(-K * std::pow(r, alpha)); }, alpha);
}

// sup of |φ-ψ|/r^α over a dense log sample, independent of the grid machinery.
double dense_sup(const std::function<double(double)>& diff, double alpha) {
    double s = 0.0;
    for (int j = 0; j <= 20000; ++j) {
        const double r = std::pow(10.0, -8.0 + 9.3 * j / 20000.0);
        s = std::max(s, std::abs(diff(r)) / std::pow(r, alpha));
    }
    return s;
}

}  // namespace

TEST_CASE("grid layout") {
    const auto g = default_grid();
    CHECK(g->size() == 512);
    CHECK(g->r_min() == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(g->r_max() == doctest::Approx(20.0).epsilon(1e-12));
    for (int i = 1; i < g->size(); ++i) CHECK(g->r(i) > g->r(i - 1));
    CHECK(g->position(g->r(100)) == doctest::Approx(100.0).epsilon(1e-10));
}

TEST_CASE("eval") {
    const auto g = default_grid();
    const auto one = CharFn::radial_w(g, [](double) { return 0.0; });
    CHECK(one.eval(3.3) == 1.0);
    const auto mx = gaussian(g, 1.0);
    CHECK(mx.eval(1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
    CHECK(mx.eval(0.0) == 1.0);
    for (double r : {0.37, 2.2, 7.9}) CHECK(std::abs(mx.eval(r) - std::exp(-0.5 * r * r)) < 1e-10);
    // Below the first node the two-term model carries 1 - r^1.5 + r^3/2.
    const auto st = stable(g, 1.0, 1.5);
    const double r = 3e-6;
    CHECK(st.eval(r) == doctest::Approx(1.0 - std::pow(r, 1.5) + 0.5 * std::pow(r, 3)).epsilon(1e-14));
    CHECK(st.model(0).p1 == 1.5);
    CHECK(st.model(0).a1 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("axisymmetric layout") {
    const auto g = default_grid();
    const auto an = CharFn::axisymmetric_w(g, 5, [](double r, double u) {
        return -std::expm1(-0.5 * r * r * (1.0 + u * u));
    });
    for (double u : {0.0, 0.4, 1.0})
        CHECK(std::abs(an.eval(0.8, u) - std::exp(-0.32 * (1 + u * u))) < 1e-6);  // Legendre truncation
    const auto pr = CharFn::promote(gaussian(g, 1.0), 5);
    CHECK(pr.modes() == 5);
    for (int k = 1; k < 5; ++k) CHECK(pr.mode(k)[100] == 0.0);
    CHECK(pr.eval(0.7, 0.3) == doctest::Approx(std::exp(-0.245)).epsilon(1e-12));
}

TEST_CASE("d_alpha against dense-sample oracles") {
    const auto g = default_grid();
    const auto a = gaussian(g, 1.0), b = gaussian(g, 2.0);
    CHECK(d_alpha(a, a, 2.0).value == 0.0);
    const double oracle = dense_sup([](double r) { return std::expm1(-0.5 * r * r) - std::expm1(-r * r); }, 2.0);
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(d_alpha(a, b, 2.0).value == doctest::Approx(0.5).epsilon(1e-10));
    for (double alpha : {1.2, 1.5, 1.9}) {
        const auto s = stable(g, 0.7, alpha);
        const auto d = d_alpha(s, unit_charfn(s), alpha);
        CHECK(d.value == doctest::Approx(0.7).epsilon(1e-10));
        CHECK(!d.infinite);
        // A lower order of contact than α has no finite distance.
        CHECK(d_alpha(s, unit_charfn(s), alpha + 0.05).infinite);
    }
}

TEST_CASE("k_alpha diagnostic") {
    const auto g = default_grid();
    const auto s = stable(g, 1.3, 1.5);
    const auto rep = k_alpha_diagnostic(s, 1.5);
    CHECK(rep.d_alpha_to_1 == doctest::Approx(1.3).epsilon(1e-10));
    CHECK(rep.near_zero_order == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(rep.bound_violation <= 0.0);
    CHECK(k_alpha_diagnostic(unit_charfn(s), 1.5).d_alpha_to_1 == 0.0);
    CHECK(k_alpha_diagnostic(gaussian(g, 1.0), 2.0).d_alpha_to_1 == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("cutoff_X") {
    CHECK(cutoff_X(0.5) == 1.0);
    CHECK(cutoff_X(3.0) == 0.0);
    const double x = cutoff_X(1.5);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    double prev = 1.0;
    for (int j = 0; j <= 100; ++j) {
        const double v = cutoff_X(1.0 + j / 100.0);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("corrected metric") {
    const auto g = default_grid();
    const auto f = CharFn::axisymmetric_w(g, 5, [](double r, double u) {
        return -std::expm1(-0.5 * r * r * (1.0 + u * u));  // aniso Gaussian T = (1,1,2) along z
    }, 2.0, 2);
    const auto mx = CharFn::promote(gaussian(g, 4.0 / 3.0), 5);
    Deviator none;
    CHECK(d_alpha(f, mx, 2.5).infinite);
    CHECK(d_metric_with_correction(f, mx, none, 0.0, 0.5).infinite);
    const auto mx2 = CharFn::promote(gaussian(g, 1.0), 5);
    CHECK(d_metric_with_correction(mx2, mx2, none, 0.3, 0.5).value == 0.0);
    const auto s1 = CharFn::promote(stable(g, 1.0, 1.5), 5), s2 = CharFn::promote(stable(g, 1.2, 1.5), 5);
    CHECK(d_metric_with_correction(s1, s2, none, 0.0, 0.5).value == d_alpha(s1, s2, 2.5).value);
    CHECK(d_metric_with_correction(f, f, none, 0.0, 0.5).value == 0.0);

    Deviator dev;
    dev.P[0][0] = dev.P[1][1] = -1.0 / 3.0;
    dev.P[2][2] = 2.0 / 3.0;
    const auto d = d_metric_with_correction(f, mx, dev, 0.0, 0.5);
    CHECK(!d.infinite);
    CHECK(std::isfinite(d.value));
    // f = g with P ≠ 0 leaves |P̃| itself; at |ξ| = 1 along z that is ½ P_zz.
    const auto self = d_metric_with_correction(f, f, dev, 0.0, 0.5);
    CHECK(self.value >= 0.5 * (2.0 / 3.0) - 1e-3);
    const std::array<double, 3> ez{0, 0, 1};
    CHECK(dev.ptilde(0.0, ez) == doctest::Approx(-1.0 / 3.0));
    CHECK_THROWS_AS(d_metric_with_correction(f, mx, dev, -1.0, 0.5), DomainError);
}

TEST_CASE("sobolev norms") {
    const auto g = default_grid();
    const auto mx = gaussian(g, 1.0);
    CHECK(sobolev_norm(mx, 0) == doctest::Approx(std::pow(4 * kPi, -0.75)).epsilon(1e-8));
    CHECK(sobolev_norm(mx, 1) >= sobolev_norm(mx, 0));
    const auto zero = CharFn::radial_w(g, [](double) { return 1.0; });
    // w(0) = 0 is structural, so φ ≡ 0 keeps φ = 1 on the ball below r_min.
    CHECK(sobolev_norm(zero, 0) < 1e-8);
    CHECK(sobolev_norm_diff(mx, mx, 1) == 0.0);
    // φ ≡ 1 is not in L²: the untruncated tail is reported, not hidden.
    CHECK_THROWS_AS(sobolev_norm(unit_charfn(mx), 0), TruncationError);
}

TEST_CASE("csv writer") {
    const auto path = (std::filesystem::temp_directory_path() / "bobylev_charfn_test.csv").string();
    write_charfn_csv(gaussian(default_grid(), 1.0), path);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "r,re,im");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_charfn_csv(gaussian(default_grid(), 1.0), "/nonexistent/dir/x.csv"), Error);
}
