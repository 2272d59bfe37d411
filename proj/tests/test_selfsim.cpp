#include <cmath>

#include "bobylev/density.hpp"
#include "bobylev/errors.hpp"
#include "bobylev/selfsim.hpp"
#include "doctest.h"

using namespace bobylev;

namespace {

// One relaxation (about 20 s on one core) shared by the tests below.
std::shared_ptr<const SelfSimilarProfile> profile15() {
    static const auto p = std::make_shared<const SelfSimilarProfile>(construct_profile(KernelSpec{}, 1.5, 1.0));
    return p;
}

double sup_w_diff(const CharFn& a, const CharFn& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s = std::max(s, std::abs(a.data()[i] - b.data()[i]));
    return s;
}

}  // namespace

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(construct_profile(KernelSpec{}, 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(construct_profile(KernelSpec{}, 0.4, 1.0), DomainError);
    CHECK_THROWS_AS(construct_profile(KernelSpec{}, 1.5, -1.0), DomainError);
    ProfileOptions tight;
    tight.tau_max = 0.5;
    tight.tol = 1e-12;
    try {
        construct_profile(KernelSpec{}, 1.5, 1.0, tight);
        CHECK(false);
    } catch (const RelaxationError& e) {
        CHECK(!e.history.empty());
    }
}

TEST_CASE("fit_K on a stable law") {
    const auto g = make_grid(GridSpec{});
    for (double alpha : {1.2, 1.5, 1.98}) {
        const auto w = CharFn::radial_w(g, [=](double r) { return -std::expm1(-0.8 * std::pow(r, alpha)); }, alpha);
        CHECK(fit_K(w, alpha) == doctest::Approx(0.8).epsilon(1e-6));
    }
}

TEST_CASE("profile properties") {
    const auto& p = *profile15();
    CHECK(p.residual < 1e-6);
    CHECK(std::abs(p.K_fit - 1.0) < 1e-2);
    CHECK(p.psi_hat.w(0.0) == 0.0);
    for (int i = 0; i < p.psi_hat.size(); ++i) CHECK(std::abs(p.psi_hat.node_phi(i, 1.0)) <= 1.0 + 1e-9);
    CHECK(p.mu_alpha == doctest::Approx(1.11980891640503).epsilon(1e-10));
    for (std::size_t j = 1; j < p.history.size(); ++j) CHECK(p.history[j].first > p.history[j - 1].first);
}

TEST_CASE("self_similar_at") {
    const auto& p = *profile15();
    const auto same = self_similar_at(p, 0.0, p.psi_hat.grid_ptr());
    CHECK(sup_w_diff(same, p.psi_hat) == 0.0);
    const double t = 0.7, s = std::exp(p.mu_alpha * t);
    const auto at = self_similar_at(p, t);
    for (double r : {0.01, 0.3, 1.2}) CHECK(at.w(r) == doctest::Approx(p.psi_hat.w(r * s)).epsilon(1e-9));
    CHECK_THROWS_AS(self_similar_at(p, t, p.psi_hat.grid_ptr()), OutOfRangeError);
    // ‖f(t)‖_{L²} = e^{-3μt/2}‖Ψ‖_{L²} exactly; H¹ only bounds it from above.
    const double l2 = sobolev_norm(p.psi_hat, 0);
    for (double tt : {0.5, 1.0}) {
        const auto f = self_similar_at(p, tt);
        CHECK(sobolev_norm(f, 0) == doctest::Approx(std::exp(-1.5 * p.mu_alpha * tt) * l2).epsilon(1e-5));
        CHECK(sobolev_norm(f, 1) >= std::exp(-1.5 * p.mu_alpha * tt) * l2);
    }
}

TEST_CASE("stationarity under the direct flow") {
    const auto& p = *profile15();
    const auto rep = verify_stationarity(p, 0.5);
    CHECK(rep.discrepancy < 1e-5);
    // A perturbed profile is not a fixed point, and more perturbation shows more.
    double prev = rep.discrepancy;
    for (double eps : {1e-3, 1e-2}) {
        SelfSimilarProfile q = p;
        for (int i = 0; i < q.psi_hat.size(); ++i) {
            const double r = q.psi_hat.grid().r(i);
            q.psi_hat.mode(0)[static_cast<std::size_t>(i)] += eps * r * r * r * r * std::exp(-r * r);
        }
        q.psi_hat.refit();
        const double d = verify_stationarity(q, 0.5).discrepancy;
        CHECK(d > 5 * prev);
        prev = d;
    }
    // α = 2 surrogate: the Maxwellian with μ = 0 is stationary.
    SelfSimilarProfile m;
    m.alpha = 2.0;
    m.K = 0.5;
    m.kernel = KernelSpec{};
    m.psi_hat = CharFn::radial_w(make_grid(GridSpec{}), [](double r) { return -std::expm1(-0.5 * r * r); });
    CHECK(verify_stationarity(m, 0.5).discrepancy < 1e-8);
}

TEST_CASE("scaling covariance") {
    const auto& p = *profile15();
    const auto q = construct_profile(KernelSpec{}, 1.5, 2.0);
    const double c = std::pow(2.0, 1.0 / 1.5);
    double worst = 0.0;
    for (int i = 0; i < q.psi_hat.size(); ++i) {
        const double r = q.psi_hat.grid().r(i);
        if (c * r > p.psi_hat.grid().r_max()) break;
        worst = std::max(worst, std::abs(q.psi_hat.mode(0)[static_cast<std::size_t>(i)] - p.psi_hat.w(c * r)));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("profile as a density") {
    const auto prof = profile15();
    const auto d = DensitySpec::selfsim_profile(prof);
    CHECK(d.radial());
    CHECK(!d.second_moment());
    CHECK(d.profiles().front().table->mass() == doctest::Approx(1.0).epsilon(1e-5));
    const auto back = radial_transform(*d.profiles().front().table, prof->psi_hat.grid_ptr(), 1.5);
    double worst = 0.0;
    for (int i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back.node_phi(i, 1) - prof->psi_hat.node_phi(i, 1)));
    CHECK(worst < 1e-5);

    const auto pert = DensitySpec::perturbed_profile(d, 0.2, {2, 1, 1});
    CHECK(pert.mass() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(nonnegativity(pert).min_value > -1e-6);
    CHECK(check_zero_energy_perturbation(pert, d).zero);
    CHECK_THROWS_AS(check_zero_energy_perturbation(pert, DensitySpec::maxwellian(1)), MomentDivergenceError);
    // Too large a perturbation drives the density negative, and the report says so.
    CHECK(nonnegativity(DensitySpec::perturbed_profile(d, 20.0, {4, 0.5, 0.5})).min_value < 0.0);
}

TEST_CASE("bounded kernel profile") {
    KernelSpec k;
    k.form = KernelForm::constant_test;
    const auto p = construct_profile(k, 1.5, 1.0);
    CHECK(std::abs(p.K_fit - 1.0) < 1e-2);
    CHECK(p.residual < 1e-6);
}
