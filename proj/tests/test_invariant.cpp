#include <doctest.h>

#include <cmath>

#include "mvlab/invariant.hpp"

using namespace mvlab;

namespace {

ModelSpec dw_model(double beta, double sigma_sq) {
    ModelSpec m;
    m.family = Family::double_well;
    m.beta = beta;
    m.sigma.value = std::sqrt(sigma_sq);
    return m;
}

ModelSpec mw_model(double beta, double sigma_sq) {
    ModelSpec m;
    m.family = Family::multi_well;
    m.beta = beta;
    m.sigma.value = std::sqrt(sigma_sq);
    return m;
}

PsiControls quick_psi(std::uint64_t seed) {
    PsiControls c;
    c.particles = 3000;
    c.seed = seed;
    return c;
}

// Root of the scalar self-consistency map for beta = 3, sigma^2 = 0.09,
// cross-checked against an independent adaptive-quadrature computation.
constexpr double kDwRoot = 0.986217212362;

}  // namespace

TEST_SUITE("invariant") {

TEST_CASE("stationary density of the frozen dynamics is a probability density") {
    ModelSpec m = dw_model(3.0, 0.09);
    GibbsDensity g = gibbs_oracle_1d(m, 0.0);
    REQUIRE(g.grid.size() == g.pdf.size());
    REQUIRE(g.grid.size() == g.cdf.size());
    CHECK(g.cdf.back() == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : g.pdf) CHECK(v >= 0.0);
    // Symmetric input mean gives a symmetric density.
    CHECK(std::abs(g.mean) < 1e-9);
    CHECK(g.second_moment > 0.0);
    CHECK(g.frozen_mean == 0.0);
}

TEST_CASE("density sampling reproduces the quadrature moments") {
    ModelSpec m = dw_model(3.0, 0.09);
    GibbsDensity g = gibbs_oracle_1d(m, kDwRoot);
    EmpiricalMeasure cloud = g.sampled(20000);
    CHECK(cloud.size() == 20000);
    CHECK(cloud.mean()[0] == doctest::Approx(g.mean).epsilon(0.01));
    CHECK(sq(cloud.moment(2)) == doctest::Approx(g.second_moment).epsilon(0.01));
    // Quantile resampling makes the W1 gap to the source density tiny.
    CHECK(g.w1_to(cloud) < 0.005);
}

TEST_CASE("mean map fixed points match the independent quadrature values") {
    ModelSpec m = dw_model(3.0, 0.09);
    CHECK(std::abs(gibbs_mean_map(m, 0.0)) < 1e-10);
    CHECK(gibbs_mean_map(m, kDwRoot) == doctest::Approx(kDwRoot).epsilon(1e-7));

    auto roots = self_consistency_roots_1d(m);
    REQUIRE(roots.size() == 3);
    CHECK(roots[0].location == doctest::Approx(-kDwRoot).epsilon(1e-6));
    CHECK(roots[1].location == 0.0);
    CHECK(roots[2].location == doctest::Approx(kDwRoot).epsilon(1e-6));
    // The outer roots attract the mean iteration, the middle one repels it.
    CHECK(roots[0].stable);
    CHECK_FALSE(roots[1].stable);
    CHECK(roots[2].stable);
    CHECK(roots[1].slope > 1.2);
    CHECK(roots[1].slope < 1.7);
    CHECK(roots[2].slope > 0.3);
    CHECK(roots[2].slope < 0.9);
}

TEST_CASE("five-well mean map has five fixed points") {
    ModelSpec m = mw_model(24.0, 1.0);
    auto roots = self_consistency_roots_1d(m);
    REQUIRE(roots.size() == 5);
    // Independent quadrature values for beta = 24, sigma^2 = 1.
    CHECK(roots[0].location == doctest::Approx(-1.977505086391).epsilon(1e-6));
    CHECK(roots[1].location == doctest::Approx(-0.977715777343).epsilon(1e-6));
    CHECK(roots[2].location == 0.0);
    CHECK(roots[3].location == doctest::Approx(0.977715777343).epsilon(1e-6));
    CHECK(roots[4].location == doctest::Approx(1.977505086391).epsilon(1e-6));
    CHECK(roots[0].stable);
    CHECK_FALSE(roots[1].stable);
    CHECK(roots[2].stable);
    CHECK_FALSE(roots[3].stable);
    CHECK(roots[4].stable);
}

TEST_CASE("the measure map leaves its fixed point in place") {
    ModelSpec m = dw_model(3.0, 0.09);
    GibbsDensity g = gibbs_oracle_1d(m, kDwRoot);
    EmpiricalMeasure frozen = g.sampled(3000);
    PsiResult r = psi(m, frozen, quick_psi(71));
    CHECK(r.converged);
    CHECK(r.residual < 0.05);
    CHECK(r.law.mean()[0] == doctest::Approx(kDwRoot).epsilon(0.04));
    CHECK(r.relaxation_time > 0.0);
    CHECK(r.elapsed > 0.0);
}

TEST_CASE("the measure map is deterministic in the seed") {
    ModelSpec m = dw_model(3.0, 0.09);
    EmpiricalMeasure frozen = EmpiricalMeasure::dirac({1.0});
    PsiResult a = psi(m, frozen, quick_psi(5));
    PsiResult b = psi(m, frozen, quick_psi(5));
    PsiResult c = psi(m, frozen, quick_psi(6));
    CHECK(a.law.samples() == b.law.samples());
    CHECK(a.residual == b.residual);
    CHECK(a.law.samples() != c.law.samples());
}

TEST_CASE("malformed inputs are rejected") {
    ModelSpec m = dw_model(3.0, 0.09);
    EmpiricalMeasure empty;
    CHECK_THROWS_AS(psi(m, empty, quick_psi(1)), ArgumentError);

    EmpiricalMeasure planar(2, {0.0, 0.0});
    CHECK_THROWS_AS(psi(m, planar, quick_psi(1)), ArgumentError);

    PsiControls bad = quick_psi(1);
    bad.max_windows = 1;
    CHECK_THROWS_AS(psi(m, EmpiricalMeasure::dirac({0.0}), bad), ArgumentError);
    bad = quick_psi(1);
    bad.window = 0.0;
    CHECK_THROWS_AS(psi(m, EmpiricalMeasure::dirac({0.0}), bad), ArgumentError);
}

TEST_CASE("second-moment map bound closes at its fixed point") {
    ModelSpec m = dw_model(2.5, 0.09);
    auto c = fit_dissipative_constants(m);
    const double s = m.sigma.sup_total_sq(1);
    const double fixed = psi_moment_fixed_bound(c, s);
    CHECK(fixed == doctest::Approx(1.045).epsilon(1e-12));
    // Feeding the fixed bound through the one-step map returns it exactly.
    CHECK(psi_moment_map_bound(c, s, fixed) == doctest::Approx(fixed).epsilon(1e-12));
    // The map contracts toward the fixed bound from both sides.
    CHECK(psi_moment_map_bound(c, s, 0.0) < fixed);
    CHECK(psi_moment_map_bound(c, s, 2.0 * fixed) > fixed);
    CHECK(psi_moment_map_bound(c, s, 2.0 * fixed) < 2.0 * fixed);
}

TEST_CASE("moment certificates accept equilibria and reject inflated laws") {
    ModelSpec m = dw_model(2.5, 0.09);
    EmpiricalMeasure wells(1, {-1.0, 1.0});
    auto cert = moment_certificate(m, wells, 2);
    CHECK(cert.bound == doctest::Approx(1.045).epsilon(1e-12));
    CHECK(cert.observed == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cert.holds);

    EmpiricalMeasure inflated(1, {-1.2, 1.2});
    CHECK_FALSE(moment_certificate(m, inflated, 2).holds);

    CHECK_THROWS_AS(moment_certificate(m, wells, 3), ArgumentError);
    auto c4 = moment_certificate(m, wells, 4);
    CHECK(c4.bound > cert.bound);
    CHECK(c4.observed == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fixed-point iteration finds the three ordered double-well measures") {
    ModelSpec m = dw_model(3.0, 0.09);
    InvariantControls ic;
    ic.psi = quick_psi(12);
    ic.mean_tol = 0.01;  // matched to the 3000-particle sampling scale
    auto set = find_invariant_measures(m, ic);

    REQUIRE(set.measures.size() == 3);
    CHECK(set.all_converged);
    CHECK(set.chain_ordered);
    CHECK(set.measures[0].mean()[0] == doctest::Approx(-kDwRoot).epsilon(0.04));
    CHECK(std::abs(set.measures[1].mean()[0]) < 0.04);
    CHECK(set.measures[2].mean()[0] == doctest::Approx(kDwRoot).epsilon(0.04));

    REQUIRE(set.basin.size() == 3);
    CHECK(set.basin[0] == 0);
    CHECK(set.basin[1] == 1);
    CHECK(set.basin[2] == 2);

    CHECK(set.order[0][1].relation == OrderRelation::less);
    CHECK(set.order[1][2].relation == OrderRelation::less);
    CHECK(set.order[0][2].relation == OrderRelation::less);
    CHECK(set.order[2][0].relation == OrderRelation::greater);

    for (const auto& run : set.runs) {
        CHECK(run.converged);
        CHECK(run.iterations >= 2);
        CHECK(!run.step_w2.empty());
        CHECK(run.mean_trace.size() == static_cast<std::size_t>(run.iterations) + 1);
    }
}

}
