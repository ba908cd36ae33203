#include <doctest.h>

#include <cmath>

#include "mvlab/particle.hpp"

using namespace mvlab;

namespace {

// Linear drift toward zero with no interaction, the classic mean-reverting
// reference process with known transient and stationary moments.
ModelSpec linear_model(double theta, double sigma) {
    ModelSpec m;
    m.family = Family::custom;
    m.beta = 1.0;
    m.dimension = 1;
    m.sigma.value = sigma;
    m.custom_fn = [theta](const double* x, const MeasureSummary&, double* out) {
        out[0] = -theta * x[0];
    };
    return m;
}

ModelSpec dw_model(double beta, double sigma_sq) {
    ModelSpec m;
    m.family = Family::double_well;
    m.beta = beta;
    m.sigma.value = std::sqrt(sigma_sq);
    return m;
}

}  // namespace

TEST_SUITE("particle") {

TEST_CASE("scheme names round trip") {
    CHECK(scheme_from_string(to_string(Scheme::euler_maruyama)) == Scheme::euler_maruyama);
    CHECK(scheme_from_string(to_string(Scheme::tamed_euler)) == Scheme::tamed_euler);
    CHECK_THROWS_AS(scheme_from_string("milstein"), ArgumentError);
}

TEST_CASE("initial conditions land where they should") {
    ModelSpec m = dw_model(3.0, 0.09);

    ParticleEnsemble d(m, InitSpec::dirac({0.7}), 500, 1);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.states()[i] == 0.7);

    ParticleEnsemble g(m, InitSpec::gaussian({2.0}, 0.5), 20000, 2);
    auto s = g.summary();
    CHECK(s.mean[0] == doctest::Approx(2.0).epsilon(0.01));
    double var = sq(g.law().moment(2)) - sq(s.mean[0]);
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));

    EmpiricalMeasure src(1, {1.0, 2.0, 3.0});
    ParticleEnsemble c(m, InitSpec::from_cloud(src), 300, 3);
    for (std::size_t i = 0; i < c.size(); ++i) {
        double v = c.states()[i];
        CHECK((v == 1.0 || v == 2.0 || v == 3.0));
    }
}

TEST_CASE("same seed means the same trajectory, different seed does not") {
    ModelSpec m = dw_model(3.0, 0.09);
    IntegrationSchedule sched;
    ParticleEnsemble a(m, InitSpec::dirac({1.0}), 64, 42);
    ParticleEnsemble b(m, InitSpec::dirac({1.0}), 64, 42);
    ParticleEnsemble c(m, InitSpec::dirac({1.0}), 64, 43);
    for (int k = 0; k < 200; ++k) {
        a.step(sched);
        b.step(sched);
        c.step(sched);
    }
    CHECK(a.states() == b.states());
    CHECK(a.states() != c.states());
    CHECK(a.time() == doctest::Approx(0.2));
    CHECK(a.step_index() == 200);
}

TEST_CASE("mean reverting reference process hits its transient mean") {
    ModelSpec m = linear_model(2.0, 0.5);
    IntegrationSchedule sched;
    ParticleEnsemble ens(m, InitSpec::dirac({1.0}), 4000, 7);
    ens.run(1.0, sched);
    // E X_t = exp(-theta t) from a point mass at one.
    CHECK(ens.summary().mean[0] == doctest::Approx(std::exp(-2.0)).epsilon(0.15));
}

TEST_CASE("mean reverting reference process equilibrates to the known variance") {
    ModelSpec m = linear_model(2.0, 0.5);
    IntegrationSchedule sched;
    ParticleEnsemble ens(m, InitSpec::dirac({0.0}), 20000, 11);
    ens.run(10.0, sched);
    auto law = ens.law();
    double mean = law.mean()[0];
    double var = sq(law.moment(2)) - sq(mean);
    CHECK(std::abs(mean) < 0.02);
    // sigma^2 / (2 theta) = 0.0625
    CHECK(var == doctest::Approx(0.0625).epsilon(0.06));
}

TEST_CASE("checkpoints cover the full horizon including time zero") {
    ModelSpec m = dw_model(3.0, 0.09);
    IntegrationSchedule sched;
    ParticleEnsemble ens(m, InitSpec::dirac({1.0}), 256, 5);
    auto res = simulate(ens, 10.0, 1.0, sched);
    REQUIRE(res.checkpoints.size() == 11);
    CHECK(res.checkpoints.front().time == doctest::Approx(0.0));
    CHECK(res.checkpoints.back().time == doctest::Approx(10.0));
    // The diagnostic grid tracks every step.
    CHECK(res.times.size() == res.mean_first.size());
    CHECK(res.times.size() == res.second_moment.size());
    CHECK(res.times.back() == doctest::Approx(10.0));
    // A system started at a well with strong pull stays near it.
    CHECK(res.checkpoints.back().law.mean()[0] > 0.5);
}

TEST_CASE("frozen law dynamics relax to the frozen center") {
    // Pull toward the frozen mean only; equilibrium mean equals that center.
    ModelSpec m;
    m.family = Family::custom;
    m.beta = 1.0;
    m.dimension = 1;
    m.sigma.value = 0.2;
    m.custom_fn = [](const double* x, const MeasureSummary& mu, double* out) {
        out[0] = -2.0 * (x[0] - mu.mean[0]);
    };
    MeasureSummary frozen;
    frozen.mean = {0.5};
    frozen.norm2 = 0.5;
    IntegrationSchedule sched;
    ParticleEnsemble ens(m, InitSpec::dirac({-1.0}), 4000, 9);
    auto res = simulate_frozen(ens, frozen, 6.0, 1.0, sched);
    CHECK(res.checkpoints.back().law.mean()[0] == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("explosive drift trips the blow-up guard, taming survives it") {
    ModelSpec m;
    m.family = Family::custom;
    m.beta = 1.0;
    m.dimension = 1;
    m.sigma.value = 0.1;
    m.custom_fn = [](const double* x, const MeasureSummary&, double* out) {
        out[0] = x[0] * x[0] * x[0];
    };
    IntegrationSchedule em;
    em.dt = 0.01;
    ParticleEnsemble ens(m, InitSpec::dirac({2.0}), 16, 21);
    CHECK_THROWS_AS(ens.run(5.0, em), NumericalError);

    IntegrationSchedule tamed;
    tamed.dt = 0.01;
    tamed.scheme = Scheme::tamed_euler;
    ParticleEnsemble t(m, InitSpec::dirac({2.0}), 16, 21);
    CHECK_NOTHROW(t.run(5.0, tamed));
}

TEST_CASE("taming changes little when the drift is moderate") {
    ModelSpec m = dw_model(3.0, 0.09);
    IntegrationSchedule em, tm;
    tm.scheme = Scheme::tamed_euler;
    ParticleEnsemble a(m, InitSpec::dirac({1.0}), 2000, 33);
    ParticleEnsemble b(m, InitSpec::dirac({1.0}), 2000, 33);
    a.run(2.0, em);
    b.run(2.0, tm);
    CHECK(a.summary().mean[0] == doctest::Approx(b.summary().mean[0]).epsilon(0.01));
}

TEST_CASE("shared noise keeps linear systems exactly parallel") {
    // With drift -theta x the gap between two copies started c apart contracts
    // deterministically: gap_k = c (1 - theta dt)^k, independent of the noise.
    ModelSpec m = linear_model(2.0, 0.5);
    IntegrationSchedule sched;
    const std::size_t n = 128;
    ParticleEnsemble x(m, InitSpec::dirac({0.0}), n, 77);
    ParticleEnsemble y(m, InitSpec::dirac({1.0}), n, 77);
    const int steps = 500;
    for (int k = 0; k < steps; ++k) {
        x.step(sched);
        y.step(sched);
    }
    double expected = std::pow(1.0 - 2.0 * sched.dt, steps);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(y.states()[i] - x.states()[i] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("coupled cooperative systems preserve the pathwise order") {
    ModelSpec m = dw_model(2.8, 0.3);
    IntegrationSchedule sched;
    auto res = coupled_pair(m, m, InitSpec::dirac({-0.2}), InitSpec::dirac({0.1}), 2000, 101,
                            4.0, 0.5, sched);
    REQUIRE(!res.checkpoints.empty());
    CHECK(res.min_ordered_fraction >= 0.999);
    for (const auto& cp : res.checkpoints) {
        CHECK(cp.law_a.size() == 2000);
        CHECK(cp.law_b.size() == 2000);
    }
}

TEST_CASE("law and summary agree with each other") {
    ModelSpec m = dw_model(3.0, 0.09);
    ParticleEnsemble ens(m, InitSpec::gaussian({0.3}, 0.2), 512, 55);
    auto law = ens.law();
    auto s = ens.summary();
    CHECK(law.size() == 512);
    CHECK(law.dimension() == 1);
    CHECK(law.mean()[0] == doctest::Approx(s.mean[0]).epsilon(1e-12));
    CHECK(law.moment(2) == doctest::Approx(s.norm2).epsilon(1e-12));
}

}
