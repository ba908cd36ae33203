#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/rng.hpp"

using namespace mvlab;

namespace {

EmpiricalMeasure cloud_1d(SequentialRng& rng, std::size_t n, double shift = 0.0, double scale = 1.0) {
    Vec xs(n);
    for (auto& x : xs) x = shift + scale * rng.gaussian();
    return EmpiricalMeasure(1, std::move(xs));
}

EmpiricalMeasure grid_2d(std::size_t side, double shift_x = 0.0, double shift_y = 0.0) {
    Vec xs;
    xs.reserve(side * side * 2);
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) {
            xs.push_back(shift_x + static_cast<double>(i) / std::max<std::size_t>(side - 1, 1));
            xs.push_back(shift_y + static_cast<double>(j) / std::max<std::size_t>(side - 1, 1));
        }
    return EmpiricalMeasure(2, std::move(xs));
}

// Exact W1 between one dimensional empirical measures as the area between the
// distribution functions, integrated over the merged support.
double cdf_area_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    struct Ev { double x, wm, wn; };
    std::vector<Ev> ev;
    for (std::size_t i = 0; i < mu.size(); ++i) ev.push_back({mu.samples()[i], mu.weight(i), 0.0});
    for (std::size_t j = 0; j < nu.size(); ++j) ev.push_back({nu.samples()[j], 0.0, nu.weight(j)});
    std::sort(ev.begin(), ev.end(), [](const Ev& a, const Ev& b) { return a.x < b.x; });
    double area = 0.0, fm = 0.0, fn = 0.0;
    for (std::size_t k = 0; k + 1 <= ev.size(); ++k) {
        fm += ev[k].wm;
        fn += ev[k].wn;
        if (k + 1 < ev.size()) area += std::abs(fm - fn) * (ev[k + 1].x - ev[k].x);
    }
    return area;
}

}  // namespace

TEST_SUITE("measure") {

TEST_CASE("moments and means of small weighted clouds") {
    EmpiricalMeasure u(1, {0.0, 1.0, 2.0});
    CHECK(u.mean()[0] == doctest::Approx(1.0));
    CHECK(u.moment(1) == doctest::Approx(1.0));
    CHECK(u.moment(2) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));

    EmpiricalMeasure w(1, {0.0, 2.0}, {0.25, 0.75});
    CHECK(w.mean()[0] == doctest::Approx(1.5));
    CHECK(w.moment(2) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK_FALSE(w.uniform());
}

TEST_CASE("translation and thinning preserve structure") {
    EmpiricalMeasure d = EmpiricalMeasure::dirac({1.0, 2.0});
    EmpiricalMeasure t = d.translated({0.5, -1.0});
    CHECK(t.point(0)[0] == doctest::Approx(1.5));
    CHECK(t.point(0)[1] == doctest::Approx(1.0));

    SequentialRng rng(31);
    EmpiricalMeasure big = cloud_1d(rng, 100);
    EmpiricalMeasure small = big.thinned(10);
    CHECK(small.size() <= 10);
    CHECK(small.size() > 0);
    CHECK(small.uniform());
    CHECK(small.dimension() == 1);
    // Thinning far above the size is the identity.
    CHECK(big.thinned(1000).size() == 100);
}

TEST_CASE("summary carries mean, quadratic norm and the cloud") {
    EmpiricalMeasure u(1, {0.0, 1.0, 2.0});
    MeasureSummary s = make_summary(u);
    REQUIRE(s.mean.size() == 1);
    CHECK(s.mean[0] == doctest::Approx(1.0));
    CHECK(s.norm2 == doctest::Approx(u.moment(2)));
    CHECK(s.cloud != nullptr);
}

TEST_CASE("dirac distances come out exactly") {
    auto a = EmpiricalMeasure::dirac({0.3});
    auto b = EmpiricalMeasure::dirac({-1.1});
    CHECK(wasserstein(a, b, 1) == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(wasserstein(a, b, 2) == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("translation moves a measure by exactly the shift length") {
    SequentialRng rng(7);
    EmpiricalMeasure mu = cloud_1d(rng, 64);
    CHECK(wasserstein(mu, mu.translated({0.25}), 2) == doctest::Approx(0.25).epsilon(1e-10));

    EmpiricalMeasure g = grid_2d(8);
    EmpiricalMeasure h = g.translated({0.3, 0.4});
    CHECK(wasserstein(g, h, 2) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(wasserstein(g, h, 1) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("weighted quantile coupling in one dimension") {
    EmpiricalMeasure mu(1, {0.0, 1.0}, {0.25, 0.75});
    EmpiricalMeasure nu(1, {0.0});
    CHECK(wasserstein(mu, nu, 1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(wasserstein(mu, nu, 2) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
}

TEST_CASE("metric axioms hold on sampled clouds") {
    SequentialRng rng(101);
    for (int trial = 0; trial < 12; ++trial) {
        EmpiricalMeasure a = cloud_1d(rng, 12, rng.uniform(-1, 1));
        EmpiricalMeasure b = cloud_1d(rng, 15, rng.uniform(-1, 1));
        EmpiricalMeasure c = cloud_1d(rng, 9, rng.uniform(-1, 1));
        double ab = wasserstein(a, b, 2);
        double ba = wasserstein(b, a, 2);
        double ac = wasserstein(a, c, 2);
        double bc = wasserstein(b, c, 2);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) <= 1e-9);
        CHECK(wasserstein(a, a, 2) <= 1e-9);
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("planar assignment agrees with brute force over permutations") {
    SequentialRng rng(55);
    const std::size_t n = 5;
    for (int trial = 0; trial < 6; ++trial) {
        Vec xs(2 * n), ys(2 * n);
        for (auto& v : xs) v = rng.uniform(-1, 1);
        for (auto& v : ys) v = rng.uniform(-1, 1);
        EmpiricalMeasure mu(2, xs), nu(2, ys);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double dx = xs[2 * i] - ys[2 * perm[i]];
                double dy = xs[2 * i + 1] - ys[2 * perm[i] + 1];
                s += dx * dx + dy * dy;
            }
            best = std::min(best, s / n);
        } while (std::next_permutation(perm.begin(), perm.end()));

        CHECK(wasserstein(mu, nu, 2) == doctest::Approx(std::sqrt(best)).epsilon(1e-9));
    }
}

TEST_CASE("one dimensional w1 equals the area between distribution functions") {
    SequentialRng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        EmpiricalMeasure mu = cloud_1d(rng, 20, rng.uniform(-0.5, 0.5));
        EmpiricalMeasure nu = cloud_1d(rng, 13, rng.uniform(-0.5, 0.5));
        CHECK(wasserstein(mu, nu, 1) == doctest::Approx(cdf_area_w1(mu, nu)).epsilon(1e-10));
    }
}

TEST_CASE("entropic fallback lands near the exact distance") {
    SequentialRng rng(99);
    Vec xs(80), ys(80);
    for (auto& v : xs) v = rng.gaussian();
    for (auto& v : ys) v = 1.0 + rng.gaussian();
    EmpiricalMeasure mu(2, xs), nu(2, ys);

    auto exact = wasserstein_report(mu, nu, 2);
    CHECK(exact.exact);

    WassersteinOptions opts;
    opts.exact_cap = 8;  // force the regularized solver
    auto ent = wasserstein_report(mu, nu, 2, opts);
    CHECK_FALSE(ent.exact);
    CHECK(ent.epsilon > 0.0);
    CHECK(ent.marginal_error < 1e-3);
    CHECK(std::abs(ent.value - exact.value) < 0.05 * exact.value + 0.02);
}

TEST_CASE("distribution function order is detected in one dimension") {
    EmpiricalMeasure mu(1, {0.0, 1.0});
    EmpiricalMeasure nu(1, {0.5, 1.5});
    auto v = stochastic_order(mu, nu);
    CHECK(v.relation == OrderRelation::less);
    CHECK(v.margin == doctest::Approx(0.5));
    CHECK(stochastic_order(nu, mu).relation == OrderRelation::greater);
    CHECK(stochastic_order(mu, mu).relation == OrderRelation::equal);

    EmpiricalMeasure a(1, {0.0, 3.0});
    EmpiricalMeasure b(1, {1.0, 2.0});
    auto w = stochastic_order(a, b);
    CHECK(w.relation == OrderRelation::incomparable);
    CHECK(w.margin == doctest::Approx(0.5));
    CHECK(w.witness.has_value());
}

TEST_CASE("noise margin discounts small violations") {
    const std::size_t n = 20;
    Vec base(n), up(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = static_cast<double>(i) / (n - 1);
        up[i] = base[i] + 0.1;
    }
    up[0] = base[0] - 0.01;  // one atom dips below, a violation of weight 1/n
    EmpiricalMeasure mu(1, base), nu(1, up);

    auto strict = stochastic_order(mu, nu);
    CHECK(strict.relation == OrderRelation::incomparable);

    OrderOptions opts;
    opts.noise_margin = 0.06;  // one atom of mass is 0.05
    auto lenient = stochastic_order(mu, nu, opts);
    CHECK(lenient.relation == OrderRelation::less);
}

TEST_CASE("coupling test certifies planar orders under the cap") {
    EmpiricalMeasure g = grid_2d(10);
    EmpiricalMeasure h = g.translated({0.2, 0.3});
    CHECK(stochastic_order(g, h).relation == OrderRelation::less);
    CHECK(stochastic_order(h, g).relation == OrderRelation::greater);

    EmpiricalMeasure a(2, {0.0, 0.0, 1.0, 1.0});
    EmpiricalMeasure b(2, {1.0, 0.0, 0.0, 1.0});
    CHECK(stochastic_order(a, b).relation == OrderRelation::incomparable);
}

TEST_CASE("beyond the cap the screen never certifies an order") {
    EmpiricalMeasure g = grid_2d(18);  // 324 points per side, 648 combined
    EmpiricalMeasure h = g.translated({0.2, 0.3});
    auto v = stochastic_order(g, h);
    CHECK(v.relation == OrderRelation::inconclusive);
    CHECK(v.note.find("orthant screen") != std::string::npos);

    // Genuine crossings are still caught by the screen.
    Vec mixed;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double dx = i % 2 == 0 ? 2.0 : -2.0;
        mixed.push_back(g.point(i)[0] + dx);
        mixed.push_back(g.point(i)[1] + dx);
    }
    EmpiricalMeasure m(2, mixed);
    CHECK(stochastic_order(g, m).relation == OrderRelation::incomparable);

    // And identical clouds still read as equal.
    CHECK(stochastic_order(g, g).relation == OrderRelation::equal);
}

TEST_CASE("dual norm reproduces point mass identities") {
    SignedDiscreteMeasure two_at_origin{1, {0.0}, {2.0}};
    CHECK(kantorovich_norm(two_at_origin) == doctest::Approx(2.0).epsilon(1e-9));

    auto d1 = difference(EmpiricalMeasure::dirac({1.0}), EmpiricalMeasure::dirac({0.0}));
    CHECK(kantorovich_norm(d1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dual norm of a difference equals w1") {
    SequentialRng rng(202);
    for (int trial = 0; trial < 8; ++trial) {
        EmpiricalMeasure mu = cloud_1d(rng, 14, rng.uniform(-0.5, 0.5));
        EmpiricalMeasure nu = cloud_1d(rng, 11, rng.uniform(-0.5, 0.5));
        double w1 = wasserstein(mu, nu, 1);
        CHECK(kantorovich_norm(difference(mu, nu)) == doctest::Approx(w1).epsilon(1e-6));
    }
}

TEST_CASE("cone membership matches distribution function dominance") {
    SequentialRng rng(303);
    int ordered_seen = 0, unordered_seen = 0;
    for (int trial = 0; trial < 20; ++trial) {
        EmpiricalMeasure mu = cloud_1d(rng, 12);
        EmpiricalMeasure nu = trial % 2 == 0
                                  ? mu.translated({rng.uniform(0.0, 0.5)})
                                  : cloud_1d(rng, 12, rng.uniform(-0.3, 0.3));
        auto rel = stochastic_order(mu, nu).relation;
        bool dominated = rel == OrderRelation::less || rel == OrderRelation::equal;
        (dominated ? ordered_seen : unordered_seen)++;
        CHECK(cone_membership(difference(nu, mu)) == dominated);
    }
    // The sample must exercise both branches to mean anything.
    CHECK(ordered_seen > 0);
    CHECK(unordered_seen > 0);

    EmpiricalMeasure any = cloud_1d(rng, 10);
    CHECK(cone_membership(difference(any, any)));
}

TEST_CASE("signed difference balances to zero mass") {
    SequentialRng rng(404);
    EmpiricalMeasure mu = cloud_1d(rng, 9);
    EmpiricalMeasure nu = cloud_1d(rng, 7);
    auto d = difference(mu, nu);
    CHECK(d.total_mass() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.size() <= mu.size() + nu.size());
    CHECK(d.dimension == 1);
}

TEST_CASE("sampling margin follows the smaller ensemble") {
    CHECK(dkw_margin(400, 10000) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dkw_margin(10000, 400) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dkw_margin(10000, 10000) == doctest::Approx(0.02).epsilon(1e-12));
}

}
