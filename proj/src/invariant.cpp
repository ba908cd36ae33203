#include "mvlab/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvlab/rng.hpp"

namespace mvlab {

void PsiControls::validate() const {
    if (particles == 0) throw ArgumentError("psi needs at least one particle");
    if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
    if (!(burn_in >= 0.0)) throw ArgumentError("burn-in must be nonnegative");
    if (!(window > 0.0)) throw ArgumentError("window must be positive");
    if (max_windows < 2) throw ArgumentError("need at least two windows to measure a residual");
    if (!(residual_tol > 0.0)) throw ArgumentError("residual tolerance must be positive");
    if (snapshots_per_window < 1) throw ArgumentError("need at least one snapshot per window");
    if (pool_cap < 8) throw ArgumentError("pool cap is too small to carry a law");
}

namespace {

// Pools snapshots of the ensemble over one window and returns the thinned law.
struct WindowPool {
    Vec flat;
    int dimension = 0;
    std::size_t points = 0;

    void absorb(const ParticleEnsemble& ens) {
        const Vec& s = ens.states();
        flat.insert(flat.end(), s.begin(), s.end());
        points += ens.size();
    }

    EmpiricalMeasure law(std::size_t cap) const {
        EmpiricalMeasure pooled(dimension, flat);
        return pooled.thinned(cap);
    }
};

// Residuals in d >= 2 go through the exact assignment solver, so keep the
// clouds small enough that the cubic solver stays cheap.
std::size_t residual_cap(int dimension, std::size_t pool_cap) {
    return dimension == 1 ? pool_cap : std::min<std::size_t>(pool_cap, 768);
}

double settle_time(const Vec& times, const Vec& trace, double fallback) {
    if (trace.size() < 8) return fallback;
    std::size_t tail = trace.size() / 4;
    double final_mean = 0.0;
    for (std::size_t i = trace.size() - tail; i < trace.size(); ++i) final_mean += trace[i];
    final_mean /= static_cast<double>(tail);
    double band = std::max(0.02, 0.1 * std::abs(trace.front() - final_mean));
    double entered = times.front();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (std::abs(trace[i] - final_mean) > band) entered = times[i];
    }
    // entered is the last exit; the next sample is the entry into the band
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (times[i] == entered) return times[i + 1];
    }
    return std::min(entered, fallback);
}

}  // namespace

PsiResult psi_from(const ModelSpec& model, const EmpiricalMeasure& frozen, const InitSpec& init,
                   const PsiControls& controls) {
    controls.validate();
    model.validate();
    if (frozen.size() == 0) throw ArgumentError("frozen law must carry at least one atom");
    if (frozen.dimension() != model.dimension)
        throw ArgumentError("frozen law dimension does not match the model");

    MeasureSummary fs = make_summary(frozen);
    ParticleEnsemble ens(model, init, controls.particles, controls.seed);
    IntegrationSchedule sched;
    sched.dt = controls.dt;
    sched.scheme = controls.scheme;
    sched.validate();

    const auto burn_steps = static_cast<std::uint64_t>(std::llround(controls.burn_in / controls.dt));
    const auto window_steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(controls.window / controls.dt)));
    const std::uint64_t snap_stride =
        std::max<std::uint64_t>(1, window_steps / static_cast<std::uint64_t>(controls.snapshots_per_window));
    const std::uint64_t total_steps = burn_steps + window_steps * static_cast<std::uint64_t>(controls.max_windows);
    const std::uint64_t trace_stride = std::max<std::uint64_t>(1, total_steps / 512);

    Vec trace_t, trace_m;
    trace_t.push_back(0.0);
    trace_m.push_back(ens.summary().mean[0]);

    auto maybe_trace = [&]() {
        if (ens.step_index() % trace_stride == 0) {
            trace_t.push_back(ens.time());
            trace_m.push_back(ens.summary().mean[0]);
        }
    };

    for (std::uint64_t k = 0; k < burn_steps; ++k) {
        ens.step(sched, &fs);
        maybe_trace();
    }

    PsiResult out;
    EmpiricalMeasure prev;
    bool have_prev = false;
    const std::size_t rcap = residual_cap(model.dimension, controls.pool_cap);
    out.residual = std::numeric_limits<double>::infinity();

    for (int w = 0; w < controls.max_windows; ++w) {
        WindowPool pool;
        pool.dimension = model.dimension;
        for (std::uint64_t k = 1; k <= window_steps; ++k) {
            ens.step(sched, &fs);
            maybe_trace();
            if (k % snap_stride == 0) pool.absorb(ens);
        }
        if (pool.points == 0) pool.absorb(ens);
        EmpiricalMeasure cur = pool.law(controls.pool_cap);
        if (have_prev) {
            out.residual = wasserstein(prev.thinned(rcap), cur.thinned(rcap), 2.0);
            if (out.residual < controls.residual_tol) {
                out.law = std::move(cur);
                out.converged = true;
                break;
            }
        }
        prev = std::move(cur);
        have_prev = true;
        if (w + 1 == controls.max_windows) out.law = prev;
    }
    if (out.law.size() == 0) out.law = prev;

    out.elapsed = ens.time();
    out.relaxation_time = settle_time(trace_t, trace_m, out.elapsed);
    return out;
}

PsiResult psi(const ModelSpec& model, const EmpiricalMeasure& frozen, const PsiControls& controls) {
    return psi_from(model, frozen, InitSpec::from_cloud(frozen), controls);
}

namespace {

struct ExponentProfile {
    Vec x;
    Vec h;  // cumulative 2 b / sigma^2, anchored at the left edge
    double hmax = 0.0;
};

ExponentProfile integrate_exponent(const ModelSpec& model, const MeasureSummary& s, double lo,
                                   double hi, std::size_t nodes) {
    ExponentProfile p;
    p.x.resize(nodes);
    p.h.resize(nodes);
    const double step = (hi - lo) / static_cast<double>(nodes - 1);
    auto ratio = [&](double u) {
        double b;
        eval_drift_into(model, &u, s, &b);
        const double sg = model.sigma.eval(0, u);
        return 2.0 * b / (sg * sg);
    };
    double prev_r = ratio(lo);
    p.x[0] = lo;
    p.h[0] = 0.0;
    p.hmax = 0.0;
    for (std::size_t i = 1; i < nodes; ++i) {
        const double xi = lo + step * static_cast<double>(i);
        const double r = ratio(xi);
        p.x[i] = xi;
        p.h[i] = p.h[i - 1] + 0.5 * (prev_r + r) * step;
        p.hmax = std::max(p.hmax, p.h[i]);
        prev_r = r;
    }
    return p;
}

}  // namespace

GibbsDensity gibbs_oracle_1d(const ModelSpec& model, double frozen_mean, std::size_t nodes) {
    model.validate();
    if (model.dimension != 1)
        throw UnsupportedModelError("the quadrature oracle only covers scalar models");
    if (!model.kernel_grad.empty())
        throw UnsupportedModelError(
            "pairwise kernels need full samples; the quadrature oracle only supports mean coupling");
    if (nodes < 65) throw ArgumentError("too few quadrature nodes");

    MeasureSummary s;
    s.mean = {frozen_mean};
    s.norm2 = std::abs(frozen_mean);

    // Find a bracket whose edges are 80 e-folds below the density peak, then
    // tighten to the 60 e-fold core before the fine pass.
    double lo = 0.0, hi = 0.0;
    bool found = false;
    for (double span : {6.0, 12.0, 24.0, 48.0}) {
        ExponentProfile coarse = integrate_exponent(model, s, -span, span, 8193);
        if (coarse.h.front() < coarse.hmax - 80.0 && coarse.h.back() < coarse.hmax - 80.0) {
            std::size_t a = 0, b = coarse.h.size() - 1;
            while (a + 1 < b && coarse.h[a] < coarse.hmax - 60.0) ++a;
            while (b > a + 1 && coarse.h[b] < coarse.hmax - 60.0) --b;
            const double pad = 0.05 * (coarse.x[b] - coarse.x[a]);
            lo = coarse.x[a] - pad;
            hi = coarse.x[b] + pad;
            found = true;
            break;
        }
    }
    if (!found)
        throw NumericalError("stationary density does not concentrate; the drift may not be confining");

    ExponentProfile fine = integrate_exponent(model, s, lo, hi, nodes);
    GibbsDensity g;
    g.frozen_mean = frozen_mean;
    g.grid = fine.x;
    g.pdf.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) g.pdf[i] = std::exp(fine.h[i] - fine.hmax);

    const double step = (hi - lo) / static_cast<double>(nodes - 1);
    double z = 0.0;
    for (std::size_t i = 0; i + 1 < nodes; ++i) z += 0.5 * (g.pdf[i] + g.pdf[i + 1]) * step;
    if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("quadrature normalisation failed");
    for (double& v : g.pdf) v /= z;

    g.cdf.resize(nodes);
    g.cdf[0] = 0.0;
    for (std::size_t i = 0; i + 1 < nodes; ++i)
        g.cdf[i + 1] = g.cdf[i] + 0.5 * (g.pdf[i] + g.pdf[i + 1]) * step;
    const double tail = g.cdf.back();
    for (double& v : g.cdf) v = std::min(1.0, v / tail);

    g.mean = 0.0;
    g.second_moment = 0.0;
    for (std::size_t i = 0; i + 1 < nodes; ++i) {
        const double xm = 0.5 * (g.grid[i] + g.grid[i + 1]);
        const double pm = 0.5 * (g.pdf[i] + g.pdf[i + 1]);
        g.mean += xm * pm * step;
        g.second_moment += xm * xm * pm * step;
    }
    return g;
}

double GibbsDensity::w1_to(const EmpiricalMeasure& sample) const {
    if (sample.dimension() != 1) throw ArgumentError("the quadrature oracle is one dimensional");
    const std::size_t n = sample.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return sample.samples()[a] < sample.samples()[b]; });

    // Merge grid nodes and atoms into one breakpoint sweep. Between
    // breakpoints the empirical CDF is constant and the quadrature CDF is
    // linear, so each segment integrates in closed form.
    Vec breaks;
    breaks.reserve(grid.size() + n);
    for (double x : grid) breaks.push_back(x);
    for (std::size_t i : idx) breaks.push_back(sample.samples()[i]);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto interp_cdf = [&](double x) {
        if (x <= grid.front()) return 0.0;
        if (x >= grid.back()) return 1.0;
        auto it = std::upper_bound(grid.begin(), grid.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - grid.begin());
        const double t = (x - grid[j - 1]) / (grid[j] - grid[j - 1]);
        return cdf[j - 1] + t * (cdf[j] - cdf[j - 1]);
    };

    double total = 0.0;
    std::size_t atom = 0;
    double emp = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double u = breaks[k], v = breaks[k + 1];
        while (atom < n && sample.samples()[idx[atom]] <= u) emp += sample.weight(idx[atom++]);
        const double a = interp_cdf(u) - emp;
        const double b = interp_cdf(v) - emp;
        if (a * b >= 0.0) {
            total += 0.5 * (std::abs(a) + std::abs(b)) * (v - u);
        } else {
            const double t = a / (a - b);
            total += 0.5 * (std::abs(a) * t + std::abs(b) * (1.0 - t)) * (v - u);
        }
    }
    return total;
}

EmpiricalMeasure GibbsDensity::sampled(std::size_t n) const {
    if (n == 0) throw ArgumentError("cannot sample an empty cloud");
    Vec xs(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
        std::size_t j = static_cast<std::size_t>(it - cdf.begin());
        if (j == 0) j = 1;
        if (j >= cdf.size()) j = cdf.size() - 1;
        const double c0 = cdf[j - 1], c1 = cdf[j];
        const double t = c1 > c0 ? (q - c0) / (c1 - c0) : 0.5;
        xs[k] = grid[j - 1] + t * (grid[j] - grid[j - 1]);
    }
    return EmpiricalMeasure(1, std::move(xs));
}

double gibbs_mean_map(const ModelSpec& model, double frozen_mean) {
    return gibbs_oracle_1d(model, frozen_mean, 2049).mean;
}

std::vector<ScalarRoot> self_consistency_roots_1d(const ModelSpec& model, double span,
                                                  double scan_step) {
    if (span <= 0.0) {
        span = 2.0;
        for (const Vec& p : declared_points(model)) span = std::max(span, std::abs(p[0]) + 1.5);
    }
    if (!(scan_step > 0.0)) throw ArgumentError("scan step must be positive");

    auto f = [&](double m) { return gibbs_mean_map(model, m) - m; };

    std::vector<double> roots;
    double m_prev = -span;
    double f_prev = f(m_prev);
    for (double m = -span + scan_step; m <= span + 0.5 * scan_step; m += scan_step) {
        const double fm = f(m);
        if (std::abs(f_prev) < 1e-13) {
            roots.push_back(m_prev);
        } else if (f_prev * fm < 0.0) {
            double a = m_prev, b = m, fa = f_prev;
            for (int it = 0; it < 48; ++it) {
                const double mid = 0.5 * (a + b);
                const double fmid = f(mid);
                if (fa * fmid <= 0.0) {
                    b = mid;
                } else {
                    a = mid;
                    fa = fmid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        m_prev = m;
        f_prev = fm;
    }
    if (std::abs(f_prev) < 1e-13) roots.push_back(m_prev);

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-6; }),
                roots.end());

    std::vector<ScalarRoot> out;
    const double h = 1e-4;
    for (double r : roots) {
        ScalarRoot sr;
        sr.location = std::abs(r) < 1e-9 ? 0.0 : r;
        sr.slope = (gibbs_mean_map(model, r + h) - gibbs_mean_map(model, r - h)) / (2.0 * h);
        sr.stable = std::abs(sr.slope) < 1.0;
        out.push_back(sr);
    }
    return out;
}

namespace {

double iterate_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t cap) {
    if (a.dimension() == 1) return wasserstein(a, b, 2.0);
    return wasserstein(a.thinned(cap), b.thinned(cap), 2.0);
}

bool mean_less(const Vec& a, const Vec& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k] - 1e-12) return true;
        if (a[k] > b[k] + 1e-12) return false;
    }
    return false;
}

OrderVerdict mirror(const OrderVerdict& v) {
    OrderVerdict m = v;
    if (v.relation == OrderRelation::less) m.relation = OrderRelation::greater;
    else if (v.relation == OrderRelation::greater) m.relation = OrderRelation::less;
    return m;
}

}  // namespace

InvariantSet find_invariant_measures(const ModelSpec& model, const std::vector<Vec>& seeds,
                                     const InvariantControls& controls) {
    if (seeds.empty()) throw ArgumentError("need at least one seed point");
    InvariantSet out;
    out.runs.reserve(seeds.size());

    const std::size_t cap = controls.order_thin;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        PicardRun run;
        run.seed_point = seeds[si];
        EmpiricalMeasure mu = EmpiricalMeasure::dirac(seeds[si]);
        run.mean_trace.push_back(seeds[si][0]);

        for (int k = 0; k < controls.max_iterations; ++k) {
            PsiControls pc = controls.psi;
            pc.seed = mix_seed(controls.psi.seed,
                               0x51C2ull + 977ull * static_cast<std::uint64_t>(si) +
                                   static_cast<std::uint64_t>(k));
            PsiResult r = psi(model, mu, pc);
            const double w2 = iterate_distance(r.law, mu, cap);
            const double dmean = dist(r.law.mean(), mu.mean());
            run.step_w2.push_back(w2);
            run.mean_trace.push_back(r.law.mean()[0]);
            run.relaxation_time = r.relaxation_time;
            mu = std::move(r.law);
            run.iterations = k + 1;
            if (k >= 1 && r.converged && w2 < controls.fixed_tol && dmean < controls.mean_tol) {
                run.converged = true;
                break;
            }
        }
        run.law = std::move(mu);
        out.runs.push_back(std::move(run));
    }

    // Identify distinct fixed points by W2 proximity, then sort by mean.
    out.basin.assign(out.runs.size(), -1);
    std::vector<std::size_t> owner;  // measure index -> representative run
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        if (!out.runs[i].converged) continue;
        int found = -1;
        for (std::size_t j = 0; j < out.measures.size(); ++j) {
            if (iterate_distance(out.runs[i].law, out.measures[j], cap) < controls.merge_radius) {
                found = static_cast<int>(j);
                break;
            }
        }
        if (found < 0) {
            out.measures.push_back(out.runs[i].law);
            owner.push_back(i);
            found = static_cast<int>(out.measures.size()) - 1;
        }
        out.basin[i] = found;
    }

    std::vector<std::size_t> perm(out.measures.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return mean_less(out.measures[a].mean(), out.measures[b].mean());
    });
    std::vector<EmpiricalMeasure> sorted;
    std::vector<int> rank(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        sorted.push_back(std::move(out.measures[perm[i]]));
        rank[perm[i]] = static_cast<int>(i);
    }
    out.measures = std::move(sorted);
    for (int& b : out.basin)
        if (b >= 0) b = rank[static_cast<std::size_t>(b)];

    const std::size_t nm = out.measures.size();
    out.order.assign(nm, std::vector<OrderVerdict>(nm));
    for (std::size_t i = 0; i < nm; ++i) {
        out.order[i][i].relation = OrderRelation::equal;
        for (std::size_t j = i + 1; j < nm; ++j) {
            EmpiricalMeasure ti = out.measures[i].thinned(cap);
            EmpiricalMeasure tj = out.measures[j].thinned(cap);
            OrderOptions oo;
            // Thinning to the knob is what bounds the coupling test, so the
            // exact test always runs on the thinned supports.
            oo.lp_cap = ti.size() + tj.size();
            // Tail fluctuations of the empirical distribution functions are
            // discounted at the sampling scale of the smaller support.
            oo.noise_margin = dkw_margin(ti.size(), tj.size());
            OrderVerdict v = stochastic_order(ti, tj, oo);
            out.order[i][j] = v;
            out.order[j][i] = mirror(v);
        }
    }

    out.all_converged = true;
    for (const PicardRun& r : out.runs) out.all_converged = out.all_converged && r.converged;
    out.chain_ordered = nm >= 1;
    for (std::size_t i = 0; i + 1 < nm; ++i)
        out.chain_ordered = out.chain_ordered && out.order[i][i + 1].relation == OrderRelation::less;
    return out;
}

InvariantSet find_invariant_measures(const ModelSpec& model, const InvariantControls& controls) {
    return find_invariant_measures(model, canonical_seed_points(model), controls);
}

double psi_moment_map_bound(const DissipativeConstants& c, double sigma_total_sq,
                            double input_second_moment) {
    if (!(c.alpha > 0.0)) throw ArgumentError("alpha must be positive");
    return (2.0 * c.beta_w * input_second_moment + 2.0 * c.gamma + sigma_total_sq) / (2.0 * c.alpha);
}

double psi_moment_fixed_bound(const DissipativeConstants& c, double sigma_total_sq) {
    if (!c.valid()) throw ArgumentError("constants must satisfy alpha > beta_w > 0");
    return (2.0 * c.gamma + sigma_total_sq) / (2.0 * (c.alpha - c.beta_w));
}

MomentCertificate moment_certificate(const ModelSpec& model, const EmpiricalMeasure& law, int p) {
    if (p < 2 || p % 2 != 0) throw ArgumentError("certificates cover even moment orders");
    MomentCertificate cert;
    cert.p = p;
    cert.constants = fit_dissipative_constants(model);
    cert.sigma_total_sq = model.sigma.sup_total_sq(model.dimension);

    const double b2 = psi_moment_fixed_bound(cert.constants, cert.sigma_total_sq);
    // Stationarity gives E|X|^q <= C_q E|X|^(q-2) with
    // C_q = (beta_w B2 + gamma + (q-1) S / 2) / alpha, folding up from E|X|^0 = 1.
    double bound = 1.0;
    for (int q = 2; q <= p; q += 2) {
        const double cq = (cert.constants.beta_w * b2 + cert.constants.gamma +
                           (static_cast<double>(q) - 1.0) * cert.sigma_total_sq / 2.0) /
                          cert.constants.alpha;
        bound *= cq;
    }
    cert.bound = bound;
    cert.observed = std::pow(law.moment(static_cast<double>(p)), static_cast<double>(p));
    cert.holds = cert.observed <= cert.bound * (1.0 + cert.slack) + 1e-12;
    return cert;
}

}  // namespace mvlab
