#include "mvlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mvlab/rng.hpp"

namespace mvlab {

namespace {

double thin_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t cap) {
    if (a.dimension() == 1) return wasserstein(a, b, 2.0);
    return wasserstein(a.thinned(cap), b.thinned(cap), 2.0);
}

// Squared W2 distance from the current ensemble state to a point mass.
double alpha_to_point(const MeasureSummary& s, const Vec& a) {
    double val = s.norm2 * s.norm2 + norm2_sq(a);
    for (std::size_t k = 0; k < a.size(); ++k) val -= 2.0 * a[k] * s.mean[k];
    return std::max(0.0, val);
}

// Deterministic resampling of a law into exactly n atoms whose lexicographic
// order matches quantile order, so index pairing realizes an ordered coupling
// whenever one exists for the pair.
EmpiricalMeasure resample_sorted(const EmpiricalMeasure& mu, std::size_t n) {
    const int d = mu.dimension();
    const std::size_t m = mu.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        const double* p = mu.point(i);
        const double* q = mu.point(j);
        for (int k = 0; k < d; ++k) {
            if (p[k] < q[k]) return true;
            if (p[k] > q[k]) return false;
        }
        return false;
    });

    Vec out(n * static_cast<std::size_t>(d));
    if (mu.uniform()) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = idx[(k * m) / n];
            for (int c = 0; c < d; ++c) out[k * d + c] = mu.point(j)[c];
        }
    } else {
        // Systematic resampling through the weight quantiles.
        std::size_t j = 0;
        double acc = mu.weight(idx[0]);
        for (std::size_t k = 0; k < n; ++k) {
            const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
            while (acc < q && j + 1 < m) acc += mu.weight(idx[++j]);
            for (int c = 0; c < d; ++c) out[k * d + c] = mu.point(idx[j])[c];
        }
    }
    return EmpiricalMeasure(d, std::move(out));
}

double default_horizon(const ProbeControls& c, double fallback) {
    return c.horizon > 0.0 ? c.horizon : fallback;
}

double checkpoint_spacing(const ProbeControls& c, double horizon) {
    return c.checkpoint_dt > 0.0 ? c.checkpoint_dt : horizon / 20.0;
}

IntegrationSchedule schedule_of(const ProbeControls& c) {
    IntegrationSchedule s;
    s.dt = c.dt;
    s.scheme = c.scheme;
    s.validate();
    return s;
}

}  // namespace

ComparisonReport comparison_probe(const ModelSpec& model, const EmpiricalMeasure& mu0,
                                  const EmpiricalMeasure& nu0, const ProbeControls& controls) {
    model.validate();
    OrderOptions oo;
    EmpiricalMeasure tmu = mu0.thinned(controls.order_thin);
    EmpiricalMeasure tnu = nu0.thinned(controls.order_thin);
    // Thinning to the knob is what bounds the coupling test, so the exact
    // test always runs on the thinned supports.
    oo.lp_cap = tmu.size() + tnu.size();
    OrderVerdict initial = stochastic_order(tmu, tnu, oo);
    if (initial.relation != OrderRelation::less && initial.relation != OrderRelation::equal) {
        std::ostringstream os;
        os << "initial laws are not ordered (" << to_string(initial.relation);
        if (initial.witness) {
            os << ", witness at";
            for (double v : *initial.witness) os << " " << format_double(v, 6);
        }
        os << ")";
        throw ArgumentError(os.str());
    }

    const std::size_t n = controls.particles;
    EmpiricalMeasure lo = resample_sorted(mu0, n);
    EmpiricalMeasure hi = resample_sorted(nu0, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!leq_componentwise(lo.point(i), hi.point(i), lo.dimension())) {
            throw ArgumentError(
                "no pointwise ordered pairing exists between the sorted initial clouds");
        }
    }

    const double horizon = default_horizon(controls, 2.0);
    const double cdt = checkpoint_spacing(controls, horizon);
    CoupledPairResult coupled =
        coupled_pair(model, model, InitSpec::from_cloud(lo), InitSpec::from_cloud(hi), n,
                     controls.seed, horizon, cdt, schedule_of(controls));

    ComparisonReport rep;
    for (const CoupledCheckpoint& ck : coupled.checkpoints) {
        rep.times.push_back(ck.time);
        EmpiricalMeasure ta = ck.law_a.thinned(controls.order_thin);
        EmpiricalMeasure tb = ck.law_b.thinned(controls.order_thin);
        // The sampling scale belongs to the clouds actually compared, and a
        // verdict lost in that noise does not contradict the order; only an
        // established reversal or crossing does.
        oo.lp_cap = ta.size() + tb.size();
        oo.noise_margin = dkw_margin(ta.size(), tb.size());
        OrderVerdict v = stochastic_order(ta, tb, oo);
        rep.all_ordered = rep.all_ordered && v.relation != OrderRelation::greater &&
                          v.relation != OrderRelation::incomparable;
        rep.verdicts.push_back(std::move(v));
        rep.pathwise_fraction.push_back(ck.pathwise_ordered_fraction);
    }
    rep.min_pathwise_fraction = coupled.min_ordered_fraction;
    return rep;
}

InstabilityReport instability_probe(const ModelSpec& model, const InvariantSet& set,
                                    int center_index, const std::vector<double>& ladder,
                                    const ProbeControls& controls) {
    model.validate();
    if (center_index < 0 || center_index >= static_cast<int>(set.measures.size()))
        throw ArgumentError("center index is out of range");
    if (ladder.empty()) throw ArgumentError("the perturbation ladder must be nonempty");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]))
            throw ArgumentError("the perturbation ladder must strictly decrease");

    const EmpiricalMeasure& center = set.measures[static_cast<std::size_t>(center_index)];
    const int d = model.dimension;

    double relax = 0.5;
    for (const PicardRun& r : set.runs) relax = std::max(relax, r.relaxation_time);
    const double horizon = default_horizon(controls, 10.0 * relax);
    const double cdt = checkpoint_spacing(controls, horizon);
    const IntegrationSchedule sched = schedule_of(controls);

    InstabilityReport rep;
    rep.center_index = center_index;
    rep.ladder = ladder;

    for (std::size_t li = 0; li < ladder.size(); ++li) {
        for (int dir : {+1, -1}) {
            EscapeOutcome oc;
            oc.epsilon = ladder[li];
            oc.direction = dir;

            Vec shift(d, dir > 0 ? ladder[li] : -ladder[li]);
            EmpiricalMeasure start = resample_sorted(center.translated(shift), controls.particles);
            ParticleEnsemble ens(model, InitSpec::from_cloud(start), controls.particles,
                                 mix_seed(controls.seed, 0xE5C4ull + 2 * li + (dir > 0 ? 0 : 1)));

            const auto ck_steps = static_cast<std::uint64_t>(std::llround(cdt / sched.dt));
            const auto total = static_cast<std::uint64_t>(std::llround(horizon / sched.dt));
            double d_center = 0.0;
            std::vector<double> d_all(set.measures.size(), 0.0);
            for (std::uint64_t step = 1; step <= total; ++step) {
                ens.step(sched);
                if (step % std::max<std::uint64_t>(1, ck_steps) != 0 && step != total) continue;
                EmpiricalMeasure law = ens.law();
                for (std::size_t j = 0; j < set.measures.size(); ++j)
                    d_all[j] = thin_distance(law, set.measures[j], controls.order_thin);
                d_center = d_all[static_cast<std::size_t>(center_index)];
                // Definite escape: locked onto another fixed point and has
                // clearly left the center.
                for (std::size_t j = 0; j < set.measures.size(); ++j) {
                    if (static_cast<int>(j) == center_index) continue;
                    if (d_all[j] < 0.5 * controls.capture_radius &&
                        d_center > 2.0 * controls.capture_radius) {
                        oc.escaped = true;
                        oc.limit_index = static_cast<int>(j);
                        oc.escape_time = ens.time();
                        break;
                    }
                }
                if (oc.escaped) break;
            }
            if (!oc.escaped) {
                // Judge by the terminal law.
                std::size_t best = 0;
                for (std::size_t j = 1; j < d_all.size(); ++j)
                    if (d_all[j] < d_all[best]) best = j;
                if (d_all[best] < controls.capture_radius) {
                    oc.limit_index = static_cast<int>(best);
                    oc.escape_time = ens.time();
                    if (static_cast<int>(best) == center_index)
                        oc.returned = true;
                    else
                        oc.escaped = true;
                } else {
                    oc.inconclusive = true;
                }
            }
            rep.outcomes.push_back(oc);
        }
    }

    rep.unstable = true;
    for (std::size_t li = 0; li < ladder.size(); ++li) {
        bool epsilon_escapes = false;
        for (int k = 0; k < 2; ++k) {
            const EscapeOutcome& oc = rep.outcomes[2 * li + k];
            if (!oc.escaped || oc.limit_index < 0) continue;
            const OrderRelation rel =
                set.order[static_cast<std::size_t>(center_index)][static_cast<std::size_t>(
                    oc.limit_index)].relation;
            if (rel == OrderRelation::less || rel == OrderRelation::greater) epsilon_escapes = true;
        }
        rep.unstable = rep.unstable && epsilon_escapes;
    }
    return rep;
}

OrbitTrace connecting_orbit_trace(const ModelSpec& model, const EmpiricalMeasure& source,
                                  const EmpiricalMeasure& target, OrbitDirection direction,
                                  double epsilon, const ProbeControls& controls) {
    model.validate();
    if (!(epsilon > 0.0)) throw ArgumentError("perturbation size must be positive");
    const int d = model.dimension;

    OrderOptions oo;
    EmpiricalMeasure tsrc = source.thinned(controls.order_thin);
    EmpiricalMeasure ttgt = target.thinned(controls.order_thin);
    oo.lp_cap = tsrc.size() + ttgt.size();
    OrderVerdict rel = stochastic_order(tsrc, ttgt, oo);
    const bool target_above = direction == OrbitDirection::increasing;
    if (target_above && rel.relation != OrderRelation::less)
        throw ArgumentError("an increasing trace needs the target above the source");
    if (!target_above && rel.relation != OrderRelation::greater)
        throw ArgumentError("a decreasing trace needs the target below the source");

    Vec shift(d, target_above ? epsilon : -epsilon);
    EmpiricalMeasure start = resample_sorted(source.translated(shift), controls.particles);
    ParticleEnsemble ens(model, InitSpec::from_cloud(start), controls.particles,
                         mix_seed(controls.seed, 0x0B17ull));

    const double horizon = default_horizon(controls, 20.0);
    const double cdt = checkpoint_spacing(controls, horizon);
    const IntegrationSchedule sched = schedule_of(controls);

    OrbitTrace trace;
    trace.direction = direction;
    trace.times.push_back(0.0);
    trace.laws.push_back(ens.law());
    trace.to_source.push_back(thin_distance(trace.laws.back(), source, controls.order_thin));
    trace.to_target.push_back(thin_distance(trace.laws.back(), target, controls.order_thin));

    const auto ck_steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(cdt / sched.dt)));
    const auto total = static_cast<std::uint64_t>(std::llround(horizon / sched.dt));
    for (std::uint64_t step = 1; step <= total; ++step) {
        ens.step(sched);
        if (step % ck_steps != 0 && step != total) continue;
        trace.times.push_back(ens.time());
        trace.laws.push_back(ens.law());
        trace.to_source.push_back(thin_distance(trace.laws.back(), source, controls.order_thin));
        trace.to_target.push_back(thin_distance(trace.laws.back(), target, controls.order_thin));
        if (trace.to_target.back() < controls.capture_radius) {
            trace.captured = true;
            trace.captured_at = ens.time();
            break;
        }
    }
    trace.stalled = !trace.captured;

    // Adjacent checkpoint order, graded against the sampling margin. A flag
    // contradicts the direction only when the reverse order is established or
    // the pair crosses; a verdict inside the noise band is neutral.
    const OrderRelation reversed = target_above ? OrderRelation::greater : OrderRelation::less;
    for (std::size_t k = 0; k + 1 < trace.laws.size(); ++k) {
        EmpiricalMeasure ta = trace.laws[k].thinned(controls.order_thin);
        EmpiricalMeasure tb = trace.laws[k + 1].thinned(controls.order_thin);
        oo.lp_cap = ta.size() + tb.size();
        oo.noise_margin = dkw_margin(ta.size(), tb.size());
        OrderVerdict v = stochastic_order(ta, tb, oo);
        if (v.relation == reversed || v.relation == OrderRelation::incomparable)
            ++trace.order_violations;
        trace.monotone_flags.push_back(std::move(v));
    }
    return trace;
}

ShrinkReport shrinking_neighborhood_probe(const ModelSpec& model, const DissipativityConfig& cfg,
                                          int samples_per_kind, const ProbeControls& controls) {
    model.validate();
    if (samples_per_kind < 1) throw ArgumentError("need at least one sample per kind");

    ShrinkReport rep;
    rep.config_report = check_config(model, cfg);
    if (!rep.config_report.passed())
        throw ArgumentError("the configuration does not pass its own checks");
    const DissipativityConfig& c = rep.config_report.config;
    const double r_sq = c.r * c.r;
    const double rbar_sq = c.r_bar * c.r_bar;
    rep.horizon = rep.config_report.horizon;

    const int d = model.dimension;
    const IntegrationSchedule sched = schedule_of(controls);
    // Entry typically happens long before the certified horizon; simulating
    // a generous fixed window and checking the entry time against the bound
    // keeps the probe affordable when theta is tiny.
    const double sim_span = std::min(rep.horizon, default_horizon(controls, 8.0));
    const double cdt = checkpoint_spacing(controls, sim_span);

    rep.passed = true;
    for (int kind = 0; kind < 2; ++kind) {
        for (int si = 1; si <= samples_per_kind; ++si) {
            const double rho =
                0.95 * c.r_bar * static_cast<double>(si) / static_cast<double>(samples_per_kind);
            ShrinkSample sample;
            sample.kind = kind == 0 ? "dirac" : "gaussian";
            sample.initial_radius = rho;

            InitSpec init;
            if (kind == 0) {
                Vec point = c.a;
                for (int k = 0; k < d; ++k) point[k] += rho / std::sqrt(static_cast<double>(d));
                init = InitSpec::dirac(point);
            } else {
                init = InitSpec::gaussian(c.a, rho / std::sqrt(static_cast<double>(d)));
            }
            ParticleEnsemble ens(model, init, controls.particles,
                                 mix_seed(controls.seed, 0x5B41ull + 64 * kind + si));

            const auto ck_steps =
                std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(cdt / sched.dt)));
            const auto total = static_cast<std::uint64_t>(std::llround(sim_span / sched.dt));
            sample.max_alpha = alpha_to_point(ens.summary(), c.a);
            // Sampling slack for the inner-ball invariance check: the squared
            // distance is a Monte Carlo estimate.
            const double inner_slack = 0.05 * r_sq;
            bool stayed_in_inner = true;
            for (std::uint64_t step = 1; step <= total; ++step) {
                ens.step(sched);
                if (step % ck_steps != 0 && step != total) continue;
                const double alpha = alpha_to_point(ens.summary(), c.a);
                sample.max_alpha = std::max(sample.max_alpha, alpha);
                if (alpha > rbar_sq) sample.stayed_in_outer = false;
                if (!sample.entered_inner && alpha < r_sq) {
                    sample.entered_inner = true;
                    sample.entry_time = ens.time();
                } else if (sample.entered_inner && alpha > r_sq + inner_slack) {
                    stayed_in_inner = false;
                }
            }
            sample.pass = sample.stayed_in_outer && sample.entered_inner && stayed_in_inner &&
                          sample.entry_time <= rep.horizon + 1e-9;
            rep.passed = rep.passed && sample.pass;
            rep.samples.push_back(std::move(sample));
        }
    }
    return rep;
}

SuiteReport multi_well_suite(const ModelSpec& model, const SuiteControls& controls) {
    model.validate();
    if (model.family != Family::multi_well && model.family != Family::perturbed_double_well &&
        model.family != Family::cross_coupled_2d)
        throw ArgumentError("the suite covers the multi-stable built-in families");
    {
        const double sup_sq = model.family == Family::cross_coupled_2d
                                  ? model.sigma.sup_total_sq(2)
                                  : model.sigma.sup_axis_sq(0);
        if (!verify_thresholds(model.family, model.beta, sup_sq).inside)
            throw ArgumentError("parameters sit outside the certified region");
    }

    SuiteReport rep;
    rep.expected_count = model.family == Family::multi_well ? 5 : 3;
    rep.set = find_invariant_measures(model, controls.invariant);
    rep.counts_ok = rep.set.measures.size() == rep.expected_count && rep.set.all_converged &&
                    rep.set.chain_ordered;

    rep.instabilities_ok = true;
    rep.orbits_ok = true;
    if (!rep.counts_ok) {
        rep.partial = true;
        return rep;
    }

    for (std::size_t mid = 1; mid + 1 < rep.set.measures.size(); mid += 2) {
        ProbeControls pc = controls.probe;
        pc.seed = mix_seed(controls.probe.seed, 0xA7B3ull + mid);
        InstabilityReport ir =
            instability_probe(model, rep.set, static_cast<int>(mid), controls.ladder, pc);
        rep.instabilities_ok = rep.instabilities_ok && ir.unstable;
        for (const EscapeOutcome& oc : ir.outcomes) rep.partial = rep.partial || oc.inconclusive;
        rep.middles.push_back(std::move(ir));

        for (int dir = 0; dir < 2; ++dir) {
            const bool up = dir == 0;
            ProbeControls oc = controls.probe;
            oc.seed = mix_seed(controls.probe.seed, 0xC0DAull + 16 * mid + dir);
            OrbitTrace trace = connecting_orbit_trace(
                model, rep.set.measures[mid], rep.set.measures[up ? mid + 1 : mid - 1],
                up ? OrbitDirection::increasing : OrbitDirection::decreasing,
                controls.orbit_epsilon, oc);
            rep.orbits_ok = rep.orbits_ok && trace.captured && trace.order_violations == 0;
            rep.partial = rep.partial || trace.stalled;
            rep.orbits.push_back(std::move(trace));
        }
    }
    return rep;
}

}  // namespace mvlab
