#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvlab/dissipativity.hpp"
#include "mvlab/dynamics.hpp"
#include "mvlab/io.hpp"

namespace fs = std::filesystem;
using namespace mvlab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kClaimFailure = 4;

// Human tables print 6 significant digits; machine artifacts keep 17.
std::string hum(double v) { return format_double(v, 6); }

std::string join_vec(const Vec& v, int digits = 6) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += " ";
        s += format_double(v[i], digits);
    }
    return s;
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    std::string out_dir;
};

RunConfig assemble_config(const CommonOpts& o) {
    Json j = Json::object();
    if (!o.config_path.empty()) {
        try {
            j = Json::parse(read_text_file(o.config_path));
        } catch (const Json::parse_error& e) {
            throw ArgumentError("cannot parse " + o.config_path + ": " + e.what());
        }
    }
    for (const std::string& kv : o.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ArgumentError("override '" + kv + "' must look like key=value");
        apply_override(j, kv.substr(0, eq), kv.substr(eq + 1));
    }
    RunConfig c;
    try {
        c = config_from_json(j);
    } catch (const Json::exception& e) {
        throw ArgumentError(std::string("bad config value: ") + e.what());
    }
    apply_env_overrides(c);
    if (o.seed_given) c.seed = o.seed;
    if (!o.out_dir.empty()) c.out_dir = o.out_dir;
    // The master seed drives every stochastic stage; section seeds in the
    // config are for driving the library directly.
    c.invariant.psi.seed = c.seed;
    c.probe.seed = c.seed;
    return c;
}

// One output directory per run, named by the content hash of what produced it.
class RunDir {
  public:
    RunDir(const std::string& command, const Json& config_snapshot, const std::string& out_root,
           int threads, std::uint64_t seed) {
        manifest_.run_id = make_run_id(command, config_snapshot);
        manifest_.command = command;
        manifest_.config = config_snapshot;
        manifest_.environment = Json{{"seed", seed}, {"threads", threads}};
        dir_ = fs::path(out_root) / (short_name(command) + "-" + manifest_.run_id);
        fs::create_directories(dir_);
        t0_ = std::chrono::steady_clock::now();
    }

    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        write_text_file((dir_ / name).string(), content);
        manifest_.artifacts[name] = name;
    }

    void write_measure(const std::string& name, const EmpiricalMeasure& mu) {
        write_measure_blob((dir_ / name).string(), mu);
        manifest_.artifacts[name] = name;
    }

    void finish() {
        manifest_.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        write_manifest(dir_.string(), manifest_);
        std::cout << "run " << manifest_.run_id << " -> " << dir_.string() << "\n";
    }

  private:
    static std::string short_name(const std::string& command) {
        const std::size_t colon = command.find(':');
        return colon == std::string::npos ? command : command.substr(0, colon);
    }

    fs::path dir_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point t0_;
};

Json order_verdict_json(const OrderVerdict& v) {
    Json j;
    j["relation"] = to_string(v.relation);
    j["margin"] = v.margin;
    if (v.witness) j["witness"] = *v.witness;
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

Json measure_stats_json(const EmpiricalMeasure& mu) {
    Json j;
    j["mean"] = mu.mean();
    j["second_moment"] = mu.moment(2.0) * mu.moment(2.0);
    j["atoms"] = mu.size();
    return j;
}

Json certificate_json(const MomentCertificate& c) {
    Json j;
    j["p"] = c.p;
    j["alpha"] = c.constants.alpha;
    j["beta_w"] = c.constants.beta_w;
    j["gamma"] = c.constants.gamma;
    j["sigma_total_sq"] = c.sigma_total_sq;
    j["bound"] = c.bound;
    j["observed"] = c.observed;
    j["holds"] = c.holds;
    return j;
}

Json condition_json(const ConditionReport& r) {
    return Json{{"passed", r.passed}, {"worst", r.worst}, {"detail", r.detail}};
}

Json config_report_json(const ConfigReport& r) {
    Json j;
    j["a"] = r.config.a;
    j["r"] = r.config.r;
    j["r_bar"] = r.config.r_bar;
    j["r_bar_found"] = r.r_bar_found;
    j["domination"] = condition_json(r.domination);
    j["convexity"] = condition_json(r.convexity);
    j["w_monotone"] = condition_json(r.w_monotone);
    j["positivity"] = condition_json(r.positivity);
    j["theta"] = r.theta;
    j["horizon"] = r.horizon;
    j["passed"] = r.passed();
    return j;
}

double thinned_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t cap) {
    if (a.dimension() == 1) return wasserstein(a, b, 2.0);
    return wasserstein(a.thinned(cap), b.thinned(cap), 2.0);
}

int cmd_simulate(const CommonOpts& opts) {
    RunConfig c = assemble_config(opts);
    c.model.validate();
    InitSpec init = c.simulate.init.to_spec(c.model.dimension);

    RunDir run("simulate", config_to_json(c), c.out_dir, opts.threads, c.seed);
    ParticleEnsemble ens(c.model, init, c.simulate.particles, c.seed);
    const EmpiricalMeasure initial = ens.law();
    IntegrationSchedule sched;
    sched.dt = c.simulate.dt;
    sched.scheme = c.simulate.scheme;
    SimulationResult res = simulate(ens, c.simulate.t_end, c.simulate.checkpoint_dt, sched);

    run.write("diagnostics.csv", checkpoints_csv(res));
    std::ostringstream table;
    table << "time,mean,norm2,w2_to_initial\n";
    std::cout << "  time        mean            ||.||_2     W2(t, 0)\n";
    for (const Checkpoint& ck : res.checkpoints) {
        const double n2 = ck.law.moment(2.0);
        const double w2 = thinned_w2(ck.law, initial, 512);
        table << format_double(ck.time) << "," << join_vec(ck.law.mean(), 17) << ","
              << format_double(n2) << "," << format_double(w2) << "\n";
        std::cout << "  " << hum(ck.time) << "\t" << join_vec(ck.law.mean()) << "\t" << hum(n2)
                  << "\t" << hum(w2) << "\n";
    }
    run.write("checkpoints.csv", table.str());
    run.write_measure("final.meas", res.checkpoints.back().law);
    run.finish();
    return kOk;
}

int cmd_invariant(const CommonOpts& opts) {
    RunConfig c = assemble_config(opts);
    c.model.validate();

    RunDir run("invariant", config_to_json(c), c.out_dir, opts.threads, c.seed);
    InvariantSet set = c.seeds_override.empty()
                           ? find_invariant_measures(c.model, c.invariant)
                           : find_invariant_measures(c.model, c.seeds_override, c.invariant);

    Json report;
    report["family"] = to_string(c.model.family);
    report["all_converged"] = set.all_converged;
    report["chain_ordered"] = set.chain_ordered;
    report["count"] = set.measures.size();

    std::cout << "invariant measures: " << set.measures.size() << "\n";
    std::cout << "  #   mean            ||.||_2     moment bound   observed\n";
    Json measures = Json::array();
    for (std::size_t i = 0; i < set.measures.size(); ++i) {
        const EmpiricalMeasure& mu = set.measures[i];
        MomentCertificate cert = moment_certificate(c.model, mu);
        Json m = measure_stats_json(mu);
        m["certificate"] = certificate_json(cert);
        measures.push_back(m);
        char name[32];
        std::snprintf(name, sizeof(name), "measure_%zu.meas", i);
        run.write_measure(name, mu);
        std::cout << "  " << i << "   " << join_vec(mu.mean()) << "\t" << hum(mu.moment(2.0))
                  << "\t" << hum(cert.bound) << "\t" << hum(cert.observed)
                  << (cert.holds ? "" : "  [moment bound violated]") << "\n";
    }
    report["measures"] = measures;

    Json runs = Json::array();
    for (const PicardRun& r : set.runs) {
        Json jr;
        jr["seed_point"] = r.seed_point;
        jr["iterations"] = r.iterations;
        jr["converged"] = r.converged;
        jr["mean_trace"] = r.mean_trace;
        jr["step_w2"] = r.step_w2;
        runs.push_back(jr);
    }
    report["runs"] = runs;
    report["basin"] = set.basin;

    Json order = Json::array();
    for (const auto& row : set.order) {
        Json jrow = Json::array();
        for (const OrderVerdict& v : row) jrow.push_back(order_verdict_json(v));
        order.push_back(jrow);
    }
    report["order"] = order;

    // The scalar mean-map roots double as an independent cross check whenever
    // the quadrature oracle applies to the model.
    if (c.model.dimension == 1 && c.model.kernel_grad.empty() && !c.model.custom_fn) {
        try {
            Json roots = Json::array();
            for (const ScalarRoot& r : self_consistency_roots_1d(c.model)) {
                roots.push_back(Json{{"location", r.location}, {"slope", r.slope},
                                     {"stable", r.stable}});
            }
            report["mean_map_roots"] = roots;
        } catch (const NumericalError&) {
            // oracle quadrature can fail for barely-confining drifts; the
            // particle answer stands on its own
        }
    }

    run.write("report.json", report.dump(2) + "\n");
    run.finish();
    if (!set.all_converged) {
        std::cout << "some seeds failed to converge\n";
        return kNumericalError;
    }
    return kOk;
}

int cmd_verify(const std::string& family_str, double beta, double sigma_sq,
               const CommonOpts& opts) {
    const Family family = family_from_string(family_str);
    ThresholdVerdict v = verify_thresholds(family, beta, sigma_sq);

    std::cout << "family " << family_str << "  beta " << hum(beta) << "  sigma_sq "
              << hum(sigma_sq) << "\n";
    std::cout << "  beta threshold   " << hum(v.beta_threshold) << "  = " << v.beta_expression
              << "  margin " << hum(v.beta_margin) << "\n";
    std::cout << "  sigma threshold  " << hum(v.sigma_sq_threshold) << "  = "
              << v.sigma_sq_expression << "  margin " << hum(v.sigma_sq_margin) << "\n";
    std::cout << "  verdict: " << (v.inside ? "inside" : "outside") << "\n";

    // Substitute the parameters into a concrete model so the certified
    // configurations can be machine checked, not just the threshold compare.
    ModelSpec model;
    model.family = family;
    model.beta = beta;
    model.dimension = family == Family::cross_coupled_2d ? 2 : 1;
    model.sigma.kind = SigmaSpec::Kind::constant;
    model.sigma.value = family == Family::cross_coupled_2d ? std::sqrt(sigma_sq / 2.0)
                                                           : std::sqrt(sigma_sq);
    if (family == Family::perturbed_double_well) {
        model.perturbation.kind = PerturbationSpec::Kind::sine;
        model.perturbation.amplitude = 1.0 / 3.0 - 1e-9;
    }
    model.validate();

    bool checks_pass = true;
    Json points = Json::array();
    std::vector<DissipativityConfig> searched;
    for (const Vec& a : certified_points(model)) {
        ConfigReport rep = check_config(model, builtin_config(model, a));
        checks_pass = checks_pass && rep.passed();
        points.push_back(config_report_json(rep));
        searched.push_back(rep.config);
        std::cout << "  a=(" << join_vec(a) << ")  domination "
                  << (rep.domination.passed ? "ok" : "FAIL") << "  convexity "
                  << (rep.convexity.passed ? "ok" : "FAIL") << "  w-monotone "
                  << (rep.w_monotone.passed ? "ok" : "FAIL") << "  positivity "
                  << (rep.positivity.passed ? "ok" : "FAIL") << "  r_bar "
                  << (rep.r_bar_found ? hum(rep.config.r_bar) : std::string("none")) << "  theta "
                  << hum(rep.theta) << "  horizon " << hum(rep.horizon) << "\n";
    }
    SeparationReport sep = separation_check(searched);
    checks_pass = checks_pass && sep.passed;
    std::cout << "  separation: " << (sep.passed ? "ok" : "FAIL");
    for (double m : sep.margins) std::cout << "  margin " << hum(m);
    std::cout << "\n";

    Json thresholds;
    thresholds["family"] = family_str;
    thresholds["beta"] = Json{{"expression", v.beta_expression}, {"value", v.beta_threshold}};
    thresholds["sigma_sq"] =
        Json{{"expression", v.sigma_sq_expression}, {"value", v.sigma_sq_threshold}};
    Json crosses = Json::array();
    for (const ThresholdCrossCheck& cc : threshold_cross_checks()) {
        crosses.push_back(Json{{"name", cc.name},
                               {"expression", cc.expression},
                               {"primary", cc.primary},
                               {"alternate", cc.alternate},
                               {"gap", cc.gap}});
    }
    thresholds["cross_checks"] = crosses;

    Json checks;
    checks["beta"] = beta;
    checks["sigma_sq"] = sigma_sq;
    checks["beta_margin"] = v.beta_margin;
    checks["sigma_sq_margin"] = v.sigma_sq_margin;
    checks["inside"] = v.inside;
    checks["points"] = points;
    checks["separation"] = Json{{"passed", sep.passed}, {"margins", sep.margins}};

    std::string out_root = opts.out_dir.empty() ? "runs" : opts.out_dir;
    if (const char* s = std::getenv("MVLAB_OUT")) {
        if (opts.out_dir.empty()) out_root = s;
    }
    Json snapshot{{"family", family_str}, {"beta", beta}, {"sigma_sq", sigma_sq}};
    RunDir run("verify", snapshot, out_root, opts.threads, 0);
    run.write("thresholds.json", thresholds.dump(2) + "\n");
    run.write("checks.json", checks.dump(2) + "\n");
    run.finish();

    return (v.inside && checks_pass) ? kOk : kClaimFailure;
}

int cmd_phase(const CommonOpts& opts) {
    RunConfig c = assemble_config(opts);
    if (c.phase.beta_grid.empty() || c.phase.sigma_sq_grid.empty())
        throw ArgumentError("phase grids must be nonempty (set phase.beta_grid and phase.sigma_sq_grid)");

    PhaseControls pc;
    pc.mode = c.phase.mode;
    pc.desk = c.invariant;
    pc.seed = c.seed;
    RunDir run("phase-diagram", config_to_json(c), c.out_dir, opts.threads, c.seed);
    PhaseDiagram diagram =
        phase_diagram(c.model.family, c.phase.beta_grid, c.phase.sigma_sq_grid, pc);

    std::size_t inside = 0;
    for (PhaseCell& cell : diagram.cells) {
        if (cell.analytic_inside) ++inside;
        if (pc.mode == PhaseMode::empirical) {
            char name[64];
            std::snprintf(name, sizeof(name), "cell_%zu.json",
                          static_cast<std::size_t>(&cell - diagram.cells.data()));
            Json diag{{"beta", cell.beta},
                      {"sigma_sq", cell.sigma_sq},
                      {"analytic_inside", cell.analytic_inside},
                      {"empirical_count", cell.empirical_count},
                      {"converged", cell.converged},
                      {"cell_seed", cell.cell_seed}};
            run.write(name, diag.dump(2) + "\n");
            cell.diagnostics_path = name;
        }
    }
    run.write("phase.csv", phase_diagram_csv(diagram));
    std::cout << "cells " << diagram.cells.size() << ", analytic inside " << inside << "\n";
    if (pc.mode == PhaseMode::empirical) {
        std::cout << "  beta        sigma_sq    inside  count\n";
        for (const PhaseCell& cell : diagram.cells)
            std::cout << "  " << hum(cell.beta) << "\t" << hum(cell.sigma_sq) << "\t"
                      << (cell.analytic_inside ? 1 : 0) << "\t" << cell.empirical_count << "\n";
    }
    run.finish();
    return kOk;
}

int probe_comparison(const RunConfig& c, RunDir& run) {
    InitConfig init_cfg = c.simulate.init;
    InitSpec init = init_cfg.to_spec(c.model.dimension);
    ParticleEnsemble seed_ens(c.model, init, c.probe.particles, c.seed);
    EmpiricalMeasure mu0 = seed_ens.law();
    Vec shift(c.model.dimension, c.probe_params.comparison_shift);
    EmpiricalMeasure nu0 = mu0.translated(shift);

    ComparisonReport rep = comparison_probe(c.model, mu0, nu0, c.probe);

    std::ostringstream csv;
    csv << "time,relation,margin,pathwise_fraction\n";
    std::cout << "  time        order          pathwise\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        csv << format_double(rep.times[i]) << "," << to_string(rep.verdicts[i].relation) << ","
            << format_double(rep.verdicts[i].margin) << ","
            << format_double(rep.pathwise_fraction[i]) << "\n";
        std::cout << "  " << hum(rep.times[i]) << "\t" << to_string(rep.verdicts[i].relation)
                  << "\t" << hum(rep.pathwise_fraction[i]) << "\n";
    }
    run.write("comparison.csv", csv.str());

    Json report;
    report["shift"] = c.probe_params.comparison_shift;
    report["all_ordered"] = rep.all_ordered;
    report["min_pathwise_fraction"] = rep.min_pathwise_fraction;
    Json verdicts = Json::array();
    for (const OrderVerdict& v : rep.verdicts) verdicts.push_back(order_verdict_json(v));
    report["verdicts"] = verdicts;
    run.write("report.json", report.dump(2) + "\n");

    std::cout << "order preserved: " << (rep.all_ordered ? "yes" : "NO")
              << ", min pathwise fraction " << hum(rep.min_pathwise_fraction) << "\n";
    return rep.all_ordered ? kOk : kClaimFailure;
}

int probe_instability(const RunConfig& c, RunDir& run) {
    InvariantSet set = find_invariant_measures(c.model, c.invariant);
    if (set.measures.size() < 2)
        throw NumericalError("instability probe needs at least two invariant measures");
    const int center = static_cast<int>(set.measures.size() / 2);
    InstabilityReport rep = instability_probe(c.model, set, center, c.probe_params.ladder, c.probe);

    Json report;
    report["center_index"] = rep.center_index;
    report["center_mean"] = set.measures[center].mean();
    report["ladder"] = rep.ladder;
    report["unstable"] = rep.unstable;
    Json outs = Json::array();
    std::cout << "  epsilon   direction   outcome\n";
    for (const EscapeOutcome& o : rep.outcomes) {
        outs.push_back(Json{{"epsilon", o.epsilon},
                            {"direction", o.direction},
                            {"limit_index", o.limit_index},
                            {"escape_time", o.escape_time},
                            {"escaped", o.escaped},
                            {"returned", o.returned},
                            {"inconclusive", o.inconclusive}});
        std::cout << "  " << hum(o.epsilon) << "\t" << (o.direction > 0 ? "+" : "-") << "\t"
                  << (o.escaped ? "escaped to measure " + std::to_string(o.limit_index)
                                : (o.returned ? "returned" : "inconclusive"))
                  << "\n";
    }
    report["outcomes"] = outs;
    run.write("report.json", report.dump(2) + "\n");
    std::cout << "unstable: " << (rep.unstable ? "yes" : "NO") << "\n";
    return rep.unstable ? kOk : kClaimFailure;
}

int probe_orbit(const RunConfig& c, RunDir& run, OrbitDirection direction) {
    InvariantSet set = find_invariant_measures(c.model, c.invariant);
    if (set.measures.size() < 2)
        throw NumericalError("orbit probe needs at least two invariant measures");
    const std::size_t source = set.measures.size() / 2;
    const std::size_t target =
        direction == OrbitDirection::increasing ? source + 1 : source - 1;
    if (target >= set.measures.size())
        throw ArgumentError("no order-adjacent target exists in that direction");

    OrbitTrace trace = connecting_orbit_trace(c.model, set.measures[source], set.measures[target],
                                              direction, c.probe_params.orbit_epsilon, c.probe);
    run.write("orbit.csv", orbit_csv(trace));

    Json report;
    report["direction"] = direction == OrbitDirection::increasing ? "increasing" : "decreasing";
    report["epsilon"] = c.probe_params.orbit_epsilon;
    report["source_mean"] = set.measures[source].mean();
    report["target_mean"] = set.measures[target].mean();
    report["captured"] = trace.captured;
    report["captured_at"] = trace.captured_at;
    report["stalled"] = trace.stalled;
    report["order_violations"] = trace.order_violations;
    run.write("report.json", report.dump(2) + "\n");

    std::cout << "orbit from mean " << join_vec(set.measures[source].mean()) << " toward "
              << join_vec(set.measures[target].mean()) << ": "
              << (trace.captured ? "captured at t=" + hum(trace.captured_at) : "stalled")
              << ", order violations " << trace.order_violations << "\n";
    return (trace.captured && trace.order_violations == 0) ? kOk : kClaimFailure;
}

int probe_shrink(const RunConfig& c, RunDir& run) {
    Vec point = c.probe_params.shrink_point;
    if (point.empty()) {
        const std::vector<Vec> pts = certified_points(c.model);
        if (pts.empty()) throw ArgumentError("no certified point is attached to this family");
        point = pts.front();
    }
    DissipativityConfig cfg = builtin_config(c.model, point);
    ShrinkReport rep =
        shrinking_neighborhood_probe(c.model, cfg, c.probe_params.shrink_samples, c.probe);

    Json report;
    report["config"] = config_report_json(rep.config_report);
    report["horizon"] = rep.horizon;
    report["passed"] = rep.passed;
    Json samples = Json::array();
    std::cout << "  kind      radius      stayed  entered  entry_time\n";
    for (const ShrinkSample& s : rep.samples) {
        samples.push_back(Json{{"kind", s.kind},
                               {"initial_radius", s.initial_radius},
                               {"max_alpha", s.max_alpha},
                               {"stayed_in_outer", s.stayed_in_outer},
                               {"entered_inner", s.entered_inner},
                               {"entry_time", s.entry_time},
                               {"pass", s.pass}});
        std::cout << "  " << s.kind << "\t" << hum(s.initial_radius) << "\t"
                  << (s.stayed_in_outer ? "yes" : "NO") << "\t" << (s.entered_inner ? "yes" : "NO")
                  << "\t" << hum(s.entry_time) << "\n";
    }
    report["samples"] = samples;
    run.write("report.json", report.dump(2) + "\n");
    std::cout << "trapping verified: " << (rep.passed ? "yes" : "NO") << "\n";
    return rep.passed ? kOk : kClaimFailure;
}

int probe_suite(const RunConfig& c, RunDir& run) {
    SuiteControls sc;
    sc.invariant = c.invariant;
    sc.probe = c.probe;
    sc.ladder = c.probe_params.ladder;
    sc.orbit_epsilon = c.probe_params.orbit_epsilon;
    SuiteReport rep = multi_well_suite(c.model, sc);

    Json report;
    report["measures"] = rep.set.measures.size();
    report["expected"] = rep.expected_count;
    report["counts_ok"] = rep.counts_ok;
    report["instabilities_ok"] = rep.instabilities_ok;
    report["orbits_ok"] = rep.orbits_ok;
    report["partial"] = rep.partial;
    Json middles = Json::array();
    for (const InstabilityReport& ir : rep.middles)
        middles.push_back(Json{{"center_index", ir.center_index}, {"unstable", ir.unstable}});
    report["middles"] = middles;
    Json orbits = Json::array();
    for (const OrbitTrace& t : rep.orbits)
        orbits.push_back(Json{{"captured", t.captured},
                              {"captured_at", t.captured_at},
                              {"order_violations", t.order_violations}});
    report["orbits"] = orbits;
    run.write("report.json", report.dump(2) + "\n");

    std::cout << "measures " << rep.set.measures.size() << " (expected " << rep.expected_count
              << "), instabilities " << (rep.instabilities_ok ? "ok" : "FAIL") << ", orbits "
              << (rep.orbits_ok ? "ok" : "FAIL") << (rep.partial ? " [partial]" : "") << "\n";
    const bool ok = rep.counts_ok && rep.instabilities_ok && rep.orbits_ok && !rep.partial;
    return ok ? kOk : kClaimFailure;
}

int cmd_probe(const CommonOpts& opts, const std::string& name, const std::string& direction_flag) {
    RunConfig c = assemble_config(opts);
    c.model.validate();

    std::string direction = direction_flag.empty() ? c.probe_params.orbit_direction : direction_flag;
    OrbitDirection dir;
    if (direction == "increasing")
        dir = OrbitDirection::increasing;
    else if (direction == "decreasing")
        dir = OrbitDirection::decreasing;
    else
        throw ArgumentError("direction must be increasing or decreasing, got '" + direction + "'");

    RunDir run("probe:" + name + (name == "orbit" ? ":" + direction : ""), config_to_json(c),
               c.out_dir, opts.threads, c.seed);
    int rc;
    if (name == "comparison")
        rc = probe_comparison(c, run);
    else if (name == "instability")
        rc = probe_instability(c, run);
    else if (name == "orbit")
        rc = probe_orbit(c, run, dir);
    else if (name == "shrink")
        rc = probe_shrink(c, run);
    else if (name == "suite")
        rc = probe_suite(c, run);
    else
        throw ArgumentError("unknown probe '" + name +
                            "'; expected comparison, instability, orbit, shrink, or suite");
    run.finish();
    return rc;
}

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "JSON config file");
    sub->add_option("--seed", o.seed, "master seed override");
    sub->add_option("--threads", o.threads, "worker threads (runs are serial either way)");
    sub->add_option("--out", o.out_dir, "output root directory");
    sub->add_option("overrides", o.overrides, "key=value config overrides");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field SDE laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;

    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "run the interacting particle system and checkpoint laws");
    add_common(simulate_cmd, opts);

    CLI::App* invariant_cmd =
        app.add_subcommand("invariant", "iterate the measure map to its fixed points");
    add_common(invariant_cmd, opts);

    std::string verify_family;
    double verify_beta = 0.0, verify_sigma_sq = 0.0;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "check thresholds and certified configurations");
    verify_cmd->add_option("family", verify_family, "model family")->required();
    verify_cmd->add_option("beta", verify_beta, "interaction strength")->required();
    verify_cmd->add_option("sigma_sq", verify_sigma_sq, "squared diffusion sup")->required();
    verify_cmd->add_option("--threads", opts.threads, "worker threads");
    verify_cmd->add_option("--out", opts.out_dir, "output root directory");

    CLI::App* phase_cmd =
        app.add_subcommand("phase-diagram", "sweep (beta, sigma_sq) cells over a grid");
    add_common(phase_cmd, opts);

    std::string probe_name;
    std::string probe_direction;
    CLI::App* probe_cmd = app.add_subcommand(
        "probe", "dynamical probes: comparison, instability, orbit, shrink, suite");
    probe_cmd->add_option("name", probe_name, "probe name")->required();
    probe_cmd->add_option("--direction", probe_direction, "orbit direction");
    add_common(probe_cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    opts.seed_given = (simulate_cmd->count("--seed") || invariant_cmd->count("--seed") ||
                       phase_cmd->count("--seed") || probe_cmd->count("--seed")) > 0;

    try {
        if (app.got_subcommand(simulate_cmd)) return cmd_simulate(opts);
        if (app.got_subcommand(invariant_cmd)) return cmd_invariant(opts);
        if (app.got_subcommand(verify_cmd))
            return cmd_verify(verify_family, verify_beta, verify_sigma_sq, opts);
        if (app.got_subcommand(phase_cmd)) return cmd_phase(opts);
        if (app.got_subcommand(probe_cmd)) return cmd_probe(opts, probe_name, probe_direction);
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalError;
    }
    return kConfigError;
}
