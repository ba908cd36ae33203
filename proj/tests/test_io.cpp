#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mvlab/io.hpp"
#include "mvlab/rng.hpp"

using namespace mvlab;

namespace {

std::string scratch_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "mvlab_io_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

EmpiricalMeasure random_cloud(int d, std::size_t n, std::uint64_t seed) {
    SequentialRng rng(seed);
    Vec samples(n * static_cast<std::size_t>(d));
    for (double& v : samples) v = rng.gaussian();
    return EmpiricalMeasure(d, std::move(samples));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("measure blobs round trip bit exactly") {
    EmpiricalMeasure mu = random_cloud(2, 37, 4401);
    const std::string path = scratch_path("cloud.mvb");
    write_measure_blob(path, mu);
    EmpiricalMeasure back = read_measure_blob(path);
    CHECK(back.dimension() == 2);
    CHECK(back.size() == 37);
    CHECK(back.uniform());
    CHECK(back.samples() == mu.samples());

    // Weighted atoms carry their weights through unchanged.
    EmpiricalMeasure w(1, {0.0, 1.0, 2.0}, {0.2, 0.5, 0.3});
    const std::string wpath = scratch_path("weighted.mvb");
    write_measure_blob(wpath, w);
    EmpiricalMeasure wback = read_measure_blob(wpath);
    CHECK_FALSE(wback.uniform());
    CHECK(wback.samples() == w.samples());
    CHECK(wback.weights() == w.weights());
}

TEST_CASE("measure blob readers reject damaged files") {
    CHECK_THROWS_AS(read_measure_blob(scratch_path("missing.mvb")), ArgumentError);
    CHECK_THROWS_AS(write_measure_blob(scratch_path("empty.mvb"), EmpiricalMeasure()),
                    ArgumentError);

    const std::string text = scratch_path("not_a_blob.mvb");
    write_text_file(text, "just some text, long enough to cover the header bytes");
    CHECK_THROWS_AS(read_measure_blob(text), ArgumentError);

    const std::string cut = scratch_path("truncated.mvb");
    write_measure_blob(cut, random_cloud(1, 64, 7));
    std::filesystem::resize_file(cut, 40);
    CHECK_THROWS_AS(read_measure_blob(cut), ArgumentError);
}

TEST_CASE("model specs survive the json round trip") {
    ModelSpec m;
    m.family = Family::perturbed_double_well;
    m.beta = 3.1;
    m.dimension = 1;
    m.sigma.kind = SigmaSpec::Kind::tanh_modulated;
    m.sigma.base = 0.15;
    m.sigma.amplitude = 0.05;
    m.sigma.rate = 2.0;
    m.perturbation.kind = PerturbationSpec::Kind::sine;
    m.perturbation.amplitude = 0.2;
    m.perturbation.frequency = 3.0;

    ModelSpec back = model_from_json(model_to_json(m));
    CHECK(back.family == m.family);
    CHECK(back.beta == m.beta);
    CHECK(back.sigma.kind == m.sigma.kind);
    CHECK(back.sigma.base == m.sigma.base);
    CHECK(back.sigma.amplitude == m.sigma.amplitude);
    CHECK(back.sigma.rate == m.sigma.rate);
    CHECK(back.perturbation.kind == m.perturbation.kind);
    CHECK(back.perturbation.amplitude == m.perturbation.amplitude);
    CHECK(back.perturbation.frequency == m.perturbation.frequency);

    ModelSpec planar;
    planar.family = Family::cross_coupled_2d;
    planar.beta = 14.0;
    planar.dimension = 2;
    planar.sigma.kind = SigmaSpec::Kind::per_axis;
    planar.sigma.per_axis = {0.3, 0.4};
    ModelSpec pback = model_from_json(model_to_json(planar));
    CHECK(pback.dimension == 2);
    CHECK(pback.sigma.per_axis == planar.sigma.per_axis);

    ModelSpec poly;
    poly.family = Family::custom;
    poly.beta = 2.0;
    poly.dimension = 1;
    poly.custom_drift = {0.0, 1.0, 0.0, -1.0};
    poly.kernel_grad = {0.0, 2.0};
    ModelSpec cback = model_from_json(model_to_json(poly));
    CHECK(cback.custom_drift == poly.custom_drift);
    CHECK(cback.kernel_grad == poly.kernel_grad);
}

TEST_CASE("callable hooks are refused by the serializer") {
    ModelSpec m;
    m.family = Family::custom;
    m.beta = 2.0;
    m.dimension = 1;
    m.custom_drift = {0.0, 1.0, 0.0, -1.0};
    m.custom_fn = [](const double* x, const MeasureSummary&, double* out) { out[0] = -x[0]; };
    CHECK_THROWS_AS(model_to_json(m), ArgumentError);
}

TEST_CASE("malformed model json is reported field by field") {
    CHECK_THROWS_AS(model_from_json(Json::object()), ArgumentError);
    CHECK_THROWS_AS(model_from_json(Json{{"family", "double_well"}}), ArgumentError);
    CHECK_THROWS_AS(
        model_from_json(Json{{"family", "no_such_family"}, {"beta", 1.0}}), ArgumentError);
    CHECK_THROWS_AS(model_from_json(Json{{"family", "double_well"},
                                         {"beta", 2.0},
                                         {"sigma", {{"kind", "cubic"}}}}),
                    ArgumentError);
    CHECK_THROWS_AS(model_from_json(Json{{"family", "double_well"},
                                         {"beta", 2.0},
                                         {"perturbation", {{"kind", "spike"}}}}),
                    ArgumentError);
    // Validation runs on the decoded spec.
    CHECK_THROWS_AS(
        model_from_json(Json{{"family", "double_well"}, {"beta", 2.0}, {"dimension", 2}}),
        ArgumentError);
}

TEST_CASE("control blocks round trip through json") {
    PsiControls psi;
    psi.particles = 1234;
    psi.dt = 5e-4;
    psi.scheme = Scheme::tamed_euler;
    psi.burn_in = 0.75;
    psi.window = 0.3;
    psi.max_windows = 9;
    psi.residual_tol = 0.02;
    psi.snapshots_per_window = 5;
    psi.pool_cap = 1111;
    psi.seed = 42;
    PsiControls psi_back = psi_controls_from_json(psi_controls_to_json(psi));
    CHECK(psi_back.particles == psi.particles);
    CHECK(psi_back.dt == psi.dt);
    CHECK(psi_back.scheme == psi.scheme);
    CHECK(psi_back.burn_in == psi.burn_in);
    CHECK(psi_back.window == psi.window);
    CHECK(psi_back.max_windows == psi.max_windows);
    CHECK(psi_back.residual_tol == psi.residual_tol);
    CHECK(psi_back.snapshots_per_window == psi.snapshots_per_window);
    CHECK(psi_back.pool_cap == psi.pool_cap);
    CHECK(psi_back.seed == psi.seed);

    InvariantControls inv;
    inv.psi = psi;
    inv.fixed_tol = 0.04;
    inv.mean_tol = 0.002;
    inv.max_iterations = 17;
    inv.merge_radius = 0.09;
    inv.order_thin = 333;
    InvariantControls inv_back = invariant_controls_from_json(invariant_controls_to_json(inv));
    CHECK(inv_back.psi.particles == psi.particles);
    CHECK(inv_back.fixed_tol == inv.fixed_tol);
    CHECK(inv_back.mean_tol == inv.mean_tol);
    CHECK(inv_back.max_iterations == inv.max_iterations);
    CHECK(inv_back.merge_radius == inv.merge_radius);
    CHECK(inv_back.order_thin == inv.order_thin);

    ProbeControls probe;
    probe.particles = 555;
    probe.capture_radius = 0.2;
    probe.horizon = 3.5;
    probe.checkpoint_dt = 0.25;
    probe.order_thin = 128;
    probe.seed = 99;
    ProbeControls probe_back = probe_controls_from_json(probe_controls_to_json(probe));
    CHECK(probe_back.particles == probe.particles);
    CHECK(probe_back.capture_radius == probe.capture_radius);
    CHECK(probe_back.horizon == probe.horizon);
    CHECK(probe_back.checkpoint_dt == probe.checkpoint_dt);
    CHECK(probe_back.order_thin == probe.order_thin);
    CHECK(probe_back.seed == probe.seed);

    // Absent fields keep the supplied defaults.
    PsiControls defaults;
    defaults.particles = 777;
    CHECK(psi_controls_from_json(Json::object(), defaults).particles == 777);
}

TEST_CASE("run configs round trip and reject missing models") {
    RunConfig c;
    c.model.family = Family::double_well;
    c.model.beta = 2.8;
    c.model.dimension = 1;
    c.model.sigma.value = 0.5;
    c.simulate.t_end = 4.0;
    c.simulate.particles = 2048;
    c.simulate.init.kind = "gaussian";
    c.simulate.init.center = {0.5};
    c.simulate.init.stddev = 0.1;
    c.probe_params.ladder = {0.2, 0.1};
    c.probe_params.orbit_direction = "decreasing";
    c.probe_params.shrink_point = {1.0};
    c.phase.beta_grid = {2.0, 3.0};
    c.phase.sigma_sq_grid = {0.09};
    c.phase.mode = PhaseMode::empirical;
    c.seeds_override = {{-1.0}, {0.0}, {1.0}};
    c.seed = 31337;
    c.out_dir = "elsewhere";

    RunConfig back = config_from_json(config_to_json(c));
    CHECK(back.model.beta == c.model.beta);
    CHECK(back.simulate.t_end == c.simulate.t_end);
    CHECK(back.simulate.particles == c.simulate.particles);
    CHECK(back.simulate.init.kind == "gaussian");
    CHECK(back.simulate.init.center == c.simulate.init.center);
    CHECK(back.simulate.init.stddev == c.simulate.init.stddev);
    CHECK(back.probe_params.ladder == c.probe_params.ladder);
    CHECK(back.probe_params.orbit_direction == "decreasing");
    CHECK(back.probe_params.shrink_point == c.probe_params.shrink_point);
    CHECK(back.phase.beta_grid == c.phase.beta_grid);
    CHECK(back.phase.mode == PhaseMode::empirical);
    CHECK(back.seeds_override == c.seeds_override);
    CHECK(back.seed == c.seed);
    CHECK(back.out_dir == "elsewhere");

    CHECK_THROWS_AS(config_from_json(Json::object()), ArgumentError);
}

TEST_CASE("config files load from disk with parse diagnostics") {
    const std::string good = scratch_path("good.json");
    write_text_file(good, R"({"model": {"family": "double_well", "beta": 2.8}})");
    RunConfig c = load_config(good);
    CHECK(c.model.family == Family::double_well);
    CHECK(c.model.beta == 2.8);

    const std::string bad = scratch_path("bad.json");
    write_text_file(bad, "{model: oops");
    CHECK_THROWS_AS(load_config(bad), ArgumentError);
    CHECK_THROWS_AS(load_config(scratch_path("nonexistent.json")), ArgumentError);
}

TEST_CASE("dotted overrides land typed in the config tree") {
    Json j;
    j["model"]["family"] = "double_well";
    j["model"]["beta"] = 2.8;

    apply_override(j, "model.beta", "3.5");
    CHECK(j["model"]["beta"].get<double>() == 3.5);
    apply_override(j, "seed", "7");
    CHECK(j["seed"].get<std::uint64_t>() == 7);
    apply_override(j, "probe.ladder", "[0.2, 0.1]");
    CHECK(j["probe"]["ladder"].size() == 2);
    CHECK(j["probe"]["ladder"][0].get<double>() == 0.2);
    // Values that are not valid json stay plain strings.
    apply_override(j, "simulate.init.kind", "gaussian");
    CHECK(j["simulate"]["init"]["kind"].get<std::string>() == "gaussian");

    CHECK_THROWS_AS(apply_override(j, "", "1"), ArgumentError);
    CHECK_THROWS_AS(apply_override(j, "model..beta", "1"), ArgumentError);

    // The patched tree still decodes.
    RunConfig c = config_from_json(j);
    CHECK(c.model.beta == 3.5);
    CHECK(c.seed == 7);
    CHECK(c.probe_params.ladder == std::vector<double>{0.2, 0.1});
}

TEST_CASE("environment variables override seed, particles, and output") {
    RunConfig c;
    c.model.family = Family::double_well;
    c.model.beta = 2.8;

    setenv("MVLAB_SEED", "909", 1);
    setenv("MVLAB_PARTICLES", "512", 1);
    setenv("MVLAB_OUT", "/tmp/mvlab_env_out", 1);
    apply_env_overrides(c);
    CHECK(c.seed == 909);
    CHECK(c.simulate.particles == 512);
    CHECK(c.invariant.psi.particles == 512);
    CHECK(c.probe.particles == 512);
    CHECK(c.out_dir == "/tmp/mvlab_env_out");

    setenv("MVLAB_SEED", "not_a_number", 1);
    CHECK_THROWS_AS(apply_env_overrides(c), ArgumentError);

    unsetenv("MVLAB_SEED");
    unsetenv("MVLAB_PARTICLES");
    unsetenv("MVLAB_OUT");
}

TEST_CASE("run ids are stable content hashes") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    // Two published reference pairs of the hash.
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);

    Json cfg;
    cfg["seed"] = 1;
    const std::string id = make_run_id("invariant", cfg);
    CHECK(id.size() == 16);
    CHECK(id == make_run_id("invariant", cfg));
    CHECK(id != make_run_id("simulate", cfg));
    Json cfg2 = cfg;
    cfg2["seed"] = 2;
    CHECK(id != make_run_id("invariant", cfg2));
}

TEST_CASE("manifests serialize run provenance") {
    const auto dir = std::filesystem::temp_directory_path() / "mvlab_io_tests" / "run1";
    std::filesystem::create_directories(dir);

    RunManifest man;
    man.run_id = "0123456789abcdef";
    man.command = "invariant";
    man.config = Json{{"seed", 1}};
    man.artifacts["measures"] = "measures.csv";
    man.environment = Json{{"seed", 1}, {"threads", 1}};
    man.wall_seconds = 2.5;
    write_manifest(dir.string(), man);

    Json j = Json::parse(read_text_file((dir / "manifest.json").string()));
    CHECK(j["run_id"] == "0123456789abcdef");
    CHECK(j["command"] == "invariant");
    CHECK(j["config"]["seed"] == 1);
    CHECK(j["artifacts"]["measures"] == "measures.csv");
    CHECK(j["environment"]["threads"] == 1);
    CHECK(j["wall_seconds"] == 2.5);
    CHECK(j.contains("version"));
}

TEST_CASE("initial law configs build the matching init spec") {
    InitConfig dirac;
    dirac.kind = "dirac";
    InitSpec ds = dirac.to_spec(2);
    CHECK(ds.kind == InitSpec::Kind::dirac);

    InitConfig gauss;
    gauss.kind = "gaussian";
    gauss.center = {0.5};
    CHECK_THROWS_AS(gauss.to_spec(1), ArgumentError);  // stddev unset
    gauss.stddev = 0.2;
    CHECK(gauss.to_spec(1).kind == InitSpec::Kind::gaussian);

    InitConfig bad;
    bad.kind = "wavefront";
    CHECK_THROWS_AS(bad.to_spec(1), ArgumentError);

    const std::string path = scratch_path("init_cloud.mvb");
    write_measure_blob(path, random_cloud(1, 25, 5));
    InitConfig cloud;
    cloud.kind = "cloud";
    cloud.path = path;
    CHECK(cloud.to_spec(1).kind == InitSpec::Kind::cloud);
    InitConfig mismatch;
    mismatch.kind = "cloud";
    mismatch.path = path;
    CHECK_THROWS_AS(mismatch.to_spec(2), ArgumentError);

    InitConfig pathless;
    pathless.kind = "cloud";
    CHECK_THROWS_AS(pathless.to_spec(1), ArgumentError);
}

TEST_CASE("csv renderers emit one row per record") {
    // Dyadic values keep the shortest-round-trip rendering short and exact.
    SimulationResult sim;
    sim.times = {0.0, 0.5, 1.0};
    sim.mean_first = {0.125, 0.25, 0.375};
    sim.second_moment = {1.0, 1.5, 2.0};
    const std::string csv = checkpoints_csv(sim);
    CHECK(csv.rfind("time,mean_first,second_moment\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("0.5,0.25,1.5") != std::string::npos);

    OrbitTrace tr;
    tr.times = {0.0, 1.0};
    tr.to_source = {0.0625, 0.875};
    tr.to_target = {1.75, 0.125};
    tr.laws.push_back(EmpiricalMeasure(1, {0.0, 0.25}));
    tr.laws.push_back(EmpiricalMeasure(1, {0.75, 1.25}));
    const std::string ocsv = orbit_csv(tr);
    CHECK(ocsv.rfind("time,w2_to_source,w2_to_target,mean_first\n", 0) == 0);
    CHECK(std::count(ocsv.begin(), ocsv.end(), '\n') == 3);
    CHECK(ocsv.find("1,0.875,0.125,1") != std::string::npos);
}

}
