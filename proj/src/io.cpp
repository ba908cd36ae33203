#include "mvlab/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mvlab {

namespace {

constexpr std::uint64_t kBlobMagic = 0x4D564C424D455231ull;  // "MVLBMER1"
constexpr std::uint32_t kBlobVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ArgumentError("measure blob is truncated");
    return v;
}

}  // namespace

void write_measure_blob(const std::string& path, const EmpiricalMeasure& mu) {
    if (mu.size() == 0) throw ArgumentError("refusing to write an empty measure");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ArgumentError("cannot open " + path + " for writing");
    put(os, kBlobMagic);
    put(os, kBlobVersion);
    put(os, static_cast<std::uint32_t>(mu.dimension()));
    put(os, static_cast<std::uint64_t>(mu.size()));
    put(os, static_cast<std::uint32_t>(mu.uniform() ? 0 : 1));
    os.write(reinterpret_cast<const char*>(mu.samples().data()),
             static_cast<std::streamsize>(mu.samples().size() * sizeof(double)));
    if (!mu.uniform())
        os.write(reinterpret_cast<const char*>(mu.weights().data()),
                 static_cast<std::streamsize>(mu.weights().size() * sizeof(double)));
    if (!os) throw ArgumentError("short write to " + path);
}

EmpiricalMeasure read_measure_blob(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArgumentError("cannot open " + path);
    if (get<std::uint64_t>(is) != kBlobMagic) throw ArgumentError(path + " is not a measure blob");
    if (get<std::uint32_t>(is) != kBlobVersion)
        throw ArgumentError(path + " has an unsupported blob version");
    const auto dim = get<std::uint32_t>(is);
    const auto count = get<std::uint64_t>(is);
    const auto flags = get<std::uint32_t>(is);
    if (dim == 0 || count == 0) throw ArgumentError(path + " declares an empty measure");
    Vec samples(count * dim);
    is.read(reinterpret_cast<char*>(samples.data()),
            static_cast<std::streamsize>(samples.size() * sizeof(double)));
    Vec weights;
    if (flags & 1) {
        weights.resize(count);
        is.read(reinterpret_cast<char*>(weights.data()),
                static_cast<std::streamsize>(weights.size() * sizeof(double)));
    }
    if (!is) throw ArgumentError(path + " is truncated");
    return EmpiricalMeasure(static_cast<int>(dim), std::move(samples), std::move(weights));
}

namespace {

double require_number(const Json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number())
        throw ArgumentError("config field '" + field + "' is missing or not a number");
    return j[field].get<double>();
}

}  // namespace

Json model_to_json(const ModelSpec& model) {
    if (model.custom_fn)
        throw ArgumentError("a model carrying a callable hook cannot be serialized");
    Json j;
    j["family"] = to_string(model.family);
    j["dimension"] = model.dimension;
    j["beta"] = model.beta;
    Json sigma;
    switch (model.sigma.kind) {
        case SigmaSpec::Kind::constant:
            sigma["kind"] = "constant";
            sigma["value"] = model.sigma.value;
            break;
        case SigmaSpec::Kind::per_axis:
            sigma["kind"] = "per_axis";
            sigma["per_axis"] = model.sigma.per_axis;
            break;
        case SigmaSpec::Kind::tanh_modulated:
            sigma["kind"] = "tanh_modulated";
            sigma["base"] = model.sigma.base;
            sigma["amplitude"] = model.sigma.amplitude;
            sigma["rate"] = model.sigma.rate;
            break;
    }
    j["sigma"] = sigma;
    if (model.perturbation.kind != PerturbationSpec::Kind::none) {
        Json p;
        p["kind"] = model.perturbation.kind == PerturbationSpec::Kind::sine ? "sine" : "tanh";
        p["amplitude"] = model.perturbation.amplitude;
        p["frequency"] = model.perturbation.frequency;
        j["perturbation"] = p;
    }
    if (!model.custom_drift.empty()) j["custom_drift"] = model.custom_drift;
    if (!model.kernel_grad.empty()) j["kernel_grad"] = model.kernel_grad;
    return j;
}

ModelSpec model_from_json(const Json& j) {
    ModelSpec m;
    if (!j.contains("family") || !j["family"].is_string())
        throw ArgumentError("config field 'family' is missing or not a string");
    m.family = family_from_string(j["family"].get<std::string>());
    m.dimension = j.value("dimension", m.family == Family::cross_coupled_2d ? 2 : 1);
    m.beta = require_number(j, "beta");
    if (j.contains("sigma")) {
        const Json& s = j["sigma"];
        const std::string kind = s.value("kind", "constant");
        if (kind == "constant") {
            m.sigma.kind = SigmaSpec::Kind::constant;
            m.sigma.value = require_number(s, "value");
        } else if (kind == "per_axis") {
            m.sigma.kind = SigmaSpec::Kind::per_axis;
            if (!s.contains("per_axis") || !s["per_axis"].is_array())
                throw ArgumentError("config field 'sigma.per_axis' is missing or not an array");
            m.sigma.per_axis = s["per_axis"].get<Vec>();
        } else if (kind == "tanh_modulated") {
            m.sigma.kind = SigmaSpec::Kind::tanh_modulated;
            m.sigma.base = require_number(s, "base");
            m.sigma.amplitude = require_number(s, "amplitude");
            m.sigma.rate = s.value("rate", 1.0);
        } else {
            throw ArgumentError("unknown sigma kind: " + kind);
        }
    }
    if (j.contains("perturbation")) {
        const Json& p = j["perturbation"];
        const std::string kind = p.value("kind", "none");
        if (kind == "sine")
            m.perturbation.kind = PerturbationSpec::Kind::sine;
        else if (kind == "tanh")
            m.perturbation.kind = PerturbationSpec::Kind::tanh;
        else if (kind == "none")
            m.perturbation.kind = PerturbationSpec::Kind::none;
        else
            throw ArgumentError("unknown perturbation kind: " + kind);
        if (m.perturbation.kind != PerturbationSpec::Kind::none) {
            m.perturbation.amplitude = require_number(p, "amplitude");
            m.perturbation.frequency = p.value("frequency", 1.0);
        }
    }
    if (j.contains("custom_drift")) m.custom_drift = j["custom_drift"].get<Vec>();
    if (j.contains("kernel_grad")) m.kernel_grad = j["kernel_grad"].get<Vec>();
    m.validate();
    return m;
}

Json psi_controls_to_json(const PsiControls& c) {
    Json j;
    j["particles"] = c.particles;
    j["dt"] = c.dt;
    j["scheme"] = to_string(c.scheme);
    j["burn_in"] = c.burn_in;
    j["window"] = c.window;
    j["max_windows"] = c.max_windows;
    j["residual_tol"] = c.residual_tol;
    j["snapshots_per_window"] = c.snapshots_per_window;
    j["pool_cap"] = c.pool_cap;
    j["seed"] = c.seed;
    return j;
}

PsiControls psi_controls_from_json(const Json& j, const PsiControls& defaults) {
    PsiControls c = defaults;
    c.particles = j.value("particles", c.particles);
    c.dt = j.value("dt", c.dt);
    if (j.contains("scheme")) c.scheme = scheme_from_string(j["scheme"].get<std::string>());
    c.burn_in = j.value("burn_in", c.burn_in);
    c.window = j.value("window", c.window);
    c.max_windows = j.value("max_windows", c.max_windows);
    c.residual_tol = j.value("residual_tol", c.residual_tol);
    c.snapshots_per_window = j.value("snapshots_per_window", c.snapshots_per_window);
    c.pool_cap = j.value("pool_cap", c.pool_cap);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

Json invariant_controls_to_json(const InvariantControls& c) {
    Json j;
    j["psi"] = psi_controls_to_json(c.psi);
    j["fixed_tol"] = c.fixed_tol;
    j["mean_tol"] = c.mean_tol;
    j["max_iterations"] = c.max_iterations;
    j["merge_radius"] = c.merge_radius;
    j["order_thin"] = c.order_thin;
    return j;
}

InvariantControls invariant_controls_from_json(const Json& j, const InvariantControls& defaults) {
    InvariantControls c = defaults;
    if (j.contains("psi")) c.psi = psi_controls_from_json(j["psi"], c.psi);
    c.fixed_tol = j.value("fixed_tol", c.fixed_tol);
    c.mean_tol = j.value("mean_tol", c.mean_tol);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.merge_radius = j.value("merge_radius", c.merge_radius);
    c.order_thin = j.value("order_thin", c.order_thin);
    return c;
}

Json probe_controls_to_json(const ProbeControls& c) {
    Json j;
    j["particles"] = c.particles;
    j["dt"] = c.dt;
    j["scheme"] = to_string(c.scheme);
    j["capture_radius"] = c.capture_radius;
    j["horizon"] = c.horizon;
    j["checkpoint_dt"] = c.checkpoint_dt;
    j["order_thin"] = c.order_thin;
    j["seed"] = c.seed;
    return j;
}

ProbeControls probe_controls_from_json(const Json& j, const ProbeControls& defaults) {
    ProbeControls c = defaults;
    c.particles = j.value("particles", c.particles);
    c.dt = j.value("dt", c.dt);
    if (j.contains("scheme")) c.scheme = scheme_from_string(j["scheme"].get<std::string>());
    c.capture_radius = j.value("capture_radius", c.capture_radius);
    c.horizon = j.value("horizon", c.horizon);
    c.checkpoint_dt = j.value("checkpoint_dt", c.checkpoint_dt);
    c.order_thin = j.value("order_thin", c.order_thin);
    c.seed = j.value("seed", c.seed);
    return c;
}

InitSpec InitConfig::to_spec(int dimension) {
    if (kind == "dirac") {
        if (center.empty()) center.assign(dimension, 0.0);
        if (static_cast<int>(center.size()) != dimension)
            throw ArgumentError("config field 'init.center' has the wrong dimension");
        return InitSpec::dirac(center);
    }
    if (kind == "gaussian") {
        if (center.empty()) center.assign(dimension, 0.0);
        if (static_cast<int>(center.size()) != dimension)
            throw ArgumentError("config field 'init.center' has the wrong dimension");
        if (!(stddev > 0.0)) throw ArgumentError("config field 'init.stddev' must be positive");
        return InitSpec::gaussian(center, stddev);
    }
    if (kind == "cloud") {
        if (path.empty()) throw ArgumentError("config field 'init.path' is required for cloud init");
        if (!cloud) cloud = std::make_shared<EmpiricalMeasure>(read_measure_blob(path));
        if (cloud->dimension() != dimension)
            throw ArgumentError("cloud init dimension does not match the model");
        return InitSpec::from_cloud(*cloud);
    }
    throw ArgumentError("unknown init kind: " + kind);
}

RunConfig config_from_json(const Json& j) {
    RunConfig c;
    if (!j.contains("model")) throw ArgumentError("config field 'model' is missing");
    c.model = model_from_json(j["model"]);

    if (j.contains("simulate")) {
        const Json& s = j["simulate"];
        c.simulate.t_end = s.value("t_end", c.simulate.t_end);
        c.simulate.checkpoint_dt = s.value("checkpoint_dt", c.simulate.checkpoint_dt);
        c.simulate.particles = s.value("particles", c.simulate.particles);
        c.simulate.dt = s.value("dt", c.simulate.dt);
        if (s.contains("scheme")) c.simulate.scheme = scheme_from_string(s["scheme"].get<std::string>());
        if (s.contains("init")) {
            const Json& i = s["init"];
            c.simulate.init.kind = i.value("kind", "dirac");
            if (i.contains("center")) c.simulate.init.center = i["center"].get<Vec>();
            c.simulate.init.stddev = i.value("stddev", 0.0);
            c.simulate.init.path = i.value("path", "");
        }
    }
    if (j.contains("invariant")) c.invariant = invariant_controls_from_json(j["invariant"]);
    if (j.contains("probe")) {
        c.probe = probe_controls_from_json(j["probe"]);
        const Json& p = j["probe"];
        if (p.contains("ladder")) c.probe_params.ladder = p["ladder"].get<std::vector<double>>();
        c.probe_params.orbit_epsilon = p.value("orbit_epsilon", c.probe_params.orbit_epsilon);
        c.probe_params.orbit_direction = p.value("orbit_direction", c.probe_params.orbit_direction);
        if (p.contains("shrink_point")) c.probe_params.shrink_point = p["shrink_point"].get<Vec>();
        c.probe_params.shrink_samples = p.value("shrink_samples", c.probe_params.shrink_samples);
        c.probe_params.comparison_shift = p.value("comparison_shift", c.probe_params.comparison_shift);
    }
    if (j.contains("phase")) {
        const Json& p = j["phase"];
        if (p.contains("beta_grid")) c.phase.beta_grid = p["beta_grid"].get<std::vector<double>>();
        if (p.contains("sigma_sq_grid"))
            c.phase.sigma_sq_grid = p["sigma_sq_grid"].get<std::vector<double>>();
        const std::string mode = p.value("mode", "analytic");
        if (mode == "analytic")
            c.phase.mode = PhaseMode::analytic;
        else if (mode == "empirical")
            c.phase.mode = PhaseMode::empirical;
        else
            throw ArgumentError("unknown phase mode: " + mode);
    }
    if (j.contains("seeds")) {
        for (const Json& s : j["seeds"]) c.seeds_override.push_back(s.get<Vec>());
    }
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out", c.out_dir);
    return c;
}

Json config_to_json(const RunConfig& c) {
    Json j;
    j["model"] = model_to_json(c.model);
    Json s;
    s["t_end"] = c.simulate.t_end;
    s["checkpoint_dt"] = c.simulate.checkpoint_dt;
    s["particles"] = c.simulate.particles;
    s["dt"] = c.simulate.dt;
    s["scheme"] = to_string(c.simulate.scheme);
    Json init;
    init["kind"] = c.simulate.init.kind;
    if (!c.simulate.init.center.empty()) init["center"] = c.simulate.init.center;
    if (c.simulate.init.stddev > 0.0) init["stddev"] = c.simulate.init.stddev;
    if (!c.simulate.init.path.empty()) init["path"] = c.simulate.init.path;
    s["init"] = init;
    j["simulate"] = s;
    j["invariant"] = invariant_controls_to_json(c.invariant);
    Json p = probe_controls_to_json(c.probe);
    p["ladder"] = c.probe_params.ladder;
    p["orbit_epsilon"] = c.probe_params.orbit_epsilon;
    p["orbit_direction"] = c.probe_params.orbit_direction;
    if (!c.probe_params.shrink_point.empty()) p["shrink_point"] = c.probe_params.shrink_point;
    p["shrink_samples"] = c.probe_params.shrink_samples;
    p["comparison_shift"] = c.probe_params.comparison_shift;
    j["probe"] = p;
    if (!c.phase.beta_grid.empty()) {
        Json ph;
        ph["beta_grid"] = c.phase.beta_grid;
        ph["sigma_sq_grid"] = c.phase.sigma_sq_grid;
        ph["mode"] = c.phase.mode == PhaseMode::analytic ? "analytic" : "empirical";
        j["phase"] = ph;
    }
    if (!c.seeds_override.empty()) {
        Json seeds = Json::array();
        for (const Vec& s2 : c.seeds_override) seeds.push_back(s2);
        j["seeds"] = seeds;
    }
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    return j;
}

RunConfig load_config(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw ArgumentError(std::string("cannot parse ") + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const Json::exception& e) {
        throw ArgumentError(std::string("bad value in ") + path + ": " + e.what());
    }
}

void apply_env_overrides(RunConfig& config) {
    if (const char* s = std::getenv("MVLAB_SEED")) {
        try {
            config.seed = std::stoull(s);
        } catch (const std::exception&) {
            throw ArgumentError("MVLAB_SEED is not an unsigned integer");
        }
    }
    if (const char* s = std::getenv("MVLAB_PARTICLES")) {
        std::size_t n = 0;
        try {
            n = std::stoull(s);
        } catch (const std::exception&) {
            throw ArgumentError("MVLAB_PARTICLES is not an unsigned integer");
        }
        config.simulate.particles = n;
        config.invariant.psi.particles = n;
        config.probe.particles = n;
    }
    if (const char* s = std::getenv("MVLAB_OUT")) config.out_dir = s;
}

void apply_override(Json& config_json, const std::string& key, const std::string& value) {
    if (key.empty()) throw ArgumentError("override key is empty");
    Json* node = &config_json;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ArgumentError("override key '" + key + "' has an empty segment");
        if (dot == std::string::npos) {
            // Parse the value as JSON when possible so numbers and arrays
            // arrive typed; fall back to a plain string.
            Json parsed = Json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? Json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string make_run_id(const std::string& command, const Json& config) {
    const std::string payload = command + "\n" + config.dump() + "\nmvlab-0.1.0";
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload)));
    return std::string(buf);
}

void write_manifest(const std::string& directory, const RunManifest& manifest) {
    Json j;
    j["run_id"] = manifest.run_id;
    j["command"] = manifest.command;
    j["version"] = "mvlab-0.1.0";
    j["config"] = manifest.config;
    j["artifacts"] = manifest.artifacts;
    if (!manifest.environment.is_null()) j["environment"] = manifest.environment;
    j["wall_seconds"] = manifest.wall_seconds;
    write_text_file((std::filesystem::path(directory) / "manifest.json").string(), j.dump(2) + "\n");
}

std::string checkpoints_csv(const SimulationResult& result) {
    std::ostringstream os;
    os << "time,mean_first,second_moment\n";
    for (std::size_t i = 0; i < result.times.size(); ++i)
        os << format_double(result.times[i]) << "," << format_double(result.mean_first[i]) << ","
           << format_double(result.second_moment[i]) << "\n";
    return os.str();
}

std::string orbit_csv(const OrbitTrace& trace) {
    std::ostringstream os;
    os << "time,w2_to_source,w2_to_target,mean_first\n";
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        os << format_double(trace.times[i]) << "," << format_double(trace.to_source[i]) << ","
           << format_double(trace.to_target[i]) << ","
           << format_double(trace.laws[i].mean()[0]) << "\n";
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ArgumentError("cannot open " + path + " for writing");
    os << content;
    if (!os) throw ArgumentError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArgumentError("cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace mvlab
