#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/dynamics.hpp"
#include "mvlab/invariant.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

using Json = nlohmann::json;

// Measure clouds persist as little-endian binary blobs that round trip bit
// exactly on one platform.
void write_measure_blob(const std::string& path, const EmpiricalMeasure& mu);
EmpiricalMeasure read_measure_blob(const std::string& path);

// Model and controls (de)serialization. Models carrying a callable test hook
// are refused: the hook has no textual form.
Json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const Json& j);

Json psi_controls_to_json(const PsiControls& c);
PsiControls psi_controls_from_json(const Json& j, const PsiControls& defaults = {});

Json invariant_controls_to_json(const InvariantControls& c);
InvariantControls invariant_controls_from_json(const Json& j, const InvariantControls& defaults = {});

Json probe_controls_to_json(const ProbeControls& c);
ProbeControls probe_controls_from_json(const Json& j, const ProbeControls& defaults = {});

// Initial law description for simulate runs.
struct InitConfig {
    std::string kind = "dirac";  // dirac | gaussian | cloud
    Vec center;
    double stddev = 0.0;
    std::string path;  // blob path for kind == cloud
    std::shared_ptr<EmpiricalMeasure> cloud;

    InitSpec to_spec(int dimension);  // loads the blob on demand
};

struct SimulateParams {
    double t_end = 10.0;
    double checkpoint_dt = 1.0;
    std::size_t particles = 10000;
    double dt = 1e-3;
    Scheme scheme = Scheme::euler_maruyama;
    InitConfig init;
};

struct PhaseParams {
    std::vector<double> beta_grid;
    std::vector<double> sigma_sq_grid;
    PhaseMode mode = PhaseMode::analytic;
};

struct ProbeParams {
    std::vector<double> ladder = {0.1, 0.05, 0.02};
    double orbit_epsilon = 0.05;
    std::string orbit_direction = "increasing";
    Vec shrink_point;  // defaults to the first certified point
    int shrink_samples = 3;
    double comparison_shift = 0.3;  // translation separating the two comparison inits
};

// One config file drives every subcommand; sections it does not need are
// ignored by the command.
struct RunConfig {
    ModelSpec model;
    SimulateParams simulate;
    InvariantControls invariant;
    ProbeControls probe;
    ProbeParams probe_params;
    PhaseParams phase;
    std::vector<Vec> seeds_override;  // picard seed points, empty = canonical
    std::uint64_t seed = 1;
    std::string out_dir = "runs";
};

RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// MVLAB_SEED, MVLAB_PARTICLES, MVLAB_OUT environment overrides.
void apply_env_overrides(RunConfig& config);

// Dotted key=value override, e.g. "model.beta=3.5" or "seed=7".
void apply_override(Json& config_json, const std::string& key, const std::string& value);

// Run book keeping: content-addressed id, artifact index, reproduction data.
struct RunManifest {
    std::string run_id;
    std::string command;
    Json config;
    std::map<std::string, std::string> artifacts;  // name -> relative path
    Json environment;  // seed, threads, platform notes
    double wall_seconds = 0.0;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string make_run_id(const std::string& command, const Json& config);
void write_manifest(const std::string& directory, const RunManifest& manifest);

// Plot-data renderers.
std::string checkpoints_csv(const SimulationResult& result);
std::string orbit_csv(const OrbitTrace& trace);

// Small file helpers shared by the CLI.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mvlab
