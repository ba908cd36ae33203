#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/rng.hpp"

namespace mvlab {

enum class Scheme { euler_maruyama, tamed_euler };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct IntegrationSchedule {
    double dt = 1e-3;
    Scheme scheme = Scheme::euler_maruyama;
    double blowup_threshold = 1e6;

    void validate() const {
        if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
        if (!(blowup_threshold > 0.0)) throw ArgumentError("blow-up threshold must be positive");
    }
};

// Initial condition: either a point mass, a spherical Gaussian, or an explicit
// cloud to resample from.
struct InitSpec {
    enum class Kind { dirac, gaussian, cloud };
    Kind kind = Kind::dirac;
    Vec center;
    double stddev = 0.0;
    const EmpiricalMeasure* cloud = nullptr;

    static InitSpec dirac(Vec point) { return {Kind::dirac, std::move(point), 0.0, nullptr}; }
    static InitSpec gaussian(Vec center, double stddev) {
        return {Kind::gaussian, std::move(center), stddev, nullptr};
    }
    static InitSpec from_cloud(const EmpiricalMeasure& m) { return {Kind::cloud, {}, 0.0, &m}; }
};

// Interacting system state. Noise is a pure function of (seed_root, particle,
// step), so two ensembles constructed with the same seed_root see the same
// Brownian increments regardless of when or in what order they are stepped.
class ParticleEnsemble {
  public:
    ParticleEnsemble(const ModelSpec& model, const InitSpec& init, std::size_t n,
                     std::uint64_t seed_root);

    const ModelSpec& model() const { return model_; }
    int dimension() const { return model_.dimension; }
    std::size_t size() const { return n_; }
    double time() const { return time_; }
    std::uint64_t step_index() const { return step_; }
    std::uint64_t seed_root() const { return seed_root_; }
    const Vec& states() const { return states_; }

    EmpiricalMeasure law() const;
    MeasureSummary summary() const;  // mean and second moment of the current states

    // One synchronous step. When frozen is set the drift sees that summary
    // instead of the ensemble's own (decoupled dynamics with a frozen law).
    void step(const IntegrationSchedule& sched, const MeasureSummary* frozen = nullptr);

    void run(double t_span, const IntegrationSchedule& sched, const MeasureSummary* frozen = nullptr);

  private:
    ModelSpec model_;
    std::size_t n_;
    Vec states_;        // row-major n x d
    Vec drift_buf_;
    Vec mean_buf_;
    std::uint64_t seed_root_;
    std::uint64_t step_ = 0;
    double time_ = 0.0;
    GaussianField noise_;
    // One Philox block caches two Gaussians; consecutive (step, axis) draws
    // share blocks, so remember the block each particle saw last.
    std::vector<std::uint64_t> cached_block_;
    Vec cached_pair_;
};

struct Checkpoint {
    double time;
    EmpiricalMeasure law;
};

struct SimulationResult {
    std::vector<Checkpoint> checkpoints;
    Vec times;            // fine-grained diagnostic grid
    Vec mean_first;       // first mean coordinate on that grid
    Vec second_moment;    // ||law||_2^2 on that grid
};

// Mean-field run: the drift sees the ensemble's own empirical summary,
// refreshed synchronously every step.
SimulationResult simulate(ParticleEnsemble& ens, double t_end, double checkpoint_dt,
                          const IntegrationSchedule& sched);

// Frozen-law run: the drift sees a fixed summary for the whole horizon.
SimulationResult simulate_frozen(ParticleEnsemble& ens, const MeasureSummary& frozen, double t_end,
                                 double checkpoint_dt, const IntegrationSchedule& sched);

struct CoupledCheckpoint {
    double time;
    EmpiricalMeasure law_a, law_b;
    double pathwise_ordered_fraction;  // share of particle pairs with a <= b componentwise
};

struct CoupledPairResult {
    std::vector<CoupledCheckpoint> checkpoints;
    double min_ordered_fraction = 1.0;
};

// Two systems driven by the same Brownian increments (same seed_root and
// particle indexing). Both may be mean-field, or frozen at given summaries.
CoupledPairResult coupled_pair(const ModelSpec& model_a, const ModelSpec& model_b,
                               const InitSpec& init_a, const InitSpec& init_b, std::size_t n,
                               std::uint64_t seed_root, double t_end, double checkpoint_dt,
                               const IntegrationSchedule& sched,
                               const MeasureSummary* frozen_a = nullptr,
                               const MeasureSummary* frozen_b = nullptr);

}  // namespace mvlab
