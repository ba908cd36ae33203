#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvlab/dissipativity.hpp"
#include "mvlab/invariant.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

struct ProbeControls {
    std::size_t particles = 4000;
    double dt = 1e-3;
    Scheme scheme = Scheme::euler_maruyama;
    double capture_radius = 0.1;  // W2 radius identifying a law with a fixed point
    double horizon = 0.0;         // 0 derives it from the measured relaxation time
    double checkpoint_dt = 0.0;   // 0 spreads 20 checkpoints over the horizon
    std::size_t order_thin = 512;
    std::uint64_t seed = 1;
};

// Order preservation along two runs driven by identical noise, started from
// a pointwise ordered pairing of the two initial laws.
struct ComparisonReport {
    Vec times;
    std::vector<OrderVerdict> verdicts;  // law order at each checkpoint
    Vec pathwise_fraction;               // share of particle pairs still ordered
    double min_pathwise_fraction = 1.0;
    bool all_ordered = true;  // no checkpoint verdict contradicts the order
};

ComparisonReport comparison_probe(const ModelSpec& model, const EmpiricalMeasure& mu0,
                                  const EmpiricalMeasure& nu0, const ProbeControls& controls);

// Translation perturbations of one invariant measure, graded down a ladder of
// sizes. Each size epsilon shifts every sample by +/- epsilon along the ones
// vector, a perturbation at exact W2 distance epsilon * sqrt(d).
struct EscapeOutcome {
    double epsilon = 0.0;
    int direction = 0;     // +1 or -1
    int limit_index = -1;  // invariant measure the run was captured by
    double escape_time = 0.0;
    bool escaped = false;       // captured by a measure other than the center
    bool returned = false;      // captured by the center again
    bool inconclusive = false;  // neither within the horizon
};

struct InstabilityReport {
    int center_index = -1;
    std::vector<double> ladder;
    std::vector<EscapeOutcome> outcomes;  // two per ladder entry
    bool unstable = false;  // every epsilon has an escaping, order-related direction
};

InstabilityReport instability_probe(const ModelSpec& model, const InvariantSet& set,
                                    int center_index, const std::vector<double>& ladder,
                                    const ProbeControls& controls);

// Forward trace from a perturbed invariant measure toward an order-related
// target. Backward limits are evidenced by the early plateau at the source
// rather than by reverse-time integration.
enum class OrbitDirection { increasing, decreasing };

struct OrbitTrace {
    Vec times;
    std::vector<EmpiricalMeasure> laws;
    std::vector<OrderVerdict> monotone_flags;  // consecutive checkpoint order
    Vec to_source;  // W2 to the source fixed point over time
    Vec to_target;
    OrbitDirection direction = OrbitDirection::increasing;
    bool captured = false;
    double captured_at = 0.0;
    bool stalled = false;  // horizon elapsed without capture
    std::size_t order_violations = 0;  // flags contradicting the direction
};

OrbitTrace connecting_orbit_trace(const ModelSpec& model, const EmpiricalMeasure& source,
                                  const EmpiricalMeasure& target, OrbitDirection direction,
                                  double epsilon, const ProbeControls& controls);

// Trapping test for a certified configuration: graded initial laws inside the
// outer ball must stay there and reach the inner ball by the horizon
// (r_bar^2 - r^2) / theta.
struct ShrinkSample {
    std::string kind;  // "dirac" or "gaussian"
    double initial_radius = 0.0;
    double max_alpha = 0.0;  // largest squared W2 distance to delta_a seen
    bool stayed_in_outer = true;
    bool entered_inner = false;
    double entry_time = 0.0;
    bool pass = false;
};

struct ShrinkReport {
    ConfigReport config_report;
    double horizon = 0.0;
    std::vector<ShrinkSample> samples;
    bool passed = false;
};

ShrinkReport shrinking_neighborhood_probe(const ModelSpec& model, const DissipativityConfig& cfg,
                                          int samples_per_kind, const ProbeControls& controls);

// Full qualitative sweep for a multi-stable family: measure count, middle
// instabilities, and the connecting orbits between neighbors.
struct SuiteControls {
    InvariantControls invariant;
    ProbeControls probe;
    std::vector<double> ladder = {0.1, 0.05, 0.02};
    double orbit_epsilon = 0.05;
};

struct SuiteReport {
    InvariantSet set;
    std::size_t expected_count = 0;
    std::vector<InstabilityReport> middles;
    std::vector<OrbitTrace> orbits;
    bool counts_ok = false;
    bool instabilities_ok = false;
    bool orbits_ok = false;
    bool partial = false;  // some sub-probe was inconclusive
};

SuiteReport multi_well_suite(const ModelSpec& model, const SuiteControls& controls);

}  // namespace mvlab
