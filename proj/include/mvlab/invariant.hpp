#pragma once

#include <cstdint>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

// Controls for a single evaluation of the measure map: freeze the input law,
// run the ensemble to stationarity, and pool late-time snapshots.
struct PsiControls {
    std::size_t particles = 10000;
    double dt = 1e-3;
    Scheme scheme = Scheme::euler_maruyama;
    double burn_in = 4.0;        // transient discarded before any pooling
    double window = 4.0;         // length of each pooling window
    int max_windows = 6;         // stop after this many windows even if unsettled
    double residual_tol = 0.05;  // W2 between consecutive window pools
    int snapshots_per_window = 16;
    std::size_t pool_cap = 2048;  // thinning cap applied to pooled clouds
    std::uint64_t seed = 1;

    void validate() const;
};

struct PsiResult {
    EmpiricalMeasure law;    // pooled stationary law (thinned to pool_cap)
    double residual = 0.0;   // W2 between the last two window pools
    double relaxation_time = 0.0;  // when the running mean entered its final band
    double elapsed = 0.0;          // total simulated time
    bool converged = false;
};

// One application of the map mu -> stationary law of the SDE with the
// interaction frozen at mu. The ensemble is initialised from mu itself.
PsiResult psi(const ModelSpec& model, const EmpiricalMeasure& frozen,
              const PsiControls& controls);

// Same map but with an explicit starting configuration, for warm starts and
// for probing which input laws a given initial cloud relaxes under.
PsiResult psi_from(const ModelSpec& model, const EmpiricalMeasure& frozen,
                   const InitSpec& init, const PsiControls& controls);

// Exact stationary density of the frozen one-dimensional dynamics, computed
// by quadrature of exp(Integral 2 b / sigma^2). Only meaningful for scalar
// models whose drift sees the input law through its mean alone.
struct GibbsDensity {
    Vec grid;   // uniform nodes covering the effective support
    Vec pdf;    // normalised density values at the nodes
    Vec cdf;    // cumulative distribution at the nodes
    double mean = 0.0;
    double second_moment = 0.0;  // E X^2
    double frozen_mean = 0.0;    // the input the density was built for

    // L1 distance between this CDF and the empirical CDF of a sample cloud,
    // which is exactly the 1-Wasserstein distance.
    double w1_to(const EmpiricalMeasure& sample) const;

    // Quantile resampling into an n-point cloud, for W2 comparisons.
    EmpiricalMeasure sampled(std::size_t n) const;
};

GibbsDensity gibbs_oracle_1d(const ModelSpec& model, double frozen_mean,
                             std::size_t nodes = 4097);

// Mean of the Gibbs density as a function of the frozen mean. Fixed points
// of this scalar map are the candidate invariant-measure means.
double gibbs_mean_map(const ModelSpec& model, double frozen_mean);

struct ScalarRoot {
    double location = 0.0;
    double slope = 0.0;  // derivative of the mean map at the root
    bool stable = false;  // |slope| < 1
};

// All fixed points of the mean map on [-span, span], found by sign scan and
// bisection. span defaults to the outermost declared well plus margin.
std::vector<ScalarRoot> self_consistency_roots_1d(const ModelSpec& model,
                                                  double span = 0.0,
                                                  double scan_step = 0.05);

// Fixed-point iteration of the measure map from Dirac seeds.
struct InvariantControls {
    PsiControls psi;
    double fixed_tol = 0.05;   // W2 between successive iterates
    double mean_tol = 0.005;   // additional mean displacement requirement
    int max_iterations = 40;
    double merge_radius = 0.1;    // W2 radius for identifying fixed points
    std::size_t order_thin = 512;  // support cap for pairwise order checks
};

struct PicardRun {
    Vec seed_point;
    std::vector<double> mean_trace;  // mean (first coordinate) per iterate
    std::vector<double> step_w2;     // W2 between consecutive iterates
    int iterations = 0;
    bool converged = false;
    EmpiricalMeasure law;
    double relaxation_time = 0.0;
};

struct InvariantSet {
    std::vector<EmpiricalMeasure> measures;  // distinct fixed points, sorted by mean
    std::vector<PicardRun> runs;
    std::vector<int> basin;  // run index -> measure index, -1 if unconverged
    std::vector<std::vector<OrderVerdict>> order;  // pairwise verdicts
    bool all_converged = false;
    bool chain_ordered = false;  // every consecutive pair certified increasing
};

InvariantSet find_invariant_measures(const ModelSpec& model,
                                     const std::vector<Vec>& seeds,
                                     const InvariantControls& controls);

// Convenience overload seeding from the declared wells and the origin.
InvariantSet find_invariant_measures(const ModelSpec& model,
                                     const InvariantControls& controls);

// Second-moment bookkeeping for the measure map. With drift constants
// (alpha, beta_w, gamma) and S the summed squared diffusion sup, any
// stationary output law obeys
//     E|X|^2 <= (beta_w ||mu||_2^2 + gamma + S/2) / alpha
// and the fixed point obeys E|X|^2 <= (gamma + S/2) / (alpha - beta_w).
double psi_moment_map_bound(const DissipativeConstants& c, double sigma_total_sq,
                            double input_second_moment);
double psi_moment_fixed_bound(const DissipativeConstants& c, double sigma_total_sq);

struct MomentCertificate {
    int p = 2;  // even moment order
    DissipativeConstants constants;
    double sigma_total_sq = 0.0;
    double bound = 0.0;     // certified bound on E|X|^p at the fixed point
    double observed = 0.0;  // measured E|X|^p of the candidate law
    double slack = 0.05;    // relative tolerance granted to the sample
    bool holds = false;
};

MomentCertificate moment_certificate(const ModelSpec& model,
                                     const EmpiricalMeasure& law, int p = 2);

}  // namespace mvlab
