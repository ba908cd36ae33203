#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvlab/common.hpp"
#include "mvlab/measure.hpp"

namespace mvlab {

// Model families. The first four have analytic threshold and dissipativity
// data attached; custom covers user supplied polynomial drifts.
enum class Family { double_well, multi_well, perturbed_double_well, cross_coupled_2d, custom };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Diagonal diffusion coefficient. Each axis k gets a scalar sigma_k(x_k).
struct SigmaSpec {
    enum class Kind { constant, per_axis, tanh_modulated };
    Kind kind = Kind::constant;
    double value = 0.3;      // constant
    Vec per_axis;            // per_axis, one entry per dimension
    double base = 0.3;       // tanh_modulated: base + amplitude * tanh(rate * x)
    double amplitude = 0.0;
    double rate = 1.0;

    double eval(int axis, double x) const;
    double sup_axis_sq(int axis) const;   // sup over x of sigma_k(x)^2
    double lo_axis_sq(int axis) const;
    double sup_total_sq(int dimension) const;  // sum over axes of sup sigma_k^2
    double sup_max_sq(int dimension) const;    // max over axes (spectral bound)
    void validate(int dimension) const;
};

// Bounded Lipschitz additive drift term for the perturbed double well family.
struct PerturbationSpec {
    enum class Kind { none, sine, tanh };
    Kind kind = Kind::none;
    double amplitude = 0.0;
    double frequency = 1.0;

    double eval(double x) const;
    double bound() const;      // sup |f|
    double lipschitz() const;  // Lipschitz constant
};

struct ModelSpec {
    Family family = Family::double_well;
    int dimension = 1;
    double beta = 3.0;  // interaction strength toward the mean
    SigmaSpec sigma;
    PerturbationSpec perturbation;

    // custom family: polynomial drift coefficients c_0..c_k for P(x) = sum c_j x^j
    // (one dimensional). Interaction is the quadratic pull toward the mean unless
    // kernel_grad is set, in which case b(x) = P(x) - average of K'(x - x_j) over
    // the interaction cloud and evaluation needs summaries carrying samples.
    Vec custom_drift;
    Vec kernel_grad;

    // Test hook for wrapping arbitrary drifts; not serializable.
    std::function<void(const double*, const MeasureSummary&, double*)> custom_fn;

    void validate() const;
};

// Drift b(x, mu) evaluated through the measure summary protocol.
Vec eval_drift(const ModelSpec& model, const Vec& x, const MeasureSummary& mu);
void eval_drift_into(const ModelSpec& model, const double* x, const MeasureSummary& mu, double* out);

// Diagonal diffusion sigma(x) per axis.
Vec eval_diffusion(const ModelSpec& model, const Vec& x);

// Drift monotonicity in the off-coordinates and in the measure argument,
// sampled on ordered tuples inside [-box, box]^d.
struct CooperativityReport {
    std::size_t checked = 0;
    struct Violation {
        int coordinate;
        double gap;
        Vec x, y;
    };
    std::vector<Violation> violations;
    double worst_gap = 0.0;
    bool ok() const { return violations.empty(); }
};

CooperativityReport check_cooperativity(const ModelSpec& model, double box = 3.0,
                                        std::size_t tuples = 2000, std::uint64_t seed = 7);

// One-sided Lipschitz and diffusion Lipschitz constants measured on sampled
// pairs in a box; used to sanity check the standing regularity assumptions.
struct LipschitzEstimate {
    double drift_constant = 0.0;
    double diffusion_constant = 0.0;
};

LipschitzEstimate lipschitz_box_estimate(const ModelSpec& model, double box = 3.0,
                                         std::size_t pairs = 4000, std::uint64_t seed = 11);

// <x, b(x, mu)> <= -alpha |x|^2 + beta_w ||mu||_2^2 + gamma with alpha > beta_w > 0.
struct DissipativeConstants {
    double alpha = 0.0;
    double beta_w = 0.0;
    double gamma = 0.0;
    bool valid() const { return alpha > beta_w && beta_w > 0.0 && gamma > 0.0; }
};

DissipativeConstants fit_dissipative_constants(const ModelSpec& model);

// Centers of the wells the family is certified around, and the canonical
// Picard seeds (wells plus the saddle midpoints).
std::vector<Vec> declared_points(const ModelSpec& model);
std::vector<Vec> canonical_seed_points(const ModelSpec& model);

}  // namespace mvlab
