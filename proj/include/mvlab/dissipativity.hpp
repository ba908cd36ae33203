#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvlab/invariant.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

// Polynomial in half powers: sum of coeff * z^(z_half/2) * w^(w_half/2).
struct GTerm {
    double coeff = 0.0;
    int z_half = 0;
    int w_half = 0;
};

struct GPolynomial {
    std::vector<GTerm> terms;

    static GPolynomial from_terms(std::vector<GTerm> t);

    void canonicalize();  // sort, merge duplicates, drop exact zeros
    double eval(double z, double w) const;
    double dz(double z, double w) const;   // partial in z, z > 0 when fractional powers occur
    double dzz(double z, double w) const;
    // All terms carrying w have nonpositive coefficients, which makes the
    // polynomial nonincreasing in w on the nonnegative quadrant.
    bool w_monotone_nonincreasing() const;
    int z_degree_half() const;  // largest z_half
};

// A certified trapping region around the point a: mass within W2 distance
// r_bar of delta_a contracts into the r ball, witnessed by g.
struct DissipativityConfig {
    Vec a;
    double r = 0.0;
    double r_bar = 0.0;  // 0 means unset; check_config searches (r, 4r]
    GPolynomial g;

    void validate() const;
};

// The closed-form configurations attached to the built-in families, with the
// model's beta and squared diffusion sup substituted. point must be one of
// the family's certified centers.
DissipativityConfig builtin_config(const ModelSpec& model, const Vec& point);

// Centers for which builtin_config is available (subset of declared_points).
std::vector<Vec> certified_points(const ModelSpec& model);

struct CheckGrid {
    int z_points = 200;       // log spaced in [1e-4, (4 r_bar)^2]
    int radius_points = 33;   // |x - a| values for the domination grid
    int w_points = 17;        // frozen-law norm values for the domination grid
    int directions = 16;      // angular resolution, d = 2 only
    double tol = 1e-9;
    double r_bar_resolution = 1e-4;
};

struct ConditionReport {
    bool passed = false;
    double worst = 0.0;  // most adverse margin seen (sign convention per check)
    std::string detail;
};

struct ConfigReport {
    DissipativityConfig config;  // r_bar filled in when it was searched
    ConditionReport domination;
    ConditionReport convexity;
    ConditionReport w_monotone;
    ConditionReport positivity;
    double theta = 0.0;    // inf of g(z, r_bar^2) over r^2 <= z <= r_bar^2
    double horizon = 0.0;  // (r_bar^2 - r^2) / theta
    bool r_bar_found = false;

    bool passed() const {
        return domination.passed && convexity.passed && w_monotone.passed && positivity.passed &&
               r_bar_found && theta > 0.0;
    }
};

ConfigReport check_config(const ModelSpec& model, DissipativityConfig cfg,
                          const CheckGrid& grid = {});

// Adjacent-pair separation r_i^p + r_{i+1}^p <= 2^(1-p) |a_i - a_{i+1}|^p for
// configs sorted along the componentwise order.
struct SeparationReport {
    bool passed = false;
    double p = 2.0;
    std::vector<double> margins;  // rhs - lhs per adjacent pair
};

SeparationReport separation_check(const std::vector<DissipativityConfig>& configs, double p = 2.0);

// Exact parameter-region boundaries for the built-in families.
struct ThresholdVerdict {
    Family family = Family::double_well;
    std::string beta_expression;
    std::string sigma_sq_expression;
    double beta_threshold = 0.0;
    double sigma_sq_threshold = 0.0;
    double beta_margin = 0.0;      // beta - threshold, positive inside
    double sigma_sq_margin = 0.0;  // threshold - sup sigma^2, positive inside
    bool inside = false;
};

ThresholdVerdict verify_thresholds(Family family, double beta, double sigma_sq_sup);

// Each closed-form constant evaluated two independent ways: the double
// precision expression and a long double bisection on minimal polynomials.
struct ThresholdCrossCheck {
    std::string name;
    std::string expression;
    double primary = 0.0;
    double alternate = 0.0;
    double gap = 0.0;
};

std::vector<ThresholdCrossCheck> threshold_cross_checks();

// Parameter sweeps over (beta, sigma^2) cells.
enum class PhaseMode { analytic, empirical };

struct PhaseCell {
    double beta = 0.0;
    double sigma_sq = 0.0;
    bool analytic_inside = false;
    int empirical_count = -1;  // measures found; -1 when the cell did not run
    bool converged = true;
    std::uint64_t cell_seed = 0;
    std::string diagnostics_path;  // filled by callers that persist per-cell detail
};

struct PhaseDiagram {
    Family family = Family::double_well;
    std::vector<double> beta_grid;
    std::vector<double> sigma_sq_grid;
    std::vector<PhaseCell> cells;  // row major, beta outer
};

struct PhaseControls {
    PhaseMode mode = PhaseMode::analytic;
    InvariantControls desk;  // empirical mode solver controls
    std::uint64_t seed = 1;
};

PhaseDiagram phase_diagram(Family family, const std::vector<double>& beta_grid,
                           const std::vector<double>& sigma_sq_grid, const PhaseControls& controls);

std::string phase_diagram_csv(const PhaseDiagram& diagram);

}  // namespace mvlab
