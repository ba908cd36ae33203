#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/common.hpp"

namespace mvlab {

// Weighted point cloud on R^d. Weights are uniform when the weight vector is
// empty; otherwise they are nonnegative and sum to one.
class EmpiricalMeasure {
  public:
    EmpiricalMeasure() = default;
    EmpiricalMeasure(int dimension, Vec samples, Vec weights = {});
    EmpiricalMeasure(const EmpiricalMeasure& o);
    EmpiricalMeasure& operator=(const EmpiricalMeasure& o);
    EmpiricalMeasure(EmpiricalMeasure&&) = default;
    EmpiricalMeasure& operator=(EmpiricalMeasure&&) = default;

    static EmpiricalMeasure dirac(const Vec& point);

    int dimension() const { return dimension_; }
    std::size_t size() const { return dimension_ ? samples_.size() / dimension_ : 0; }
    const Vec& samples() const { return samples_; }
    const Vec& weights() const { return weights_; }
    bool uniform() const { return weights_.empty(); }
    const double* point(std::size_t i) const { return samples_.data() + i * dimension_; }
    double weight(std::size_t i) const { return weights_.empty() ? 1.0 / static_cast<double>(size()) : weights_[i]; }

    // ||mu||_p = (integral of |x|^p)^(1/p), p >= 1. Computed once per p.
    double moment(double p) const;
    Vec mean() const;

    // Measure restricted to every stride-th sample (uniform weights only),
    // used to stay under exact-transport caps without resampling noise.
    EmpiricalMeasure thinned(std::size_t max_size) const;

    // Translate by +shift (same dimension).
    EmpiricalMeasure translated(const Vec& shift) const;

  private:
    int dimension_ = 0;
    Vec samples_;
    Vec weights_;
    mutable std::mutex cache_mutex_;
    mutable std::map<double, double> moment_cache_;
    mutable std::optional<Vec> mean_cache_;
};

// Finite signed measure given by atoms (row-major) and signed masses.
struct SignedDiscreteMeasure {
    int dimension = 0;
    Vec atoms;
    Vec masses;

    std::size_t size() const { return dimension ? atoms.size() / dimension : 0; }
    double total_mass() const;
    const double* point(std::size_t i) const { return atoms.data() + i * dimension; }
};

// mu - nu as a signed measure on the union of supports.
SignedDiscreteMeasure difference(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct MeasureSummary {
    Vec mean;
    double norm2 = 0.0;         // ||mu||_2
    const EmpiricalMeasure* cloud = nullptr;  // set when an operation needs full samples
};

MeasureSummary make_summary(const EmpiricalMeasure& mu);

struct WassersteinOptions {
    std::size_t exact_cap = 2048;       // assignment solver cap per side (d >= 2)
    double entropic_eps_scale = 1e-2;   // epsilon = scale * mean pairwise cost
    double marginal_tol = 1e-6;
    int max_iterations = 20000;
};

struct WassersteinReport {
    double value = 0.0;
    bool exact = true;
    double epsilon = 0.0;         // entropic regularization actually used
    double marginal_error = 0.0;  // worst marginal defect of the returned plan
};

WassersteinReport wasserstein_report(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     double p, const WassersteinOptions& opts = {});
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                   const WassersteinOptions& opts = {});

enum class OrderRelation { less, equal, greater, incomparable, inconclusive };

std::string to_string(OrderRelation r);

struct OrderVerdict {
    OrderRelation relation = OrderRelation::inconclusive;
    // For less/greater/equal: the largest one-sided deviation that separates
    // the measures. For incomparable: the smaller of the two violations, the
    // amount that would have to be explained away to restore an order.
    double margin = 0.0;
    std::optional<Vec> witness;  // threshold (d = 1) or atom (d >= 2) evidencing a violation
    std::string note;
};

struct OrderOptions {
    std::size_t lp_cap = 512;        // combined support cap for the exact coupling test
    double tol = 1e-12;
    double noise_margin = 0.0;       // violations at or below this level are inconclusive
    std::size_t orthant_cap = 2048;  // corner subsample for the screening test, d >= 2
};

// Stochastic order of mu relative to nu: less means mu is dominated by nu.
// d = 1 compares distribution functions exactly. d >= 2 within the cap runs
// the exact coupling feasibility test; beyond it only an orthant screen runs,
// so a pass is reported as inconclusive rather than as an order.
OrderVerdict stochastic_order(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              const OrderOptions& opts = {});

struct DualLpOptions {
    std::size_t support_cap_1d = 1200;
    std::size_t support_cap = 128;  // d >= 2, pairwise constraints grow quadratically
};

// Dual norm sup integral f dm over |f(0)| <= 1, f 1-Lipschitz; equals W1 on
// differences of probability measures with finite first moment.
double kantorovich_norm(const SignedDiscreteMeasure& m, const DualLpOptions& opts = {});

// True when integral f dm >= -tolerance for every nonnegative increasing
// 1-Lipschitz f, decided by linear programming on the support.
bool cone_membership(const SignedDiscreteMeasure& m, double tolerance = 1e-9,
                     const DualLpOptions& opts = {});

// DKW-style sampling margin used to discount order violations between two
// empirical laws of sizes n and m.
double dkw_margin(std::size_t n, std::size_t m);

}  // namespace mvlab
