#include "mvlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvlab/rng.hpp"

namespace mvlab {

std::string to_string(Family f) {
    switch (f) {
        case Family::double_well: return "double_well";
        case Family::multi_well: return "multi_well";
        case Family::perturbed_double_well: return "perturbed_double_well";
        case Family::cross_coupled_2d: return "cross_coupled_2d";
        case Family::custom: return "custom";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "double_well") return Family::double_well;
    if (s == "multi_well") return Family::multi_well;
    if (s == "perturbed_double_well") return Family::perturbed_double_well;
    if (s == "cross_coupled_2d") return Family::cross_coupled_2d;
    if (s == "custom") return Family::custom;
    throw ArgumentError("unknown model family: " + s);
}

double SigmaSpec::eval(int axis, double x) const {
    switch (kind) {
        case Kind::constant: return value;
        case Kind::per_axis: return per_axis.at(axis);
        case Kind::tanh_modulated: return base + amplitude * std::tanh(rate * x);
    }
    return 0.0;
}

double SigmaSpec::sup_axis_sq(int axis) const {
    switch (kind) {
        case Kind::constant: return value * value;
        case Kind::per_axis: return sq(per_axis.at(axis));
        case Kind::tanh_modulated: return sq(std::abs(base) + std::abs(amplitude));
    }
    return 0.0;
}

double SigmaSpec::lo_axis_sq(int axis) const {
    switch (kind) {
        case Kind::constant: return value * value;
        case Kind::per_axis: return sq(per_axis.at(axis));
        case Kind::tanh_modulated: return sq(std::abs(base) - std::abs(amplitude));
    }
    return 0.0;
}

double SigmaSpec::sup_total_sq(int dimension) const {
    double s = 0.0;
    for (int k = 0; k < dimension; ++k) s += sup_axis_sq(k);
    return s;
}

double SigmaSpec::sup_max_sq(int dimension) const {
    double s = 0.0;
    for (int k = 0; k < dimension; ++k) s = std::max(s, sup_axis_sq(k));
    return s;
}

void SigmaSpec::validate(int dimension) const {
    switch (kind) {
        case Kind::constant:
            if (!(value > 0.0)) throw ArgumentError("sigma must be positive");
            break;
        case Kind::per_axis:
            if (static_cast<int>(per_axis.size()) != dimension)
                throw ArgumentError("per-axis sigma needs one entry per dimension");
            for (double v : per_axis)
                if (!(v > 0.0)) throw ArgumentError("sigma must be positive");
            break;
        case Kind::tanh_modulated:
            if (!(std::abs(base) > std::abs(amplitude)))
                throw ArgumentError("tanh sigma must stay bounded away from zero");
            break;
    }
}

double PerturbationSpec::eval(double x) const {
    switch (kind) {
        case Kind::none: return 0.0;
        case Kind::sine: return amplitude * std::sin(frequency * x);
        case Kind::tanh: return amplitude * std::tanh(frequency * x);
    }
    return 0.0;
}

double PerturbationSpec::bound() const { return kind == Kind::none ? 0.0 : std::abs(amplitude); }

double PerturbationSpec::lipschitz() const {
    return kind == Kind::none ? 0.0 : std::abs(amplitude * frequency);
}

void ModelSpec::validate() const {
    if (dimension < 1) throw ArgumentError("dimension must be at least 1");
    if (family == Family::cross_coupled_2d) {
        if (dimension != 2) throw ArgumentError("cross_coupled_2d is two dimensional");
    } else if (family != Family::custom && dimension != 1) {
        throw ArgumentError("this family is one dimensional");
    }
    if (!(beta > 0.0)) throw ArgumentError("interaction strength must be positive");
    sigma.validate(dimension);
    if (family == Family::custom && !custom_fn) {
        if (custom_drift.empty()) throw ArgumentError("custom family needs drift coefficients");
        if (dimension != 1) throw ArgumentError("custom polynomial drift is one dimensional");
        double lead = custom_drift.back();
        std::size_t degree = custom_drift.size() - 1;
        if (degree < 1 || degree % 2 == 0 || !(lead < 0.0))
            throw UnsupportedModelError(
                "custom drift needs odd leading degree with negative coefficient");
    }
    if (family == Family::perturbed_double_well && perturbation.bound() >= 1.0 / 3.0)
        throw ArgumentError("perturbation amplitude must stay below 1/3");
}

namespace {

inline double poly_eval(const Vec& c, double x) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
}

}  // namespace

void eval_drift_into(const ModelSpec& model, const double* x, const MeasureSummary& mu, double* out) {
    switch (model.family) {
        case Family::double_well: {
            double v = x[0];
            out[0] = -v * v * v + v - model.beta * (v - mu.mean[0]);
            return;
        }
        case Family::multi_well: {
            double v = x[0], v2 = v * v;
            out[0] = -v * (v2 - 1.0) * (v2 - 4.0) - model.beta * (v - mu.mean[0]);
            return;
        }
        case Family::perturbed_double_well: {
            double v = x[0];
            out[0] = -v * v * v + v - model.perturbation.eval(v) - model.beta * (v - mu.mean[0]);
            return;
        }
        case Family::cross_coupled_2d: {
            double a = x[0], b = x[1];
            out[0] = b - a * a * a - model.beta * (a - mu.mean[0]);
            out[1] = a - b * b * b - model.beta * (b - mu.mean[1]);
            return;
        }
        case Family::custom: {
            if (model.custom_fn) {
                model.custom_fn(x, mu, out);
                return;
            }
            double v = x[0];
            double drift = poly_eval(model.custom_drift, v);
            if (model.kernel_grad.empty()) {
                out[0] = drift - model.beta * (v - mu.mean[0]);
            } else {
                if (!mu.cloud)
                    throw ArgumentError("pairwise kernel drift needs a summary carrying samples");
                const EmpiricalMeasure& cloud = *mu.cloud;
                double pull = 0.0;
                for (std::size_t j = 0; j < cloud.size(); ++j)
                    pull += cloud.weight(j) * poly_eval(model.kernel_grad, v - cloud.samples()[j]);
                out[0] = drift - pull;
            }
            return;
        }
    }
    throw ArgumentError("unknown family");
}

Vec eval_drift(const ModelSpec& model, const Vec& x, const MeasureSummary& mu) {
    if (static_cast<int>(x.size()) != model.dimension)
        throw ArgumentError("state dimension mismatch");
    if (static_cast<int>(mu.mean.size()) != model.dimension)
        throw ArgumentError("summary dimension mismatch");
    Vec out(model.dimension);
    eval_drift_into(model, x.data(), mu, out.data());
    return out;
}

Vec eval_diffusion(const ModelSpec& model, const Vec& x) {
    if (static_cast<int>(x.size()) != model.dimension)
        throw ArgumentError("state dimension mismatch");
    Vec out(model.dimension);
    for (int k = 0; k < model.dimension; ++k) out[k] = model.sigma.eval(k, x[k]);
    return out;
}

CooperativityReport check_cooperativity(const ModelSpec& model, double box, std::size_t tuples,
                                        std::uint64_t seed) {
    model.validate();
    const int d = model.dimension;
    CooperativityReport rep;
    SequentialRng rng(mix_seed(seed, 0xC0));
    Vec x(d), y(d), mx(d), my(d), bx(d), by(d);
    for (std::size_t t = 0; t < tuples; ++t) {
        int pin = static_cast<int>(rng.integer(d));
        for (int k = 0; k < d; ++k) {
            double lo = rng.uniform(-box, box);
            double hi = rng.uniform(-box, box);
            if (lo > hi) std::swap(lo, hi);
            x[k] = lo;
            y[k] = (k == pin) ? lo : hi;
            double ml = rng.uniform(-box, box);
            double mh = rng.uniform(-box, box);
            if (ml > mh) std::swap(ml, mh);
            mx[k] = ml;
            my[k] = mh;
        }
        MeasureSummary smu, snu;
        smu.mean = mx;
        snu.mean = my;
        smu.norm2 = std::sqrt(norm2_sq(mx.data(), d));
        snu.norm2 = std::sqrt(norm2_sq(my.data(), d));
        eval_drift_into(model, x.data(), smu, bx.data());
        eval_drift_into(model, y.data(), snu, by.data());
        ++rep.checked;
        double gap = bx[pin] - by[pin];
        if (gap > 1e-12) {
            rep.worst_gap = std::max(rep.worst_gap, gap);
            if (rep.violations.size() < 16)
                rep.violations.push_back({pin, gap, x, y});
        }
    }
    return rep;
}

LipschitzEstimate lipschitz_box_estimate(const ModelSpec& model, double box, std::size_t pairs,
                                         std::uint64_t seed) {
    model.validate();
    const int d = model.dimension;
    LipschitzEstimate est;
    SequentialRng rng(mix_seed(seed, 0x11));
    Vec x(d), y(d), mx(d), my(d), bx(d), by(d);
    for (std::size_t t = 0; t < pairs; ++t) {
        for (int k = 0; k < d; ++k) {
            x[k] = rng.uniform(-box, box);
            y[k] = rng.uniform(-box, box);
            mx[k] = rng.uniform(-box, box);
            my[k] = rng.uniform(-box, box);
        }
        MeasureSummary smu, snu;
        smu.mean = mx;
        snu.mean = my;
        smu.norm2 = std::sqrt(norm2_sq(mx.data(), d));
        snu.norm2 = std::sqrt(norm2_sq(my.data(), d));
        eval_drift_into(model, x.data(), smu, bx.data());
        eval_drift_into(model, y.data(), snu, by.data());
        double dxy2 = 0.0, inner = 0.0;
        for (int k = 0; k < d; ++k) {
            dxy2 += sq(x[k] - y[k]);
            inner += (x[k] - y[k]) * (bx[k] - by[k]);
        }
        // W2 between point masses at the summary means lower-bounds any
        // coupling distance, giving a conservative one-sided constant.
        double wmeans = dist(mx.data(), my.data(), d);
        double denom = dxy2 + std::sqrt(dxy2) * wmeans;
        if (denom > 1e-12) est.drift_constant = std::max(est.drift_constant, inner / denom);
        double dsig = 0.0;
        for (int k = 0; k < d; ++k) dsig += sq(model.sigma.eval(k, x[k]) - model.sigma.eval(k, y[k]));
        if (dxy2 > 1e-12) est.diffusion_constant = std::max(est.diffusion_constant, dsig / dxy2);
    }
    return est;
}

namespace {

// Largest value of a polynomial residual r(x) over the real line, for
// polynomials with negative leading coefficient and even degree in |x|.
// Scans a symmetric grid then refines the best bracket by golden section.
double poly_max(const std::function<double(double)>& r, double lo, double hi) {
    const int grid = 4096;
    double best = -std::numeric_limits<double>::infinity();
    double arg = lo;
    for (int i = 0; i <= grid; ++i) {
        double x = lo + (hi - lo) * i / grid;
        double v = r(x);
        if (v > best) {
            best = v;
            arg = x;
        }
    }
    double step = (hi - lo) / grid;
    double a = arg - step, b = arg + step;
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 160; ++it) {
        if (r(c) < r(d)) a = c; else b = d;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    return std::max(best, r((a + b) / 2));
}

}  // namespace

DissipativeConstants fit_dissipative_constants(const ModelSpec& model) {
    model.validate();
    DissipativeConstants c;
    c.beta_w = model.beta / 2.0;
    c.alpha = model.beta / 2.0 + 1.0;
    switch (model.family) {
        case Family::double_well:
            c.gamma = 1.0;
            return c;
        case Family::multi_well:
            c.gamma = 9.0;
            return c;
        case Family::perturbed_double_well:
            // The bounded term costs |x| |f| <= x^2/2 + f_sup^2/2 by Young.
            c.gamma = 25.0 / 16.0 + sq(model.perturbation.bound()) / 2.0;
            return c;
        case Family::cross_coupled_2d:
            c.gamma = 2.0;
            return c;
        case Family::custom: {
            if (model.custom_fn || !model.kernel_grad.empty())
                throw UnsupportedModelError("constants are fitted for polynomial mean-field drifts only");
            // <x, b> <= x P(x) - (beta/2) x^2 + (beta/2) s^2 after Young's
            // inequality on the interaction, so gamma must top the residual
            // x P(x) + (alpha - beta/2) x^2.
            auto residual = [&](double x) {
                return x * poly_eval(model.custom_drift, x) + (c.alpha - model.beta / 2.0) * x * x;
            };
            // The leading term of x P(x) dominates all other terms beyond
            // |x| = 1 + sum |c_j| / |lead|, so the scan box below is safe.
            double lead = std::abs(model.custom_drift.back());
            double coeff_sum = 0.0;
            for (double v : model.custom_drift) coeff_sum += std::abs(v);
            double reach = 2.0 * (1.0 + (coeff_sum + model.beta + c.alpha) / lead);
            c.gamma = poly_max(residual, -reach, reach);
            if (!(c.gamma > 0.0)) c.gamma = std::max(c.gamma, 1e-8);
            return c;
        }
    }
    throw ArgumentError("unknown family");
}

std::vector<Vec> declared_points(const ModelSpec& model) {
    switch (model.family) {
        case Family::double_well: return {{-1.0}, {1.0}};
        case Family::multi_well: return {{-2.0}, {0.0}, {2.0}};
        case Family::perturbed_double_well: return {{-1.0}, {1.0}};
        case Family::cross_coupled_2d: return {{-1.0, -1.0}, {1.0, 1.0}};
        case Family::custom: return {};
    }
    return {};
}

std::vector<Vec> canonical_seed_points(const ModelSpec& model) {
    switch (model.family) {
        case Family::double_well: return {{-1.0}, {0.0}, {1.0}};
        case Family::multi_well: return {{-2.0}, {-1.0}, {0.0}, {1.0}, {2.0}};
        case Family::perturbed_double_well: return {{-1.0}, {0.0}, {1.0}};
        case Family::cross_coupled_2d: return {{-1.0, -1.0}, {0.0, 0.0}, {1.0, 1.0}};
        case Family::custom: return {};
    }
    return {};
}

}  // namespace mvlab
