#include "mvlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "mvlab/lp.hpp"

namespace mvlab {

namespace {

constexpr double kWeightEps = 1e-15;

void validate_weights(std::size_t n, const Vec& w) {
    if (w.empty()) return;
    if (w.size() != n) throw ArgumentError("weight count does not match sample count");
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw ArgumentError("weights must be nonnegative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("weights must sum to one");
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(int dimension, Vec samples, Vec weights)
    : dimension_(dimension), samples_(std::move(samples)), weights_(std::move(weights)) {
    if (dimension_ < 1) throw ArgumentError("dimension must be at least 1");
    if (samples_.empty() || samples_.size() % dimension_ != 0)
        throw ArgumentError("sample buffer size must be a positive multiple of the dimension");
    for (double v : samples_)
        if (!std::isfinite(v)) throw ArgumentError("samples must be finite");
    validate_weights(size(), weights_);
}

EmpiricalMeasure::EmpiricalMeasure(const EmpiricalMeasure& o)
    : dimension_(o.dimension_), samples_(o.samples_), weights_(o.weights_) {}

EmpiricalMeasure& EmpiricalMeasure::operator=(const EmpiricalMeasure& o) {
    if (this != &o) {
        dimension_ = o.dimension_;
        samples_ = o.samples_;
        weights_ = o.weights_;
        std::lock_guard<std::mutex> lock(cache_mutex_);
        moment_cache_.clear();
        mean_cache_.reset();
    }
    return *this;
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Vec& point) {
    if (point.empty()) throw ArgumentError("dirac point must be nonempty");
    return EmpiricalMeasure(static_cast<int>(point.size()), point);
}

double EmpiricalMeasure::moment(double p) const {
    if (!(p >= 1.0)) throw ArgumentError("moment order must be >= 1");
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = moment_cache_.find(p);
        if (it != moment_cache_.end()) return it->second;
    }
    const std::size_t n = size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r2 = norm2_sq(point(i), dimension_);
        double term = (p == 2.0) ? r2 : std::pow(r2, p / 2.0);
        acc += weight(i) * term;
    }
    double value = std::pow(acc, 1.0 / p);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    moment_cache_.emplace(p, value);
    return value;
}

Vec EmpiricalMeasure::mean() const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (mean_cache_) return *mean_cache_;
    }
    Vec m(dimension_, 0.0);
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double w = weight(i);
        const double* x = point(i);
        for (int k = 0; k < dimension_; ++k) m[k] += w * x[k];
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    mean_cache_ = m;
    return m;
}

EmpiricalMeasure EmpiricalMeasure::thinned(std::size_t max_size) const {
    const std::size_t n = size();
    if (max_size == 0) throw ArgumentError("thinning cap must be positive");
    if (n <= max_size) return *this;
    Vec out;
    out.reserve(max_size * dimension_);
    if (uniform()) {
        // Fixed-stride subsample keeps the law and stays deterministic.
        for (std::size_t k = 0; k < max_size; ++k) {
            std::size_t i = (k * n) / max_size;
            out.insert(out.end(), point(i), point(i) + dimension_);
        }
    } else {
        // Systematic resampling at midpoints of equal weight slices.
        double acc = 0.0;
        std::size_t i = 0;
        for (std::size_t k = 0; k < max_size; ++k) {
            double q = (static_cast<double>(k) + 0.5) / static_cast<double>(max_size);
            while (i + 1 < n && acc + weight(i) < q) acc += weight(i++);
            out.insert(out.end(), point(i), point(i) + dimension_);
        }
    }
    return EmpiricalMeasure(dimension_, std::move(out));
}

EmpiricalMeasure EmpiricalMeasure::translated(const Vec& shift) const {
    if (static_cast<int>(shift.size()) != dimension_)
        throw ArgumentError("shift dimension mismatch");
    Vec out = samples_;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < dimension_; ++k) out[i * dimension_ + k] += shift[k];
    return EmpiricalMeasure(dimension_, std::move(out), weights_);
}

double SignedDiscreteMeasure::total_mass() const {
    return std::accumulate(masses.begin(), masses.end(), 0.0);
}

SignedDiscreteMeasure difference(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dimension() != nu.dimension()) throw ArgumentError("dimension mismatch");
    SignedDiscreteMeasure out;
    out.dimension = mu.dimension();
    out.atoms.reserve((mu.size() + nu.size()) * mu.dimension());
    out.masses.reserve(mu.size() + nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out.atoms.insert(out.atoms.end(), mu.point(i), mu.point(i) + mu.dimension());
        out.masses.push_back(mu.weight(i));
    }
    for (std::size_t j = 0; j < nu.size(); ++j) {
        out.atoms.insert(out.atoms.end(), nu.point(j), nu.point(j) + nu.dimension());
        out.masses.push_back(-nu.weight(j));
    }
    return out;
}

MeasureSummary make_summary(const EmpiricalMeasure& mu) {
    MeasureSummary s;
    s.mean = mu.mean();
    s.norm2 = mu.moment(2.0);
    s.cloud = &mu;
    return s;
}

namespace {

// Exact 1-d W_p by merging the two quantile functions.
double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
    auto sorted_idx = [](const EmpiricalMeasure& m) {
        std::vector<std::size_t> idx(m.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&m](std::size_t a, std::size_t b) { return m.samples()[a] < m.samples()[b]; });
        return idx;
    };
    auto ia = sorted_idx(mu), ib = sorted_idx(nu);
    std::size_t i = 0, j = 0;
    double wi = mu.weight(ia[0]), wj = nu.weight(ib[0]);
    double cost = 0.0;
    while (i < ia.size() && j < ib.size()) {
        double step = std::min(wi, wj);
        double gap = std::abs(mu.samples()[ia[i]] - nu.samples()[ib[j]]);
        cost += step * (p == 1.0 ? gap : p == 2.0 ? gap * gap : std::pow(gap, p));
        wi -= step;
        wj -= step;
        if (wi <= kWeightEps) {
            if (++i < ia.size()) wi = mu.weight(ia[i]);
        }
        if (wj <= kWeightEps) {
            if (++j < ib.size()) wj = nu.weight(ib[j]);
        }
    }
    return std::pow(cost, 1.0 / p);
}

double pair_cost(const double* a, const double* b, int d, double p) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += sq(a[k] - b[k]);
    if (p == 2.0) return s;
    double r = std::sqrt(s);
    return p == 1.0 ? r : std::pow(r, p);
}

// Shortest-augmenting-path assignment (square, dense). Returns minimal total cost.
double solve_assignment(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<std::size_t>(p[j] - 1) * n + (j - 1)];
    return total;
}

double logsumexp(const Vec& terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

WassersteinReport sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                           const WassersteinOptions& opts) {
    const std::size_t n = mu.size(), m = nu.size();
    const int d = mu.dimension();
    const bool cache_cost = n * m <= (std::size_t{1} << 22);
    std::vector<double> cmat;
    auto cost_at = [&](std::size_t i, std::size_t j) {
        return cache_cost ? cmat[i * m + j] : pair_cost(mu.point(i), nu.point(j), d, p);
    };
    double mean_cost = 0.0;
    if (cache_cost) cmat.resize(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double c = pair_cost(mu.point(i), nu.point(j), d, p);
            if (cache_cost) cmat[i * m + j] = c;
            row += nu.weight(j) * c;
        }
        mean_cost += mu.weight(i) * row;
    }
    const double eps_target = std::max(opts.entropic_eps_scale * mean_cost, 1e-12);
    Vec f(n, 0.0), g(m, 0.0), la(n), lb(m), buf_n(n), buf_m(m);
    for (std::size_t i = 0; i < n; ++i) la[i] = std::log(mu.weight(i));
    for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(nu.weight(j));

    double eps = std::max(eps_target, mean_cost);
    int total_iters = 0;
    double marginal_err = std::numeric_limits<double>::infinity();
    auto update = [&](double e) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) buf_n[i] = (f[i] - cost_at(i, j)) / e + la[i];
            g[j] = -e * logsumexp(buf_n);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) buf_m[j] = (g[j] - cost_at(i, j)) / e + lb[j];
            f[i] = -e * logsumexp(buf_m);
        }
    };
    auto column_error = [&](double e) {
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += std::exp((f[i] + g[j] - cost_at(i, j)) / e + la[i] + lb[j]);
            err += std::abs(s - nu.weight(j));
        }
        return err;
    };
    for (;;) {
        int level_iters = eps > eps_target ? 40 : opts.max_iterations;
        for (int it = 0; it < level_iters; ++it) {
            update(eps);
            ++total_iters;
            if (total_iters >= opts.max_iterations) break;
            if (eps <= eps_target && it % 10 == 9) {
                marginal_err = column_error(eps);
                if (marginal_err < opts.marginal_tol) break;
            }
        }
        if (eps <= eps_target || total_iters >= opts.max_iterations) break;
        eps = std::max(eps_target, eps * 0.25);
    }
    marginal_err = column_error(eps);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            value += std::exp((f[i] + g[j] - cost_at(i, j)) / eps + la[i] + lb[j]) * cost_at(i, j);
    WassersteinReport rep;
    rep.value = std::pow(std::max(value, 0.0), 1.0 / p);
    rep.exact = false;
    rep.epsilon = eps;
    rep.marginal_error = marginal_err;
    return rep;
}

}  // namespace

WassersteinReport wasserstein_report(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     double p, const WassersteinOptions& opts) {
    if (mu.dimension() != nu.dimension()) throw ArgumentError("dimension mismatch");
    if (!(p >= 1.0)) throw ArgumentError("wasserstein order must be >= 1");
    WassersteinReport rep;
    if (mu.dimension() == 1) {
        rep.value = wasserstein_1d(mu, nu, p);
        rep.exact = true;
        return rep;
    }
    const std::size_t n = mu.size();
    if (mu.uniform() && nu.uniform() && n == nu.size() && n <= opts.exact_cap) {
        std::vector<double> cost(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                cost[i * n + j] = pair_cost(mu.point(i), nu.point(j), mu.dimension(), p);
        double total = solve_assignment(cost, static_cast<int>(n));
        rep.value = std::pow(total / static_cast<double>(n), 1.0 / p);
        rep.exact = true;
        return rep;
    }
    return sinkhorn(mu, nu, p, opts);
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                   const WassersteinOptions& opts) {
    return wasserstein_report(mu, nu, p, opts).value;
}

std::string to_string(OrderRelation r) {
    switch (r) {
        case OrderRelation::less: return "less";
        case OrderRelation::equal: return "equal";
        case OrderRelation::greater: return "greater";
        case OrderRelation::incomparable: return "incomparable";
        case OrderRelation::inconclusive: return "inconclusive";
    }
    return "?";
}

double dkw_margin(std::size_t n, std::size_t m) {
    return 2.0 / std::sqrt(static_cast<double>(std::min(n, m)));
}

namespace {

struct Violation {
    double amount = 0.0;
    Vec where;
};

// Largest violations of mu <= nu and nu <= mu over distribution functions (d = 1).
std::pair<Violation, Violation> cdf_violations(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    struct Event {
        double x;
        double wmu, wnu;
    };
    std::vector<Event> ev;
    ev.reserve(mu.size() + nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) ev.push_back({mu.samples()[i], mu.weight(i), 0.0});
    for (std::size_t j = 0; j < nu.size(); ++j) ev.push_back({nu.samples()[j], 0.0, nu.weight(j)});
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    Violation le, ge;  // le: violation of mu <= nu, i.e. F_nu exceeds F_mu
    double fmu = 0.0, fnu = 0.0;
    std::size_t k = 0;
    while (k < ev.size()) {
        double x = ev[k].x;
        while (k < ev.size() && ev[k].x == x) {
            fmu += ev[k].wmu;
            fnu += ev[k].wnu;
            ++k;
        }
        if (fnu - fmu > le.amount) le = {fnu - fmu, {x}};
        if (fmu - fnu > ge.amount) ge = {fmu - fnu, {x}};
    }
    return {le, ge};
}

OrderVerdict classify(const Violation& le, const Violation& ge, bool certified,
                      const OrderOptions& opts) {
    OrderVerdict v;
    const double pass = std::max(opts.tol, opts.noise_margin);
    char note[160];
    std::snprintf(note, sizeof(note), "violation(mu<=nu)=%.3g violation(nu<=mu)=%.3g",
                  le.amount, ge.amount);
    v.note = note;
    if (le.amount <= opts.tol && ge.amount <= opts.tol) {
        v.relation = OrderRelation::equal;
        v.margin = std::max(le.amount, ge.amount);
    } else if (le.amount <= pass && ge.amount <= pass) {
        v.relation = OrderRelation::inconclusive;
        v.margin = std::max(le.amount, ge.amount);
        v.note += " (within noise margin)";
    } else if (le.amount <= pass) {
        v.relation = certified ? OrderRelation::less : OrderRelation::inconclusive;
        v.margin = ge.amount;
    } else if (ge.amount <= pass) {
        v.relation = certified ? OrderRelation::greater : OrderRelation::inconclusive;
        v.margin = le.amount;
    } else {
        v.relation = OrderRelation::incomparable;
        if (le.amount <= ge.amount) {
            v.margin = le.amount;
            v.witness = le.where;
        } else {
            v.margin = ge.amount;
            v.witness = ge.where;
        }
    }
    return v;
}

}  // namespace

OrderVerdict stochastic_order(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              const OrderOptions& opts) {
    if (mu.dimension() != nu.dimension()) throw ArgumentError("dimension mismatch");
    const int d = mu.dimension();
    if (d == 1) {
        auto [le, ge] = cdf_violations(mu, nu);
        return classify(le, ge, true, opts);
    }
    if (mu.size() + nu.size() <= opts.lp_cap) {
        Vec wa(mu.size()), wb(nu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) wa[i] = mu.weight(i);
        for (std::size_t j = 0; j < nu.size(); ++j) wb[j] = nu.weight(j);
        auto below = [&](std::size_t i, std::size_t j) {
            return leq_componentwise(mu.point(i), nu.point(j), d);
        };
        auto above = [&](std::size_t i, std::size_t j) {
            return leq_componentwise(nu.point(i), mu.point(j), d);
        };
        auto fe_le = transport_feasible(wa, wb, below, opts.tol);
        auto fe_ge = transport_feasible(wb, wa, above, opts.tol);
        Violation le{fe_le.deficiency, {}}, ge{fe_ge.deficiency, {}};
        if (!fe_le.feasible) {
            for (std::size_t i = 0; i < mu.size(); ++i)
                if (fe_le.source_side[i]) {
                    le.where.assign(mu.point(i), mu.point(i) + d);
                    break;
                }
        }
        if (!fe_ge.feasible) {
            for (std::size_t j = 0; j < nu.size(); ++j)
                if (fe_ge.source_side[j]) {
                    ge.where.assign(nu.point(j), nu.point(j) + d);
                    break;
                }
        }
        return classify(le, ge, true, opts);
    }
    // Orthant screen on thinned corner sets. Violations are genuine
    // counterexamples; a clean pass cannot certify an order in d >= 2.
    EmpiricalMeasure tm = mu.thinned(opts.orthant_cap / 2);
    EmpiricalMeasure tn = nu.thinned(opts.orthant_cap / 2);
    auto upper_mass = [d](const EmpiricalMeasure& meas, const double* corner) {
        double s = 0.0;
        for (std::size_t i = 0; i < meas.size(); ++i)
            if (leq_componentwise(corner, meas.point(i), d)) s += meas.weight(i);
        return s;
    };
    Violation le, ge;
    auto scan = [&](const EmpiricalMeasure& corners) {
        for (std::size_t i = 0; i < corners.size(); ++i) {
            const double* t = corners.point(i);
            double um = upper_mass(mu, t), un = upper_mass(nu, t);
            if (um - un > le.amount) le = {um - un, Vec(t, t + d)};
            if (un - um > ge.amount) ge = {un - um, Vec(t, t + d)};
        }
    };
    scan(tm);
    scan(tn);
    OrderVerdict v = classify(le, ge, false, opts);
    v.note += " (orthant screen only)";
    return v;
}

namespace {

struct DedupSupport {
    int d = 0;
    Vec atoms;      // row-major
    Vec masses;
    std::size_t origin = SIZE_MAX;  // index of the origin atom, if inserted or present
};

DedupSupport dedup(const SignedDiscreteMeasure& m, bool add_origin) {
    DedupSupport s;
    s.d = m.dimension;
    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), 0);
    auto lex_less = [&](std::size_t a, std::size_t b) {
        const double* pa = m.point(a);
        const double* pb = m.point(b);
        for (int k = 0; k < s.d; ++k) {
            if (pa[k] < pb[k]) return true;
            if (pa[k] > pb[k]) return false;
        }
        return false;
    };
    std::sort(order.begin(), order.end(), lex_less);
    auto same = [&](std::size_t a, const double* p) {
        const double* q = m.point(a);
        for (int k = 0; k < s.d; ++k)
            if (q[k] != p[k]) return false;
        return true;
    };
    for (std::size_t idx : order) {
        if (!s.atoms.empty() && same(idx, &s.atoms[s.atoms.size() - s.d])) {
            s.masses.back() += m.masses[idx];
        } else {
            const double* p = m.point(idx);
            s.atoms.insert(s.atoms.end(), p, p + s.d);
            s.masses.push_back(m.masses[idx]);
        }
    }
    if (add_origin) {
        Vec zero(s.d, 0.0);
        for (std::size_t i = 0; i * s.d < s.atoms.size(); ++i) {
            if (std::equal(zero.begin(), zero.end(), s.atoms.begin() + i * s.d)) {
                s.origin = i;
                break;
            }
        }
        if (s.origin == SIZE_MAX) {
            s.atoms.insert(s.atoms.end(), zero.begin(), zero.end());
            s.masses.push_back(0.0);
            s.origin = s.masses.size() - 1;
        }
    }
    return s;
}

}  // namespace

double kantorovich_norm(const SignedDiscreteMeasure& m, const DualLpOptions& opts) {
    if (m.dimension < 1) throw ArgumentError("dimension must be at least 1");
    if (m.size() == 0) return 0.0;
    DedupSupport s = dedup(m, true);
    const int d = s.d;
    const int nv = static_cast<int>(s.masses.size());
    std::vector<LinearRow> rows;
    if (d == 1) {
        if (static_cast<std::size_t>(nv) > opts.support_cap_1d)
            throw ArgumentError("support too large for the Lipschitz dual program");
        // Sorted adjacent gaps carry the full pairwise constraint set in 1-d.
        std::vector<int> ord(nv);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return s.atoms[a] < s.atoms[b]; });
        for (int k = 0; k + 1 < nv; ++k) {
            double gap = s.atoms[ord[k + 1]] - s.atoms[ord[k]];
            rows.push_back({{{ord[k + 1], 1.0}, {ord[k], -1.0}}, gap});
            rows.push_back({{{ord[k], 1.0}, {ord[k + 1], -1.0}}, gap});
        }
    } else {
        if (static_cast<std::size_t>(nv) > opts.support_cap)
            throw ArgumentError("support too large for the Lipschitz dual program");
        for (int i = 0; i < nv; ++i)
            for (int j = i + 1; j < nv; ++j) {
                double gap = dist(&s.atoms[static_cast<std::size_t>(i) * d],
                                  &s.atoms[static_cast<std::size_t>(j) * d], d);
                rows.push_back({{{i, 1.0}, {j, -1.0}}, gap});
                rows.push_back({{{j, 1.0}, {i, -1.0}}, gap});
            }
    }
    int oi = static_cast<int>(s.origin);
    rows.push_back({{{oi, 1.0}}, 1.0});
    rows.push_back({{{oi, -1.0}}, 1.0});
    LpResult r = maximize_with_rows(nv, s.masses, rows);
    if (r.status != LpStatus::optimal)
        throw NumericalError("Lipschitz dual program did not reach an optimum");
    return r.value;
}

bool cone_membership(const SignedDiscreteMeasure& m, double tolerance, const DualLpOptions& opts) {
    if (m.dimension < 1) throw ArgumentError("dimension must be at least 1");
    if (m.size() == 0) return true;
    DedupSupport s = dedup(m, false);
    const int d = s.d;
    const int nv = static_cast<int>(s.masses.size());
    std::vector<LinearRow> rows;
    if (d == 1) {
        if (static_cast<std::size_t>(nv) > opts.support_cap_1d)
            throw ArgumentError("support too large for the Lipschitz dual program");
        std::vector<int> ord(nv);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return s.atoms[a] < s.atoms[b]; });
        for (int k = 0; k + 1 < nv; ++k) {
            double gap = s.atoms[ord[k + 1]] - s.atoms[ord[k]];
            rows.push_back({{{ord[k + 1], 1.0}, {ord[k], -1.0}}, gap});  // Lipschitz
            rows.push_back({{{ord[k], 1.0}, {ord[k + 1], -1.0}}, 0.0});  // increasing
        }
    } else {
        if (static_cast<std::size_t>(nv) > opts.support_cap)
            throw ArgumentError("support too large for the Lipschitz dual program");
        for (int i = 0; i < nv; ++i)
            for (int j = i + 1; j < nv; ++j) {
                const double* xi = &s.atoms[static_cast<std::size_t>(i) * d];
                const double* xj = &s.atoms[static_cast<std::size_t>(j) * d];
                double gap = dist(xi, xj, d);
                rows.push_back({{{i, 1.0}, {j, -1.0}}, gap});
                rows.push_back({{{j, 1.0}, {i, -1.0}}, gap});
                if (leq_componentwise(xi, xj, d)) rows.push_back({{{i, 1.0}, {j, -1.0}}, 0.0});
                if (leq_componentwise(xj, xi, d)) rows.push_back({{{j, 1.0}, {i, -1.0}}, 0.0});
            }
    }
    for (int i = 0; i < nv; ++i) rows.push_back({{{i, -1.0}}, 0.0});
    Vec neg(s.masses.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -s.masses[i];
    LpResult r = maximize_with_rows(nv, neg, rows);
    if (r.status == LpStatus::unbounded) return false;
    if (r.status != LpStatus::optimal)
        throw NumericalError("cone membership program did not reach an optimum");
    return r.value <= tolerance;
}

}  // namespace mvlab
