#include "mvlab/particle.hpp"

#include <algorithm>
#include <cmath>

namespace mvlab {

std::string to_string(Scheme s) {
    return s == Scheme::euler_maruyama ? "euler_maruyama" : "tamed_euler";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "euler_maruyama" || s == "euler") return Scheme::euler_maruyama;
    if (s == "tamed_euler" || s == "tamed") return Scheme::tamed_euler;
    throw ArgumentError("unknown scheme: " + s);
}

namespace {

constexpr std::uint64_t kInitSalt = 0xA11Cull;
constexpr std::uint64_t kDynamicsSalt = 0xD1CEull;

}  // namespace

ParticleEnsemble::ParticleEnsemble(const ModelSpec& model, const InitSpec& init, std::size_t n,
                                   std::uint64_t seed_root)
    : model_(model),
      n_(n),
      seed_root_(seed_root),
      noise_(mix_seed(seed_root, kDynamicsSalt)) {
    model_.validate();
    if (n_ == 0) throw ArgumentError("ensemble needs at least one particle");
    const int d = model_.dimension;
    states_.resize(n_ * d);
    drift_buf_.resize(d);
    mean_buf_.resize(d);
    cached_block_.assign(n_, ~std::uint64_t{0});
    cached_pair_.assign(2 * n_, 0.0);
    switch (init.kind) {
        case InitSpec::Kind::dirac: {
            if (static_cast<int>(init.center.size()) != d)
                throw ArgumentError("initial point dimension mismatch");
            for (std::size_t i = 0; i < n_; ++i)
                std::copy(init.center.begin(), init.center.end(), states_.begin() + i * d);
            break;
        }
        case InitSpec::Kind::gaussian: {
            if (static_cast<int>(init.center.size()) != d)
                throw ArgumentError("initial point dimension mismatch");
            if (!(init.stddev >= 0.0)) throw ArgumentError("stddev must be nonnegative");
            GaussianField g(mix_seed(seed_root, kInitSalt));
            for (std::size_t i = 0; i < n_; ++i)
                for (int k = 0; k < d; ++k)
                    states_[i * d + k] = init.center[k] + init.stddev * g(i, static_cast<std::uint64_t>(k));
            break;
        }
        case InitSpec::Kind::cloud: {
            if (!init.cloud) throw ArgumentError("cloud initializer is null");
            const EmpiricalMeasure& m = *init.cloud;
            if (m.dimension() != d) throw ArgumentError("cloud dimension mismatch");
            if (m.uniform() && m.size() == n_) {
                std::copy(m.samples().begin(), m.samples().end(), states_.begin());
            } else {
                // Systematic quantile resampling, deterministic.
                double acc = 0.0;
                std::size_t src = 0;
                for (std::size_t i = 0; i < n_; ++i) {
                    double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n_);
                    while (src + 1 < m.size() && acc + m.weight(src) < q) acc += m.weight(src++);
                    std::copy(m.point(src), m.point(src) + d, states_.begin() + i * d);
                }
            }
            break;
        }
    }
}

EmpiricalMeasure ParticleEnsemble::law() const {
    return EmpiricalMeasure(model_.dimension, states_);
}

MeasureSummary ParticleEnsemble::summary() const {
    const int d = model_.dimension;
    MeasureSummary s;
    s.mean.assign(d, 0.0);
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const double* x = states_.data() + i * d;
        for (int k = 0; k < d; ++k) s.mean[k] += x[k];
        m2 += norm2_sq(x, d);
    }
    for (int k = 0; k < d; ++k) s.mean[k] /= static_cast<double>(n_);
    s.norm2 = std::sqrt(m2 / static_cast<double>(n_));
    return s;
}

void ParticleEnsemble::step(const IntegrationSchedule& sched, const MeasureSummary* frozen) {
    sched.validate();
    const int d = model_.dimension;
    const double dt = sched.dt;
    const double root_dt = std::sqrt(dt);
    MeasureSummary own;
    const MeasureSummary* use = frozen;
    if (!use) {
        own = summary();
        use = &own;
    }
    const std::uint64_t step_now = step_;
    for (std::size_t i = 0; i < n_; ++i) {
        double* x = states_.data() + i * d;
        eval_drift_into(model_, x, *use, drift_buf_.data());
        if (sched.scheme == Scheme::tamed_euler) {
            double norm = std::sqrt(norm2_sq(drift_buf_.data(), d));
            double tame = 1.0 / (1.0 + dt * norm);
            for (int k = 0; k < d; ++k) drift_buf_[k] *= tame;
        }
        for (int k = 0; k < d; ++k) {
            std::uint64_t gidx = step_now * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(k);
            std::uint64_t block = gidx >> 1;
            if (cached_block_[i] != block) {
                auto pair = noise_.pair(i, block);
                cached_pair_[2 * i] = pair[0];
                cached_pair_[2 * i + 1] = pair[1];
                cached_block_[i] = block;
            }
            double xi = cached_pair_[2 * i + (gidx & 1)];
            double sig = model_.sigma.eval(k, x[k]);
            x[k] += dt * drift_buf_[k] + root_dt * sig * xi;
        }
        for (int k = 0; k < d; ++k) {
            if (!std::isfinite(x[k]) || std::abs(x[k]) > sched.blowup_threshold) {
                throw NumericalError("trajectory blow-up at particle " + std::to_string(i) +
                                     ", t = " + format_double(time_, 6) +
                                     "; consider the tamed scheme or a smaller dt");
            }
        }
    }
    ++step_;
    time_ = static_cast<double>(step_) * dt;
}

void ParticleEnsemble::run(double t_span, const IntegrationSchedule& sched,
                           const MeasureSummary* frozen) {
    long steps = std::lround(t_span / sched.dt);
    if (steps < 0) throw ArgumentError("time span must be nonnegative");
    for (long s = 0; s < steps; ++s) step(sched, frozen);
}

namespace {

SimulationResult run_with_checkpoints(ParticleEnsemble& ens, const MeasureSummary* frozen,
                                      double t_end, double checkpoint_dt,
                                      const IntegrationSchedule& sched) {
    sched.validate();
    if (!(t_end >= 0.0)) throw ArgumentError("horizon must be nonnegative");
    if (!(checkpoint_dt > 0.0)) throw ArgumentError("checkpoint spacing must be positive");
    SimulationResult out;
    const long total = std::lround(t_end / sched.dt);
    const long ckpt_stride = std::max<long>(1, std::lround(checkpoint_dt / sched.dt));
    const long diag_stride = std::max<long>(1, total / 512);
    out.checkpoints.push_back({ens.time(), ens.law()});
    auto diag = [&]() {
        MeasureSummary s = ens.summary();
        out.times.push_back(ens.time());
        out.mean_first.push_back(s.mean[0]);
        out.second_moment.push_back(sq(s.norm2));
    };
    diag();
    for (long s = 1; s <= total; ++s) {
        ens.step(sched, frozen);
        if (s % ckpt_stride == 0 || s == total)
            out.checkpoints.push_back({ens.time(), ens.law()});
        if (s % diag_stride == 0 || s == total) diag();
    }
    return out;
}

}  // namespace

SimulationResult simulate(ParticleEnsemble& ens, double t_end, double checkpoint_dt,
                          const IntegrationSchedule& sched) {
    return run_with_checkpoints(ens, nullptr, t_end, checkpoint_dt, sched);
}

SimulationResult simulate_frozen(ParticleEnsemble& ens, const MeasureSummary& frozen, double t_end,
                                 double checkpoint_dt, const IntegrationSchedule& sched) {
    return run_with_checkpoints(ens, &frozen, t_end, checkpoint_dt, sched);
}

CoupledPairResult coupled_pair(const ModelSpec& model_a, const ModelSpec& model_b,
                               const InitSpec& init_a, const InitSpec& init_b, std::size_t n,
                               std::uint64_t seed_root, double t_end, double checkpoint_dt,
                               const IntegrationSchedule& sched, const MeasureSummary* frozen_a,
                               const MeasureSummary* frozen_b) {
    sched.validate();
    ParticleEnsemble a(model_a, init_a, n, seed_root);
    ParticleEnsemble b(model_b, init_b, n, seed_root);
    if (a.dimension() != b.dimension()) throw ArgumentError("coupled systems need equal dimensions");
    const int d = a.dimension();
    CoupledPairResult out;
    const long total = std::lround(t_end / sched.dt);
    const long stride = std::max<long>(1, std::lround(checkpoint_dt / sched.dt));
    auto fraction_ordered = [&]() {
        std::size_t good = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (leq_componentwise(a.states().data() + i * d, b.states().data() + i * d, d)) ++good;
        return static_cast<double>(good) / static_cast<double>(n);
    };
    auto record = [&]() {
        double frac = fraction_ordered();
        out.checkpoints.push_back({a.time(), a.law(), b.law(), frac});
        out.min_ordered_fraction = std::min(out.min_ordered_fraction, frac);
    };
    record();
    for (long s = 1; s <= total; ++s) {
        a.step(sched, frozen_a);
        b.step(sched, frozen_b);
        if (s % stride == 0 || s == total) record();
    }
    return out;
}

}  // namespace mvlab
