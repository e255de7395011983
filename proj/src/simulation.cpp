#include "synq/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>
#include <type_traits>

namespace synq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double sample_marginal(const Marginal& mg, std::mt19937_64& rng) {
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return 0.0; },
                          [](const marginal::Point& p) { return p.value; },
                          [&rng](const marginal::Exponential& e) {
                              return std::exponential_distribution<double>(e.rate)(rng);
                          },
                          [&rng](const marginal::Erlang& e) {
                              return std::gamma_distribution<double>(e.shape, 1.0 / e.rate)(rng);
                          },
                      },
                      mg);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SYNQ_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(r) for r in [0, count) on a small pool; each r writes only its
/// own slot, so the outcome does not depend on scheduling.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int r = 0; r < count; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int r = next++; r < count; r = next++) body(r);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Time integrals of a piecewise-linear vector path and of exp(-a.path) over
/// [window_start, horizon].
class WindowIntegrator {
public:
    WindowIntegrator(std::size_t n, double window_start, const std::vector<Vector>& z_alphas)
        : window_start_(window_start), z_alphas_(z_alphas), integral_(n, 0.0),
          lst_integral_(z_alphas.size(), 0.0), start_(n) {}

    /// path(t0 + s) = z0 + slope * s for s in [0, dt].
    void piece(double t0, std::span<const double> z0, std::span<const double> slope, double dt) {
        const double t1 = t0 + dt;
        if (t1 <= window_start_ || dt <= 0.0) return;
        double skip = 0.0;
        if (t0 < window_start_) skip = window_start_ - t0;
        const double len = dt - skip;
        for (std::size_t i = 0; i < z0.size(); ++i) {
            start_[i] = z0[i] + slope[i] * skip;
            integral_[i] += start_[i] * len + 0.5 * slope[i] * len * len;
        }
        for (std::size_t g = 0; g < z_alphas_.size(); ++g) {
            double e0 = 0.0;
            double e1 = 0.0;
            for (std::size_t i = 0; i < z0.size(); ++i) {
                e0 += z_alphas_[g][i] * start_[i];
                e1 += z_alphas_[g][i] * slope[i];
            }
            const double x = e1 * len;
            const double shape = std::abs(x) < 1e-12 ? len * (1.0 - 0.5 * x) : -std::expm1(-x) / e1;
            lst_integral_[g] += std::exp(-e0) * shape;
        }
        weight_ += len;
    }

    Vector time_average() const { return scaled(integral_); }
    Vector lst_average() const { return scaled(lst_integral_); }

private:
    Vector scaled(const Vector& v) const {
        Vector out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = weight_ > 0.0 ? v[i] / weight_ : 0.0;
        return out;
    }

    double window_start_;
    const std::vector<Vector>& z_alphas_;
    Vector integral_;
    Vector lst_integral_;
    Vector start_;
    double weight_ = 0.0;
};

/// Exact reflected evolution of a compound-Poisson-plus-drift input.
class EventDrivenPath {
public:
    explicit EventDrivenPath(const ValidatedModel& m)
        : n_(m.n()), Y_(n_, 0.0), Z_(n_, 0.0), L_(n_, 0.0), slope_(n_), effective_(n_) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            s += m.model().drift[i];
            slope_[i] = s;
        }
    }

    /// Moves forward by at most max_dt with no jumps, stopping early at the
    /// first boundary hit. observer(t0, z0, slope, dt) sees the linear piece.
    /// Returns the elapsed time.
    template <class Observer>
    double advance_piece(double max_dt, Observer&& observer) {
        double dt = max_dt;
        for (std::size_t i = 0; i < n_; ++i) {
            const bool stuck = Z_[i] == 0.0 && slope_[i] < 0.0;
            effective_[i] = stuck ? 0.0 : slope_[i];
            if (effective_[i] < 0.0) dt = std::min(dt, Z_[i] / -effective_[i]);
        }
        observer(t_, std::span<const double>(Z_), std::span<const double>(effective_), dt);
        for (std::size_t i = 0; i < n_; ++i) {
            Y_[i] += slope_[i] * dt;
            if (effective_[i] < 0.0) {
                const double hit = Z_[i] / -effective_[i];
                Z_[i] = hit <= dt ? 0.0 : std::max(Z_[i] + effective_[i] * dt, 0.0);
            } else if (effective_[i] > 0.0) {
                Z_[i] += effective_[i] * dt;
            } else if (slope_[i] < 0.0) {
                // held at zero: the local time absorbs the push
                if (Z_[i] != 0.0) ++reflection_violations_;
                L_[i] += -slope_[i] * dt;
            }
        }
        t_ += dt;
        check_order();
        return dt;
    }

    template <class Observer>
    void advance(double tau, Observer&& observer) {
        double remaining = tau;
        while (remaining > 0.0) remaining -= advance_piece(remaining, observer);
    }

    void jump(std::span<const double> J) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            s += J[i];
            Y_[i] += s;
            Z_[i] += s;
        }
        check_order();
    }

    PathState state() const { return {t_, Y_, Z_, L_}; }
    const Vector& Z() const noexcept { return Z_; }
    double t() const noexcept { return t_; }
    std::uint64_t ordering_violations() const noexcept { return ordering_violations_; }
    std::uint64_t reflection_violations() const noexcept { return reflection_violations_; }

private:
    void check_order() {
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            if (Z_[i] > Z_[i + 1]) ++ordering_violations_;
        }
    }

    std::size_t n_;
    double t_ = 0.0;
    Vector Y_;
    Vector Z_;
    Vector L_;
    Vector slope_;
    Vector effective_;
    std::uint64_t ordering_violations_ = 0;
    std::uint64_t reflection_violations_ = 0;
};

/// Arrival process shared by the event-driven engines.
class Arrivals {
public:
    explicit Arrivals(const ValidatedModel& m) : components_(m.model().components) {
        for (const auto& c : components_) total_ += c.rate;
    }

    double total_rate() const noexcept { return total_; }

    double next_gap(std::mt19937_64& rng) const {
        if (total_ <= 0.0) return std::numeric_limits<double>::infinity();
        return std::exponential_distribution<double>(total_)(rng);
    }

    Vector next_jump(std::mt19937_64& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, total_)(rng);
        std::size_t pick = components_.size() - 1;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (u < components_[i].rate) {
                pick = i;
                break;
            }
            u -= components_[i].rate;
        }
        return sample_jump(components_[pick], rng);
    }

private:
    const std::vector<JumpComponent>& components_;
    double total_ = 0.0;
};

std::vector<Vector> z_coefficients(const std::vector<AlphaVector>& grid) {
    std::vector<Vector> out;
    out.reserve(grid.size());
    for (const auto& a : grid) out.push_back(a.to_z().values());
    return out;
}

struct ReplicationOutcome {
    ReplicationSummary summary;
    std::uint64_t ordering_violations = 0;
    std::uint64_t reflection_violations = 0;
    std::uint64_t events = 0;
};

ReplicationSummary finish_summary(std::size_t n, Vector avg, Vector lst, Vector final_z) {
    ReplicationSummary s;
    s.time_avg_W.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.time_avg_W[j] = avg[j] - (j ? avg[j - 1] : 0.0);
    s.time_avg_Z = std::move(avg);
    s.lst = std::move(lst);
    s.final_Z = std::move(final_z);
    return s;
}

ReplicationOutcome run_event_driven(const ValidatedModel& m, const SimConfig& cfg,
                                    const std::vector<Vector>& z_alphas, std::mt19937_64& rng) {
    const double horizon = cfg.horizon;
    const double window_start = cfg.burn_in_fraction * horizon;
    EventDrivenPath path(m);
    Arrivals arrivals(m);
    WindowIntegrator acc(m.n(), window_start, z_alphas);
    auto observer = [&acc](double t0, std::span<const double> z0, std::span<const double> slope,
                           double dt) { acc.piece(t0, z0, slope, dt); };

    ReplicationOutcome out;
    double t = 0.0;
    while (true) {
        const double gap = arrivals.next_gap(rng);
        if (t + gap >= horizon) {
            path.advance(horizon - t, observer);
            break;
        }
        path.advance(gap, observer);
        t += gap;
        path.jump(arrivals.next_jump(rng));
        ++out.events;
    }
    out.summary = finish_summary(m.n(), acc.time_average(), acc.lst_average(), path.Z());
    out.ordering_violations = path.ordering_violations();
    out.reflection_violations = path.reflection_violations();
    return out;
}

ReplicationOutcome run_grid(const ValidatedModel& m, const SimConfig& cfg,
                            const std::vector<Vector>& z_alphas, std::mt19937_64& rng) {
    const auto steps = static_cast<long long>(std::ceil(cfg.horizon / cfg.step - 1e-9));
    const double h = cfg.horizon / static_cast<double>(steps);
    LindleyGrid grid(m.n(), h, cfg.burn_in_fraction * cfg.horizon, z_alphas);
    for (long long s = 0; s < steps; ++s) grid.step(grid_increment(m, h, rng));
    ReplicationOutcome out;
    out.summary = finish_summary(m.n(), grid.time_average(), grid.lst_average(), grid.Z());
    out.ordering_violations = grid.ordering_violations();
    out.events = static_cast<std::uint64_t>(steps);
    return out;
}

/// Preemptive-resume priority server: per-class work, unit service rate.
ReplicationOutcome run_priority(const ValidatedModel& m, const SimConfig& cfg,
                                const std::vector<Vector>& z_alphas, std::mt19937_64& rng) {
    const std::size_t n = m.n();
    const double horizon = cfg.horizon;
    Arrivals arrivals(m);
    WindowIntegrator acc(n, cfg.burn_in_fraction * horizon, z_alphas);
    Vector work(n, 0.0);
    Vector cumulative(n, 0.0);
    Vector slope(n, 0.0);
    double t = 0.0;

    auto refresh_cumulative = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += work[j];
            cumulative[j] = s;
        }
    };

    // Serve for tau time units, highest priority (lowest index) first.
    auto serve = [&](double tau) {
        double budget = tau;
        for (std::size_t cls = 0; cls < n && budget > 0.0; ++cls) {
            if (work[cls] <= 0.0) continue;
            const double busy = std::min(work[cls], budget);
            refresh_cumulative();
            for (std::size_t j = 0; j < n; ++j) slope[j] = j >= cls ? -1.0 : 0.0;
            acc.piece(t, cumulative, slope, busy);
            work[cls] = busy == work[cls] ? 0.0 : work[cls] - busy;
            t += busy;
            budget -= busy;
        }
        if (budget > 0.0) {
            refresh_cumulative();
            std::fill(slope.begin(), slope.end(), 0.0);
            acc.piece(t, cumulative, slope, budget);
            t += budget;
        }
    };

    ReplicationOutcome out;
    while (true) {
        const double gap = arrivals.next_gap(rng);
        if (t + gap >= horizon) {
            serve(horizon - t);
            break;
        }
        const double arrival = t + gap;
        serve(gap);
        t = arrival;
        const Vector J = arrivals.next_jump(rng);
        for (std::size_t j = 0; j < n; ++j) work[j] += J[j];
        ++out.events;
    }
    refresh_cumulative();
    out.summary = finish_summary(n, acc.time_average(), acc.lst_average(), cumulative);
    return out;
}

Estimate summarize(const std::vector<ReplicationOutcome>& reps,
                   double (*get)(const ReplicationSummary&, std::size_t), std::size_t idx) {
    const std::size_t R = reps.size();
    double mean = 0.0;
    for (const auto& r : reps) mean += get(r.summary, idx);
    mean /= static_cast<double>(R);
    double ss = 0.0;
    for (const auto& r : reps) {
        const double d = get(r.summary, idx) - mean;
        ss += d * d;
    }
    const double se = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R))
                            : std::numeric_limits<double>::quiet_NaN();
    return {mean, se};
}

SimEstimate aggregate(const ValidatedModel& m, std::vector<ReplicationOutcome> reps,
                      std::size_t grid_size) {
    SimEstimate est;
    const std::size_t n = m.n();
    for (std::size_t i = 0; i < n; ++i) {
        est.mean_Z.push_back(summarize(
            reps, [](const ReplicationSummary& s, std::size_t j) { return s.time_avg_Z[j]; }, i));
        est.mean_W.push_back(summarize(
            reps, [](const ReplicationSummary& s, std::size_t j) { return s.time_avg_W[j]; }, i));
        est.ensemble_Z.push_back(summarize(
            reps, [](const ReplicationSummary& s, std::size_t j) { return s.final_Z[j]; }, i));
    }
    for (std::size_t g = 0; g < grid_size; ++g) {
        est.lst_values.push_back(summarize(
            reps, [](const ReplicationSummary& s, std::size_t j) { return s.lst[j]; }, g));
    }
    for (auto& r : reps) {
        est.ordering_violations += r.ordering_violations;
        est.reflection_violations += r.reflection_violations;
        est.events += r.events;
        est.replications.push_back(std::move(r.summary));
    }
    if (!m.stable()) {
        std::ostringstream os;
        os << "UnstableModelWarning: E Y_n(1) = " << m.moments().cumulative_mean.back()
           << " >= 0; no stationary distribution";
        est.warning = os.str();
    }
    return est;
}

template <class Runner>
SimEstimate run_replications(const ValidatedModel& m, const SimConfig& cfg, std::uint64_t stream,
                             Runner&& runner) {
    cfg.check(m);
    const std::vector<Vector> z_alphas = z_coefficients(cfg.alpha_grid);
    std::vector<ReplicationOutcome> reps(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, resolve_threads(cfg.threads), [&](int r) {
        auto rng = replication_rng(cfg.seed, stream, static_cast<std::uint64_t>(r));
        reps[static_cast<std::size_t>(r)] = runner(m, cfg, z_alphas, rng);
    });
    return aggregate(m, std::move(reps), cfg.alpha_grid.size());
}

}  // namespace

void SimConfig::check(const ValidatedModel& m) const {
    std::ostringstream os;
    if (!(std::isfinite(horizon) && horizon > 0.0)) os << "horizon must be > 0; ";
    if (replications < 1) os << "replications must be >= 1; ";
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) os << "burn_in_fraction must lie in [0, 1); ";
    if (m.model().sigma > 0.0 && !(std::isfinite(step) && step > 0.0)) {
        os << "step must be > 0 for diffusive models; ";
    }
    for (const auto& a : alpha_grid) {
        if (a.size() != m.n()) os << "alpha grid entry has wrong dimension; ";
    }
    const std::string msg = os.str();
    if (!msg.empty()) throw ConfigError("simulation config: " + msg);
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t r) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    const std::uint64_t c = splitmix64(b ^ splitmix64(r));
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

Vector sample_jump(const JumpComponent& c, std::mt19937_64& rng) {
    return std::visit(overloaded{
                          [](const law::Deterministic& d) { return d.jump; },
                          [&rng](const law::IndependentMarginals& im) {
                              Vector j(im.marginals.size());
                              for (std::size_t i = 0; i < j.size(); ++i) {
                                  j[i] = sample_marginal(im.marginals[i], rng);
                              }
                              return j;
                          },
                          [&rng](const law::ComonotoneLinear& cl) {
                              const double e = std::exponential_distribution<double>(cl.rate)(rng);
                              Vector j(cl.weights.size());
                              for (std::size_t i = 0; i < j.size(); ++i) j[i] = cl.weights[i] * e;
                              return j;
                          },
                      },
                      c.law);
}

SimEstimate simulate(const ValidatedModel& m, const SimConfig& config) {
    if (m.model().sigma > 0.0) return run_replications(m, config, 0, run_grid);
    return run_replications(m, config, 0, run_event_driven);
}

SimEstimate priority_oracle(const ValidatedModel& m, const SimConfig& config) {
    const LevyModel& model = m.model();
    if (model.sigma != 0.0) throw UnsupportedModel("priority oracle: sigma must be 0");
    if (model.drift[0] != -1.0) throw UnsupportedModel("priority oracle: c_1 must be -1");
    for (std::size_t i = 1; i < model.n; ++i) {
        if (model.drift[i] != 0.0) throw UnsupportedModel("priority oracle: c_i must be 0 for i >= 2");
    }
    return run_replications(m, config, 1, run_priority);
}

PathRecord simulate_path(const ValidatedModel& m, double horizon, std::uint64_t seed,
                         double step) {
    if (!(horizon > 0.0)) throw ConfigError("simulate_path: horizon must be > 0");
    PathRecord rec;
    auto rng = replication_rng(seed, 2, 0);
    const std::size_t n = m.n();

    if (m.model().sigma > 0.0) {
        if (!(step > 0.0)) throw ConfigError("simulate_path: step must be > 0");
        const auto steps = static_cast<long long>(std::ceil(horizon / step - 1e-9));
        const double h = horizon / static_cast<double>(steps);
        PathState s{0.0, Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0)};
        rec.states.push_back(s);
        Vector dY(n);
        for (long long k = 0; k < steps; ++k) {
            const Vector dX = grid_increment(m, h, rng);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dX[i];
                s.Y[i] += acc;
                const double next = s.Z[i] + acc;
                if (next < 0.0) s.L[i] += -next;
                s.Z[i] = std::max(next, 0.0);
            }
            s.t = h * static_cast<double>(k + 1);
            rec.states.push_back(s);
        }
        return rec;
    }

    EventDrivenPath path(m);
    Arrivals arrivals(m);
    rec.states.push_back(path.state());
    auto ignore = [](double, std::span<const double>, std::span<const double>, double) {};
    double t = 0.0;
    while (true) {
        const double gap = arrivals.next_gap(rng);
        double remaining = std::min(gap, horizon - t);
        while (remaining > 0.0) {
            remaining -= path.advance_piece(remaining, ignore);
            rec.states.push_back(path.state());
        }
        if (t + gap >= horizon) break;
        t += gap;
        path.jump(arrivals.next_jump(rng));
        rec.states.push_back(path.state());
    }
    return rec;
}

std::vector<Vector> tandem_view(const PathRecord& path) {
    std::vector<Vector> out;
    out.reserve(path.states.size());
    for (const auto& s : path.states) {
        Vector w(s.Z.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = s.Z[j] - (j ? s.Z[j - 1] : 0.0);
        out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// grid mode
// ---------------------------------------------------------------------------

Vector grid_increment(const ValidatedModel& m, double h, std::mt19937_64& rng) {
    const LevyModel& model = m.model();
    Vector dX(model.n);
    for (std::size_t i = 0; i < model.n; ++i) dX[i] = model.drift[i] * h;
    if (model.sigma > 0.0) {
        dX[0] += model.sigma * std::sqrt(h) * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    for (const auto& c : model.components) {
        const int events = std::poisson_distribution<int>(c.rate * h)(rng);
        for (int e = 0; e < events; ++e) {
            const Vector J = sample_jump(c, rng);
            for (std::size_t i = 0; i < model.n; ++i) dX[i] += J[i];
        }
    }
    return dX;
}

LindleyGrid::LindleyGrid(std::size_t n, double h, double window_start,
                         std::vector<Vector> z_alphas)
    : h_(h), window_start_(window_start), Z_(n, 0.0), dY_(n, 0.0), integral_(n, 0.0),
      z_alphas_(std::move(z_alphas)), lst_integral_(z_alphas_.size(), 0.0) {}

void LindleyGrid::step(std::span<const double> dX) {
    double s = 0.0;
    for (std::size_t i = 0; i < Z_.size(); ++i) {
        s += dX[i];
        Z_[i] = std::max(Z_[i] + s, 0.0);
    }
    for (std::size_t i = 0; i + 1 < Z_.size(); ++i) {
        if (Z_[i] > Z_[i + 1] + 1e-12) ++violations_;
    }
    const double t_next = t_ + h_;
    if (t_next > window_start_) {
        const double w = std::min(h_, t_next - window_start_);
        for (std::size_t i = 0; i < Z_.size(); ++i) integral_[i] += w * Z_[i];
        for (std::size_t g = 0; g < z_alphas_.size(); ++g) {
            double e = 0.0;
            for (std::size_t i = 0; i < Z_.size(); ++i) e += z_alphas_[g][i] * Z_[i];
            lst_integral_[g] += w * std::exp(-e);
        }
        weight_ += w;
    }
    t_ = t_next;
}

Vector LindleyGrid::time_average() const {
    Vector out(integral_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight_ > 0.0 ? integral_[i] / weight_ : 0.0;
    return out;
}

Vector LindleyGrid::lst_average() const {
    Vector out(lst_integral_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = weight_ > 0.0 ? lst_integral_[i] / weight_ : 0.0;
    }
    return out;
}

}  // namespace synq
