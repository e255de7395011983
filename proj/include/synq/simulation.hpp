#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "synq/model.hpp"

namespace synq {

struct SimConfig {
    double horizon = 5000.0;
    double step = 0.01;  // grid width; used only when sigma > 0
    int replications = 200;
    double burn_in_fraction = 0.5;
    std::uint64_t seed = 42;
    std::vector<AlphaVector> alpha_grid;
    int threads = 0;  // 0: SYNQ_THREADS or hardware concurrency

    /// Throws ConfigError on invalid settings.
    void check(const ValidatedModel& m) const;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Per-replication estimator values, in a fixed order.
struct ReplicationSummary {
    Vector time_avg_Z;
    Vector time_avg_W;
    Vector final_Z;
    Vector lst;
};

struct SimEstimate {
    std::vector<Estimate> mean_Z;      // time averages over the retained window
    std::vector<Estimate> mean_W;      // W_j = Z_j - Z_{j-1}
    std::vector<Estimate> ensemble_Z;  // Z(T) across replications
    std::vector<Estimate> lst_values;  // one per alpha_grid entry
    std::uint64_t ordering_violations = 0;
    std::uint64_t reflection_violations = 0;
    std::uint64_t events = 0;
    std::optional<std::string> warning;  // set when E Y_n(1) >= 0
    std::vector<ReplicationSummary> replications;
};

/// Sample-path state; Z = Y + L componentwise.
struct PathState {
    double t = 0.0;
    Vector Y;
    Vector Z;
    Vector L;
};

struct PathRecord {
    std::vector<PathState> states;
};

/// 64-bit generator for replication r of a run seeded with `seed`. Streams are
/// derived by hashing (seed, stream, r), so results do not depend on the
/// order in which replications execute.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t r);

/// Draws one jump vector of component m.
Vector sample_jump(const JumpComponent& c, std::mt19937_64& rng);

/// R independent reflected paths from Z(0) = 0. Exact event-driven evolution
/// when sigma = 0, Euler grid with per-coordinate Lindley reflection otherwise.
SimEstimate simulate(const ValidatedModel& m, const SimConfig& config);

/// One path with every event, boundary hit and the horizon recorded.
PathRecord simulate_path(const ValidatedModel& m, double horizon, std::uint64_t seed,
                         double step = 0.01);

/// W_j(t) = Z_j(t) - Z_{j-1}(t), Z_0 = 0, at every recorded state.
std::vector<Vector> tandem_view(const PathRecord& path);

/// Single unit-rate server with n preemptive-resume priority classes: a jump
/// brings J_i of class-i work and lower indices preempt. Reports time averages
/// of the workload in classes 1..j as mean_Z[j-1]. Requires sigma = 0, c_1 = -1
/// and c_i = 0 for i >= 2.
SimEstimate priority_oracle(const ValidatedModel& m, const SimConfig& config);

// ---------------------------------------------------------------------------
// Grid-mode building blocks
// ---------------------------------------------------------------------------

/// Increment of X over one grid step of width h (Gaussian part on coordinate 1,
/// Poisson counts of each jump component).
Vector grid_increment(const ValidatedModel& m, double h, std::mt19937_64& rng);

/// Discrete Lindley reflection Z <- max(Z + dY, 0) with running time averages
/// of Z and of exp(-a.Z) (a in Z-space) over [window_start, horizon].
class LindleyGrid {
public:
    LindleyGrid(std::size_t n, double h, double window_start, std::vector<Vector> z_alphas = {});

    /// Consumes an increment of X (not Y).
    void step(std::span<const double> dX);

    const Vector& Z() const noexcept { return Z_; }
    double t() const noexcept { return t_; }
    Vector time_average() const;
    Vector lst_average() const;
    std::uint64_t ordering_violations() const noexcept { return violations_; }

private:
    double h_;
    double window_start_;
    double t_ = 0.0;
    double weight_ = 0.0;
    Vector Z_;
    Vector dY_;
    Vector integral_;
    std::vector<Vector> z_alphas_;
    Vector lst_integral_;
    std::uint64_t violations_ = 0;
};

}  // namespace synq
