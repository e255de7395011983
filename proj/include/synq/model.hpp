#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "synq/errors.hpp"

namespace synq {

using Vector = std::vector<double>;
using Matrix = std::vector<Vector>;

// ---------------------------------------------------------------------------
// Jump laws
// ---------------------------------------------------------------------------

namespace marginal {
struct Zero {};
struct Point {
    double value;
};
struct Exponential {
    double rate;
};
struct Erlang {
    int shape;
    double rate;
};
}  // namespace marginal

/// Law of a single nonnegative jump coordinate.
using Marginal = std::variant<marginal::Zero, marginal::Point, marginal::Exponential,
                              marginal::Erlang>;

double marginal_mean(const Marginal& m);
double marginal_second_moment(const Marginal& m);
/// E exp(-s J) - 1, computed without cancellation for small s.
double marginal_lst_minus_one(const Marginal& m, double s);
/// P(J > x).
double marginal_tail(const Marginal& m, double x);
bool marginal_is_zero(const Marginal& m);

namespace law {
struct Deterministic {
    Vector jump;
};
struct IndependentMarginals {
    std::vector<Marginal> marginals;
};
/// jump = weights * E with E ~ Exp(rate).
struct ComonotoneLinear {
    Vector weights;
    double rate;
};
}  // namespace law

using JumpLaw = std::variant<law::Deterministic, law::IndependentMarginals, law::ComonotoneLinear>;

/// One Poisson stream of simultaneous nonnegative jumps.
struct JumpComponent {
    double rate = 0.0;
    JumpLaw law;
};

std::size_t law_dimension(const JumpLaw& law);
/// Marginal law of coordinate i (0-based) of a jump.
Marginal law_marginal(const JumpLaw& law, std::size_t i);
/// E exp(-v.J) - 1 for v >= 0.
double law_lst_minus_one(const JumpLaw& law, std::span<const double> v);
/// E[J_i J_j] (0-based).
double law_cross_moment(const JumpLaw& law, std::size_t i, std::size_t j);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Parametric n-dimensional input X: drift c, Brownian volatility on
/// coordinate 1, and a finite list of compound-Poisson jump streams.
struct LevyModel {
    std::size_t n = 2;
    Vector drift;
    double sigma = 0.0;
    std::vector<JumpComponent> components;
};

struct MomentTable {
    Vector mean;             // E X_i(1)
    Matrix cov;              // Cov(X_i(1), X_j(1))
    Vector cumulative_mean;  // E Y_k(1)
};

struct StabilityReport {
    Vector cumulative_mean;  // E Y_k(1), k = 1..n
    bool stable = false;     // E Y_n(1) < 0
};

/// A model that passed validate(). Immutable; moments are computed once.
class ValidatedModel {
public:
    const LevyModel& model() const noexcept { return model_; }
    std::size_t n() const noexcept { return model_.n; }
    const MomentTable& moments() const noexcept { return moments_; }
    bool stable() const noexcept { return moments_.cumulative_mean.back() < 0.0; }

    /// Throws InstabilityError unless E Y_n(1) < 0.
    void require_stable() const;

private:
    friend ValidatedModel validate(LevyModel model);
    ValidatedModel(LevyModel model, MomentTable moments)
        : model_(std::move(model)), moments_(std::move(moments)) {}

    LevyModel model_;
    MomentTable moments_;
};

/// Checks every structural assumption; throws ValidationError listing all
/// violations.
ValidatedModel validate(LevyModel model);

/// Which domain an argument vector lives in.
enum class Space { Z, W };

/// Transform argument together with its domain. Z-space requires every
/// reverse partial sum sum_{i>=k} alpha_i to be nonnegative; W-space requires
/// alpha >= 0 componentwise.
class AlphaVector {
public:
    static AlphaVector z_space(Vector values);
    static AlphaVector w_space(Vector values);
    static AlphaVector make(Vector values, Space space);

    const Vector& values() const noexcept { return values_; }
    Space space() const noexcept { return space_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Equivalent Z-space argument: Sum a_i W_i = Sum (a_i - a_{i+1}) Z_i.
    AlphaVector to_z() const;

private:
    AlphaVector(Vector values, Space space) : values_(std::move(values)), space_(space) {}
    Vector values_;
    Space space_;
};

/// (a_1+...+a_n, a_2+...+a_n, ..., a_n)
Vector reverse_cumulative(std::span<const double> alpha);
/// (a_1-a_2, ..., a_{n-1}-a_n, a_n)
Vector successive_differences(std::span<const double> alpha);

// ---------------------------------------------------------------------------
// Laplace exponents: E exp(-v.X(t)) = exp(phi(v) t)
// ---------------------------------------------------------------------------

double phi(const ValidatedModel& m, std::span<const double> v);
/// Exponent of Y: phi at the reverse-cumulative sums of alpha.
double phi_tilde(const ValidatedModel& m, const AlphaVector& alpha);
/// phi(beta, ..., beta, 0, ..., 0) with k leading betas (k is 1-based).
double phi_k(const ValidatedModel& m, std::size_t k, double beta);
/// phi(beta, ..., beta, tail) with k = n - tail.size() leading betas.
double phi_diagonal(const ValidatedModel& m, double beta, std::span<const double> tail);
/// -phi(0, tail): Laplace exponent (sign-flipped) of (X_2, ..., X_n).
double eta(const ValidatedModel& m, std::span<const double> tail);

MomentTable moments(const ValidatedModel& m);
StabilityReport stability(const ValidatedModel& m);

}  // namespace synq
