#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "synq/model.hpp"

namespace synq {

/// Denominators smaller than this in magnitude raise NearPole.
inline constexpr double kPoleGuard = 1e-9;

/// f_k at a Z-space tail (alpha_{k+1}, ..., alpha_n). f_k / (-E Y_k(1)) is the
/// joint LST of the workload embedded at epochs where station k is empty.
struct FkValue {
    std::size_t k = 0;
    Vector alpha_tail;
    double value = 0.0;
};

FkValue f(const ValidatedModel& m, std::size_t k, std::span<const double> z_tail);

/// All f_1..f_n at the suffix tails of one Z-space argument; entry k-1 holds
/// f_k(alpha_{k+1}, ..., alpha_n). Cost is one root solve per level.
Vector f_all(const ValidatedModel& m, std::span<const double> z_alpha);

/// Stationary LST E exp(-alpha . Z*) via the f_k recursion.
double lst_Z(const ValidatedModel& m, const AlphaVector& alpha);
/// Stationary LST E exp(-alpha . W*) of the differenced (tandem) workloads.
double lst_W(const ValidatedModel& m, const AlphaVector& alpha);
/// Dispatch on alpha.space().
double lst(const ValidatedModel& m, const AlphaVector& alpha);

/// Two-factor closed form for n = 2.
double lst_2d_closed(const ValidatedModel& m, double alpha1, double alpha2, Space space);

struct DecompositionFactors {
    Vector factors;  // n joint LSTs, one per level
    double product = 1.0;
};

/// Product form of lst_W: the k-th factor is the LST of the workload added at
/// level k, built from psi_{k-1} and psi_k.
DecompositionFactors decomposition(const ValidatedModel& m, const AlphaVector& alpha_w);

// ---------------------------------------------------------------------------
// Subordinator exponents and their stationary-excess mixtures
// ---------------------------------------------------------------------------

struct CompoundPoissonPart {
    double rate = 0.0;
    Marginal jump;
};

/// xi(beta) = b beta + sum_m rate_m (1 - E exp(-beta J_m)).
struct SubordinatorExponent {
    double drift = 0.0;
    std::vector<CompoundPoissonPart> parts;

    double operator()(double beta) const;
    double mean() const;  // xi'(0)
};

/// -phi(0, ..., s e_i, ..., 0): exponent of coordinate i (1-based, i >= 2).
SubordinatorExponent coordinate_exponent(const ValidatedModel& m, std::size_t i);

/// xi(beta) / (beta xi'(0)) as a mixture of an atom at zero and the
/// stationary-excess law of the Levy measure.
struct MixtureSpec {
    double drift_weight = 0.0;
    double jump_weight = 0.0;
    double mean = 0.0;  // xi'(0)
    std::function<double(double)> exponent;
    /// mu(x, inf) / int mu(u, inf) du; empty when only the slope is known.
    std::function<double(double)> residual_density;

    double lst(double beta) const;
};

MixtureSpec mixture(const SubordinatorExponent& xi);

/// Mixture of an exponent known only as a function. The drift is the
/// asymptotic slope, extracted as (xi(2B) - xi(B)) / B at B = slope_point.
MixtureSpec mixture_numeric(std::function<double(double)> xi, double mean,
                            double slope_point = 1e6);

/// The mixture attached to psi_1 for n = 2.
MixtureSpec psi_mixture(const ValidatedModel& m);

// ---------------------------------------------------------------------------
// Moments and the n = 2 identity
// ---------------------------------------------------------------------------

struct WorkloadMoments {
    double EW1 = 0.0;
    double EW2 = 0.0;
    double EZ2 = 0.0;
};

WorkloadMoments moments_W(const ValidatedModel& m);

struct IdentityPoint {
    double alpha2 = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
};

struct IdentityReport {
    std::vector<IdentityPoint> points;
    double max_gap = 0.0;
};

/// Pointwise comparison of the two sides of the excess decomposition of W_2*:
/// xi_2* + W_2*  ~  xi_2^{1*} + W_2^{1*}.
IdentityReport decomposition_identity_check(const ValidatedModel& m,
                                            std::span<const double> alpha2_grid);

}  // namespace synq
