#pragma once

#include <array>
#include <cstddef>

#include "synq/model.hpp"

namespace synq {

struct PsiQuery {
    std::size_t k = 1;  // 1 <= k <= n-1
    Vector alpha_tail;  // (alpha_{k+1}, ..., alpha_n) >= 0
    double tolerance = 1e-12;
    int max_bracket_doublings = 64;
};

struct PsiResult {
    double beta = 0.0;
    double residual = 0.0;  // phi(beta, ..., beta, tail)
    std::array<double, 2> bracket{0.0, 0.0};
    int iterations = 0;
};

/// Unique nonnegative root beta of phi(beta, ..., beta, tail) = 0 with k
/// leading betas. The zero tail gives beta = 0. Otherwise the root is bracketed
/// by doubling from [0, 1] and refined with Brent's method down to machine
/// resolution; the residual must then be within query.tolerance.
PsiResult psi(const ValidatedModel& m, const PsiQuery& query);

/// Shorthand returning only the root, default tolerance.
double psi_value(const ValidatedModel& m, std::size_t k, std::span<const double> tail);

/// alpha_k that annihilates phi_tilde(0, ..., 0, alpha_k, tail) for a Z-space
/// tail: psi_k(reverse_cumulative(tail)) - sum(tail).
double psi_shifted(const ValidatedModel& m, std::size_t k, std::span<const double> z_tail);

/// Gradient and Hessian of psi_k at the zero tail, indexed over the tail
/// coordinates k+1..n.
struct PsiDerivatives {
    Vector first;
    Matrix second;
};

/// Derivatives by implicit differentiation of phi(psi, ..., psi, tail) = 0,
/// using grad phi(0) = -E X(1) and Hess phi(0) = Cov X(1).
PsiDerivatives psi_derivatives_at_zero(const ValidatedModel& m, std::size_t k);

/// psi_1''(0) for n = 2 written in moments of X(1), covariance term included.
double psi1_second_derivative_2d(const MomentTable& t);

/// 1 - d psi_{k-1}/d alpha_k (0) = E Y_k(1) / E Y_{k-1}(1), for 2 <= k <= n.
double psi_gradient_complement(const ValidatedModel& m, std::size_t k);

}  // namespace synq
