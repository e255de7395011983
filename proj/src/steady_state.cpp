#include "synq/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "synq/psi.hpp"

namespace synq {

namespace {

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return a == 0.0; });
}

void guard_pole(double denominator, const char* where) {
    if (!(std::abs(denominator) >= kPoleGuard)) throw NearPole(where, denominator);
}

void require_n2(const ValidatedModel& m, const char* who) {
    if (m.n() != 2) throw UnsupportedModel(std::string(who) + " is defined for n = 2 only");
}

}  // namespace

// ---------------------------------------------------------------------------
// f_k recursion and the stationary LST
// ---------------------------------------------------------------------------

namespace {

/// Recursion with the reverse partial sums supplied by the caller; for a
/// W-space argument they are the W values themselves, which avoids rounding
/// a zero sum to a tiny negative number.
Vector f_levels(const ValidatedModel& m, std::span<const double> z_alpha, const Vector& cum) {
    const std::size_t n = m.n();
    const Vector& ey = m.moments().cumulative_mean;

    Vector F(n);
    F[n - 1] = -ey[n - 1];
    // Level k (1-based) sits at index k-1; its tail is z_alpha[k..n-1].
    for (std::size_t k = n - 1; k >= 1; --k) {
        const std::span<const double> tail_sums(cum.data() + k, n - k);
        if (all_zero(tail_sums)) {
            // 0/0 in the recursion; continuity value
            F[k - 1] = -ey[k - 1];
            continue;
        }
        double numerator = 0.0;
        for (std::size_t i = k; i < n; ++i) numerator += z_alpha[i] * F[i];
        const double denominator = cum[k] - psi_value(m, k, tail_sums);
        guard_pole(denominator, "f_k recursion");
        F[k - 1] = numerator / denominator;
    }
    return F;
}

}  // namespace

Vector f_all(const ValidatedModel& m, std::span<const double> z_alpha) {
    m.require_stable();
    if (z_alpha.size() != m.n()) throw DomainError("f: argument dimension must equal n");
    return f_levels(m, z_alpha, reverse_cumulative(z_alpha));
}

FkValue f(const ValidatedModel& m, std::size_t k, std::span<const double> z_tail) {
    const std::size_t n = m.n();
    if (k < 1 || k > n) throw DomainError("f: k out of range");
    if (z_tail.size() != n - k) throw DomainError("f: tail must have length n - k");
    for (double s : reverse_cumulative(z_tail)) {
        if (!(s >= 0.0)) throw DomainError("f: tail partial sums must be >= 0");
    }
    Vector full(n, 0.0);
    std::copy(z_tail.begin(), z_tail.end(), full.begin() + static_cast<std::ptrdiff_t>(k));
    const Vector F = f_all(m, full);
    return {k, Vector(z_tail.begin(), z_tail.end()), F[k - 1]};
}

double lst_Z(const ValidatedModel& m, const AlphaVector& alpha) {
    if (alpha.size() != m.n()) throw DomainError("lst: argument dimension must equal n");
    m.require_stable();
    const AlphaVector z = alpha.to_z();
    const Vector& a = z.values();
    if (all_zero(a)) return 1.0;
    const Vector cum = alpha.space() == Space::W ? alpha.values() : reverse_cumulative(a);
    const Vector F = f_levels(m, a, cum);
    double numerator = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) numerator += a[k] * F[k];
    const double denominator = phi(m, cum);
    guard_pole(denominator, "stationary LST");
    return numerator / denominator;
}

double lst_W(const ValidatedModel& m, const AlphaVector& alpha) {
    if (alpha.space() != Space::W) throw DomainError("lst_W: argument must be in W-space");
    return lst_Z(m, alpha);
}

double lst(const ValidatedModel& m, const AlphaVector& alpha) { return lst_Z(m, alpha); }

double lst_2d_closed(const ValidatedModel& m, double alpha1, double alpha2, Space space) {
    require_n2(m, "lst_2d_closed");
    m.require_stable();
    AlphaVector::make({alpha1, alpha2}, space);  // domain check
    // The Z-space form is the W-space form at (alpha1 + alpha2, alpha2).
    const double a1 = space == Space::Z ? alpha1 + alpha2 : alpha1;
    const double a2 = alpha2;
    if (a1 == 0.0 && a2 == 0.0) return 1.0;

    const MomentTable& t = m.moments();
    const double dphi1 = -t.mean[0];
    const double psi1 = a2 == 0.0 ? 0.0 : psi_value(m, 1, std::span<const double>(&a2, 1));

    const double phi_a = phi(m, Vector{a1, a2});
    guard_pole(phi_a, "closed-form first factor");
    const double first = dphi1 * (a1 - psi1) / phi_a;

    double second = 1.0;
    if (a2 != 0.0) {
        const double dpsi1 = -t.mean[1] / t.mean[0];
        const double denominator = a2 - psi1;
        guard_pole(denominator, "closed-form second factor");
        second = (1.0 - dpsi1) * a2 / denominator;
    }
    return first * second;
}

DecompositionFactors decomposition(const ValidatedModel& m, const AlphaVector& alpha_w) {
    if (alpha_w.space() != Space::W) throw DomainError("decomposition: argument must be in W-space");
    const std::size_t n = m.n();
    if (alpha_w.size() != n) throw DomainError("decomposition: argument dimension must equal n");
    m.require_stable();
    const Vector& a = alpha_w.values();
    const Vector& ey = m.moments().cumulative_mean;

    // psi_k(a_{k+1}, ..., a_n) for k = 1..n-1, and psi_n := 0.
    Vector psis(n + 1, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        psis[k] = psi_value(m, k, std::span<const double>(a.data() + k, n - k));
    }

    DecompositionFactors out;
    out.factors.resize(n);
    const std::span<const double> all(a);
    if (all_zero(all)) {
        out.factors[0] = 1.0;
    } else {
        const double phi_a = phi(m, a);
        guard_pole(phi_a, "decomposition factor 1");
        out.factors[0] = -ey[0] * (a[0] - psis[1]) / phi_a;
    }
    for (std::size_t k = 2; k <= n; ++k) {
        const std::span<const double> from_k(a.data() + k - 1, n - k + 1);
        if (all_zero(from_k)) {
            out.factors[k - 1] = 1.0;
            continue;
        }
        const double numerator = a[k - 1] - psis[k];
        const double denominator = a[k - 1] - psi_value(m, k - 1, from_k);
        guard_pole(denominator, "decomposition factor");
        out.factors[k - 1] = (ey[k - 1] / ey[k - 2]) * numerator / denominator;
    }
    out.product = 1.0;
    for (double x : out.factors) out.product *= x;
    return out;
}

// ---------------------------------------------------------------------------
// Mixtures
// ---------------------------------------------------------------------------

double SubordinatorExponent::operator()(double beta) const {
    double v = drift * beta;
    for (const auto& p : parts) v -= p.rate * marginal_lst_minus_one(p.jump, beta);
    return v;
}

double SubordinatorExponent::mean() const {
    double v = drift;
    for (const auto& p : parts) v += p.rate * marginal_mean(p.jump);
    return v;
}

SubordinatorExponent coordinate_exponent(const ValidatedModel& m, std::size_t i) {
    if (i < 2 || i > m.n()) throw DomainError("coordinate_exponent: i outside 2..n");
    SubordinatorExponent xi;
    xi.drift = m.model().drift[i - 1];
    for (const auto& c : m.model().components) {
        Marginal mg = law_marginal(c.law, i - 1);
        if (!marginal_is_zero(mg)) xi.parts.push_back({c.rate, mg});
    }
    return xi;
}

double MixtureSpec::lst(double beta) const {
    if (beta == 0.0) return 1.0;
    return exponent(beta) / (beta * mean);
}

MixtureSpec mixture(const SubordinatorExponent& xi) {
    const double total = xi.mean();
    if (!std::isfinite(total)) throw InfiniteMean("mixture: subordinator mean is infinite");
    if (!(total > 0.0)) throw DomainError("mixture: subordinator is identically zero");
    double jump_mass = 0.0;  // int_0^inf mu(u, inf) du
    for (const auto& p : xi.parts) jump_mass += p.rate * marginal_mean(p.jump);

    MixtureSpec spec;
    spec.mean = total;
    spec.drift_weight = xi.drift / total;
    spec.jump_weight = jump_mass / total;
    spec.exponent = [xi](double beta) { return xi(beta); };
    if (jump_mass > 0.0) {
        spec.residual_density = [parts = xi.parts, jump_mass](double x) {
            double tail = 0.0;
            for (const auto& p : parts) tail += p.rate * marginal_tail(p.jump, x);
            return tail / jump_mass;
        };
    }
    return spec;
}

MixtureSpec mixture_numeric(std::function<double(double)> xi, double mean, double slope_point) {
    if (!std::isfinite(mean)) throw InfiniteMean("mixture: subordinator mean is infinite");
    if (!(mean > 0.0)) throw DomainError("mixture: mean must be > 0");
    const double slope = (xi(2.0 * slope_point) - xi(slope_point)) / slope_point;
    const double drift = std::clamp(slope, 0.0, mean);

    MixtureSpec spec;
    spec.mean = mean;
    spec.drift_weight = drift / mean;
    spec.jump_weight = 1.0 - spec.drift_weight;
    spec.exponent = std::move(xi);
    return spec;
}

MixtureSpec psi_mixture(const ValidatedModel& m) {
    require_n2(m, "psi_mixture");
    const double mean = psi_derivatives_at_zero(m, 1).first[0];
    return mixture_numeric(
        [&m](double beta) { return psi_value(m, 1, std::span<const double>(&beta, 1)); }, mean);
}

// ---------------------------------------------------------------------------
// Moments and identity
// ---------------------------------------------------------------------------

WorkloadMoments moments_W(const ValidatedModel& m) {
    require_n2(m, "moments_W");
    m.require_stable();
    const MomentTable& t = m.moments();
    const double dpsi = -t.mean[1] / t.mean[0];
    const double d2psi = psi1_second_derivative_2d(t);

    WorkloadMoments w;
    w.EW1 = t.cov[0][0] / (-2.0 * t.mean[0]);
    w.EW2 = t.cov[1][1] / (-2.0 * t.mean[1]) - d2psi / (2.0 * dpsi) -
            d2psi / (2.0 * (1.0 - dpsi));
    w.EZ2 = w.EW1 + w.EW2;
    return w;
}

IdentityReport decomposition_identity_check(const ValidatedModel& m,
                                            std::span<const double> alpha2_grid) {
    require_n2(m, "decomposition_identity_check");
    m.require_stable();
    const MomentTable& t = m.moments();
    const double dpsi = -t.mean[1] / t.mean[0];
    const MixtureSpec eta_mix = mixture(coordinate_exponent(m, 2));

    IdentityReport report;
    for (double a2 : alpha2_grid) {
        if (!(a2 >= 0.0)) throw DomainError("identity check: alpha2 must be >= 0");
        IdentityPoint p{a2, 1.0, 1.0, 0.0};
        if (a2 > 0.0) {
            const double w2 = lst_W(m, AlphaVector::w_space({0.0, a2}));
            p.lhs = eta_mix.lst(a2) * w2;

            const double psi1 = psi_value(m, 1, std::span<const double>(&a2, 1));
            const double denominator = a2 - psi1;
            guard_pole(denominator, "identity right-hand side");
            const double w21 = (1.0 - dpsi) * a2 / denominator;
            p.rhs = psi1 / (a2 * dpsi) * w21;
            p.gap = std::abs(p.lhs - p.rhs);
        }
        report.max_gap = std::max(report.max_gap, p.gap);
        report.points.push_back(p);
    }
    return report;
}

}  // namespace synq
