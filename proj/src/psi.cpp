#include "synq/psi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brent.hpp"

namespace synq {

namespace {

void check_k(const ValidatedModel& m, std::size_t k, const char* who) {
    if (k < 1 || k + 1 > m.n()) {
        std::ostringstream os;
        os << who << ": k = " << k << " outside 1.." << m.n() - 1;
        throw DomainError(os.str());
    }
}

}  // namespace

PsiResult psi(const ValidatedModel& m, const PsiQuery& query) {
    check_k(m, query.k, "psi");
    if (query.alpha_tail.size() != m.n() - query.k) {
        throw DomainError("psi: tail must have length n - k");
    }
    for (double a : query.alpha_tail) {
        if (!(a >= 0.0)) throw DomainError("psi: tail must be componentwise >= 0");
    }
    if (!(query.tolerance > 0.0)) throw DomainError("psi: tolerance must be > 0");
    m.require_stable();

    const bool zero_tail = std::all_of(query.alpha_tail.begin(), query.alpha_tail.end(),
                                       [](double a) { return a == 0.0; });
    if (zero_tail) return {0.0, 0.0, {0.0, 0.0}, 0};

    auto g = [&](double beta) { return phi_diagonal(m, beta, query.alpha_tail); };

    const double g0 = g(0.0);
    double hi = 1.0;
    double g_hi = g(hi);
    int doublings = 0;
    while (!(g_hi > 0.0)) {
        if (++doublings > query.max_bracket_doublings) {
            std::ostringstream os;
            os << "psi: no sign change found up to beta = " << hi
               << " (model unstable or invalid)";
            throw BracketOverflow(os.str());
        }
        hi *= 2.0;
        g_hi = g(hi);
    }
    const double lo = hi == 1.0 ? 0.0 : 0.5 * hi;
    const double g_lo = hi == 1.0 ? g0 : g(lo);

    const auto out = detail::brent_zero(g, lo, hi, g_lo, g_hi, 0.0, 400);
    if (!(std::abs(out.f_root) <= query.tolerance)) {
        std::ostringstream os;
        os << "psi: residual " << out.f_root << " exceeds tolerance " << query.tolerance;
        throw NumericError(os.str());
    }
    return {out.root, out.f_root, {out.lo, out.hi}, out.iterations};
}

double psi_value(const ValidatedModel& m, std::size_t k, std::span<const double> tail) {
    PsiQuery q;
    q.k = k;
    q.alpha_tail.assign(tail.begin(), tail.end());
    return psi(m, q).beta;
}

double psi_shifted(const ValidatedModel& m, std::size_t k, std::span<const double> z_tail) {
    check_k(m, k, "psi_shifted");
    const Vector sums = reverse_cumulative(z_tail);
    for (double s : sums) {
        if (!(s >= 0.0)) throw DomainError("psi_shifted: tail partial sums must be >= 0");
    }
    const double total = sums.empty() ? 0.0 : sums.front();
    return psi_value(m, k, sums) - total;
}

PsiDerivatives psi_derivatives_at_zero(const ValidatedModel& m, std::size_t k) {
    check_k(m, k, "psi_derivatives_at_zero");
    m.require_stable();
    const MomentTable& t = m.moments();
    const std::size_t n = m.n();
    const std::size_t tail = n - k;

    // g(beta, a) = phi(beta 1_k, a); derivatives at the origin.
    const double g_b = -t.cumulative_mean[k - 1];
    double g_bb = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) g_bb += t.cov[i][j];

    PsiDerivatives d;
    d.first.resize(tail);
    Vector g_ba(tail, 0.0);
    for (std::size_t j = 0; j < tail; ++j) {
        const std::size_t col = k + j;
        d.first[j] = t.mean[col] / g_b;  // -g_a / g_b with g_a = -E X_col
        for (std::size_t i = 0; i < k; ++i) g_ba[j] += t.cov[i][col];
    }
    d.second.assign(tail, Vector(tail, 0.0));
    for (std::size_t j = 0; j < tail; ++j) {
        for (std::size_t l = 0; l < tail; ++l) {
            const double num = g_bb * d.first[j] * d.first[l] + g_ba[j] * d.first[l] +
                               g_ba[l] * d.first[j] + t.cov[k + j][k + l];
            d.second[j][l] = -num / g_b;
        }
    }
    return d;
}

double psi1_second_derivative_2d(const MomentTable& t) {
    const double ex1 = t.mean[0];
    const double ex2 = t.mean[1];
    const double ratio = ex2 / ex1;
    return t.cov[0][0] / ex1 * ratio * ratio + t.cov[1][1] / ex1 -
           2.0 * t.cov[0][1] * ex2 / (ex1 * ex1);
}

double psi_gradient_complement(const ValidatedModel& m, std::size_t k) {
    if (k < 2 || k > m.n()) throw DomainError("psi_gradient_complement: k outside 2..n");
    m.require_stable();
    const Vector& ey = m.moments().cumulative_mean;
    return ey[k - 1] / ey[k - 2];
}

}  // namespace synq
