#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "synq/errors.hpp"
#include "synq/psi.hpp"
#include "synq/steady_state.hpp"

using namespace synq;

namespace {

double lstw(const ValidatedModel& m, Vector a) { return lst_W(m, AlphaVector::w_space(std::move(a))); }

}  // namespace

TEST_CASE("f_k values for M1") {
    const ValidatedModel m = validate(oracle::m1());
    CHECK(f(m, 2, Vector{}).value == doctest::Approx(0.25).epsilon(1e-15));
    const double p = oracle::psi1_m1(2.0);
    CHECK(f(m, 1, Vector{2.0}).value == doctest::Approx(2.0 * 0.25 / (2.0 - p)).epsilon(1e-13));
    CHECK(f(m, 1, Vector{2.0}).value == doctest::Approx(0.3669613).epsilon(1e-6));
    CHECK(f(m, 1, Vector{0.0}).value == 0.75);
    // continuity at the zero tail
    CHECK(f(m, 1, Vector{1e-7}).value == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("scaled f_k lie in (0, 1] and decrease in the tail") {
    const ValidatedModel m = validate(oracle::m2());
    const Vector& ey = m.moments().cumulative_mean;
    for (std::size_t k = 1; k <= 2; ++k) {
        double prev = 1.0;
        for (double t = 0.0; t <= 5.0; t += 0.5) {
            const Vector tail(3 - k, t);
            const double s = f(m, k, tail).value / -ey[k - 1];
            CHECK(s > 0.0);
            CHECK(s <= 1.0 + 1e-15);
            CHECK(s <= prev + 1e-14);
            prev = s;
        }
    }
}

TEST_CASE("stationary LST values") {
    const ValidatedModel m = validate(oracle::m1());
    CHECK(lst_Z(m, AlphaVector::z_space({0.0, 0.0})) == 1.0);
    CHECK(lst_W(m, AlphaVector::w_space({0.0, 0.0})) == 1.0);
    CHECK(lst_Z(m, AlphaVector::z_space({1.0, 0.0})) == doctest::Approx(0.9375).epsilon(1e-14));
    CHECK(lstw(m, {1.0, 0.0}) == doctest::Approx(0.9375).epsilon(1e-14));

    const double p = oracle::psi1_m1(2.0);
    const double f1 = 2.0 * 0.25 / (2.0 - p);
    const double expected = (-1.0 * f1 + 2.0 * 0.25) / 0.3;
    CHECK(lst_Z(m, AlphaVector::z_space({-1.0, 2.0})) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lstw(m, {1.0, 2.0}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lstw(m, {1.0, 2.0}) == doctest::Approx(0.443462).epsilon(1e-6));
    CHECK(lst(m, AlphaVector::w_space({1.0, 2.0})) == lstw(m, {1.0, 2.0}));
    CHECK_THROWS_AS(lst_W(m, AlphaVector::z_space({1.0, 2.0})), DomainError);
}

TEST_CASE("Pollaczek-Khinchine transform for the first station") {
    const ValidatedModel m = validate(oracle::m1());
    for (double a : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        const double pk = 0.75 * a / (a * (3.0 + a) / (4.0 + a));
        CHECK(lstw(m, {a, 0.0}) == doctest::Approx(pk).epsilon(1e-13));
    }
}

TEST_CASE("two-factor closed form") {
    const ValidatedModel m1 = validate(oracle::m1());
    CHECK(lst_2d_closed(m1, 1.0, 0.0, Space::W) == doctest::Approx(0.9375).epsilon(1e-14));
    CHECK(lst_2d_closed(m1, 1.0, 2.0, Space::W) == doctest::Approx(oracle::lst_w_m1(1, 2)).epsilon(1e-12));
    CHECK(lst_2d_closed(m1, 0.0, 2.0, Space::W) == doctest::Approx(oracle::lst_w_m1(0, 2)).epsilon(1e-12));
    CHECK(lst_2d_closed(m1, -1.0, 2.0, Space::Z) == doctest::Approx(lstw(m1, {1.0, 2.0})).epsilon(1e-12));
    CHECK(lst_2d_closed(m1, 0.0, 0.0, Space::W) == 1.0);
    CHECK_THROWS_AS(lst_2d_closed(validate(oracle::m2()), 1.0, 1.0, Space::W), UnsupportedModel);

    for (double a1 = 0.0; a1 <= 5.0; a1 += 0.5) {
        for (double a2 = 0.0; a2 <= 5.0; a2 += 0.5) {
            CHECK(std::abs(lstw(m1, {a1, a2}) - oracle::lst_w_m1(a1, a2)) <= 1e-11);
        }
    }
}

TEST_CASE("poles raise NearPole") {
    const ValidatedModel m = validate(oracle::m1());
    // Z-space point where phi_tilde vanishes: alpha_1 = psi_shifted
    const double s = psi_shifted(m, 1, Vector{2.0});
    CHECK_THROWS_AS(lst_Z(m, AlphaVector::z_space({s, 2.0})), NearPole);
    // W-space: first factor denominator at a1 = psi_1(a2)
    const double p = psi_value(m, 1, Vector{2.0});
    CHECK_THROWS_AS(lst_2d_closed(m, p, 2.0, Space::W), NearPole);
}

TEST_CASE("decomposition factors") {
    const ValidatedModel m1 = validate(oracle::m1());
    const DecompositionFactors d = decomposition(m1, AlphaVector::w_space({1.0, 2.0}));
    REQUIRE(d.factors.size() == 2);
    CHECK(d.factors[0] == doctest::Approx(0.9063535).epsilon(1e-7));
    CHECK(d.factors[1] == doctest::Approx(0.4892816).epsilon(1e-6));
    CHECK(d.product == doctest::Approx(lstw(m1, {1.0, 2.0})).epsilon(1e-13));
    CHECK(decomposition(m1, AlphaVector::w_space({0.0, 0.0})).product == 1.0);

    const ValidatedModel m2 = validate(oracle::m2());
    const DecompositionFactors d2 = decomposition(m2, AlphaVector::w_space({1.0, 1.0, 1.0}));
    CHECK(std::abs(d2.product - lstw(m2, {1.0, 1.0, 1.0})) <= 1e-6);
    for (double f : d2.factors) {
        CHECK(f > 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("decomposition of M2 from oracle roots") {
    // Factor k with bisection roots of the closed-form exponent.
    const ValidatedModel m = validate(oracle::m2());
    const Vector a{1.0, 0.5, 2.0};
    auto psi1 = [](double a2, double a3) {
        return oracle::positive_root([=](double b) { return oracle::phi_m2(b, a2, a3); });
    };
    auto psi2 = [](double a3) {
        return oracle::positive_root([=](double b) { return oracle::phi_m2(b, b, a3); });
    };
    const Vector ey{-0.75, -0.25, -0.125};
    const double f1 = -ey[0] * (a[0] - psi1(a[1], a[2])) / oracle::phi_m2(a[0], a[1], a[2]);
    const double f2 = ey[1] / ey[0] * (a[1] - psi2(a[2])) / (a[1] - psi1(a[1], a[2]));
    const double f3 = ey[2] / ey[1] * a[2] / (a[2] - psi2(a[2]));
    const DecompositionFactors d = decomposition(m, AlphaVector::w_space(a));
    CHECK(d.factors[0] == doctest::Approx(f1).epsilon(1e-10));
    CHECK(d.factors[1] == doctest::Approx(f2).epsilon(1e-10));
    CHECK(d.factors[2] == doctest::Approx(f3).epsilon(1e-10));
    CHECK(lstw(m, a) == doctest::Approx(f1 * f2 * f3).epsilon(1e-9));
}

TEST_CASE("LST properties on grids") {
    for (const LevyModel& lm : {oracle::m1(), oracle::m3(), oracle::m2()}) {
        const ValidatedModel m = validate(lm);
        const std::size_t n = m.n();
        for (std::size_t i = 0; i < n; ++i) {
            // bounds, monotonicity and alternating differences along e_i
            std::vector<double> v;
            for (int j = 0; j <= 40; ++j) {
                Vector a(n, 0.0);
                a[i] = 0.25 * j;
                v.push_back(lstw(m, a));
            }
            for (std::size_t j = 0; j < v.size(); ++j) {
                CHECK(v[j] > 0.0);
                CHECK(v[j] <= 1.0);
                if (j > 0) CHECK(v[j] <= v[j - 1] + 1e-14);
            }
            std::vector<double> diff = v;
            for (int order = 1; order <= 4; ++order) {
                for (std::size_t j = 0; j + order < v.size(); ++j) diff[j] = diff[j + 1] - diff[j];
                const double sign = order % 2 ? -1.0 : 1.0;
                for (std::size_t j = 0; j + order < v.size(); ++j) CHECK(sign * diff[j] >= -1e-12);
            }
        }
        // monotone in every coordinate on a coarse joint grid
        const std::vector<double> axis{0.0, 0.5, 1.5, 4.0};
        for (double x : axis) {
            for (double y : axis) {
                Vector a(n, x);
                a[n - 1] = y;
                const double here = lstw(m, a);
                CHECK(here > 0.0);
                CHECK(here <= 1.0);
                for (std::size_t i = 0; i < n; ++i) {
                    Vector b = a;
                    b[i] += 0.3;
                    CHECK(lstw(m, b) <= here + 1e-14);
                }
            }
        }
    }
}

TEST_CASE("moments") {
    const ValidatedModel m1 = validate(oracle::m1());
    const WorkloadMoments w = moments_W(m1);
    CHECK(std::abs(w.EW1 - 1.0 / 12.0) <= 1e-12);
    CHECK(std::abs(w.EW2 - 7.0 / 6.0) <= 1e-9);
    CHECK(w.EZ2 == doctest::Approx(w.EW1 + w.EW2));
    // Pollaczek-Khinchine oracles for station 1 and for the total workload
    CHECK(w.EW1 == doctest::Approx(oracle::pk_mean(1.0 / 8.0, 0.25)).epsilon(1e-14));
    CHECK(w.EZ2 == doctest::Approx(oracle::pk_mean(1.0 / 8.0 + 2.0 / 4.0, 0.75)).epsilon(1e-13));

    for (const LevyModel& lm : {oracle::m1(), oracle::m3()}) {
        const ValidatedModel m = validate(lm);
        const WorkloadMoments mw = moments_W(m);
        const double h = 1e-5;
        for (std::size_t i = 0; i < 2; ++i) {
            auto g = [&](double x) {
                Vector a(2, 0.0);
                a[i] = x;
                return lstw(m, a);
            };
            const double slope = -(-3 * g(0) + 4 * g(h) - g(2 * h)) / (2 * h);
            CHECK(std::abs(slope - (i == 0 ? mw.EW1 : mw.EW2)) <= 1e-4);
        }
    }
}

TEST_CASE("M3 moments carry the covariance term") {
    const ValidatedModel m3 = validate(oracle::m3());
    const MomentTable& t = m3.moments();
    MomentTable no_cov = t;
    no_cov.cov[0][1] = no_cov.cov[1][0] = 0.0;
    const double dpsi = -t.mean[1] / t.mean[0];
    auto ew2 = [&](double d2) {
        return t.cov[1][1] / (-2.0 * t.mean[1]) - d2 / (2.0 * dpsi) - d2 / (2.0 * (1.0 - dpsi));
    };
    const WorkloadMoments w = moments_W(m3);
    CHECK(w.EW2 == doctest::Approx(ew2(psi1_second_derivative_2d(t))).epsilon(1e-13));
    CHECK(std::abs(w.EW2 - ew2(psi1_second_derivative_2d(no_cov))) > 1e-3);
    // total workload of M3 is an M/G/1 queue with service 1.5 E
    CHECK(w.EZ2 == doctest::Approx(oracle::pk_mean(2.25 * 2.0 / 16.0, 1.5 / 4.0)).epsilon(1e-12));
}

TEST_CASE("mixtures") {
    SubordinatorExponent xi;
    xi.drift = 1.0;
    xi.parts = {{1.0, marginal::Exponential{1.0}}};
    const MixtureSpec s = mixture(xi);
    CHECK(s.drift_weight == doctest::Approx(0.5));
    CHECK(s.jump_weight == doctest::Approx(0.5));

    const ValidatedModel m1 = validate(oracle::m1());
    const MixtureSpec e = mixture(coordinate_exponent(m1, 2));
    CHECK(e.drift_weight == 0.0);
    CHECK(e.jump_weight == doctest::Approx(1.0));
    REQUIRE(e.residual_density);
    CHECK(oracle::simpson(e.residual_density, 0.0, 40.0, 40000) == doctest::Approx(1.0).epsilon(1e-9));
    // mixture LST equals the integral of exp(-beta x) against the residual density
    for (double beta : {0.5, 2.0}) {
        const double direct = oracle::simpson(
            [&](double x) { return std::exp(-beta * x) * e.residual_density(x); }, 0.0, 40.0, 40000);
        CHECK(e.lst(beta) == doctest::Approx(direct).epsilon(1e-9));
    }

    const MixtureSpec p = psi_mixture(m1);
    CHECK(p.mean == doctest::Approx(2.0 / 3.0));
    CHECK(p.drift_weight + p.jump_weight == doctest::Approx(1.0));
    // large-beta slope of the oracle root
    const double B = 1e6;
    const double slope = (oracle::psi1_m1(2 * B) - oracle::psi1_m1(B)) / B;
    CHECK(p.drift_weight == doctest::Approx(std::clamp(slope, 0.0, p.mean) / p.mean).epsilon(1e-6));

    SubordinatorExponent zero;
    CHECK_THROWS_AS(mixture(zero), DomainError);
}

TEST_CASE("excess decomposition identity") {
    for (const LevyModel& lm : {oracle::m1(), oracle::m3()}) {
        const ValidatedModel m = validate(lm);
        const Vector grid{0.5, 1.0, 2.0, 5.0};
        const IdentityReport r = decomposition_identity_check(m, grid);
        CHECK(r.points.size() == 4);
        CHECK(r.max_gap <= 1e-8);
        const IdentityReport z = decomposition_identity_check(m, Vector{0.0, 1e-7});
        CHECK(z.points[0].lhs == 1.0);
        CHECK(z.points[0].rhs == 1.0);
        CHECK(z.points[1].lhs == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(z.points[1].rhs == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("instability is rejected") {
    LevyModel busy = oracle::m1();
    busy.components[1].rate = 2.0;
    const ValidatedModel u = validate(busy);
    CHECK_THROWS_AS(lst_W(u, AlphaVector::w_space({1.0, 1.0})), InstabilityError);
    CHECK_THROWS_AS(moments_W(u), InstabilityError);
    CHECK_THROWS_AS(decomposition(u, AlphaVector::w_space({1.0, 1.0})), InstabilityError);
}
