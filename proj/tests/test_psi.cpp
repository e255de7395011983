#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "synq/errors.hpp"
#include "synq/psi.hpp"

using namespace synq;

TEST_CASE("psi_1 of M1 against the quadratic root") {
    const ValidatedModel m = validate(oracle::m1());
    for (double a2 : {0.5, 1.0, 2.0, 5.0, 1e-6, 100.0}) {
        const PsiResult r = psi(m, {1, {a2}});
        CHECK(std::abs(r.beta - oracle::psi1_m1(a2)) <= 1e-10);
        CHECK(std::abs(r.residual) <= 1e-12);
        CHECK(r.bracket[0] <= r.beta);
        CHECK(r.beta <= r.bracket[1]);
    }
    CHECK(psi(m, {1, {2.0}}).beta == doctest::Approx(0.6374586).epsilon(1e-7));
    CHECK(psi(m, {1, {0.0}}).beta == 0.0);
}

TEST_CASE("psi_2 of M2 against bisection") {
    const ValidatedModel m = validate(oracle::m2());
    for (double a3 : {0.1, 1.0, 4.0}) {
        const double ref =
            oracle::positive_root([a3](double b) { return oracle::phi_m2(b, b, a3); });
        const PsiResult r = psi(m, {2, {a3}});
        CHECK(std::abs(r.beta - ref) <= 1e-12);
        CHECK(std::abs(r.residual) <= 1e-12);
    }
    for (double a2 : {0.0, 0.5, 3.0}) {
        for (double a3 : {0.0, 0.5, 3.0}) {
            if (a2 == 0.0 && a3 == 0.0) continue;
            const double ref =
                oracle::positive_root([=](double b) { return oracle::phi_m2(b, a2, a3); });
            CHECK(std::abs(psi_value(m, 1, Vector{a2, a3}) - ref) <= 1e-12);
        }
    }
}

TEST_CASE("psi of M3 against bisection") {
    const ValidatedModel m = validate(oracle::m3());
    for (double a2 : {0.25, 1.0, 5.0}) {
        const double ref = oracle::positive_root([a2](double b) { return oracle::phi_m3(b, a2); });
        CHECK(std::abs(psi_value(m, 1, Vector{a2}) - ref) <= 1e-12);
    }
}

TEST_CASE("uniqueness probe and monotonicity") {
    for (const LevyModel& lm : {oracle::m1(), oracle::m3(), oracle::m2()}) {
        const ValidatedModel m = validate(lm);
        const std::size_t n = m.n();
        for (std::size_t k = 1; k < n; ++k) {
            double prev = 0.0;
            for (double t = 0.0; t <= 6.0; t += 0.25) {
                const Vector tail(n - k, t);
                const double b = psi_value(m, k, tail);
                CHECK(b >= prev);
                prev = b;
                if (b > 0.0) {
                    CHECK(phi_diagonal(m, b / 2, tail) < 0.0);
                    CHECK(phi_diagonal(m, 2 * b, tail) > 0.0);
                }
            }
        }
    }
}

TEST_CASE("independence: psi_1 inverts phi_1 at eta") {
    const ValidatedModel m = validate(oracle::m1());
    for (double a2 : {0.5, 1.0, 2.0, 5.0}) {
        const double target = eta(m, Vector{a2});
        const double inv = oracle::positive_root([&](double b) { return phi_k(m, 1, b) - target; });
        CHECK(std::abs(psi_value(m, 1, Vector{a2}) - inv) <= 1e-10);
    }
}

TEST_CASE("shifted root annihilates phi_tilde") {
    const ValidatedModel m = validate(oracle::m1());
    const double s = psi_shifted(m, 1, Vector{2.0});
    CHECK(s == doctest::Approx(0.6374586 - 2.0).epsilon(1e-7));
    CHECK(std::abs(phi_tilde(m, AlphaVector::z_space({s, 2.0}))) <= 1e-10);
    CHECK(psi_shifted(m, 1, Vector{0.0}) == 0.0);
}

TEST_CASE("derivatives at zero") {
    const ValidatedModel m1 = validate(oracle::m1());
    const PsiDerivatives d = psi_derivatives_at_zero(m1, 1);
    CHECK(d.first[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(d.second[0][0] == doctest::Approx(-20.0 / 27.0).epsilon(1e-13));
    CHECK(psi1_second_derivative_2d(m1.moments()) == doctest::Approx(-20.0 / 27.0).epsilon(1e-13));

    // forward differences of the oracle root (ψ is defined for a2 >= 0 only)
    const double h = 1e-4;
    const double fd1 =
        (-3 * oracle::psi1_m1(0) + 4 * oracle::psi1_m1(h) - oracle::psi1_m1(2 * h)) / (2 * h);
    CHECK(std::abs(fd1 - d.first[0]) <= 1e-6);
    const double H = 1e-3;
    const double fd2 = (2 * oracle::psi1_m1(0) - 5 * oracle::psi1_m1(H) + 4 * oracle::psi1_m1(2 * H) -
                        oracle::psi1_m1(3 * H)) /
                       (H * H);
    CHECK(std::abs(fd2 - d.second[0][0]) <= 1e-4);

    // the same slope from the library's solver
    const ValidatedModel m3 = validate(oracle::m3());
    auto root = [&](double a) { return psi_value(m3, 1, Vector{a}); };
    const double fd3 = (-3 * root(0) + 4 * root(h) - root(2 * h)) / (2 * h);
    CHECK(std::abs(fd3 - psi_derivatives_at_zero(m3, 1).first[0]) <= 1e-6);
}

TEST_CASE("covariance term of the second derivative for M3") {
    const ValidatedModel m3 = validate(oracle::m3());
    const MomentTable& t = m3.moments();
    const double with_cov = psi1_second_derivative_2d(t);
    MomentTable no_cov = t;
    no_cov.cov[0][1] = no_cov.cov[1][0] = 0.0;
    const double without = psi1_second_derivative_2d(no_cov);
    const double term = -2.0 * (1.0 / 16.0) * t.mean[1] / (t.mean[0] * t.mean[0]);
    CHECK(with_cov - without == doctest::Approx(term).epsilon(1e-13));
    CHECK(psi_derivatives_at_zero(m3, 1).second[0][0] == doctest::Approx(with_cov).epsilon(1e-13));

    // finite-difference cross-check on a bisection root of the closed form
    auto root = [](double a) {
        if (a == 0.0) return 0.0;
        return oracle::positive_root([a](double b) { return oracle::phi_m3(b, a); });
    };
    const double H = 1e-3;
    const double fd2 = (2 * root(0) - 5 * root(H) + 4 * root(2 * H) - root(3 * H)) / (H * H);
    CHECK(std::abs(fd2 - with_cov) <= 1e-4);
}

TEST_CASE("derivatives for n = 3 by finite differences") {
    const ValidatedModel m = validate(oracle::m2());
    for (std::size_t k : {1u, 2u}) {
        const PsiDerivatives d = psi_derivatives_at_zero(m, k);
        const std::size_t len = 3 - k;
        REQUIRE(d.first.size() == len);
        for (std::size_t j = 0; j < len; ++j) {
            auto g = [&](double x) {
                Vector tail(len, 0.0);
                tail[j] = x;
                return psi_value(m, k, tail);
            };
            const double h = 1e-4;
            CHECK(std::abs((-3 * g(0) + 4 * g(h) - g(2 * h)) / (2 * h) - d.first[j]) <= 1e-6);
            const double H = 1e-3;
            const double fd2 = (2 * g(0) - 5 * g(H) + 4 * g(2 * H) - g(3 * H)) / (H * H);
            CHECK(std::abs(fd2 - d.second[j][j]) <= 1e-4);
        }
    }
    CHECK(psi_gradient_complement(m, 2) == doctest::Approx(-0.25 / -0.75));
    CHECK(psi_gradient_complement(m, 3) ==
          doctest::Approx(m.moments().cumulative_mean[2] / m.moments().cumulative_mean[1]));
    // 1 - d psi_1 / d alpha_2 at 0
    CHECK(1.0 - psi_derivatives_at_zero(m, 1).first[0] ==
          doctest::Approx(psi_gradient_complement(m, 2)).epsilon(1e-13));
}

TEST_CASE("psi errors") {
    const ValidatedModel m = validate(oracle::m1());
    CHECK_THROWS_AS(psi(m, {1, {-1.0}}), DomainError);
    CHECK_THROWS_AS(psi(m, {2, {}}), DomainError);
    PsiQuery q{1, {1e300}};
    q.max_bracket_doublings = 0;
    CHECK_THROWS_AS(psi(m, q), BracketOverflow);

    LevyModel busy = oracle::m1();
    busy.components[1].rate = 2.0;
    CHECK_THROWS_AS(psi(validate(busy), {1, {1.0}}), InstabilityError);
}
