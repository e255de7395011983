#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "synq/errors.hpp"
#include "synq/model.hpp"
#include "synq/model_io.hpp"

using namespace synq;

namespace {

ValidationError validation_error(LevyModel m) {
    try {
        validate(std::move(m));
    } catch (const ValidationError& e) {
        return e;
    }
    FAIL("model was accepted");
    return ValidationError({});
}

bool bitwise_positive_zero(double x) {
    const double zero = 0.0;
    return std::memcmp(&x, &zero, sizeof x) == 0;
}

}  // namespace

TEST_CASE("reference models validate") {
    CHECK_NOTHROW(validate(oracle::m1()));
    CHECK_NOTHROW(validate(oracle::m2()));
    CHECK_NOTHROW(validate(oracle::m3()));
    CHECK_NOTHROW(validate(oracle::m1_diffusive()));
}

TEST_CASE("validation names the violated assumption") {
    SUBCASE("nondecreasing first coordinate") {
        LevyModel m = oracle::m1();
        m.drift[0] = 1.0;
        CHECK(validation_error(m).has(ViolationKind::SubordinatorFirstCoordinate));
    }
    SUBCASE("coordinate with no input") {
        LevyModel m = oracle::m1();
        m.components.pop_back();
        const auto e = validation_error(m);
        REQUIRE(e.has(ViolationKind::ZeroSubordinator));
        for (const auto& v : e.violations()) {
            if (v.kind == ViolationKind::ZeroSubordinator) CHECK(v.coordinate == 2);
        }
    }
    SUBCASE("negative drift on a later coordinate") {
        LevyModel m = oracle::m1();
        m.drift[1] = -0.1;
        CHECK(validation_error(m).has(ViolationKind::NegativeSubordinatorDrift));
    }
    SUBCASE("downward jump") {
        LevyModel m = oracle::m1();
        m.components.push_back({1.0, law::Deterministic{{-0.5, 0.0}}});
        CHECK(validation_error(m).has(ViolationKind::NotSpectrallyOneSided));
    }
    SUBCASE("bad parameters and dimensions are all reported") {
        LevyModel m = oracle::m1();
        m.components[0].rate = -1.0;
        m.components[1].law = law::IndependentMarginals{{marginal::Zero{}}};
        const auto e = validation_error(m);
        CHECK(e.has(ViolationKind::InvalidParameter));
        CHECK(e.has(ViolationKind::DimensionMismatch));
        CHECK(e.violations().size() >= 2);
    }
}

TEST_CASE("phi values") {
    const ValidatedModel m = validate(oracle::m1());
    CHECK(bitwise_positive_zero(phi(m, Vector{0.0, 0.0})));
    CHECK(phi(m, Vector{1.0, 0.0}) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(phi(m, Vector{1.0, 2.0}) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK_THROWS_AS(phi(m, Vector{-0.1, 1.0}), DomainError);

    CHECK(phi_tilde(m, AlphaVector::z_space({0.0, 0.0})) == 0.0);
    CHECK(phi_tilde(m, AlphaVector::z_space({-1.0, 2.0})) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(phi_tilde(m, AlphaVector::z_space({1.0, 0.0})) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(AlphaVector::z_space({-3.0, 2.0}), DomainError);
    CHECK_THROWS_AS(AlphaVector::w_space({-1.0, 2.0}), DomainError);

    CHECK(phi_k(m, 1, 1.0) == doctest::Approx(0.8));
    CHECK(phi_k(m, 2, 0.0) == 0.0);
    CHECK(phi_k(m, 2, 1.0) == doctest::Approx(0.8 - 1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(phi_k(m, 3, 1.0), DomainError);
    CHECK_THROWS_AS(phi_k(m, 1, -1.0), DomainError);

    CHECK(eta(m, Vector{0.0}) == 0.0);
    CHECK(eta(m, Vector{2.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eta(m, Vector{1e6}) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("phi matches the closed forms on a grid") {
    const ValidatedModel m1 = validate(oracle::m1());
    const ValidatedModel m3 = validate(oracle::m3());
    const ValidatedModel m2 = validate(oracle::m2());
    for (double a : {0.0, 1e-9, 1e-3, 0.3, 1.0, 4.0, 50.0}) {
        for (double b : {0.0, 1e-7, 0.5, 2.0, 10.0}) {
            CHECK(phi(m1, Vector{a, b}) == doctest::Approx(oracle::phi_m1(a, b)).epsilon(1e-13));
            CHECK(phi(m3, Vector{a, b}) == doctest::Approx(oracle::phi_m3(a, b)).epsilon(1e-13));
            CHECK(phi(m2, Vector{a, b, a + b}) ==
                  doctest::Approx(oracle::phi_m2(a, b, a + b)).epsilon(1e-13));
        }
    }
}

TEST_CASE("phi near the origin keeps relative accuracy") {
    const ValidatedModel m = validate(oracle::m1());
    for (double h : {1e-8, 1e-10, 1e-12}) {
        // phi(h, 0) = h (3 + h)/(4 + h)
        const double exact = h * (3.0 + h) / (4.0 + h);
        CHECK(std::abs(phi(m, Vector{h, 0.0}) - exact) <= 1e-14 * exact);
    }
}

TEST_CASE("convexity along the diagonal") {
    for (const LevyModel& lm : {oracle::m1(), oracle::m3(), oracle::m2()}) {
        const ValidatedModel m = validate(lm);
        const std::size_t n = m.n();
        for (std::size_t k = 1; k < n; ++k) {
            for (double t : {0.0, 0.5, 2.0}) {
                const Vector tail(n - k, t);
                const double h = 1e-3;
                for (double beta = h; beta < 5.0; beta += 0.05) {
                    const double d2 = phi_diagonal(m, beta + h, tail) - 2.0 * phi_diagonal(m, beta, tail) +
                                      phi_diagonal(m, beta - h, tail);
                    CHECK(d2 >= -1e-8);
                }
            }
        }
    }
}

TEST_CASE("eta is nondecreasing and concave") {
    const ValidatedModel m = validate(oracle::m2());
    double prev = 0.0, prev_inc = INFINITY;
    for (double x = 0.1; x < 10.0; x += 0.1) {
        const double e = eta(m, Vector{x, 0.5 * x});
        CHECK(e >= prev);
        CHECK(e - prev <= prev_inc + 1e-13);
        prev_inc = e - prev;
        prev = e;
    }
}

TEST_CASE("moments and stability") {
    const ValidatedModel m1 = validate(oracle::m1());
    const MomentTable& t = m1.moments();
    CHECK(t.mean[0] == doctest::Approx(-0.75));
    CHECK(t.mean[1] == doctest::Approx(0.5));
    CHECK(t.cov[0][0] == doctest::Approx(0.125));
    CHECK(t.cov[1][1] == doctest::Approx(0.5));
    CHECK(t.cov[0][1] == 0.0);
    const StabilityReport s = stability(m1);
    CHECK(s.stable);
    CHECK(s.cumulative_mean[1] == doctest::Approx(-0.25));

    const ValidatedModel m3 = validate(oracle::m3());
    CHECK(m3.moments().cov[0][1] == doctest::Approx(1.0 / 16.0));
    CHECK(m3.moments().cov[1][1] == doctest::Approx(1.0 / 32.0));
    CHECK(stability(m3).cumulative_mean[0] == doctest::Approx(-0.75));
    CHECK(stability(m3).cumulative_mean[1] == doctest::Approx(-0.625));

    LevyModel busy = oracle::m1();
    busy.components[1].rate = 2.0;
    const ValidatedModel u = validate(busy);
    CHECK_FALSE(u.stable());
    CHECK(stability(u).cumulative_mean[1] == doctest::Approx(0.25));
    CHECK_THROWS_AS(u.require_stable(), InstabilityError);
}

TEST_CASE("moments equal derivatives of phi at the origin") {
    // grad phi(0) = -E X(1), Hess phi(0) = Cov X(1); central differences on
    // the closed form, which is defined for small negative arguments
    const ValidatedModel m3 = validate(oracle::m3());
    const double h = 1e-4;
    auto g = [](double a, double b) { return oracle::phi_m3(a, b); };
    CHECK((g(h, 0) - g(-h, 0)) / (2 * h) == doctest::Approx(-m3.moments().mean[0]).epsilon(1e-7));
    CHECK((g(0, h) - g(0, -h)) / (2 * h) == doctest::Approx(-m3.moments().mean[1]).epsilon(1e-7));
    const double cross = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4 * h * h);
    CHECK(cross == doctest::Approx(m3.moments().cov[0][1]).epsilon(1e-6));
}

TEST_CASE("argument transforms") {
    const Vector a{1.0, 2.0, 3.0};
    CHECK(reverse_cumulative(a) == Vector{6.0, 5.0, 3.0});
    CHECK(successive_differences(a) == Vector{-1.0, -1.0, 3.0});
    CHECK(AlphaVector::w_space(a).to_z().values() == Vector{-1.0, -1.0, 3.0});
    CHECK(AlphaVector::w_space(a).to_z().space() == Space::Z);
}

TEST_CASE("model files") {
    const char* text = R"({"n": 2, "drift": [-1, 0], "sigma": 0, "components": [
        {"rate": 1, "law": {"type": "comonotone", "parameters": {"weights": [1, 0.5], "rate": 4}}}]})";
    const LevyModel m = parse_model(text);
    CHECK(m.n == 2);
    CHECK(std::holds_alternative<law::ComonotoneLinear>(m.components[0].law));
    const LevyModel back = model_from_json(model_to_json(m));
    CHECK(model_to_json(back) == model_to_json(m));

    CHECK_THROWS_AS(parse_model(R"({"n": 2, "drift": [-1, 0], "extra": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_model(R"({"n": 2})"), ConfigError);
    CHECK_THROWS_AS(parse_model("{"), ConfigError);
    CHECK_THROWS_AS(parse_model(R"({"n": 1, "drift": [-1], "components": [{"rate": 1,
        "law": {"type": "weird", "parameters": {}}}]})"),
                    ConfigError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ConfigError);

    const LevyModel m1 = load_model(SYNQ_DATA_DIR "/models/m1.json");
    CHECK(model_to_json(m1) == model_to_json(oracle::m1()));
    CHECK(model_to_json(load_model(SYNQ_DATA_DIR "/models/m2.json")) == model_to_json(oracle::m2()));
    CHECK(model_to_json(load_model(SYNQ_DATA_DIR "/models/m3.json")) == model_to_json(oracle::m3()));
}
