#include "synq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <type_traits>

namespace synq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

void check_domain_nonnegative(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0)) {
            std::ostringstream os;
            os << what << ": argument " << i + 1 << " = " << v[i] << " is negative";
            throw DomainError(os.str());
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

const char* to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::NotSpectrallyOneSided: return "NotSpectrallyOneSided";
        case ViolationKind::SubordinatorFirstCoordinate: return "SubordinatorFirstCoordinate";
        case ViolationKind::ZeroSubordinator: return "ZeroSubordinator";
        case ViolationKind::NegativeSubordinatorDrift: return "NegativeSubordinatorDrift";
        case ViolationKind::InvalidParameter: return "InvalidParameter";
        case ViolationKind::DimensionMismatch: return "DimensionMismatch";
    }
    return "Unknown";
}

namespace {
std::string describe(const std::vector<Violation>& vs) {
    std::ostringstream os;
    os << "model violates " << vs.size() << " assumption(s):";
    for (const auto& v : vs) {
        os << " " << to_string(v.kind);
        if (v.coordinate > 0) os << "(" << v.coordinate << ")";
        if (!v.detail.empty()) os << " [" << v.detail << "]";
        os << ";";
    }
    return os.str();
}
}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(describe(violations)), violations_(std::move(violations)) {}

bool ValidationError::has(ViolationKind kind) const noexcept {
    return std::any_of(violations_.begin(), violations_.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

// ---------------------------------------------------------------------------
// marginals
// ---------------------------------------------------------------------------

double marginal_mean(const Marginal& m) {
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return 0.0; },
                          [](const marginal::Point& p) { return p.value; },
                          [](const marginal::Exponential& e) { return 1.0 / e.rate; },
                          [](const marginal::Erlang& e) { return e.shape / e.rate; },
                      },
                      m);
}

double marginal_second_moment(const Marginal& m) {
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return 0.0; },
                          [](const marginal::Point& p) { return p.value * p.value; },
                          [](const marginal::Exponential& e) { return 2.0 / (e.rate * e.rate); },
                          [](const marginal::Erlang& e) {
                              return e.shape * (e.shape + 1.0) / (e.rate * e.rate);
                          },
                      },
                      m);
}

double marginal_lst_minus_one(const Marginal& m, double s) {
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return 0.0; },
                          [s](const marginal::Point& p) { return std::expm1(-s * p.value); },
                          [s](const marginal::Exponential& e) { return -s / (e.rate + s); },
                          [s](const marginal::Erlang& e) {
                              return std::expm1(-e.shape * std::log1p(s / e.rate));
                          },
                      },
                      m);
}

double marginal_tail(const Marginal& m, double x) {
    if (x < 0.0) return marginal_is_zero(m) ? 0.0 : 1.0;
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return 0.0; },
                          [x](const marginal::Point& p) { return x < p.value ? 1.0 : 0.0; },
                          [x](const marginal::Exponential& e) { return std::exp(-e.rate * x); },
                          [x](const marginal::Erlang& e) {
                              // sum_{j<k} e^{-rx} (rx)^j / j!
                              const double rx = e.rate * x;
                              double term = std::exp(-rx);
                              double sum = term;
                              for (int j = 1; j < e.shape; ++j) {
                                  term *= rx / j;
                                  sum += term;
                              }
                              return sum;
                          },
                      },
                      m);
}

bool marginal_is_zero(const Marginal& m) {
    return std::visit(overloaded{
                          [](const marginal::Zero&) { return true; },
                          [](const marginal::Point& p) { return p.value == 0.0; },
                          [](const auto&) { return false; },
                      },
                      m);
}

// ---------------------------------------------------------------------------
// joint jump laws
// ---------------------------------------------------------------------------

std::size_t law_dimension(const JumpLaw& law) {
    return std::visit(overloaded{
                          [](const law::Deterministic& d) { return d.jump.size(); },
                          [](const law::IndependentMarginals& im) { return im.marginals.size(); },
                          [](const law::ComonotoneLinear& c) { return c.weights.size(); },
                      },
                      law);
}

Marginal law_marginal(const JumpLaw& law, std::size_t i) {
    return std::visit(overloaded{
                          [i](const law::Deterministic& d) -> Marginal {
                              if (d.jump[i] == 0.0) return marginal::Zero{};
                              return marginal::Point{d.jump[i]};
                          },
                          [i](const law::IndependentMarginals& im) -> Marginal {
                              return im.marginals[i];
                          },
                          [i](const law::ComonotoneLinear& c) -> Marginal {
                              // w E with E ~ Exp(r) is Exp(r / w)
                              if (c.weights[i] == 0.0) return marginal::Zero{};
                              return marginal::Exponential{c.rate / c.weights[i]};
                          },
                      },
                      law);
}

double law_lst_minus_one(const JumpLaw& law, std::span<const double> v) {
    return std::visit(
        overloaded{
            [v](const law::Deterministic& d) {
                double s = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * d.jump[i];
                return std::expm1(-s);
            },
            [v](const law::IndependentMarginals& im) {
                // prod(1 + e_i) - 1 = expm1(sum log1p(e_i))
                double log_sum = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    log_sum += std::log1p(marginal_lst_minus_one(im.marginals[i], v[i]));
                }
                return std::expm1(log_sum);
            },
            [v](const law::ComonotoneLinear& c) {
                double s = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * c.weights[i];
                return -s / (c.rate + s);
            },
        },
        law);
}

double law_cross_moment(const JumpLaw& law, std::size_t i, std::size_t j) {
    return std::visit(overloaded{
                          [i, j](const law::Deterministic& d) { return d.jump[i] * d.jump[j]; },
                          [i, j](const law::IndependentMarginals& im) {
                              if (i == j) return marginal_second_moment(im.marginals[i]);
                              return marginal_mean(im.marginals[i]) *
                                     marginal_mean(im.marginals[j]);
                          },
                          [i, j](const law::ComonotoneLinear& c) {
                              return c.weights[i] * c.weights[j] * 2.0 / (c.rate * c.rate);
                          },
                      },
                      law);
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

namespace {

void check_marginal(const Marginal& m, std::size_t comp, std::size_t coord,
                    std::vector<Violation>& out) {
    auto bad = [&](const std::string& what) {
        std::ostringstream os;
        os << "component " << comp + 1 << ", coordinate " << coord + 1 << ": " << what;
        out.push_back({ViolationKind::InvalidParameter, static_cast<int>(coord + 1), os.str()});
    };
    std::visit(overloaded{
                   [](const marginal::Zero&) {},
                   [&](const marginal::Point& p) {
                       if (!std::isfinite(p.value)) bad("deterministic jump must be finite");
                       if (p.value < 0.0) {
                           out.push_back({ViolationKind::NotSpectrallyOneSided,
                                          static_cast<int>(coord + 1),
                                          "negative deterministic jump"});
                       }
                   },
                   [&](const marginal::Exponential& e) {
                       if (!positive_finite(e.rate)) bad("exponential rate must be > 0");
                   },
                   [&](const marginal::Erlang& e) {
                       if (e.shape < 1) bad("erlang shape must be >= 1");
                       if (!positive_finite(e.rate)) bad("erlang rate must be > 0");
                   },
               },
               m);
}

MomentTable compute_moments(const LevyModel& model) {
    const std::size_t n = model.n;
    MomentTable t;
    t.mean = model.drift;
    t.cov.assign(n, Vector(n, 0.0));
    t.cov[0][0] = model.sigma * model.sigma;
    for (const auto& c : model.components) {
        for (std::size_t i = 0; i < n; ++i) {
            t.mean[i] += c.rate * marginal_mean(law_marginal(c.law, i));
            for (std::size_t j = 0; j < n; ++j) {
                t.cov[i][j] += c.rate * law_cross_moment(c.law, i, j);
            }
        }
    }
    t.cumulative_mean.resize(n);
    std::partial_sum(t.mean.begin(), t.mean.end(), t.cumulative_mean.begin());
    return t;
}

}  // namespace

void ValidatedModel::require_stable() const {
    if (!stable()) {
        std::ostringstream os;
        os << "model is not stable: E Y_n(1) = " << moments_.cumulative_mean.back()
           << " must be negative";
        throw InstabilityError(os.str());
    }
}

ValidatedModel validate(LevyModel model) {
    std::vector<Violation> v;
    const std::size_t n = model.n;
    if (n < 2) {
        v.push_back({ViolationKind::DimensionMismatch, 0, "dimension n must be >= 2"});
        throw ValidationError(std::move(v));
    }
    if (model.drift.size() != n) {
        v.push_back({ViolationKind::DimensionMismatch, 0, "drift length must equal n"});
    }
    if (!(std::isfinite(model.sigma) && model.sigma >= 0.0)) {
        v.push_back({ViolationKind::InvalidParameter, 1, "sigma must be finite and >= 0"});
    }
    for (std::size_t ci = 0; ci < model.components.size(); ++ci) {
        const auto& c = model.components[ci];
        if (!positive_finite(c.rate)) {
            v.push_back({ViolationKind::InvalidParameter, 0,
                         "component " + std::to_string(ci + 1) + ": rate must be > 0"});
        }
        if (law_dimension(c.law) != n) {
            v.push_back({ViolationKind::DimensionMismatch, 0,
                         "component " + std::to_string(ci + 1) + ": law dimension must equal n"});
            continue;
        }
        if (const auto* cl = std::get_if<law::ComonotoneLinear>(&c.law)) {
            if (!positive_finite(cl->rate)) {
                v.push_back({ViolationKind::InvalidParameter, 0,
                             "component " + std::to_string(ci + 1) + ": driver rate must be > 0"});
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (cl->weights[i] < 0.0) {
                    v.push_back({ViolationKind::NotSpectrallyOneSided, static_cast<int>(i + 1),
                                 "negative comonotone weight"});
                } else if (!std::isfinite(cl->weights[i])) {
                    v.push_back({ViolationKind::InvalidParameter, static_cast<int>(i + 1),
                                 "comonotone weight must be finite"});
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                Marginal m = std::holds_alternative<law::Deterministic>(c.law)
                                 ? Marginal{marginal::Point{std::get<law::Deterministic>(c.law).jump[i]}}
                                 : law_marginal(c.law, i);
                check_marginal(m, ci, i, v);
            }
        }
        bool any_nonzero = false;
        for (std::size_t i = 0; i < n; ++i) {
            any_nonzero = any_nonzero || !marginal_is_zero(law_marginal(c.law, i));
        }
        if (!any_nonzero) {
            v.push_back({ViolationKind::InvalidParameter, 0,
                         "component " + std::to_string(ci + 1) + ": law is identically zero"});
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(model.drift[i])) {
            v.push_back({ViolationKind::InvalidParameter, static_cast<int>(i + 1),
                         "drift must be finite"});
        }
    }
    // With finite activity, X_1 is a subordinator iff it has no Gaussian part
    // and a nonnegative drift.
    if (model.sigma == 0.0 && model.drift[0] >= 0.0) {
        v.push_back({ViolationKind::SubordinatorFirstCoordinate, 1,
                     "X_1 is nondecreasing: need sigma > 0 or c_1 < 0"});
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (model.drift[i] < 0.0) {
            v.push_back({ViolationKind::NegativeSubordinatorDrift, static_cast<int>(i + 1),
                         "subordinator drift must be >= 0"});
        }
        bool has_mass = model.drift[i] > 0.0;
        for (const auto& c : model.components) {
            has_mass = has_mass || !marginal_is_zero(law_marginal(c.law, i));
        }
        if (!has_mass) {
            v.push_back({ViolationKind::ZeroSubordinator, static_cast<int>(i + 1),
                         "X_" + std::to_string(i + 1) + " is identically zero"});
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));

    MomentTable t = compute_moments(model);
    return ValidatedModel(std::move(model), std::move(t));
}

// ---------------------------------------------------------------------------
// alpha vectors
// ---------------------------------------------------------------------------

Vector reverse_cumulative(std::span<const double> alpha) {
    Vector out(alpha.size());
    double s = 0.0;
    for (std::size_t i = alpha.size(); i-- > 0;) {
        s += alpha[i];
        out[i] = s;
    }
    return out;
}

Vector successive_differences(std::span<const double> alpha) {
    Vector out(alpha.size());
    for (std::size_t i = 0; i + 1 < alpha.size(); ++i) out[i] = alpha[i] - alpha[i + 1];
    if (!alpha.empty()) out.back() = alpha.back();
    return out;
}

AlphaVector AlphaVector::z_space(Vector values) {
    const Vector tails = reverse_cumulative(values);
    for (std::size_t k = 0; k < tails.size(); ++k) {
        if (!(tails[k] >= 0.0)) {
            std::ostringstream os;
            os << "Z-space argument: partial sum from index " << k + 1 << " is " << tails[k]
               << " < 0";
            throw DomainError(os.str());
        }
    }
    return AlphaVector(std::move(values), Space::Z);
}

AlphaVector AlphaVector::w_space(Vector values) {
    check_domain_nonnegative(values, "W-space argument");
    return AlphaVector(std::move(values), Space::W);
}

AlphaVector AlphaVector::make(Vector values, Space space) {
    return space == Space::Z ? z_space(std::move(values)) : w_space(std::move(values));
}

AlphaVector AlphaVector::to_z() const {
    if (space_ == Space::Z) return *this;
    return AlphaVector(successive_differences(values_), Space::Z);
}

// ---------------------------------------------------------------------------
// exponents
// ---------------------------------------------------------------------------

double phi(const ValidatedModel& m, std::span<const double> v) {
    const LevyModel& model = m.model();
    if (v.size() != model.n) throw DomainError("phi: argument dimension must equal n");
    check_domain_nonnegative(v, "phi");
    double result = 0.0;
    for (std::size_t i = 0; i < model.n; ++i) result -= model.drift[i] * v[i];
    result += 0.5 * model.sigma * model.sigma * v[0] * v[0];
    for (const auto& c : model.components) result += c.rate * law_lst_minus_one(c.law, v);
    return result;
}

double phi_tilde(const ValidatedModel& m, const AlphaVector& alpha) {
    const AlphaVector z = alpha.to_z();
    return phi(m, reverse_cumulative(z.values()));
}

double phi_k(const ValidatedModel& m, std::size_t k, double beta) {
    if (k < 1 || k > m.n()) throw DomainError("phi_k: k out of range");
    if (!(beta >= 0.0)) throw DomainError("phi_k: beta must be >= 0");
    Vector v(m.n(), 0.0);
    std::fill_n(v.begin(), k, beta);
    return phi(m, v);
}

double phi_diagonal(const ValidatedModel& m, double beta, std::span<const double> tail) {
    if (tail.size() >= m.n()) throw DomainError("phi_diagonal: tail too long");
    Vector v(m.n(), beta);
    std::copy(tail.begin(), tail.end(), v.begin() + static_cast<std::ptrdiff_t>(m.n() - tail.size()));
    return phi(m, v);
}

double eta(const ValidatedModel& m, std::span<const double> tail) {
    if (tail.size() + 1 != m.n()) throw DomainError("eta: tail must have length n-1");
    check_domain_nonnegative(tail, "eta");
    return -phi_diagonal(m, 0.0, tail);
}

MomentTable moments(const ValidatedModel& m) { return m.moments(); }

StabilityReport stability(const ValidatedModel& m) {
    return {m.moments().cumulative_mean, m.stable()};
}

}  // namespace synq
