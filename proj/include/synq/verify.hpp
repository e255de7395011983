#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synq/model.hpp"
#include "synq/simulation.hpp"

namespace synq {

/// Names accepted in a plan's "checks" list.
namespace check_names {
inline constexpr const char* kNormalization = "normalization";
inline constexpr const char* kLstConsistency = "lst-consistency";
inline constexpr const char* kDecompositionProduct = "decomposition-product";
inline constexpr const char* kDecompositionIdentity = "decomposition-identity";
inline constexpr const char* kMoments = "moments";
inline constexpr const char* kMcMeans = "mc-means";
inline constexpr const char* kMcLst = "mc-lst";
inline constexpr const char* kOrdering = "ordering";
inline constexpr const char* kPriorityOracle = "priority-oracle";
}  // namespace check_names

struct CheckSpec {
    std::string name;
    /// Argument points (W-space); for decomposition-identity each point holds
    /// one alpha_2 value.
    std::vector<Vector> grid;
    /// Analytic checks: absolute gap bound. Monte Carlo checks: band in units
    /// of the standard error.
    double tolerance = 0.0;
    /// Grid points closer than this to a transform pole are excluded.
    double pole_margin = 1e-3;
};

struct VerifyPlan {
    std::vector<CheckSpec> checks;
    SimConfig sim;
};

enum class CheckStatus { Pass, Fail, Skipped };
const char* to_string(CheckStatus s) noexcept;

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Skipped;
    double worst_gap = 0.0;
    double tolerance = 0.0;
    Vector worst_location;
    std::size_t points = 0;
    std::size_t excluded = 0;
    bool retried = false;
    double runtime_ms = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool pass = false;
    std::vector<std::string> warnings;
    double runtime_ms = 0.0;
};

/// Default plan: every check with the desk-scale grids and tolerances used by
/// the acceptance suite.
VerifyPlan default_plan(const ValidatedModel& m);

/// Plan file: {"checks": [{"name", "grid", "tolerance", "pole_margin"}...],
/// "sim": {...}}. A grid is an explicit array of points (or numbers), or
/// {"lo", "hi", "per_axis"} expanded into a tensor grid of dimension n.
/// Checks omitted from the list are not run, except normalization and
/// ordering which are always present.
VerifyPlan plan_from_json(const nlohmann::json& j, const ValidatedModel& m);

/// Runs every check. Errors inside a check become a failed (or, for
/// InstabilityError, skipped) status; the report is always complete. Monte
/// Carlo checks that fail are rerun once with a fresh derived seed.
VerifyReport run(const ValidatedModel& m, const VerifyPlan& plan);

nlohmann::json report_to_json(const VerifyReport& report);

/// Smallest |denominator| met when evaluating lst_W / the product form at a
/// W-space point (infinity at the origin).
double pole_distance(const ValidatedModel& m, const Vector& alpha_w);

/// Tensor grid {lo + i (hi - lo) / (per_axis - 1)}^dim.
std::vector<Vector> tensor_grid(std::size_t dim, double lo, double hi, int per_axis);

}  // namespace synq
