#pragma once

#include "scm/oracle.hpp"
#include "scm/problem.hpp"
#include "scm/scm_solver.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace scm::diagnostics {

struct CheckReport {
    std::string name;
    std::int64_t samples = 0;
    double worst_violation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Builds a report with pass = (worst_violation <= tolerance). The
/// violation is clipped below at zero.
CheckReport make_report(std::string name, std::int64_t samples, double worst_violation, double tolerance);

inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr double kDefaultRadius = 10.0;

struct SampleOptions {
    std::int64_t samples = 1000;
    std::uint64_t seed = 0;
    double radius = kDefaultRadius;  // scale of the standard normal draws
    double tolerance = kDefaultTolerance;
};

using Map = std::function<Vector(const Vector&)>;
using PointSampler = std::function<Vector(std::mt19937_64&)>;

Vector sample_point(Eigen::Index dim, double radius, std::mt19937_64& gen);

/// Draws points of Fix T for a catalog operator: T(y) for projections,
/// the kernel of A for resolvents, and 0 for soft thresholding and fixtures.
PointSampler fixed_point_sampler(const FneOperator& op, double radius);

// Operator class checks. The Map overloads accept arbitrary maps so that
// broken fixtures can be checked as well.

/// ||Tx - Ty||^2 - <Tx - Ty, x - y>
CheckReport check_fne(const Map& T, Eigen::Index dim, const SampleOptions& opts);
CheckReport check_fne(const FneOperator& op, const SampleOptions& opts);

/// ||Tx - Ty|| - ||x - y||
CheckReport check_nonexpansive(const Map& T, Eigen::Index dim, const SampleOptions& opts);
CheckReport check_nonexpansive(const FneOperator& op, const SampleOptions& opts);

/// ||Tx - x||^2 - <Tx - x, z - x> for z drawn from Fix T.
CheckReport check_cutter(const Map& T, Eigen::Index dim, const PointSampler& fixed_points, const SampleOptions& opts);
CheckReport check_cutter(const FneOperator& op, const SampleOptions& opts);

/// ||T(Tx) - Tx||; meaningful for projections only.
CheckReport check_idempotent(const FneOperator& op, const SampleOptions& opts);

// Monotone map checks.

/// eta ||x - y||^2 - <Fx - Fy, x - y>
CheckReport check_strong_monotonicity(const MonotoneMap& F, const SampleOptions& opts);
/// ||Fx - Fy|| - kappa ||x - y||
CheckReport check_lipschitz(const MonotoneMap& F, const SampleOptions& opts);
/// ||U x - U y|| - (1 - beta tau) ||x - y|| with U = Id - mu beta F.
CheckReport check_contraction(const MonotoneMap& F, double mu, double beta, const SampleOptions& opts);

// Stack checks.

/// (1 / 2L) sum_i ||S_i x - S_{i-1} x||^2 - ||Tx - x|| with
/// L = max(||x - z||, 1e-12). Throws ParameterError if z is not a common
/// fixed point (residual above 1e-10).
CheckReport check_composition_bound(const OperatorStack& stack, const Vector& x, const Vector& z,
                                    double tolerance = kDefaultTolerance);
/// Same bound over sampled x for a fixed common fixed point z.
CheckReport check_composition_bound(const OperatorStack& stack, const Vector& z, const SampleOptions& opts);

/// Fix(T_m ... T_1) coincides with the intersection of the Fix T_i on the
/// given points: a point has zero residual exactly when the composition
/// leaves it in place (both within `zero_tol`).
CheckReport check_fixed_set_composition(const OperatorStack& stack, const std::vector<Vector>& points,
                                        double zero_tol = 1e-12);

/// |lhs - rhs| / (1 + |terms|) for
/// ||l x + (1-l) y||^2 = l||x||^2 + (1-l)||y||^2 - l(1-l)||x - y||^2.
CheckReport check_convex_combination_identity(Eigen::Index dim, const SampleOptions& opts,
                                              double tolerance = 1e-12);

/// ||w - z||^2 - ||phi0 - z||^2 + lambda (1 - lambda) ||T phi0 - phi0||^2,
/// w = phi0 + lambda (T phi0 - phi0), T evaluated without errors.
double fejer_violation(const Vector& phi0, double lambda, const OperatorStack& stack, const Vector& z);

CheckReport check_fejer_trace(const std::vector<std::vector<Vector>>& trace_intermediates,
                              const std::vector<double>& lambda_values, const OperatorStack& stack, const Vector& z,
                              double tolerance = kDefaultTolerance);

/// Streaming form of check_fejer_trace, fed from a solver observer.
class FejerMonitor {
public:
    FejerMonitor(const OperatorStack& stack, Vector z, double tolerance = kDefaultTolerance);

    void observe(const StepOutput& step);
    CheckReport report() const;

private:
    const OperatorStack* stack_;
    Vector z_;
    double tolerance_;
    std::int64_t count_ = 0;
    double worst_ = 0.0;
};

/// Distance between the exact projection of the origin and the reference
/// VIP solver run with F = Identity on the same set.
CheckReport check_oracle_cross_validation(const oracle::ConstraintSet& C, double tolerance = 1e-9);

struct SuiteOptions {
    std::int64_t samples = 1000;
    double radius = kDefaultRadius;
    double tolerance = kDefaultTolerance;
};

/// Finds a certified common fixed point: the known solution, the exact
/// projection of the origin, or the origin itself, whichever is first to
/// have residual <= 1e-10.
std::optional<Vector> find_common_fixed_point(const Problem& problem);

/// Runs every check on the problem. Failures are reported, never thrown.
/// Seeds derive from (cfg.seed, check name).
std::vector<CheckReport> run_full_suite(const Problem& problem, const ScmConfig& cfg, const SuiteOptions& opts = {});

bool all_pass(const std::vector<CheckReport>& reports);

}  // namespace scm::diagnostics
