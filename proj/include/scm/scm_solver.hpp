#pragma once

#include "scm/monotone_maps.hpp"
#include "scm/operators.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace scm {

/// beta_n = beta0 / n^p.
struct PowerBeta {
    double beta0 = 1.0;
    double p = 1.0;
};

/// beta_1, beta_2, ... given explicitly; decay and divergence of the sum are
/// the caller's responsibility.
struct ExplicitBeta {
    std::vector<double> values;
};

struct BetaSchedule {
    std::variant<PowerBeta, ExplicitBeta> kind = PowerBeta{};

    /// Throws ParameterError naming the violated hypothesis.
    void validate() const;
    /// beta_n for n >= 1; throws ScheduleExhausted past an explicit list.
    double at(std::int64_t n) const;
};

struct ConstantLambda {
    double value = 0.5;
};

struct ExplicitLambda {
    std::vector<double> values;
};

struct LambdaSchedule {
    std::variant<ConstantLambda, ExplicitLambda> kind = ConstantLambda{};
    /// Every lambda_n must lie in [epsilon, 1 - epsilon], epsilon in (0, 1/2].
    double epsilon = 0.5;

    void validate() const;
    double at(std::int64_t n) const;
    /// Largest epsilon compatible with the values.
    double widest_epsilon() const;
};

struct NoError {};

/// ||e_i^n|| = c / n^q in a fresh uniformly random direction for every
/// (i, n), reproducible from (seed, i, n).
struct PowerRandomError {
    double c = 0.0;
    double q = 2.0;
    std::uint64_t seed = 0;
};

/// ||e_i^n|| = c / n^q along a fixed direction (normalized on use).
struct PowerFixedError {
    double c = 0.0;
    double q = 2.0;
    Vector direction;
};

struct ErrorModel {
    std::variant<NoError, PowerRandomError, PowerFixedError> kind = NoError{};

    /// q <= 1 breaks summability of the error norms and is rejected unless
    /// `allow_nonsummable` is set.
    void validate(bool allow_nonsummable = false) const;
    bool is_none() const { return std::holds_alternative<NoError>(kind); }
};

/// Draws e_1^n, ..., e_m^n. Independent of call order.
std::vector<Vector> draw_errors(const ErrorModel& model, std::int64_t n, std::size_t m, Eigen::Index dim);

struct ScmConfig {
    std::optional<double> mu;  // nullopt means "auto"
    BetaSchedule beta;
    LambdaSchedule lambda;
    ErrorModel error;
    std::int64_t max_iters = 100000;
    double residual_tol = 1e-5;
    std::int64_t trace_every = 1;
    std::uint64_t seed = 0;
    bool allow_nonsummable_errors = false;

    void validate() const;
};

/// mu after resolving "auto" to eta / kappa^2; validated against F.
double resolve_mu(const ScmConfig& cfg, const MonotoneMap& F);

struct IterationRecord {
    std::int64_t n = 0;
    double beta_n = 0.0;
    double lambda_n = 0.0;
    double fixed_point_residual = 0.0;  // of x^{n+1}
    double step_norm = 0.0;             // ||x^{n+1} - x^n||
    double error_norm_total = 0.0;      // sum_i ||e_i^n||
    std::optional<double> dist_to_known;
};

enum class SolveStatus { ResidualMet, MaxIters };

std::string to_string(SolveStatus status);

struct SolveResult {
    Vector x_final;
    SolveStatus status = SolveStatus::MaxIters;
    std::int64_t iters = 0;
    std::vector<IterationRecord> trace;
};

struct StepOutput {
    Vector x_next;
    IterationRecord record;
    std::vector<Vector> intermediates;  // phi_0, ..., phi_m
};

/// One iteration of the sequential constraint method at index n >= 1:
///   phi_0 = x - mu beta_n F(x),
///   phi_i = T_i phi_{i-1} + e_i^n,
///   x_next = (1 - lambda_n) phi_0 + lambda_n phi_m.
StepOutput scm_step(const Vector& x, std::int64_t n, const OperatorStack& stack, const MonotoneMap& F,
                    const ScmConfig& cfg);

struct SolveOptions {
    /// When set, every record carries ||x^{n+1} - known||.
    std::optional<Vector> known_solution;
    /// Called after every iteration, before thinning.
    std::function<void(const StepOutput&)> observer;
};

/// Iterates scm_step from n = 1 until both the fixed point residual and the
/// step norm are <= residual_tol, or max_iters is reached.
SolveResult solve(const OperatorStack& stack, const MonotoneMap& F, const Vector& x0, const ScmConfig& cfg,
                  const SolveOptions& options = {});

}  // namespace scm
