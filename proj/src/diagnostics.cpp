#include "scm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scm::diagnostics {
namespace {

constexpr double kFixedPointTol = 1e-10;

Map as_map(const FneOperator& op) {
    return [&op](const Vector& x) { return apply(op, x); };
}

// Composition T = T_m ... T_1 without errors.
Vector compose(const OperatorStack& stack, const Vector& x) {
    Vector y = x;
    for (const auto& op : stack.ops()) y = apply(op, y);
    return y;
}

std::string indexed(const char* base, std::size_t i) {
    return std::string(base) + "[" + std::to_string(i + 1) + "]";
}

}  // namespace

CheckReport make_report(std::string name, std::int64_t samples, double worst_violation, double tolerance) {
    CheckReport r;
    r.name = std::move(name);
    r.samples = samples;
    r.worst_violation = std::isnan(worst_violation) ? std::numeric_limits<double>::max()
                                                    : std::max(0.0, worst_violation);
    r.tolerance = tolerance;
    r.pass = r.worst_violation <= tolerance;
    return r;
}

Vector sample_point(Eigen::Index dim, double radius, std::mt19937_64& gen) {
    std::normal_distribution<double> normal;
    Vector x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) x(j) = radius * normal(gen);
    return x;
}

PointSampler fixed_point_sampler(const FneOperator& op, double radius) {
    const auto dim = op.dim();
    if (op.is_projection()) {
        return [op, dim, radius](std::mt19937_64& gen) { return apply(op, sample_point(dim, radius, gen)); };
    }
    if (const auto* res = op.get_if<LinearResolvent>()) {
        Eigen::FullPivLU<Matrix> lu(res->A);
        lu.setThreshold(1e-10);
        Matrix kernel = lu.dimensionOfKernel() > 0 ? Matrix(lu.kernel()) : Matrix::Zero(dim, 1);
        return [kernel, radius](std::mt19937_64& gen) {
            return Vector(kernel * sample_point(kernel.cols(), radius, gen));
        };
    }
    return [dim](std::mt19937_64&) { return Vector(Vector::Zero(dim)); };
}

CheckReport check_fne(const Map& T, Eigen::Index dim, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(dim, opts.radius, gen);
        const Vector y = sample_point(dim, opts.radius, gen);
        const Vector d = T(x) - T(y);
        worst = std::max(worst, d.squaredNorm() - d.dot(x - y));
    }
    return make_report("fne", opts.samples, worst, opts.tolerance);
}

CheckReport check_fne(const FneOperator& op, const SampleOptions& opts) {
    return check_fne(as_map(op), op.dim(), opts);
}

CheckReport check_nonexpansive(const Map& T, Eigen::Index dim, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(dim, opts.radius, gen);
        const Vector y = sample_point(dim, opts.radius, gen);
        worst = std::max(worst, (T(x) - T(y)).norm() - (x - y).norm());
    }
    return make_report("nonexpansive", opts.samples, worst, opts.tolerance);
}

CheckReport check_nonexpansive(const FneOperator& op, const SampleOptions& opts) {
    return check_nonexpansive(as_map(op), op.dim(), opts);
}

CheckReport check_cutter(const Map& T, Eigen::Index dim, const PointSampler& fixed_points, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(dim, opts.radius, gen);
        const Vector z = fixed_points(gen);
        const Vector step = T(x) - x;
        worst = std::max(worst, step.squaredNorm() - step.dot(z - x));
    }
    return make_report("cutter", opts.samples, worst, opts.tolerance);
}

CheckReport check_cutter(const FneOperator& op, const SampleOptions& opts) {
    return check_cutter(as_map(op), op.dim(), fixed_point_sampler(op, opts.radius), opts);
}

CheckReport check_idempotent(const FneOperator& op, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector once = apply(op, sample_point(op.dim(), opts.radius, gen));
        worst = std::max(worst, (apply(op, once) - once).norm());
    }
    return make_report("idempotent", opts.samples, worst, opts.tolerance);
}

CheckReport check_strong_monotonicity(const MonotoneMap& F, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(F.dim(), opts.radius, gen);
        const Vector y = sample_point(F.dim(), opts.radius, gen);
        const Vector d = x - y;
        worst = std::max(worst, F.eta() * d.squaredNorm() - (eval(F, x) - eval(F, y)).dot(d));
    }
    return make_report("strong_monotonicity", opts.samples, worst, opts.tolerance);
}

CheckReport check_lipschitz(const MonotoneMap& F, const SampleOptions& opts) {
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(F.dim(), opts.radius, gen);
        const Vector y = sample_point(F.dim(), opts.radius, gen);
        worst = std::max(worst, (eval(F, x) - eval(F, y)).norm() - F.kappa() * (x - y).norm());
    }
    return make_report("lipschitz", opts.samples, worst, opts.tolerance);
}

CheckReport check_contraction(const MonotoneMap& F, double mu, double beta, const SampleOptions& opts) {
    const StepParams params = StepParams::checked(F, mu, beta);
    const double factor = 1.0 - beta * tau(mu, F.eta(), F.kappa());
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(F.dim(), opts.radius, gen);
        const Vector y = sample_point(F.dim(), opts.radius, gen);
        const double lhs = (u_beta_step(F, params, x) - u_beta_step(F, params, y)).norm();
        worst = std::max(worst, lhs - factor * (x - y).norm());
    }
    return make_report("contraction", opts.samples, worst, opts.tolerance);
}

namespace {

double composition_bound_violation(const OperatorStack& stack, const Vector& x, const Vector& z) {
    const StackPass pass = apply_stack(stack, x);
    const double L = std::max((x - z).norm(), 1e-12);
    double sum = 0.0;
    for (std::size_t i = 1; i < pass.phis.size(); ++i) sum += (pass.phis[i] - pass.phis[i - 1]).squaredNorm();
    return sum / (2.0 * L) - (pass.last - x).norm();
}

void require_common_fixed_point(const OperatorStack& stack, const Vector& z) {
    const double r = fixed_point_residual(stack, z);
    if (!(r <= kFixedPointTol)) {
        throw ParameterError("z is not a common fixed point (residual " + std::to_string(r) + ")");
    }
}

}  // namespace

CheckReport check_composition_bound(const OperatorStack& stack, const Vector& x, const Vector& z, double tolerance) {
    require_common_fixed_point(stack, z);
    return make_report("composition_bound", 1, composition_bound_violation(stack, x, z), tolerance);
}

CheckReport check_composition_bound(const OperatorStack& stack, const Vector& z, const SampleOptions& opts) {
    require_common_fixed_point(stack, z);
    std::mt19937_64 gen(opts.seed);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(stack.dim(), opts.radius, gen);
        worst = std::max(worst, composition_bound_violation(stack, x, z));
    }
    return make_report("composition_bound", opts.samples, worst, opts.tolerance);
}

CheckReport check_fixed_set_composition(const OperatorStack& stack, const std::vector<Vector>& points,
                                        double zero_tol) {
    double worst = 0.0;
    for (const auto& x : points) {
        const double residual = fixed_point_residual(stack, x);
        const double moved = (compose(stack, x) - x).norm();
        if (residual <= zero_tol) {
            worst = std::max(worst, moved);
        } else if (moved <= zero_tol) {
            worst = std::max(worst, residual);
        }
    }
    return make_report("fixed_set_composition", static_cast<std::int64_t>(points.size()), worst, zero_tol);
}

CheckReport check_convex_combination_identity(Eigen::Index dim, const SampleOptions& opts, double tolerance) {
    std::mt19937_64 gen(opts.seed);
    std::uniform_real_distribution<double> lambda_dist(-1.0, 2.0);
    double worst = 0.0;
    for (std::int64_t s = 0; s < opts.samples; ++s) {
        const Vector x = sample_point(dim, opts.radius, gen);
        const Vector y = sample_point(dim, opts.radius, gen);
        const double l = lambda_dist(gen);
        const double lhs = (l * x + (1.0 - l) * y).squaredNorm();
        const double t1 = l * x.squaredNorm();
        const double t2 = (1.0 - l) * y.squaredNorm();
        const double t3 = l * (1.0 - l) * (x - y).squaredNorm();
        const double scale = 1.0 + std::abs(lhs) + std::abs(t1) + std::abs(t2) + std::abs(t3);
        worst = std::max(worst, std::abs(lhs - (t1 + t2 - t3)) / scale);
    }
    return make_report("convex_combination_identity", opts.samples, worst, tolerance);
}

double fejer_violation(const Vector& phi0, double lambda, const OperatorStack& stack, const Vector& z) {
    const Vector Tphi = compose(stack, phi0);
    const Vector w = phi0 + lambda * (Tphi - phi0);
    return (w - z).squaredNorm() - (phi0 - z).squaredNorm() + lambda * (1.0 - lambda) * (Tphi - phi0).squaredNorm();
}

CheckReport check_fejer_trace(const std::vector<std::vector<Vector>>& trace_intermediates,
                              const std::vector<double>& lambda_values, const OperatorStack& stack, const Vector& z,
                              double tolerance) {
    if (trace_intermediates.size() != lambda_values.size()) {
        throw ParameterError("check_fejer_trace: one lambda per iteration is required");
    }
    double worst = 0.0;
    for (std::size_t n = 0; n < trace_intermediates.size(); ++n) {
        if (trace_intermediates[n].empty()) {
            throw ParameterError("check_fejer_trace: missing intermediates at iteration " + std::to_string(n + 1));
        }
        worst = std::max(worst, fejer_violation(trace_intermediates[n].front(), lambda_values[n], stack, z));
    }
    return make_report("fejer_trace", static_cast<std::int64_t>(trace_intermediates.size()), worst, tolerance);
}

FejerMonitor::FejerMonitor(const OperatorStack& stack, Vector z, double tolerance)
    : stack_(&stack), z_(std::move(z)), tolerance_(tolerance) {}

void FejerMonitor::observe(const StepOutput& step) {
    if (step.intermediates.empty()) throw ParameterError("FejerMonitor: missing intermediates");
    worst_ = std::max(worst_, fejer_violation(step.intermediates.front(), step.record.lambda_n, *stack_, z_));
    ++count_;
}

CheckReport FejerMonitor::report() const { return make_report("fejer_trace", count_, worst_, tolerance_); }

CheckReport check_oracle_cross_validation(const oracle::ConstraintSet& C, double tolerance) {
    const Vector origin = Vector::Zero(C.dim);
    const auto exact = oracle::project_exact(C, origin);
    if (!exact) return make_report("oracle_cross_validation", 1, std::numeric_limits<double>::max(), tolerance);
    const Vector reference =
        oracle::solve_vip_reference(MonotoneMap::identity(C.dim), oracle::exact_projector(C), origin);
    return make_report("oracle_cross_validation", 1, (exact->point - reference).norm(), tolerance);
}

std::optional<Vector> find_common_fixed_point(const Problem& problem) {
    const auto& stack = problem.stack;
    if (problem.known_solution && problem.known_solution->size() == stack.dim() &&
        fixed_point_residual(stack, *problem.known_solution) <= kFixedPointTol) {
        return problem.known_solution;
    }
    if (auto C = oracle::constraint_set_from_stack(stack)) {
        try {
            if (auto proj = oracle::project_exact(*C, Vector::Zero(stack.dim()));
                proj && fixed_point_residual(stack, proj->point) <= kFixedPointTol) {
                return proj->point;
            }
        } catch (const oracle::BudgetExceeded&) {
        }
    }
    const Vector origin = Vector::Zero(stack.dim());
    if (fixed_point_residual(stack, origin) <= kFixedPointTol) return origin;
    return std::nullopt;
}

std::vector<CheckReport> run_full_suite(const Problem& problem, const ScmConfig& cfg, const SuiteOptions& opts) {
    std::vector<CheckReport> reports;
    const auto& stack = problem.stack;
    const auto& F = problem.F;
    const auto dim = stack.dim();

    auto options_for = [&](const std::string& name) {
        SampleOptions o;
        o.samples = opts.samples;
        o.seed = derive_seed(cfg.seed, name);
        o.radius = opts.radius;
        o.tolerance = opts.tolerance;
        return o;
    };
    auto named = [](CheckReport r, std::string name) {
        r.name = std::move(name);
        return r;
    };

    for (std::size_t i = 0; i < stack.size(); ++i) {
        const auto& op = stack[i];
        std::string name = indexed("fne", i);
        reports.push_back(named(check_fne(op, options_for(name)), name));
        name = indexed("nonexpansive", i);
        reports.push_back(named(check_nonexpansive(op, options_for(name)), name));
        name = indexed("cutter", i);
        reports.push_back(named(check_cutter(op, options_for(name)), name));
        if (op.is_projection()) {
            name = indexed("idempotent", i);
            reports.push_back(named(check_idempotent(op, options_for(name)), name));
        }
    }

    reports.push_back(check_convex_combination_identity(dim, options_for("convex_combination_identity")));
    reports.push_back(check_strong_monotonicity(F, options_for("strong_monotonicity")));
    reports.push_back(check_lipschitz(F, options_for("lipschitz")));

    try {
        const double mu = resolve_mu(cfg, F);
        double worst = 0.0;
        std::int64_t samples = 0;
        for (double beta : {cfg.beta.at(1), 1.0, 0.5, 0.1}) {
            const auto r = check_contraction(F, mu, beta, options_for("contraction"));
            worst = std::max(worst, r.worst_violation);
            samples += r.samples;
        }
        reports.push_back(make_report("contraction", samples, worst, opts.tolerance));
    } catch (const Error&) {
        reports.push_back(make_report("contraction", 0, std::numeric_limits<double>::max(), opts.tolerance));
    }

    const auto z = find_common_fixed_point(problem);
    reports.push_back(make_report("common_fixed_point", 1,
                                  z ? fixed_point_residual(stack, *z) : std::numeric_limits<double>::max(),
                                  kFixedPointTol));

    {
        std::mt19937_64 gen(derive_seed(cfg.seed, "fixed_set_composition"));
        std::vector<Vector> points;
        for (std::int64_t s = 0; s < opts.samples; ++s) points.push_back(sample_point(dim, opts.radius, gen));
        if (z) points.push_back(*z);
        reports.push_back(check_fixed_set_composition(stack, points));
    }

    if (z) {
        reports.push_back(check_composition_bound(stack, *z, options_for("composition_bound")));

        ScmConfig error_free = cfg;
        error_free.error = ErrorModel{};
        FejerMonitor monitor(stack, *z, opts.tolerance);
        SolveOptions solve_opts;
        solve_opts.observer = [&monitor](const StepOutput& step) { monitor.observe(step); };
        try {
            solve(stack, F, Vector::Zero(dim), error_free, solve_opts);
            reports.push_back(monitor.report());
        } catch (const Error&) {
            auto r = monitor.report();
            reports.push_back(make_report("fejer_trace", r.samples, std::numeric_limits<double>::max(), r.tolerance));
        }
    }

    if (auto C = oracle::constraint_set_from_stack(stack)) {
        try {
            reports.push_back(check_oracle_cross_validation(*C));
        } catch (const Error&) {
            reports.push_back(make_report("oracle_cross_validation", 1, std::numeric_limits<double>::max(), 1e-9));
        }
    }
    return reports;
}

bool all_pass(const std::vector<CheckReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

}  // namespace scm::diagnostics
