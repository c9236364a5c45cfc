#include "scm/scm_solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace scm {
namespace {

std::string fmt_value(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void require_positive_index(std::int64_t n) {
    if (n < 1) throw ParameterError("iteration index must be >= 1");
}

}  // namespace

void BetaSchedule::validate() const {
    if (const auto* p = std::get_if<PowerBeta>(&kind)) {
        if (!(p->beta0 > 0.0) || !(p->beta0 <= 1.0)) {
            throw ParameterError("beta0 = " + fmt_value(p->beta0) + " violates beta_n in (0, 1]");
        }
        if (!(p->p > 0.0)) {
            throw ParameterError("p = " + fmt_value(p->p) + " <= 0 violates lim beta_n = 0");
        }
        if (p->p > 1.0) {
            throw ParameterError("p = " + fmt_value(p->p) + " > 1 violates sum beta_n = infinity");
        }
        return;
    }
    const auto& e = std::get<ExplicitBeta>(kind);
    if (e.values.empty()) throw ParameterError("explicit beta schedule is empty");
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        const double v = e.values[i];
        if (!(v > 0.0) || !(v <= 1.0)) {
            throw ParameterError("beta_" + std::to_string(i + 1) + " = " + fmt_value(v) + " violates beta_n in (0, 1]");
        }
    }
}

double BetaSchedule::at(std::int64_t n) const {
    require_positive_index(n);
    if (const auto* p = std::get_if<PowerBeta>(&kind)) {
        if (p->p == 1.0) return p->beta0 / static_cast<double>(n);
        return p->beta0 / std::pow(static_cast<double>(n), p->p);
    }
    const auto& values = std::get<ExplicitBeta>(kind).values;
    if (static_cast<std::size_t>(n) > values.size()) {
        throw ScheduleExhausted("explicit beta schedule has " + std::to_string(values.size()) +
                                " entries, iteration " + std::to_string(n) + " requested");
    }
    return values[static_cast<std::size_t>(n - 1)];
}

void LambdaSchedule::validate() const {
    if (!(epsilon > 0.0) || !(epsilon <= 0.5)) {
        throw ParameterError("epsilon = " + fmt_value(epsilon) + " violates epsilon in (0, 1/2]");
    }
    auto check = [&](double v, std::size_t index) {
        if (!(v >= epsilon) || !(v <= 1.0 - epsilon)) {
            throw ParameterError("lambda_" + std::to_string(index) + " = " + fmt_value(v) +
                                 " violates lambda_n in [epsilon, 1 - epsilon] with epsilon = " + fmt_value(epsilon));
        }
    };
    if (const auto* c = std::get_if<ConstantLambda>(&kind)) {
        check(c->value, 1);
        return;
    }
    const auto& values = std::get<ExplicitLambda>(kind).values;
    if (values.empty()) throw ParameterError("explicit lambda schedule is empty");
    for (std::size_t i = 0; i < values.size(); ++i) check(values[i], i + 1);
}

double LambdaSchedule::at(std::int64_t n) const {
    require_positive_index(n);
    if (const auto* c = std::get_if<ConstantLambda>(&kind)) return c->value;
    const auto& values = std::get<ExplicitLambda>(kind).values;
    if (static_cast<std::size_t>(n) > values.size()) {
        throw ScheduleExhausted("explicit lambda schedule has " + std::to_string(values.size()) +
                                " entries, iteration " + std::to_string(n) + " requested");
    }
    return values[static_cast<std::size_t>(n - 1)];
}

double LambdaSchedule::widest_epsilon() const {
    auto margin = [](double v) { return std::min(v, 1.0 - v); };
    if (const auto* c = std::get_if<ConstantLambda>(&kind)) return margin(c->value);
    double eps = 0.5;
    for (double v : std::get<ExplicitLambda>(kind).values) eps = std::min(eps, margin(v));
    return eps;
}

void ErrorModel::validate(bool allow_nonsummable) const {
    auto check_power = [&](double c, double q) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw ParameterError("error scale c = " + fmt_value(c) + " must be >= 0");
        if (!std::isfinite(q)) throw ParameterError("error exponent q must be finite");
        if (!(q > 1.0) && !allow_nonsummable) {
            throw ParameterError("q = " + fmt_value(q) + " <= 1 violates sum_n ||e_i^n|| < infinity");
        }
    };
    if (const auto* r = std::get_if<PowerRandomError>(&kind)) {
        check_power(r->c, r->q);
    } else if (const auto* f = std::get_if<PowerFixedError>(&kind)) {
        check_power(f->c, f->q);
        require_finite(f->direction, "error direction");
        if (!(f->direction.norm() > 0.0)) throw ParameterError("error direction must be nonzero");
    }
}

std::vector<Vector> draw_errors(const ErrorModel& model, std::int64_t n, std::size_t m, Eigen::Index dim) {
    require_positive_index(n);
    std::vector<Vector> errors(m, Vector::Zero(dim));
    if (const auto* f = std::get_if<PowerFixedError>(&model.kind)) {
        require_dim(f->direction, dim, "error direction");
        const double scale = f->c / std::pow(static_cast<double>(n), f->q);
        const Vector unit = f->direction / f->direction.norm();
        for (auto& e : errors) e = scale * unit;
    } else if (const auto* r = std::get_if<PowerRandomError>(&model.kind)) {
        const double scale = r->c / std::pow(static_cast<double>(n), r->q);
        for (std::size_t i = 0; i < m; ++i) {
            std::mt19937_64 gen(derive_seed(r->seed, static_cast<std::uint64_t>(i + 1), static_cast<std::uint64_t>(n)));
            std::normal_distribution<double> normal;
            Vector dir(dim);
            double norm = 0.0;
            do {
                for (Eigen::Index k = 0; k < dim; ++k) dir(k) = normal(gen);
                norm = dir.norm();
            } while (!(norm > 0.0));
            errors[i] = (scale / norm) * dir;
        }
    }
    return errors;
}

void ScmConfig::validate() const {
    beta.validate();
    lambda.validate();
    error.validate(allow_nonsummable_errors);
    if (mu && !(*mu > 0.0)) throw ParameterError("mu = " + fmt_value(*mu) + " violates mu in (0, 2*eta/kappa^2)");
    if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
    if (!(residual_tol >= 0.0)) throw ParameterError("residual_tol must be >= 0");
    if (trace_every < 1) throw ParameterError("trace_every must be >= 1");
}

double resolve_mu(const ScmConfig& cfg, const MonotoneMap& F) {
    const double mu = cfg.mu.value_or(F.mu_auto());
    validate_mu(mu, F.eta(), F.kappa());
    return mu;
}

std::string to_string(SolveStatus status) {
    return status == SolveStatus::ResidualMet ? "residual_met" : "max_iters";
}

StepOutput scm_step(const Vector& x, std::int64_t n, const OperatorStack& stack, const MonotoneMap& F,
                    const ScmConfig& cfg) {
    require_dim(x, stack.dim(), "scm_step");
    require_dim(x, F.dim(), "scm_step");
    const double beta_n = cfg.beta.at(n);
    const double lambda_n = cfg.lambda.at(n);
    const StepParams params = StepParams::checked(F, resolve_mu(cfg, F), beta_n);

    const Vector phi0 = u_beta_step(F, params, x);
    const std::vector<Vector> errors = draw_errors(cfg.error, n, stack.size(), stack.dim());
    StackPass pass = cfg.error.is_none() ? apply_stack(stack, phi0) : apply_stack(stack, phi0, errors);

    StepOutput out;
    out.x_next = (1.0 - lambda_n) * phi0 + lambda_n * pass.last;
    out.record.n = n;
    out.record.beta_n = beta_n;
    out.record.lambda_n = lambda_n;
    out.record.fixed_point_residual = fixed_point_residual(stack, out.x_next);
    out.record.step_norm = (out.x_next - x).norm();
    double total = 0.0;
    for (const auto& e : errors) total += e.norm();
    out.record.error_norm_total = total;
    out.intermediates = std::move(pass.phis);
    return out;
}

SolveResult solve(const OperatorStack& stack, const MonotoneMap& F, const Vector& x0, const ScmConfig& cfg,
                  const SolveOptions& options) {
    cfg.validate();
    resolve_mu(cfg, F);
    require_dim(x0, stack.dim(), "solve initial point");
    require_finite(x0, "solve initial point");
    if (options.known_solution) require_dim(*options.known_solution, stack.dim(), "known solution");

    SolveResult result;
    result.x_final = x0;
    for (std::int64_t n = 1; n <= cfg.max_iters; ++n) {
        StepOutput step = scm_step(result.x_final, n, stack, F, cfg);
        if (!step.x_next.allFinite()) {
            throw ParameterError("iterate became non-finite at iteration " + std::to_string(n));
        }
        if (options.known_solution) step.record.dist_to_known = (step.x_next - *options.known_solution).norm();
        if (options.observer) options.observer(step);

        const bool converged =
            step.record.fixed_point_residual <= cfg.residual_tol && step.record.step_norm <= cfg.residual_tol;
        const bool last = converged || n == cfg.max_iters;
        if (last || n % cfg.trace_every == 0) result.trace.push_back(step.record);

        result.x_final = std::move(step.x_next);
        result.iters = n;
        if (converged) {
            result.status = SolveStatus::ResidualMet;
            break;
        }
    }
    return result;
}

}  // namespace scm
