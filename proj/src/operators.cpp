#include "scm/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scm {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

constexpr double kMonotonicityTol = 1e-10;

void require_nonzero_normal(const Vector& a, const char* what) {
    if (a.size() == 0) throw DimensionError(std::string(what) + ": empty normal vector");
    require_finite(a, what);
    if (!(a.norm() > 0.0)) throw ParameterError(std::string(what) + ": normal vector must be nonzero");
}

void require_finite_scalar(double v, const char* what) {
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite");
}

double sawtooth(double s) {
    if (s <= 2.0) return 0.5 * s;
    if (s <= 4.0) return 1.0 - 0.5 * (s - 2.0);
    return 0.0;
}

}  // namespace

FneOperator::FneOperator(Kind kind, Eigen::Index dim) : kind_(std::move(kind)), dim_(dim) {}

FneOperator FneOperator::halfspace(Vector a, double b) {
    require_nonzero_normal(a, "halfspace");
    require_finite_scalar(b, "halfspace offset");
    const auto dim = a.size();
    return FneOperator(HalfspaceProjection{std::move(a), b}, dim);
}

FneOperator FneOperator::hyperplane(Vector a, double b) {
    require_nonzero_normal(a, "hyperplane");
    require_finite_scalar(b, "hyperplane offset");
    const auto dim = a.size();
    return FneOperator(HyperplaneProjection{std::move(a), b}, dim);
}

FneOperator FneOperator::ball(Vector center, double radius) {
    if (center.size() == 0) throw DimensionError("ball: empty center");
    require_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("ball: radius must be positive and finite");
    const auto dim = center.size();
    return FneOperator(BallProjection{std::move(center), radius}, dim);
}

FneOperator FneOperator::box(Vector lo, Vector hi) {
    if (lo.size() == 0) throw DimensionError("box: empty bounds");
    require_dim(hi, lo.size(), "box upper bound");
    require_finite(lo, "box lower bound");
    require_finite(hi, "box upper bound");
    if ((lo.array() > hi.array()).any()) throw ParameterError("box: lo must not exceed hi componentwise");
    const auto dim = lo.size();
    return FneOperator(BoxProjection{std::move(lo), std::move(hi)}, dim);
}

FneOperator FneOperator::soft_threshold(double t, Eigen::Index dim) {
    if (dim < 1) throw DimensionError("soft_threshold: dimension must be >= 1");
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("soft_threshold: t must be positive and finite");
    return FneOperator(SoftThreshold{t, dim}, dim);
}

FneOperator FneOperator::linear_resolvent(Matrix A, double r) {
    if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionError("linear_resolvent: A must be square and nonempty");
    if (!A.allFinite()) throw ParameterError("linear_resolvent: A entries must be finite");
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("linear_resolvent: r must be positive and finite");
    const Matrix sym = 0.5 * (A + A.transpose());
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lambda_min < -kMonotonicityTol) {
        std::ostringstream msg;
        msg << "linear_resolvent: A is not monotone (smallest eigenvalue of the symmetric part is " << lambda_min << ")";
        throw ParameterError(msg.str());
    }
    const auto dim = A.rows();
    Matrix M = Matrix::Identity(dim, dim) + r * A;
    FneOperator op(LinearResolvent{std::move(A), r}, dim);
    op.resolvent_lu_ = std::make_shared<const Eigen::PartialPivLU<Matrix>>(M);
    return op;
}

FneOperator FneOperator::fixture(NonFneFixture::Kind kind, Eigen::Index dim) {
    if (dim < 1) throw DimensionError("fixture: dimension must be >= 1");
    return FneOperator(NonFneFixture{kind, dim}, dim);
}

std::string_view FneOperator::type_name() const {
    return std::visit(Overloaded{
                          [](const HalfspaceProjection&) { return std::string_view("halfspace"); },
                          [](const BallProjection&) { return std::string_view("ball"); },
                          [](const BoxProjection&) { return std::string_view("box"); },
                          [](const HyperplaneProjection&) { return std::string_view("hyperplane"); },
                          [](const SoftThreshold&) { return std::string_view("soft_threshold"); },
                          [](const LinearResolvent&) { return std::string_view("linear_resolvent"); },
                          [](const NonFneFixture& f) {
                              return f.kind == NonFneFixture::Kind::Doubling ? std::string_view("fixture_doubling")
                                                                             : std::string_view("fixture_sawtooth");
                          },
                      },
                      kind_);
}

bool FneOperator::is_projection() const {
    return std::holds_alternative<HalfspaceProjection>(kind_) || std::holds_alternative<BallProjection>(kind_) ||
           std::holds_alternative<BoxProjection>(kind_) || std::holds_alternative<HyperplaneProjection>(kind_);
}

Vector apply(const FneOperator& op, const Vector& x) {
    require_dim(x, op.dim(), "apply");
    return std::visit(
        Overloaded{
            [&](const HalfspaceProjection& h) -> Vector {
                const double excess = h.a.dot(x) - h.b;
                if (excess <= 0.0) return x;
                return x - (excess / h.a.squaredNorm()) * h.a;
            },
            [&](const BallProjection& s) -> Vector {
                const Vector d = x - s.center;
                const double dist = d.norm();
                if (dist <= s.radius) return x;
                return s.center + (s.radius / dist) * d;
            },
            [&](const BoxProjection& b) -> Vector { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
            [&](const HyperplaneProjection& h) -> Vector {
                return x - ((h.a.dot(x) - h.b) / h.a.squaredNorm()) * h.a;
            },
            [&](const SoftThreshold& s) -> Vector {
                return x.unaryExpr([t = s.t](double v) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); });
            },
            [&](const LinearResolvent&) -> Vector {
                Vector y = op.resolvent_lu_->solve(x);
                if (!y.allFinite()) throw InternalError("linear_resolvent: singular solve");
                return y;
            },
            [&](const NonFneFixture& f) -> Vector {
                if (f.kind == NonFneFixture::Kind::Doubling) return 2.0 * x;
                return x.unaryExpr(&sawtooth);
            },
        },
        op.kind());
}

OperatorStack::OperatorStack(std::vector<FneOperator> ops) : ops_(std::move(ops)), dim_(0) {
    if (ops_.empty()) throw ParameterError("operator stack must contain at least one operator");
    dim_ = ops_.front().dim();
    for (std::size_t i = 1; i < ops_.size(); ++i) {
        if (ops_[i].dim() != dim_) {
            std::ostringstream msg;
            msg << "operator " << i + 1 << " has dimension " << ops_[i].dim() << ", expected " << dim_;
            throw DimensionError(msg.str());
        }
    }
}

StackPass apply_stack(const OperatorStack& stack, const Vector& x, std::span<const Vector> errors) {
    require_dim(x, stack.dim(), "apply_stack");
    if (!errors.empty() && errors.size() != stack.size()) {
        throw DimensionError("apply_stack: expected one error vector per operator");
    }
    StackPass pass;
    pass.phis.reserve(stack.size() + 1);
    pass.phis.push_back(x);
    for (std::size_t i = 0; i < stack.size(); ++i) {
        Vector next = apply(stack[i], pass.phis.back());
        if (!errors.empty()) {
            require_dim(errors[i], stack.dim(), "apply_stack error term");
            next += errors[i];
        }
        pass.phis.push_back(std::move(next));
    }
    pass.last = pass.phis.back();
    return pass;
}

double fixed_point_residual(const OperatorStack& stack, const Vector& x) {
    require_dim(x, stack.dim(), "fixed_point_residual");
    double worst = 0.0;
    for (const auto& op : stack.ops()) worst = std::max(worst, (apply(op, x) - x).norm());
    return worst;
}

}  // namespace scm
