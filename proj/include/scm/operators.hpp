#pragma once

#include "scm/types.hpp"

#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace scm {

/// Metric projection onto {x : <a, x> <= b}.
struct HalfspaceProjection {
    Vector a;
    double b = 0.0;
};

/// Metric projection onto the closed ball of the given center and radius.
struct BallProjection {
    Vector center;
    double radius = 1.0;
};

/// Componentwise clamp onto [lo, hi].
struct BoxProjection {
    Vector lo;
    Vector hi;
};

/// Metric projection onto {x : <a, x> = b}.
struct HyperplaneProjection {
    Vector a;
    double b = 0.0;
};

/// Proximal map of t * ||.||_1 (componentwise soft thresholding).
struct SoftThreshold {
    double t = 1.0;
    Eigen::Index dim = 0;
};

/// Resolvent (I + rA)^{-1} of a monotone linear operator A.
struct LinearResolvent {
    Matrix A;
    double r = 1.0;
};

/// Deliberately broken maps used to exercise the verifier. They are not
/// firmly nonexpansive; see `is_certified_fne`.
///  - Doubling: x -> 2x.
///  - Sawtooth: componentwise s -> s/2 (s <= 2), 1 - (s-2)/2 (2 < s <= 4),
///    0 (s > 4). Nonexpansive and a cutter with Fix = {0}, but decreasing
///    on (2, 4) and therefore not firmly nonexpansive.
struct NonFneFixture {
    enum class Kind { Doubling, Sawtooth };
    Kind kind = Kind::Doubling;
    Eigen::Index dim = 0;
};

/// One operator T_i of the family. Instances are validated on construction
/// through the `make_*` factories and immutable afterwards.
class FneOperator {
public:
    using Kind = std::variant<HalfspaceProjection, BallProjection, BoxProjection,
                              HyperplaneProjection, SoftThreshold, LinearResolvent,
                              NonFneFixture>;

    static FneOperator halfspace(Vector a, double b);
    static FneOperator ball(Vector center, double radius);
    static FneOperator box(Vector lo, Vector hi);
    static FneOperator hyperplane(Vector a, double b);
    static FneOperator soft_threshold(double t, Eigen::Index dim);
    static FneOperator linear_resolvent(Matrix A, double r);
    static FneOperator fixture(NonFneFixture::Kind kind, Eigen::Index dim);

    const Kind& kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }
    std::string_view type_name() const;

    bool is_projection() const;
    bool is_certified_fne() const { return !std::holds_alternative<NonFneFixture>(kind_); }

    template <class T>
    const T* get_if() const { return std::get_if<T>(&kind_); }

private:
    FneOperator(Kind kind, Eigen::Index dim);

    Kind kind_;
    Eigen::Index dim_;
    // LU factorization of I + rA, computed once for LinearResolvent.
    std::shared_ptr<const Eigen::PartialPivLU<Matrix>> resolvent_lu_;

    friend Vector apply(const FneOperator& op, const Vector& x);
};

/// Evaluates T(x).
Vector apply(const FneOperator& op, const Vector& x);

/// The ordered family T_1, ..., T_m sharing one ambient dimension.
class OperatorStack {
public:
    explicit OperatorStack(std::vector<FneOperator> ops);

    std::size_t size() const { return ops_.size(); }
    Eigen::Index dim() const { return dim_; }
    const FneOperator& operator[](std::size_t i) const { return ops_[i]; }
    std::span<const FneOperator> ops() const { return ops_; }

private:
    std::vector<FneOperator> ops_;
    Eigen::Index dim_;
};

struct StackPass {
    Vector last;                 // phi_m
    std::vector<Vector> phis;    // phi_0, ..., phi_m
};

/// Sequential pass phi_i = T_i(phi_{i-1}) + e_i starting at phi_0 = x.
/// An empty `errors` means e_i = 0; otherwise it must hold exactly one
/// vector per operator.
StackPass apply_stack(const OperatorStack& stack, const Vector& x,
                      std::span<const Vector> errors = {});

/// max_i ||T_i x - x||, evaluated without errors.
double fixed_point_residual(const OperatorStack& stack, const Vector& x);

}  // namespace scm
