#pragma once

#include "scm/monotone_maps.hpp"
#include "scm/operators.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace scm::oracle {

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

/// <a, x> <= b
struct Halfspace {
    Vector a;
    double b = 0.0;
};

struct Polyhedron {
    std::vector<Halfspace> halfspaces;
};

struct Ball {
    Vector center;
    double radius = 1.0;
};

/// A polyhedron intersected with at most one ball. Covers every
/// intersection of halfspace, hyperplane, box and (single) ball projections.
struct ConstraintSet {
    Eigen::Index dim = 0;
    Polyhedron polyhedron;
    std::optional<Ball> ball;

    bool contains(const Vector& x, double tol = 1e-9) const;
};

/// Exact projection together with its KKT certificate.
struct ExactProjection {
    Vector point;
    std::vector<std::size_t> active_set;  // indices into the halfspace list
    Vector multipliers;                   // one per active halfspace
    bool ball_active = false;
    double ball_multiplier = 0.0;
};

inline constexpr std::size_t kMaxEnumerationConstraints = 12;
inline constexpr Eigen::Index kMaxEnumerationDim = 12;

/// Least-distance projection by enumerating every subset of constraints as a
/// candidate active set. Returns nullopt when the set is empty.
std::optional<ExactProjection> project_polyhedron_exact(const Polyhedron& P, const Vector& y);
std::optional<ExactProjection> project_exact(const ConstraintSet& C, const Vector& y);

/// Translates a stack whose operators are all halfspace, hyperplane, box or
/// ball projections (at most one ball) into its intersection. Returns
/// nullopt for any other operator mix.
std::optional<ConstraintSet> constraint_set_from_stack(const OperatorStack& stack);

using Projector = std::function<Vector(const Vector&)>;

/// Projector backed by project_exact; throws Error if C is empty.
Projector exact_projector(ConstraintSet C);

struct ReferenceOptions {
    double step_tol = 1e-12;
    std::int64_t max_iters = 10'000'000;
};

/// Projected fixed-point iteration x <- P_C(x - gamma F(x)), gamma = eta/kappa^2.
Vector solve_vip_reference(const MonotoneMap& F, const Projector& project_C, const Vector& x0,
                           const ReferenceOptions& options = {});

/// max(0, max_v -<F(x), v - x>) over the (feasible) samples.
double vip_residual(const MonotoneMap& F, const Vector& x, const std::vector<Vector>& feasible_samples);

/// Rejection sampling from the box center +- half_width, seeded.
std::vector<Vector> sample_feasible_points(const ConstraintSet& C, const Vector& center, double half_width,
                                           std::size_t count, std::uint64_t seed,
                                           std::size_t max_attempts = 10'000'000);

}  // namespace scm::oracle
