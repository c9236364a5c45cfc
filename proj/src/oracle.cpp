#include "scm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace scm::oracle {
namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kRankTol = 1e-10;

struct Candidate {
    Vector point;
    double dist2;
    std::vector<std::size_t> active;  // halfspace indices; ball encoded as m
    Vector multipliers;
    bool ball_active;
    double ball_multiplier;
};

bool precedes(const Candidate& lhs, const Candidate& rhs) {
    const double tie = 1e-12 * (1.0 + std::max(lhs.dist2, rhs.dist2));
    if (lhs.dist2 < rhs.dist2 - tie) return true;
    if (rhs.dist2 < lhs.dist2 - tie) return false;
    return std::lexicographical_compare(lhs.active.begin(), lhs.active.end(), rhs.active.begin(), rhs.active.end());
}

double problem_scale(const ConstraintSet& C, const Vector& y) {
    double scale = 1.0 + y.norm();
    for (const auto& h : C.polyhedron.halfspaces) scale = std::max(scale, 1.0 + std::abs(h.b) / h.a.norm());
    if (C.ball) scale = std::max(scale, 1.0 + C.ball->center.norm() + C.ball->radius);
    return scale;
}

bool feasible(const ConstraintSet& C, const Vector& x, double tol) {
    for (const auto& h : C.polyhedron.halfspaces) {
        if (h.a.dot(x) - h.b > tol * h.a.norm()) return false;
    }
    if (C.ball && (x - C.ball->center).norm() - C.ball->radius > tol) return false;
    return true;
}

void validate(const ConstraintSet& C) {
    if (C.dim < 1) throw DimensionError("constraint set: dimension must be >= 1");
    if (C.polyhedron.halfspaces.size() > kMaxEnumerationConstraints || C.dim > kMaxEnumerationDim) {
        std::ostringstream msg;
        msg << "exact projection budget exceeded: " << C.polyhedron.halfspaces.size() << " halfspaces in dimension "
            << C.dim << " (limits " << kMaxEnumerationConstraints << " and " << kMaxEnumerationDim << ")";
        throw BudgetExceeded(msg.str());
    }
    for (const auto& h : C.polyhedron.halfspaces) {
        require_dim(h.a, C.dim, "halfspace normal");
        if (!(h.a.norm() > 0.0)) throw ParameterError("halfspace normal must be nonzero");
    }
    if (C.ball) {
        require_dim(C.ball->center, C.dim, "ball center");
        if (!(C.ball->radius > 0.0)) throw ParameterError("ball radius must be positive");
    }
}

// Affine-set data for one active subset: rows of A_S and b_S, plus a
// factorization of the Gram matrix A_S A_S^T.
struct ActiveRows {
    Matrix A;  // k x d
    Vector b;  // k
    Eigen::LDLT<Matrix> gram;

    // Projection of v onto {x : A x = b} and the matching multipliers.
    Vector project(const Vector& v, Vector* multipliers = nullptr) const {
        if (A.rows() == 0) {
            if (multipliers) multipliers->resize(0);
            return v;
        }
        Vector lambda = gram.solve(A * v - b);
        if (multipliers) *multipliers = lambda;
        return v - A.transpose() * lambda;
    }
};

std::optional<ActiveRows> active_rows(const Polyhedron& P, Eigen::Index dim, unsigned mask,
                                      std::vector<std::size_t>& indices) {
    indices.clear();
    for (std::size_t i = 0; i < P.halfspaces.size(); ++i) {
        if (mask & (1u << i)) indices.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(indices.size());
    if (k > dim) return std::nullopt;
    ActiveRows rows;
    rows.A.resize(k, dim);
    rows.b.resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const auto& h = P.halfspaces[indices[static_cast<std::size_t>(r)]];
        rows.A.row(r) = h.a.transpose() / h.a.norm();
        rows.b(r) = h.b / h.a.norm();
    }
    if (k > 0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(rows.A.transpose());
        qr.setThreshold(kRankTol);
        if (qr.rank() < k) return std::nullopt;  // redundant active set
        rows.gram.compute(rows.A * rows.A.transpose());
    }
    return rows;
}

}  // namespace

bool ConstraintSet::contains(const Vector& x, double tol) const {
    require_dim(x, dim, "constraint set membership");
    return feasible(*this, x, tol);
}

std::optional<ExactProjection> project_exact(const ConstraintSet& C, const Vector& y) {
    validate(C);
    require_dim(y, C.dim, "exact projection");
    require_finite(y, "exact projection input");

    const std::size_t m = C.polyhedron.halfspaces.size();
    const double scale = problem_scale(C, y);
    const double tol = kFeasTol * scale;
    std::optional<Candidate> best;
    std::vector<std::size_t> indices;

    auto consider = [&](Candidate cand) {
        if (!best || precedes(cand, *best)) best = std::move(cand);
    };

    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        auto rows = active_rows(C.polyhedron, C.dim, mask, indices);
        if (!rows) continue;

        // Ball inactive: x = y - A_S^T lambda with lambda >= 0.
        {
            Vector lambda;
            Vector x = rows->project(y, &lambda);
            if (x.allFinite() && (lambda.array() >= -tol).all() && feasible(C, x, tol)) {
                Vector unscaled(lambda.size());
                for (Eigen::Index r = 0; r < lambda.size(); ++r) {
                    unscaled(r) = lambda(r) / C.polyhedron.halfspaces[indices[static_cast<std::size_t>(r)]].a.norm();
                }
                consider(Candidate{x, (y - x).squaredNorm(), indices, unscaled, false, 0.0});
            }
        }

        // Ball active: project onto the sphere within the affine set.
        if (!C.ball) continue;
        const Vector& center = C.ball->center;
        const Vector p = rows->project(y);
        const Vector c_aff = rows->project(center);
        const double s2 = C.ball->radius * C.ball->radius - (center - c_aff).squaredNorm();
        if (s2 < 0.0) continue;
        const Vector dir = p - c_aff;
        const double dir_norm = dir.norm();
        if (!(dir_norm > 0.0)) continue;
        const Vector x = c_aff + (std::sqrt(s2) / dir_norm) * dir;
        if (!x.allFinite() || !feasible(C, x, tol)) continue;

        const auto k = rows->A.rows();
        Matrix M(C.dim, k + 1);
        M.leftCols(k) = rows->A.transpose();
        M.col(k) = x - center;
        const Vector rhs = y - x;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
        const Vector w = cod.solve(rhs);
        if (!w.allFinite() || (M * w - rhs).norm() > tol) continue;
        if ((w.head(k).array() < -tol).any() || w(k) * (x - center).norm() < -tol) continue;

        Vector unscaled(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            unscaled(r) = w(r) / C.polyhedron.halfspaces[indices[static_cast<std::size_t>(r)]].a.norm();
        }
        std::vector<std::size_t> active = indices;
        active.push_back(m);
        consider(Candidate{x, (y - x).squaredNorm(), std::move(active), unscaled, true, std::max(w(k), 0.0)});
    }

    if (!best) return std::nullopt;
    ExactProjection out;
    out.point = std::move(best->point);
    out.active_set = std::move(best->active);
    out.ball_active = best->ball_active;
    if (out.ball_active) out.active_set.pop_back();
    out.multipliers = std::move(best->multipliers);
    out.ball_multiplier = best->ball_multiplier;
    return out;
}

std::optional<ExactProjection> project_polyhedron_exact(const Polyhedron& P, const Vector& y) {
    ConstraintSet C;
    C.dim = y.size();
    C.polyhedron = P;
    return project_exact(C, y);
}

std::optional<ConstraintSet> constraint_set_from_stack(const OperatorStack& stack) {
    ConstraintSet C;
    C.dim = stack.dim();
    auto& hs = C.polyhedron.halfspaces;
    for (const auto& op : stack.ops()) {
        if (const auto* h = op.get_if<HalfspaceProjection>()) {
            hs.push_back({h->a, h->b});
        } else if (const auto* h = op.get_if<HyperplaneProjection>()) {
            hs.push_back({h->a, h->b});
            hs.push_back({-h->a, -h->b});
        } else if (const auto* box = op.get_if<BoxProjection>()) {
            for (Eigen::Index j = 0; j < C.dim; ++j) {
                hs.push_back({Vector::Unit(C.dim, j), box->hi(j)});
                hs.push_back({-Vector::Unit(C.dim, j), -box->lo(j)});
            }
        } else if (const auto* ball = op.get_if<BallProjection>()) {
            if (C.ball) return std::nullopt;
            C.ball = Ball{ball->center, ball->radius};
        } else {
            return std::nullopt;
        }
    }
    return C;
}

Projector exact_projector(ConstraintSet C) {
    return [C = std::move(C)](const Vector& y) -> Vector {
        auto proj = project_exact(C, y);
        if (!proj) throw Error("exact projection: constraint set is empty");
        return proj->point;
    };
}

Vector solve_vip_reference(const MonotoneMap& F, const Projector& project_C, const Vector& x0,
                           const ReferenceOptions& options) {
    require_dim(x0, F.dim(), "reference solver initial point");
    const double gamma = F.mu_auto();
    Vector x = project_C(x0);
    for (std::int64_t k = 0; k < options.max_iters; ++k) {
        Vector next = project_C(x - gamma * eval(F, x));
        const double step = (next - x).norm();
        x = std::move(next);
        if (step <= options.step_tol) return x;
    }
    throw NonConvergence("reference solver did not reach step tolerance within " + std::to_string(options.max_iters) +
                         " iterations");
}

double vip_residual(const MonotoneMap& F, const Vector& x, const std::vector<Vector>& feasible_samples) {
    if (feasible_samples.empty()) throw ParameterError("vip_residual: empty sample list");
    const Vector Fx = eval(F, x);
    double worst = 0.0;
    for (const auto& v : feasible_samples) {
        require_dim(v, x.size(), "vip_residual sample");
        worst = std::max(worst, -Fx.dot(v - x));
    }
    return worst;
}

std::vector<Vector> sample_feasible_points(const ConstraintSet& C, const Vector& center, double half_width,
                                           std::size_t count, std::uint64_t seed, std::size_t max_attempts) {
    require_dim(center, C.dim, "sampling center");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t attempt = 0; out.size() < count; ++attempt) {
        if (attempt >= max_attempts) throw Error("sample_feasible_points: acceptance rate too low");
        Vector v(C.dim);
        for (Eigen::Index j = 0; j < C.dim; ++j) v(j) = center(j) + half_width * unit(gen);
        if (feasible(C, v, 0.0)) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace scm::oracle
