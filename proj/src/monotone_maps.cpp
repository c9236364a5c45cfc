#include "scm/monotone_maps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scm {
namespace {

constexpr double kOverrideSlack = 1e-8;

}  // namespace

MonotoneMap::MonotoneMap(Kind kind, Eigen::Index dim, double eta, double kappa)
    : kind_(std::move(kind)), dim_(dim), eta_(eta), kappa_(kappa) {
    if (!(eta_ > 0.0) || !(kappa_ >= eta_) || !std::isfinite(kappa_)) {
        std::ostringstream msg;
        msg << "monotone map requires kappa >= eta > 0 (got eta = " << eta_ << ", kappa = " << kappa_ << ")";
        throw ParameterError(msg.str());
    }
}

MonotoneMap MonotoneMap::identity(Eigen::Index dim) {
    if (dim < 1) throw DimensionError("identity map: dimension must be >= 1");
    return MonotoneMap(IdentityMap{}, dim, 1.0, 1.0);
}

MonotoneMap MonotoneMap::closest_point(Vector a) {
    if (a.size() == 0) throw DimensionError("closest_point map: empty anchor");
    require_finite(a, "closest_point anchor");
    const auto dim = a.size();
    return MonotoneMap(ClosestPointMap{std::move(a)}, dim, 1.0, 1.0);
}

MonotoneMap MonotoneMap::affine(Matrix A, Vector b, std::optional<double> declared_eta,
                                std::optional<double> declared_kappa) {
    if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionError("affine map: A must be square and nonempty");
    require_dim(b, A.rows(), "affine map offset");
    if (!A.allFinite()) throw ParameterError("affine map: A entries must be finite");
    require_finite(b, "affine map offset");

    const Matrix sym = 0.5 * (A + A.transpose());
    double eta = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    double kappa = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
    if (!(eta > 0.0)) {
        std::ostringstream msg;
        msg << "affine map: not strongly monotone (smallest eigenvalue of the symmetric part is " << eta << ")";
        throw ParameterError(msg.str());
    }
    kappa = std::max(kappa, eta);

    if (declared_eta) {
        if (*declared_eta > eta + kOverrideSlack) {
            std::ostringstream msg;
            msg << "affine map: declared eta " << *declared_eta << " exceeds the computed modulus " << eta;
            throw ParameterError(msg.str());
        }
        eta = std::min(*declared_eta, eta);
    }
    if (declared_kappa) {
        if (*declared_kappa < kappa - kOverrideSlack) {
            std::ostringstream msg;
            msg << "affine map: declared kappa " << *declared_kappa << " is below the computed Lipschitz constant "
                << kappa;
            throw ParameterError(msg.str());
        }
        kappa = std::max(*declared_kappa, kappa);
    }
    const auto dim = A.rows();
    return MonotoneMap(AffineMap{std::move(A), std::move(b)}, dim, eta, kappa);
}

Vector eval(const MonotoneMap& F, const Vector& x) {
    require_dim(x, F.dim(), "eval");
    if (std::holds_alternative<IdentityMap>(F.kind())) return x;
    if (const auto* cp = std::get_if<ClosestPointMap>(&F.kind())) return x - cp->a;
    const auto& aff = std::get<AffineMap>(F.kind());
    return aff.A * x + aff.b;
}

void validate_mu(double mu, double eta, double kappa) {
    if (!(eta > 0.0) || !(kappa >= eta)) {
        std::ostringstream msg;
        msg << "kappa >= eta > 0 violated (eta = " << eta << ", kappa = " << kappa << ")";
        throw ParameterError(msg.str());
    }
    const double upper = 2.0 * eta / (kappa * kappa);
    if (!(mu > 0.0) || !(mu < upper)) {
        std::ostringstream msg;
        msg << "mu = " << mu << " violates mu in (0, 2*eta/kappa^2) = (0, " << upper << ")";
        throw ParameterError(msg.str());
    }
}

StepParams StepParams::checked(const MonotoneMap& F, double mu, double beta) {
    validate_mu(mu, F.eta(), F.kappa());
    if (!(beta > 0.0) || !(beta <= 1.0)) {
        std::ostringstream msg;
        msg << "beta = " << beta << " violates beta in (0, 1]";
        throw ParameterError(msg.str());
    }
    return StepParams{mu, beta};
}

double tau(double mu, double eta, double kappa) {
    validate_mu(mu, eta, kappa);
    // The radicand is >= 1 - eta^2/kappa^2 >= 0; clamp rounding below zero.
    const double radicand = std::max(0.0, 1.0 + mu * mu * kappa * kappa - 2.0 * mu * eta);
    return 1.0 - std::sqrt(radicand);
}

Vector u_beta_step(const MonotoneMap& F, const StepParams& p, const Vector& x) {
    const StepParams valid = StepParams::checked(F, p.mu, p.beta);
    return x - (valid.mu * valid.beta) * eval(F, x);
}

}  // namespace scm
