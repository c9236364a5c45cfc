#pragma once

#include "scm/types.hpp"

#include <optional>
#include <variant>

namespace scm {

struct IdentityMap {};

/// F(x) = x - a; the VIP solution is the projection of a.
struct ClosestPointMap {
    Vector a;
};

/// F(x) = Ax + b.
struct AffineMap {
    Matrix A;
    Vector b;
};

/// Strongly monotone, Lipschitz continuous map F with its certified moduli
/// eta (strong monotonicity) and kappa (Lipschitz), kappa >= eta > 0.
class MonotoneMap {
public:
    using Kind = std::variant<IdentityMap, ClosestPointMap, AffineMap>;

    static MonotoneMap identity(Eigen::Index dim);
    static MonotoneMap closest_point(Vector a);

    /// eta and kappa are computed from the spectrum of A. A declared pair is
    /// accepted only if it is no tighter than the computed one (up to 1e-8);
    /// the declared, more conservative, values are then used.
    static MonotoneMap affine(Matrix A, Vector b, std::optional<double> declared_eta = std::nullopt,
                              std::optional<double> declared_kappa = std::nullopt);

    const Kind& kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }
    double eta() const { return eta_; }
    double kappa() const { return kappa_; }

    /// Upper end of the admissible step interval (0, 2 eta / kappa^2).
    double mu_upper() const { return 2.0 * eta_ / (kappa_ * kappa_); }
    /// Midpoint of the admissible interval, used when mu is "auto".
    double mu_auto() const { return eta_ / (kappa_ * kappa_); }

private:
    MonotoneMap(Kind kind, Eigen::Index dim, double eta, double kappa);

    Kind kind_;
    Eigen::Index dim_;
    double eta_;
    double kappa_;
};

Vector eval(const MonotoneMap& F, const Vector& x);

/// A single (mu, beta) pair validated against a map:
/// 0 < mu < 2 eta / kappa^2 and 0 < beta <= 1.
struct StepParams {
    double mu;
    double beta;

    static StepParams checked(const MonotoneMap& F, double mu, double beta);
};

void validate_mu(double mu, double eta, double kappa);

/// Contraction modulus tau = 1 - sqrt(1 + mu^2 kappa^2 - 2 mu eta) of
/// x -> x - mu beta F(x); the map contracts with factor 1 - beta * tau.
double tau(double mu, double eta, double kappa);

/// x - mu * beta * F(x).
Vector u_beta_step(const MonotoneMap& F, const StepParams& p, const Vector& x);

}  // namespace scm
