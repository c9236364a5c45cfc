#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A numeric parameter lies outside the range required for convergence
// (step sizes, schedules, error summability, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

class ScheduleExhausted : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

void require_dim(const Vector& x, Eigen::Index dim, const char* what);
void require_finite(const Vector& x, const char* what);

// Deterministic 64-bit mixer (splitmix64 finalizer). Used to derive
// independent generator seeds from structured keys.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);
std::uint64_t derive_seed(std::uint64_t base, const std::string& name);

}  // namespace scm
