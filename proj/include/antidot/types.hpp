#ifndef ANTIDOT_TYPES_HPP
#define ANTIDOT_TYPES_HPP

#include <Eigen/Core>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace antidot {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec2i = Eigen::Vector2i;
using Matrix2c = Eigen::Matrix2cd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Argument outside the domain of a special function or kernel.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Input rejected by a precondition check (maps to CLI exit code 2).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to deliver its contract (exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace antidot

#endif
