#ifndef ANTIDOT_FESHBACH_HPP
#define ANTIDOT_FESHBACH_HPP

#include <antidot/fiber.hpp>
#include <antidot/potential.hpp>

#include <limits>
#include <string>

namespace antidot {

/// The zero-mode block P0 h P0 (rows/columns 2 z0, 2 z0 + 1).
Matrix2c p0_block(const FiberOperator& op);

/// Q0 h P0 as two full-length columns with the P0 rows set to zero.
MatrixXc q0_coupling(const FiberOperator& op);

struct Q0SolveOptions {
  double tol = 1e-15;
  int max_iterations = 400;
};

/// Solves Q0 (h - z) Q0 x = rhs on the range of Q0 without a dense matrix.
///
/// Richardson iteration preconditioned by the exact inverse of the kinetic
/// part, (2 pi sigma.v - z)^{-1} = (2 pi sigma.v + z) / (4 pi^2 |v|^2 - z^2).
/// Throws NumericalError when the iteration does not contract.
MatrixXc q0_solve(const FiberOperator& op, double z, const MatrixXc& rhs, const Q0SolveOptions& options = {});

struct SchurComplement {
  Matrix2c f = Matrix2c::Zero();
  double q0_smallest_singular = std::numeric_limits<double>::quiet_NaN();
  double q0_condition = std::numeric_limits<double>::quiet_NaN();
};

/// F(z) = P0 (h - z) P0 - P0 h Q0 (Q0 (h - z) Q0)^{-1} Q0 h P0.
///
/// Dense operators go through an eigen-decomposition of the Q0 block, which
/// also yields its singular values; a singular value below 1e-10 ||H||
/// raises NumericalError. Matrix-free operators use q0_solve and leave the
/// singular-value fields unset.
SchurComplement schur_complement(const FiberOperator& op, double z);

/// Smallest singular value of Q0 (h - z) Q0.
double q0_smallest_singular(const FiberOperator& op, double z);

/// B_{P0}(z) = F(z) - P0 (h - z) P0, the coupling correction.
Matrix2c coupling_correction(const FiberOperator& op, double z);

/// Eigenvalue of h near z refined through the Schur complement: iterate
/// z <- eigenvalue of F(z) + z closest to z. Requires |z| < pi/2.
struct PolishResult {
  double value = 0;
  int iterations = 0;
  bool converged = false;
  double last_step = 0;
};
PolishResult polish_eigenvalue(const FiberOperator& op, double z, int max_iterations = 30);

struct WruResult {
  double norm = 0;
  int iterations = 0;
};

/// Spectral norm of the truncated W R0(z) U with W = sqrt(beta) sqrt|chi_a| sigma3 Q0,
/// U = sqrt(beta) Q0 sgn(chi_a) sqrt|chi_a| and R0 the free Q0 resolvent at k.
/// With signed = false the sign factor is dropped.
WruResult wru_norm(const MassProfile& profile, double alpha, double beta, double z, int cutoff,
                   const Vec2& k = Vec2::Zero(), bool signed_root = true);

struct MMatrix {
  Matrix2c m = Matrix2c::Zero();
  Eigen::Vector3d w_vector = Eigen::Vector3d::Zero();  ///< (Tr sigma_i m)
};

/// m_k(beta) = -2 pi sigma.k - beta^2 sigma3 P0 chi Q0 (Q0 h_0(1, beta) Q0)^{-1} Q0 chi P0 sigma3.
MMatrix m_matrix(const MassProfile& profile, double beta, const Vec2& k, int cutoff);

/// w(beta) = Tr(P0 chi Q0 (Q0 h_0(1, beta) Q0)^{-1} Q0 chi P0 sigma3), so that
/// Tr(sigma3 m_k(beta)) = -beta^2 w(beta).
double w_value(const MassProfile& profile, double beta, int cutoff);

struct WPrime {
  double s_chi = 0;             ///< triple sum at the same cutoff
  double analytic = 0;          ///< S / (2 pi^2)
  double finite_difference = 0; ///< (w(h) - w(-h)) / 2h
  double step = 0;
  double relative_gap = 0;      ///< |analytic - fd| / max(|analytic|, |fd|)
};

/// Two evaluations of w'(0): the closed triple-sum value and a central
/// difference of w. Default step 1e-3 / ||chi||_inf.
WPrime w_prime_zero(const MassProfile& profile, int cutoff, double step = 0);

/// ||F_k(0)^{-1}|| at alpha = 1; +inf when F is singular.
double feshbach_inverse_norm(const MassProfile& profile, double beta, const Vec2& k, int cutoff);

enum class Regime { phi_positive, phi_zero_small_k, phi_zero_large_k };
std::string to_string(Regime r);

struct FeshbachReport {
  Vec2 k = Vec2::Zero();
  double z = 0;
  SchurComplement schur;
  Eigen::Vector3d w_vector = Eigen::Vector3d::Zero();
  double w_value = 0;
  double s_chi = 0;
  double norm_wru = 0;
  double norm_finv = 0;
  double norm_coupling = 0;
  Regime regime = Regime::phi_positive;
};

FeshbachReport feshbach_report(const MassProfile& profile, double alpha, double beta, const Vec2& k, double z,
                               int cutoff);

}  // namespace antidot

#endif
