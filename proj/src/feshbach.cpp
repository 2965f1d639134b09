#include <antidot/feshbach.hpp>
#include <antidot/pauli.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <sstream>

namespace antidot {
namespace {

std::vector<Eigen::Index> q0_indices(const FiberOperator& op) {
  const Eigen::Index z0 = op.basis().zero_mode();
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(op.dim() - 2));
  for (Eigen::Index i = 0; i < op.dim(); ++i)
    if (i / 2 != z0) keep.push_back(i);
  return keep;
}

void zero_p0_rows(const FiberOperator& op, MatrixXc& x) {
  const Eigen::Index z0 = op.basis().zero_mode();
  x.row(2 * z0).setZero();
  x.row(2 * z0 + 1).setZero();
}

// y = beta sigma3 (chi * x), columnwise.
void apply_mass(const FiberOperator& op, const MatrixXc& x, MatrixXc& y) {
  y.resize(x.rows(), x.cols());
  VectorXc in(x.rows()), out(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    in = x.col(c);
    op.kernel().convolve(in.data(), out.data());
    for (Eigen::Index r = 0; r < x.rows(); r += 2) {
      y(r, c) = op.beta() * out(r);
      y(r + 1, c) = -op.beta() * out(r + 1);
    }
  }
}

// (2 pi sigma.(m - k) - z)^{-1} on every mode except m = 0.
void apply_free_q0_resolvent(const FiberOperator& op, double z, const MatrixXc& x, MatrixXc& y) {
  y.resize(x.rows(), x.cols());
  const Eigen::Index z0 = op.basis().zero_mode();
  for (Eigen::Index i = 0; i < op.basis().modes(); ++i) {
    if (i == z0) {
      y.row(2 * i).setZero();
      y.row(2 * i + 1).setZero();
      continue;
    }
    const Vec2 v = kTwoPi * op.momentum(i);
    const double denom = v.squaredNorm() - z * z;
    if (std::abs(denom) < 1e-14 * (v.squaredNorm() + 1.0)) {
      std::ostringstream msg;
      msg << "free Q0 resolvent is singular at z = " << z;
      throw NumericalError(msg.str());
    }
    const cplx minus(v(0), -v(1)), plus(v(0), v(1));
    // (sigma.v + z) / (|v|^2 - z^2)
    const Eigen::RowVectorXcd top = (z * x.row(2 * i) + minus * x.row(2 * i + 1)) / denom;
    const Eigen::RowVectorXcd bottom = (plus * x.row(2 * i) + z * x.row(2 * i + 1)) / denom;
    y.row(2 * i) = top;
    y.row(2 * i + 1) = bottom;
  }
}

Matrix2c schur_matrix_free(const FiberOperator& op, double z) {
  const MatrixXc cols = q0_coupling(op);
  const MatrixXc x = q0_solve(op, z, cols);
  return p0_block(op) - z * Matrix2c::Identity() - cols.adjoint() * x;
}

double smallest_singular_2x2(const Matrix2c& f) { return Eigen::JacobiSVD<Matrix2c>(f).singularValues()(1); }

void check_real_z(double z) {
  if (!(std::abs(z) <= kPi / 2)) {
    std::ostringstream msg;
    msg << "z = " << z << " outside [-pi/2, pi/2]";
    throw ValidationError(msg.str());
  }
}

}  // namespace

Matrix2c p0_block(const FiberOperator& op) {
  const Eigen::Index z0 = op.basis().zero_mode();
  if (op.has_dense()) return op.dense().block(2 * z0, 2 * z0, 2, 2);
  MatrixXc e = MatrixXc::Zero(op.dim(), 2), he;
  e(2 * z0, 0) = 1;
  e(2 * z0 + 1, 1) = 1;
  op.apply(e, he);
  return he.middleRows(2 * z0, 2);
}

MatrixXc q0_coupling(const FiberOperator& op) {
  const Eigen::Index z0 = op.basis().zero_mode();
  MatrixXc cols;
  if (op.has_dense()) {
    cols = op.dense().middleCols(2 * z0, 2);
  } else {
    MatrixXc e = MatrixXc::Zero(op.dim(), 2);
    e(2 * z0, 0) = 1;
    e(2 * z0 + 1, 1) = 1;
    op.apply(e, cols);
  }
  zero_p0_rows(op, cols);
  return cols;
}

MatrixXc q0_solve(const FiberOperator& op, double z, const MatrixXc& rhs, const Q0SolveOptions& options) {
  MatrixXc b = rhs;
  zero_p0_rows(op, b);
  MatrixXc x, next, mass;
  apply_free_q0_resolvent(op, z, b, x);
  if (op.beta() == 0.0) return x;
  double previous = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    apply_mass(op, x, mass);
    zero_p0_rows(op, mass);
    apply_free_q0_resolvent(op, z, b - mass, next);
    const double delta = (next - x).norm();
    const double size = next.norm();
    x.swap(next);
    if (delta <= options.tol * size) return x;
    if (delta >= previous) {
      if (delta <= 1e-13 * size) return x;  // round-off floor
      if (++growth >= 3) break;
    } else {
      growth = 0;
    }
    previous = delta;
  }
  std::ostringstream msg;
  msg << "Q0 resolvent iteration did not contract at z = " << z << " (beta = " << op.beta() << ")";
  throw NumericalError(msg.str());
}

SchurComplement schur_complement(const FiberOperator& op, double z) {
  SchurComplement out;
  if (!op.has_dense()) {
    out.f = schur_matrix_free(op, z);
    return out;
  }
  const MatrixXc& h = op.dense();
  const auto keep = q0_indices(op);
  const Eigen::Index z0 = op.basis().zero_mode();
  const std::vector<Eigen::Index> p0 = {2 * z0, 2 * z0 + 1};
  MatrixXc d = h(keep, keep);
  const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<MatrixXc>(d, Eigen::EigenvaluesOnly).eigenvalues();
  const Eigen::ArrayXd sv = (lambda.array() - z).abs();
  out.q0_smallest_singular = sv.minCoeff();
  out.q0_condition = sv.maxCoeff() / sv.minCoeff();
  if (out.q0_smallest_singular < 1e-10 * op.norm_bound()) {
    std::ostringstream msg;
    msg << "Q0 block of h - z is singular at z = " << z << " (smallest singular value " << out.q0_smallest_singular
        << ")";
    throw NumericalError(msg.str());
  }
  d.diagonal().array() -= z;
  const MatrixXc c = h(keep, p0);
  const MatrixXc x = Eigen::PartialPivLU<MatrixXc>(d).solve(c);
  out.f = h(p0, p0) - z * Matrix2c::Identity() - c.adjoint() * x;
  return out;
}

double q0_smallest_singular(const FiberOperator& op, double z) {
  if (op.has_dense()) {
    const auto keep = q0_indices(op);
    const MatrixXc d = op.dense()(keep, keep);
    const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<MatrixXc>(d, Eigen::EigenvaluesOnly).eigenvalues();
    return (lambda.array() - z).abs().minCoeff();
  }
  // Fold Q0 (h - z) Q0 and push the P0 directions far away.
  const double shift = 2.0 * op.norm_bound() + std::abs(z);
  const Eigen::Index z0 = op.basis().zero_mode();
  FoldedProblem problem;
  problem.dim = op.dim();
  problem.apply = [&op, z, z0, shift](const MatrixXc& x, MatrixXc& y) {
    MatrixXc xq = x;
    zero_p0_rows(op, xq);
    op.apply(xq, y);
    y -= z * xq;
    zero_p0_rows(op, y);
    y.row(2 * z0) = shift * x.row(2 * z0);
    y.row(2 * z0 + 1) = shift * x.row(2 * z0 + 1);
  };
  problem.preconditioner.resize(op.dim());
  for (Eigen::Index i = 0; i < op.basis().modes(); ++i) {
    const double t = 1.0 / (4.0 * kPi * kPi * op.momentum(i).squaredNorm() + 1.0);
    problem.preconditioner(2 * i) = t;
    problem.preconditioner(2 * i + 1) = t;
  }
  problem.preconditioner(2 * z0) = problem.preconditioner(2 * z0 + 1) = 1.0 / (shift * shift);
  IterativeOptions options;
  options.count = 1;
  options.guard = 10;
  problem.initial = kinetic_start_block(op, options.count + options.guard + 2).rightCols(options.count + options.guard);
  problem.norm_estimate = shift;
  const Spectrum s = folded_lobpcg(problem, options);
  return std::abs(s.eigenvalues.front());
}

Matrix2c coupling_correction(const FiberOperator& op, double z) {
  return schur_complement(op, z).f - (p0_block(op) - z * Matrix2c::Identity());
}

PolishResult polish_eigenvalue(const FiberOperator& op, double z, int max_iterations) {
  PolishResult out;
  out.value = z;
  if (!(std::abs(z) < kPi / 2)) return out;
  try {
    for (int it = 1; it <= max_iterations; ++it) {
      const Matrix2c g = schur_matrix_free(op, z) + z * Matrix2c::Identity();
      const Eigen::Vector2d mu = Eigen::SelfAdjointEigenSolver<Matrix2c>(0.5 * (g + g.adjoint())).eigenvalues();
      const double next = std::abs(mu(0) - z) <= std::abs(mu(1) - z) ? mu(0) : mu(1);
      const double step = std::abs(next - z);
      z = next;
      out.iterations = it;
      out.last_step = step;
      if (step <= 4e-16 * std::max(std::abs(z), 1e-300)) {
        out.converged = true;
        break;
      }
      if (it > 3 && step <= 1e-15 * std::max(std::abs(z), 1e-3)) {
        out.converged = true;
        break;
      }
    }
  } catch (const NumericalError&) {
    out.converged = false;
    return out;
  }
  out.value = z;
  return out;
}

WruResult wru_norm(const MassProfile& profile, double alpha, double beta, double z, int cutoff, const Vec2& k,
                   bool signed_root) {
  check_real_z(z);
  if (!(beta >= 0)) throw ValidationError("wru_norm: beta must be >= 0");
  WruResult out;
  if (beta == 0.0) return out;
  const int samples = 8 * 2 * cutoff + 8;
  const MassProfile root = profile.sqrt_abs(false, samples);
  const FourierTable g_table(root, alpha, cutoff);
  const FourierTable s_table(signed_root ? profile.sqrt_abs(true, samples) : root, alpha, cutoff);
  const ConvolutionGrid g(g_table, cutoff), s(s_table, cutoff);
  // Free operator at k supplies momenta and the Q0 resolvent.
  const FiberOperator free_op(std::make_shared<const MassKernel>(profile, alpha, cutoff), 0.0, k,
                              AssembleOptions{false});
  const Eigen::Index n = free_op.dim();

  auto convolve = [](const ConvolutionGrid& grid, const MatrixXc& x) {
    MatrixXc y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      grid.apply(x.col(c).data(), 2, y.col(c).data(), 2);
      grid.apply(x.col(c).data() + 1, 2, y.col(c).data() + 1, 2);
    }
    return y;
  };
  auto sigma3 = [](MatrixXc& x) {
    for (Eigen::Index r = 1; r < x.rows(); r += 2) x.row(r) *= -1.0;
  };
  // T = beta G sigma3 R0 Q0 S, T^dagger = beta S Q0 R0 sigma3 G.
  auto apply_t = [&](const MatrixXc& x) {
    MatrixXc u = convolve(s, x), r;
    zero_p0_rows(free_op, u);
    apply_free_q0_resolvent(free_op, z, u, r);
    sigma3(r);
    return MatrixXc(beta * convolve(g, r));
  };
  auto apply_t_adjoint = [&](const MatrixXc& y) {
    MatrixXc u = convolve(g, y), r;
    sigma3(u);
    zero_p0_rows(free_op, u);
    apply_free_q0_resolvent(free_op, z, u, r);
    return MatrixXc(beta * convolve(s, r));
  };

  // Lanczos with full reorthogonalisation on T^dagger T.
  std::mt19937_64 rng(0x1a2b);
  std::normal_distribution<double> normal;
  VectorXc v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(normal(rng), normal(rng));
  v.normalize();
  const int steps = static_cast<int>(std::min<Eigen::Index>(n, 120));
  MatrixXc basis(n, steps);
  std::vector<double> diag, off;
  double previous = -1;
  for (int j = 0; j < steps; ++j) {
    basis.col(j) = v;
    VectorXc w = apply_t_adjoint(apply_t(v));
    diag.push_back(v.dot(w).real());
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
    const double b = w.norm();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j + 1, j + 1);
    for (int i = 0; i <= j; ++i) t(i, i) = diag[i];
    for (int i = 0; i < j; ++i) t(i, i + 1) = t(i + 1, i) = off[i];
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    out.iterations = j + 1;
    out.norm = std::sqrt(std::max(top, 0.0));
    if (b <= 1e-14 * std::max(top, 1e-300) || (previous >= 0 && std::abs(top - previous) <= 1e-14 * top)) break;
    previous = top;
    off.push_back(b);
    v = w / b;
  }
  return out;
}

MMatrix m_matrix(const MassProfile& profile, double beta, const Vec2& k, int cutoff) {
  if (!(beta >= 0)) throw ValidationError("m_matrix: beta must be >= 0");
  const FiberOperator op0 = assemble(profile, 1.0, beta, Vec2::Zero(), cutoff, AssembleOptions{false});
  MMatrix out;
  out.m = -kTwoPi * pauli::dot(k) + coupling_correction(op0, 0.0);
  out.w_vector = pauli::trace_vector<double>(out.m);
  return out;
}

double w_value(const MassProfile& profile, double beta, int cutoff) {
  const MassProfile operator_profile = beta < 0 ? profile.scaled(-1.0) : profile;
  const FiberOperator op0 =
      assemble(operator_profile, 1.0, std::abs(beta), Vec2::Zero(), cutoff, AssembleOptions{false});
  const FourierTable& table = op0.kernel().table();
  const double sign = beta < 0 ? -1.0 : 1.0;
  MatrixXc cols = MatrixXc::Zero(op0.dim(), 2);
  for (Eigen::Index i = 0; i < op0.basis().modes(); ++i) {
    const cplx c = sign * table(op0.basis().mode(i));
    cols(2 * i, 0) = c;
    cols(2 * i + 1, 1) = c;
  }
  zero_p0_rows(op0, cols);
  const MatrixXc x = q0_solve(op0, 0.0, cols);
  const MatrixXc y = cols.adjoint() * x;
  return (y(0, 0) - y(1, 1)).real();
}

WPrime w_prime_zero(const MassProfile& profile, int cutoff, double step) {
  if (!(profile.linf_norm() > 0)) throw ValidationError("w_prime_zero: zero profile");
  WPrime out;
  out.step = step > 0 ? step : 1e-3 / profile.linf_norm();
  out.s_chi = hyp1_sum(profile, cutoff).value;
  out.analytic = out.s_chi / (2 * kPi * kPi);
  out.finite_difference = (w_value(profile, out.step, cutoff) - w_value(profile, -out.step, cutoff)) / (2 * out.step);
  const double scale = std::max(std::abs(out.analytic), std::abs(out.finite_difference));
  out.relative_gap = scale > 0 ? std::abs(out.analytic - out.finite_difference) / scale : 0.0;
  return out;
}

double feshbach_inverse_norm(const MassProfile& profile, double beta, const Vec2& k, int cutoff) {
  if (!(beta > 0 && beta < kPi / (2 * profile.linf_norm()))) {
    std::ostringstream msg;
    msg << "feshbach_inverse_norm: beta must lie in (0, pi / (2 ||chi||_inf)) = (0, "
        << kPi / (2 * profile.linf_norm()) << ")";
    throw ValidationError(msg.str());
  }
  if (std::abs(profile.phi()) > 1e-12) throw ValidationError("feshbach_inverse_norm: profile must have Phi = 0");
  const FiberOperator op = assemble(profile, 1.0, beta, k, cutoff, AssembleOptions{false});
  const double s = smallest_singular_2x2(schur_complement(op, 0.0).f);
  return s > 0 ? 1.0 / s : std::numeric_limits<double>::infinity();
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::phi_positive:
      return "phi_positive";
    case Regime::phi_zero_small_k:
      return "phi_zero_small_k";
    case Regime::phi_zero_large_k:
      return "phi_zero_large_k";
  }
  return "unknown";
}

FeshbachReport feshbach_report(const MassProfile& profile, double alpha, double beta, const Vec2& k, double z,
                               int cutoff) {
  check_real_z(z);
  FeshbachReport r;
  r.k = k;
  r.z = z;
  AssembleOptions options;
  options.dense = dense_bytes(PlaneWaveBasis(cutoff).dim()) <= 256.0 * 1024 * 1024;
  const FiberOperator op = assemble(profile, alpha, beta, k, cutoff, options);
  r.schur = schur_complement(op, z);
  const Matrix2c a = p0_block(op) - z * Matrix2c::Identity();
  r.norm_coupling = Eigen::JacobiSVD<Matrix2c>(r.schur.f - a).singularValues()(0);
  const double s = smallest_singular_2x2(r.schur.f);
  r.norm_finv = s > 0 ? 1.0 / s : std::numeric_limits<double>::infinity();
  r.norm_wru = wru_norm(profile, alpha, beta, z, cutoff, k).norm;
  if (alpha == 1.0) {
    r.w_vector = m_matrix(profile, beta, k, cutoff).w_vector;
    r.w_value = w_value(profile, beta, cutoff);
    r.s_chi = hyp1_sum(profile, std::max(cutoff, profile.mode_extent().value_or(cutoff))).value;
  }
  if (std::abs(profile.phi()) > 1e-12)
    r.regime = Regime::phi_positive;
  else
    r.regime = k.norm() <= 2 * beta * beta / (kPi * kPi) ? Regime::phi_zero_small_k : Regime::phi_zero_large_k;
  return r;
}

}  // namespace antidot
