#ifndef ANTIDOT_FIBER_HPP
#define ANTIDOT_FIBER_HPP

#include <antidot/fft.hpp>
#include <antidot/potential.hpp>
#include <antidot/types.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace antidot {

/// Plane waves psi_m, max(|m1|, |m2|) <= M, ordered m1-major. The spinor
/// component s of mode i sits at position 2 i + s.
class PlaneWaveBasis {
 public:
  explicit PlaneWaveBasis(int cutoff);

  int cutoff() const { return cutoff_; }
  int side() const { return 2 * cutoff_ + 1; }
  Eigen::Index modes() const { return static_cast<Eigen::Index>(side()) * side(); }
  Eigen::Index dim() const { return 2 * modes(); }

  Vec2i mode(Eigen::Index i) const {
    return Vec2i(static_cast<int>(i / side()) - cutoff_, static_cast<int>(i % side()) - cutoff_);
  }
  Eigen::Index index(const Vec2i& m) const {
    return static_cast<Eigen::Index>(m(0) + cutoff_) * side() + (m(1) + cutoff_);
  }
  Eigen::Index zero_mode() const { return index(Vec2i::Zero()); }

 private:
  int cutoff_;
};

/// Fourier data of beta-free mass insertion chi_alpha on a basis, shared by all
/// fibres with the same (profile, alpha, M).
class MassKernel {
 public:
  MassKernel(const MassProfile& profile, double alpha, int cutoff);

  const MassProfile& profile() const { return profile_; }
  double alpha() const { return table_.alpha(); }
  int cutoff() const { return table_.cutoff(); }
  const PlaneWaveBasis& basis() const { return basis_; }
  const FourierTable& table() const { return table_; }
  const ConvolutionGrid& convolution() const { return conv_; }

  /// out_s = sum_{m'} c(m - m') in_s(m') for both spinor components (no sigma3, no beta).
  void convolve(const cplx* in, cplx* out) const;

 private:
  MassProfile profile_;
  PlaneWaveBasis basis_;
  FourierTable table_;
  ConvolutionGrid conv_;
};

enum class SolverKind { dense, iterative };

std::string to_string(SolverKind kind);

struct AssembleOptions {
  bool dense = true;
  double memory_limit_mb = 2048;
};

/// Plane-wave truncation of the fibre Hamiltonian
///   h_k(alpha, beta) = (-i grad - 2 pi k).sigma + beta chi_alpha sigma3.
///
/// Diagonal blocks are 2 pi sigma.(m - k); block (m, m') carries
/// beta c(m - m') sigma3. The dense matrix is optional; apply() always works
/// and goes through the FFT convolution when no matrix is held.
class FiberOperator {
 public:
  FiberOperator(std::shared_ptr<const MassKernel> kernel, double beta, const Vec2& k,
                const AssembleOptions& options = {});

  const MassKernel& kernel() const { return *kernel_; }
  std::shared_ptr<const MassKernel> kernel_ptr() const { return kernel_; }
  const PlaneWaveBasis& basis() const { return kernel_->basis(); }
  double alpha() const { return kernel_->alpha(); }
  double beta() const { return beta_; }
  const Vec2& k() const { return k_; }
  int cutoff() const { return kernel_->cutoff(); }
  Eigen::Index dim() const { return basis().dim(); }

  bool has_dense() const { return dense_.has_value(); }
  const MatrixXc& dense() const;

  /// y = H x (dense product when available).
  void apply(const MatrixXc& x, MatrixXc& y) const;
  /// y = H x through the kinetic blocks and the FFT convolution.
  void apply_matrix_free(const MatrixXc& x, MatrixXc& y) const;
  /// y = 2 pi sigma.(m - k) x, blockwise.
  void apply_kinetic(const MatrixXc& x, MatrixXc& y) const;

  /// Upper bound on the spectral norm: kinetic maximum plus beta sum |c|.
  double norm_bound() const;

  /// Kinetic momentum m - k of mode i.
  Vec2 momentum(Eigen::Index i) const { return basis().mode(i).cast<double>() - k_; }

 private:
  std::shared_ptr<const MassKernel> kernel_;
  double beta_;
  Vec2 k_;
  std::optional<MatrixXc> dense_;
};

/// Build the kernel and the operator in one step.
FiberOperator assemble(const MassProfile& profile, double alpha, double beta, const Vec2& k, int cutoff,
                       const AssembleOptions& options = {});

/// Estimated bytes of a dense matrix of dimension n.
double dense_bytes(Eigen::Index n);

struct Spectrum {
  std::vector<double> eigenvalues;  ///< ascending
  double residual_bound = 0;        ///< max ||H v - lambda v||
  SolverKind method = SolverKind::dense;
  int iterations = 0;
  MatrixXc vectors;  ///< columns match eigenvalues when requested
};

/// Full spectrum by Householder tridiagonalisation (Eigen). The residual bound
/// is filled when eigenvectors are requested.
Spectrum eigenvalues_dense(const FiberOperator& op, bool with_vectors = true);

struct IterativeOptions {
  int count = 2;
  int guard = 4;            ///< extra block vectors beyond `count`
  double tol = 1e-10;       ///< residual target relative to norm_bound()
  int max_iterations = 1000;
};

/// The `count` eigenvalues of smallest magnitude via LOBPCG on H^2 (spectral
/// folding) with the kinetic preconditioner (4 pi^2 |m - k|^2 + 1)^{-1} and a
/// final Rayleigh-Ritz on H to recover signs.
Spectrum eigenvalues_near_zero(const FiberOperator& op, const IterativeOptions& options = {});

/// Smallest |lambda| of a Hermitian operator given matrix-free, folded LOBPCG.
struct FoldedProblem {
  Eigen::Index dim = 0;
  std::function<void(const MatrixXc&, MatrixXc&)> apply;
  Eigen::VectorXd preconditioner;  ///< diagonal approximation of (A^2 + shift)^{-1}
  MatrixXc initial;                ///< n x p starting block
  double norm_estimate = 1;
};
Spectrum folded_lobpcg(const FoldedProblem& problem, const IterativeOptions& options);

/// Deterministic starting block: unit vectors on the smallest-|m - k| modes
/// plus a fixed-seed perturbation.
MatrixXc kinetic_start_block(const FiberOperator& op, int block);

}  // namespace antidot

#endif
