#ifndef ANTIDOT_POTENTIAL_HPP
#define ANTIDOT_POTENTIAL_HPP

#include <antidot/types.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace antidot {

struct DiskShape {
  double radius = 0;
};

/// Axis-aligned square of side `side` centred at the origin. side = 1 fills the cell.
struct SquareShape {
  double side = 0;
};

/// Trigonometric polynomial sum_m c_m e^{2 pi i m.x}; supported on the whole cell.
struct ModesShape {
  std::map<std::pair<int, int>, cplx> coefficients;
};

/// Samples on the n x n cell-centred grid x_j = -1/2 + (j + 1/2)/n, row index = x1.
struct GridShape {
  int n = 0;
  std::vector<double> values;
  bool full_cell_support = false;
};

using Shape = std::variant<DiskShape, SquareShape, ModesShape, GridShape>;

/// Mass-insertion profile chi on the unit cell, scaled by `height`.
///
/// Immutable; norms are computed once at construction. Disk and square
/// profiles are indicator functions, so their norms are exact closed forms.
/// Mode profiles get l1/linf from a sampling grid fine enough to resolve the
/// highest mode eight times over.
class MassProfile {
 public:
  static MassProfile disk(double radius, double height = 1.0);
  static MassProfile square(double side, double height = 1.0);
  static MassProfile modes(std::map<std::pair<int, int>, cplx> coefficients, double height = 1.0);
  static MassProfile grid(int n, std::vector<double> values, double height = 1.0,
                          bool full_cell_support = false);

  const Shape& shape() const { return shape_; }
  double height() const { return height_; }
  bool normalized() const { return normalized_; }
  bool full_cell_support() const;

  double phi() const { return phi_; }
  double l1_norm() const { return l1_; }
  double l2_norm() const { return l2_; }
  double linf_norm() const { return linf_; }

  /// Largest |m_i| carrying a nonzero coefficient (mode profiles only).
  std::optional<int> mode_extent() const;

  /// Value chi(x) at a point of the cell.
  double value(const Vec2& x) const;

  /// Same shape with height h replaced by c * h.
  MassProfile scaled(double c) const;

  /// sqrt|chi| (signed = false) or sgn(chi) sqrt|chi| (signed = true). Mode
  /// profiles are resampled on a grid of at least `min_samples` points per axis.
  MassProfile sqrt_abs(bool signed_root, int min_samples = 0) const;

  std::string describe() const;

 private:
  MassProfile(Shape shape, double height);
  void compute_norms();

  Shape shape_;
  double height_ = 1.0;
  bool normalized_ = false;
  double phi_ = 0, l1_ = 0, l2_ = 0, linf_ = 0;

  friend MassProfile normalize(const MassProfile& profile);
};

/// Rescale the height so that the L2 norm is one.
MassProfile normalize(const MassProfile& profile);

/// Closed annulus of unit Fourier coefficients, N - width <= |m| <= N + width.
MassProfile annulus_profile(int N, int width);

/// hat chi_alpha(m) = integral over the cell of e^{-2 pi i x.m} chi(x / alpha).
///
/// For profiles supported inside the cell this equals alpha^2 F[chi](alpha m)
/// with F the continuous transform; mode profiles only admit alpha = 1.
cplx fourier_coeff(const MassProfile& profile, double alpha, const Vec2i& m);

/// Coefficients of chi_alpha for all differences with max(|d1|, |d2|) <= 2 M.
class FourierTable {
 public:
  FourierTable(const MassProfile& profile, double alpha, int cutoff);

  int cutoff() const { return cutoff_; }
  double alpha() const { return alpha_; }
  int span() const { return 2 * cutoff_; }

  cplx operator()(int d1, int d2) const {
    const int w = 4 * cutoff_ + 1;
    return entries_[static_cast<std::size_t>((d1 + 2 * cutoff_) * w + (d2 + 2 * cutoff_))];
  }
  cplx operator()(const Vec2i& d) const { return (*this)(d(0), d(1)); }

  /// sum_d |c(d)|, an upper bound for the operator norm of the truncated multiplication.
  double absolute_sum() const;

  /// RFC-4180 CSV with header m1,m2,re,im.
  void write_csv(std::ostream& os) const;

 private:
  int cutoff_;
  double alpha_;
  std::vector<cplx> entries_;
};

struct Hyp1Result {
  double value = 0;           ///< real part of the truncated double sum
  double imag_residual = 0;   ///< |Im| of the complex accumulation
  double magnitude = 0;       ///< sum of |term| estimate used for the reality check
  int cutoff = 0;
  double tail_estimate = 0;   ///< advisory only, zero for band-limited profiles
  bool phi_nonzero = false;   ///< the sum was requested for a profile with Phi != 0
};

/// S(chi) = sum_{m,m' != 0} (m.m')/(|m|^2 |m'|^2) conj(c(m)) c(m') c(m - m'),
/// truncated to max(|m_i|) <= cutoff and evaluated through FFT convolutions.
Hyp1Result hyp1_sum(const MassProfile& profile, int cutoff);

}  // namespace antidot

#endif
