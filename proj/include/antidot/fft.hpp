#ifndef ANTIDOT_FFT_HPP
#define ANTIDOT_FFT_HPP

#include <antidot/types.hpp>

#include <vector>

namespace antidot {

/// Smallest 2^a 3^b 5^c that is >= n.
int smooth_size(int n);

/// In-place 2D transform of a row-major L x L array. The inverse is scaled by 1/L^2.
void fft2(std::vector<cplx>& data, int L, bool inverse);

/// Cyclic convolution with a coefficient table over the box max(|m_i|) <= M.
///
/// The table holds c(d) for max(|d_i|) <= 2M; the grid side L >= 4M + 2 keeps
/// every wrapped difference outside the table, so the truncated convolution
///   out(m) = sum_{m'} c(m - m') in(m')
/// is reproduced exactly.
class ConvolutionGrid {
 public:
  template <typename Table>
  ConvolutionGrid(const Table& table, int M) : cutoff_(M), side_(smooth_size(2 * (2 * M + 1))) {
    std::vector<cplx> kernel(static_cast<std::size_t>(side_) * side_, cplx(0));
    for (int d1 = -2 * M; d1 <= 2 * M; ++d1)
      for (int d2 = -2 * M; d2 <= 2 * M; ++d2)
        kernel[wrap(d1) * side_ + wrap(d2)] = table(d1, d2);
    fft2(kernel, side_, false);
    kernel_hat_ = std::move(kernel);
  }

  int cutoff() const { return cutoff_; }
  int side() const { return side_; }

  /// in/out index the box row-major (m1 major) with the given element strides.
  void apply(const cplx* in, Eigen::Index in_stride, cplx* out, Eigen::Index out_stride) const;

 private:
  std::size_t wrap(int d) const { return static_cast<std::size_t>(((d % side_) + side_) % side_); }

  int cutoff_;
  int side_;
  std::vector<cplx> kernel_hat_;
};

}  // namespace antidot

#endif
