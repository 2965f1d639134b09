#include <antidot/fft.hpp>

#include <unsupported/Eigen/FFT>

namespace antidot {

int smooth_size(int n) {
  for (int candidate = std::max(n, 1);; ++candidate) {
    int r = candidate;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return candidate;
  }
}

void fft2(std::vector<cplx>& data, int L, bool inverse) {
  // Eigen::FFT caches twiddles per instance and is not safe to share.
  thread_local Eigen::FFT<double> engine;
  thread_local std::vector<cplx> line_in, line_out;
  line_in.resize(L);
  line_out.resize(L);
  auto run = [&](cplx* dst, const cplx* src) {
    if (inverse)
      engine.inv(dst, src, L);
    else
      engine.fwd(dst, src, L);
  };
  for (int row = 0; row < L; ++row) {
    cplx* p = data.data() + static_cast<std::size_t>(row) * L;
    std::copy(p, p + L, line_in.begin());
    run(p, line_in.data());
  }
  for (int col = 0; col < L; ++col) {
    for (int row = 0; row < L; ++row) line_in[row] = data[static_cast<std::size_t>(row) * L + col];
    run(line_out.data(), line_in.data());
    for (int row = 0; row < L; ++row) data[static_cast<std::size_t>(row) * L + col] = line_out[row];
  }
}

void ConvolutionGrid::apply(const cplx* in, Eigen::Index in_stride, cplx* out,
                            Eigen::Index out_stride) const {
  thread_local std::vector<cplx> work;
  work.assign(static_cast<std::size_t>(side_) * side_, cplx(0));
  const int M = cutoff_;
  const int n = 2 * M + 1;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      work[wrap(a - M) * side_ + wrap(b - M)] = in[(a * n + b) * in_stride];
  fft2(work, side_, false);
  for (std::size_t i = 0; i < work.size(); ++i) work[i] *= kernel_hat_[i];
  fft2(work, side_, true);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out[(a * n + b) * out_stride] = work[wrap(a - M) * side_ + wrap(b - M)];
}

}  // namespace antidot
