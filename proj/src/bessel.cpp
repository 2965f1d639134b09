#include <antidot/bessel.hpp>
#include <antidot/pauli.hpp>

#include <algorithm>
#include <cmath>

namespace antidot {

Matrix2c resolvent_kernel(double r, const Vec2& direction) {
  if (!(r > 0)) throw DomainError("resolvent_kernel: r must be positive");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw DomainError("resolvent_kernel: direction must be a unit vector");
  const auto k = bessel_k01(r);
  const cplx prefactor(0.0, 1.0 / kTwoPi);
  return prefactor * (k.k1 * pauli::dot(direction) - k.k0 * Matrix2c::Identity());
}

KernelBoundReport kernel_bound_check(double r_min, double r_max, int samples) {
  if (!(r_min > 0) || !(r_max > r_min)) throw ValidationError("kernel: need 0 < r_min < r_max");
  if (samples < 2) throw ValidationError("kernel: need at least 2 samples");
  KernelBoundReport report;
  report.envelope = 1.1 * (1.0 + std::sqrt(kTwoPi * r_max));
  const double log_ratio = std::log(r_max / r_min);
  const Vec2 direction(1.0, 0.0);
  for (int i = 0; i < samples; ++i) {
    KernelSample s;
    s.r = r_min * std::exp(log_ratio * i / (samples - 1));
    s.kernel = resolvent_kernel(s.r, direction);
    s.max_entry = s.kernel.cwiseAbs().maxCoeff();
    s.bound_ratio = kTwoPi * s.max_entry * s.r * std::exp(s.r);
    report.max_bound_ratio = std::max(report.max_bound_ratio, s.bound_ratio);
    report.samples.push_back(s);
  }
  report.within_envelope = report.max_bound_ratio <= report.envelope;
  return report;
}

}  // namespace antidot
