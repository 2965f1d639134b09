#ifndef ANTIDOT_BESSEL_HPP
#define ANTIDOT_BESSEL_HPP

#include <antidot/types.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace antidot {

/// Modified Bessel functions K0 and K1 evaluated together.
///
/// Small arguments (x <= 2) use the ascending series
///   K0 = -(ln(x/2) + gamma) I0 + sum (x^2/4)^k / (k!)^2 H_k,
///   K1 = 1/x + ln(x/2) I1 - (x/4) sum (psi(k+1) + psi(k+2)) (x^2/4)^k / (k! (k+1)!).
/// Larger arguments use Steed's continued fraction for K_{nu+1}/K_nu
/// (Thompson-Barnett), which converges quickly for x > 2.
template <typename Real>
struct BesselKPair {
  Real k0;
  Real k1;
};

template <typename Real>
BesselKPair<Real> bessel_k01(Real x) {
  if (!(x > Real(0))) throw DomainError("bessel_k: argument must be positive");
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  const Real euler = std::numbers::egamma_v<Real>;
  if (x <= Real(2)) {
    const Real q = x * x / Real(4);
    const Real log_half = std::log(x / Real(2));
    // I0, I1 and the harmonic-number sums share the same powers of q.
    Real term0 = 1;              // q^k / (k!)^2
    Real term1 = 1;              // q^k / (k! (k+1)!)
    Real harmonic = 0;           // H_k
    Real i0 = 0, i1 = 0, s0 = 0, s1 = 0;
    for (int k = 0; k < 200; ++k) {
      if (k > 0) {
        term0 *= q / Real(k * k);
        term1 *= q / Real(k * (k + 1));
        harmonic += Real(1) / Real(k);
      }
      const Real psi_sum = Real(2) * harmonic + Real(1) / Real(k + 1) - Real(2) * euler;
      i0 += term0;
      i1 += term1;
      s0 += term0 * harmonic;
      s1 += term1 * psi_sum;
      if (term0 < eps * i0 && term1 < eps * i1) break;
    }
    i1 *= x / Real(2);
    return {-(log_half + euler) * i0 + s0, Real(1) / x + log_half * i1 - x / Real(4) * s1};
  }
  // Steed's algorithm, order mu = 0.
  Real b = Real(2) * (Real(1) + x);
  Real d = Real(1) / b;
  Real h = d, delh = d;
  Real q1 = 0, q2 = 1;
  const Real a1 = Real(0.25);
  Real q = a1, c = a1, a = -a1;
  Real s = Real(1) + q * delh;
  for (int i = 1; i < 100000; ++i) {
    a -= Real(2 * i);
    c = -a * c / Real(i + 1);
    const Real qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += Real(2);
    d = Real(1) / (b + a * d);
    delh = (b * d - Real(1)) * delh;
    h += delh;
    const Real dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h = a1 * h;
  const Real k0 = std::sqrt(std::numbers::pi_v<Real> / (Real(2) * x)) * std::exp(-x) / s;
  const Real k1 = k0 * (x + Real(0.5) - h) / x;
  return {k0, k1};
}

template <typename Real>
Real bessel_k0(Real x) {
  return bessel_k01(x).k0;
}

template <typename Real>
Real bessel_k1(Real x) {
  return bessel_k01(x).k1;
}

/// Bessel function of the first kind, order one.
///
/// |x| < 25: Miller's backward recurrence normalised by J0 + 2 sum J_2k = 1.
/// |x| >= 25: Hankel asymptotic expansion.
template <typename Real>
Real bessel_j1(Real x) {
  const Real ax = std::abs(x);
  if (ax == Real(0)) return Real(0);
  const Real sign = x < Real(0) ? Real(-1) : Real(1);
  if (ax < Real(25)) {
    const int start = 2 * ((static_cast<int>(ax) + 40) / 2);
    Real next = 0, cur = Real(1e-30), norm = 0, j1 = 0;
    for (int n = start; n > 0; --n) {
      const Real prev = Real(2 * n) / ax * cur - next;
      next = cur;
      cur = prev;  // J_{n-1}
      if (n - 1 == 1) j1 = cur;
      if ((n - 1) % 2 == 0 && n - 1 > 0) norm += Real(2) * cur;
      if (std::abs(cur) > Real(1e250)) {
        cur *= Real(1e-250);
        next *= Real(1e-250);
        norm *= Real(1e-250);
        j1 *= Real(1e-250);
      }
    }
    norm += cur;  // J0
    return sign * j1 / norm;
  }
  // P and Q series with mu = 4 nu^2 = 4.
  const Real mu = 4;
  const Real z8 = Real(8) * ax;
  Real p = 1, qq = 0;
  Real term = 1;
  Real last = std::numeric_limits<Real>::max();
  for (int k = 1; k < 60; ++k) {
    const Real factor = (mu - Real((2 * k - 1) * (2 * k - 1))) / (Real(k) * z8);
    const Real next_term = term * factor;
    if (std::abs(next_term) >= last) break;
    last = std::abs(next_term);
    term = next_term;
    if (k % 2 == 1) {
      qq += ((k / 2) % 2 == 0 ? Real(1) : Real(-1)) * term;
    } else {
      p += ((k / 2) % 2 == 1 ? Real(-1) : Real(1)) * term;
    }
    if (last < std::numeric_limits<Real>::epsilon()) break;
  }
  const Real chi = ax - Real(0.75) * std::numbers::pi_v<Real>;
  return sign * std::sqrt(Real(2) / (std::numbers::pi_v<Real> * ax)) *
         (p * std::cos(chi) - qq * std::sin(chi));
}

/// Kernel of (H0 - i)^{-1}(x, x') for |x - x'| = r along unit direction d:
///   (i / 2 pi) (K1(r) sigma.d - K0(r) I).
Matrix2c resolvent_kernel(double r, const Vec2& direction);

struct KernelSample {
  double r = 0;
  Matrix2c kernel = Matrix2c::Zero();
  double max_entry = 0;
  double bound_ratio = 0;  ///< 2 pi max|entry| r e^r
};

struct KernelBoundReport {
  std::vector<KernelSample> samples;
  double max_bound_ratio = 0;
  double envelope = 0;  ///< 1.1 (1 + sqrt(2 pi r_max))
  bool within_envelope = false;
};

/// Log-spaced scan of the resolvent kernel magnitude against C e^{-r}/r.
KernelBoundReport kernel_bound_check(double r_min, double r_max, int samples);

}  // namespace antidot

#endif
