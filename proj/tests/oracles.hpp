// Independent reference computations used by the tests. Nothing here calls
// into the library's special functions or transforms.
#ifndef ANTIDOT_TESTS_ORACLES_HPP
#define ANTIDOT_TESTS_ORACLES_HPP

#include <antidot/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using antidot::cplx;
using antidot::kPi;

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

// Composite Gauss-Legendre on [a, b].
template <typename F>
auto integrate(F f, double a, double b, int panels = 64, int order = 16) {
  static const auto gl = gauss_legendre(16);
  const auto& [x, w] = order == 16 ? gl : gauss_legendre(order);
  using R = decltype(f(a));
  R sum = R(0);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < order; ++i) sum += w[i] * f(mid + 0.5 * h * x[i]);
  }
  return sum * (0.5 * h);
}

// Heat-kernel representation K0(x) = 1/2 int_0^inf exp(-x^2/4t - t) dt / t,
// integrated in u = log t.
inline double k0(double x) {
  auto f = [x](double u) { return 0.5 * std::exp(-x * x / (4 * std::exp(u)) - std::exp(u)); };
  return integrate(f, -40.0, 5.0, 900);
}

// K1 = -K0' = (x/4) int_0^inf exp(-x^2/4t - t) dt / t^2.
inline double k1(double x) {
  auto f = [x](double u) { return 0.25 * x * std::exp(-x * x / (4 * std::exp(u)) - std::exp(u) - u); };
  return integrate(f, -60.0, 5.0, 1300);
}

// Bessel's integral J1(x) = (1/pi) int_0^pi cos(t - x sin t) dt.
inline double j1(double x) {
  auto f = [x](double t) { return std::cos(t - x * std::sin(t)); };
  const int panels = 16 + static_cast<int>(std::abs(x));
  return integrate(f, 0.0, kPi, panels) / kPi;
}

// int over the disk |x| < R of exp(-2 pi i x.m): chord integral in x2
// analytically, then x1 = R sin(theta) with Gauss-Legendre in theta.
inline cplx disk_transform(double R, double m1, double m2) {
  auto f = [&](double theta) {
    const double x1 = R * std::sin(theta);
    const double s = R * std::cos(theta);
    const double chord = m2 == 0 ? 2 * s : std::sin(2 * kPi * m2 * s) / (kPi * m2);
    return std::exp(cplx(0, -2 * kPi * m1 * x1)) * chord * s;
  };
  return integrate(f, -kPi / 2, kPi / 2, 200);
}

// int over the square [-w/2, w/2]^2 of exp(-2 pi i x.m), tensor Gauss-Legendre.
inline cplx square_transform(double w, double m1, double m2) {
  auto line = [w](double m) {
    return integrate([m](double x) { return std::exp(cplx(0, -2 * kPi * m * x)); }, -w / 2, w / 2, 200);
  };
  return line(m1) * line(m2);
}

using Modes = std::map<std::pair<int, int>, cplx>;

// Triple-product sum by direct enumeration of all pairs of nonzero modes.
inline cplx hyp1_bruteforce(const Modes& c) {
  auto at = [&](int a, int b) {
    auto it = c.find({a, b});
    return it == c.end() ? cplx(0) : it->second;
  };
  cplx s = 0;
  for (const auto& [m, cm] : c) {
    if (m.first == 0 && m.second == 0) continue;
    const double n2 = double(m.first) * m.first + double(m.second) * m.second;
    for (const auto& [mp, cmp] : c) {
      if (mp.first == 0 && mp.second == 0) continue;
      const cplx diff = at(m.first - mp.first, m.second - mp.second);
      if (diff == cplx(0)) continue;
      const double np2 = double(mp.first) * mp.first + double(mp.second) * mp.second;
      const double dot = double(m.first) * mp.first + double(m.second) * mp.second;
      s += dot / (n2 * np2) * std::conj(cm) * cmp * diff;
    }
  }
  return s;
}

// Annulus modes by enumeration.
inline Modes annulus(int N, int width) {
  Modes c;
  const int lo = (N - width) * (N - width), hi = (N + width) * (N + width);
  for (int a = -(N + width); a <= N + width; ++a)
    for (int b = -(N + width); b <= N + width; ++b) {
      const int r2 = a * a + b * b;
      if (r2 >= lo && r2 <= hi) c[{a, b}] = 1.0;
    }
  return c;
}

// Free Dirac block spectrum: +-2 pi |m - k| over the square box.
inline std::vector<double> free_spectrum(int M, double k1v, double k2v, double mass = 0) {
  std::vector<double> ev;
  for (int a = -M; a <= M; ++a)
    for (int b = -M; b <= M; ++b) {
      const double e = std::sqrt(4 * kPi * kPi * ((a - k1v) * (a - k1v) + (b - k2v) * (b - k2v)) + mass * mass);
      ev.push_back(e);
      ev.push_back(-e);
    }
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace oracle

#endif
