#ifndef ANTIDOT_PAULI_HPP
#define ANTIDOT_PAULI_HPP

#include <Eigen/Core>

#include <complex>

namespace antidot::pauli {

template <typename Real = double>
using Mat2 = Eigen::Matrix<std::complex<Real>, 2, 2>;

template <typename Real = double>
Mat2<Real> sigma1() {
  Mat2<Real> s;
  s << 0, 1, 1, 0;
  return s;
}

template <typename Real = double>
Mat2<Real> sigma2() {
  using C = std::complex<Real>;
  Mat2<Real> s;
  s << C(0), C(0, -1), C(0, 1), C(0);
  return s;
}

template <typename Real = double>
Mat2<Real> sigma3() {
  Mat2<Real> s;
  s << 1, 0, 0, -1;
  return s;
}

/// sigma . v for an in-plane vector v.
template <typename Derived>
Mat2<typename Derived::Scalar> dot(const Eigen::MatrixBase<Derived>& v) {
  using Real = typename Derived::Scalar;
  using C = std::complex<Real>;
  Mat2<Real> s;
  s << C(0), C(v(0), -v(1)), C(v(0), v(1)), C(0);
  return s;
}

/// (Tr sigma1 A, Tr sigma2 A, Tr sigma3 A); real for Hermitian A.
template <typename Real>
Eigen::Matrix<Real, 3, 1> trace_vector(const Mat2<Real>& a) {
  Eigen::Matrix<Real, 3, 1> w;
  w(0) = (sigma1<Real>() * a).trace().real();
  w(1) = (sigma2<Real>() * a).trace().real();
  w(2) = (sigma3<Real>() * a).trace().real();
  return w;
}

}  // namespace antidot::pauli

#endif
