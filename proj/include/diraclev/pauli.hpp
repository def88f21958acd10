#pragma once

#include "diraclev/common.hpp"

namespace diraclev {

inline const Mat2& sigma1() {
  static const Mat2 s = (Mat2() << 0, 1, 1, 0).finished();
  return s;
}
inline const Mat2& sigma2() {
  static const Mat2 s = (Mat2() << 0, cxd(0, -1), cxd(0, 1), 0).finished();
  return s;
}
inline const Mat2& sigma3() {
  static const Mat2 s = (Mat2() << 1, 0, 0, -1).finished();
  return s;
}

inline Mat2 sigma_dot(const Vec3& v) {
  return v[0] * sigma1() + v[1] * sigma2() + v[2] * sigma3();
}

inline Mat2 pauli_reconstruct(double f0, const Vec3& f) {
  return f0 * Mat2::Identity() + sigma_dot(f);
}

// F0 = Tr(M)/2, F_l = Tr(sigma_l M)/2.
inline std::pair<double, Vec3> pauli_decompose(const Mat2& m) {
  require(max_abs(MatX(m - m.adjoint())) <= 1e-10, "invalid-input",
          "pauli_decompose requires a Hermitian matrix");
  const double f0 = 0.5 * std::real(m(0, 0) + m(1, 1));
  Vec3 f;
  f[0] = 0.5 * std::real(m(0, 1) + m(1, 0));
  f[1] = 0.5 * std::imag(m(1, 0) - m(0, 1));
  f[2] = 0.5 * std::real(m(0, 0) - m(1, 1));
  return {f0, f};
}

}  // namespace diraclev
