#pragma once

#include <random>

#include "fvp/types.hpp"

namespace fvp::testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vec random_vec(std::mt19937_64& g, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Scalar(nd(g), nd(g));
  return v;
}

inline Mat random_mat(std::mt19937_64& g, Eigen::Index n) {
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = random_vec(g, n).transpose();
  return m;
}

// Unitary factor of a random complex matrix; used to conjugate diagonal
// spectra into dense normal operators.
inline Mat random_unitary(std::mt19937_64& g, Eigen::Index n) {
  Eigen::HouseholderQR<Mat> qr(random_mat(g, n));
  Mat q = qr.householderQ();
  return q;
}

// Plain Taylor series for exp(M), scaled so the series converges fast. Kept
// deliberately different from the production path (Pade) to count as an
// oracle.
inline Mat expm_taylor(const Mat& m) {
  int s = 0;
  double nrm = m.norm();
  while (nrm > 0.5) {
    nrm /= 2;
    ++s;
  }
  Mat a = m / std::pow(2.0, s);
  Mat term = Mat::Identity(m.rows(), m.cols());
  Mat sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = term * a / double(k);
    sum += term;
    if (term.norm() < 1e-19 * sum.norm()) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace fvp::testing
