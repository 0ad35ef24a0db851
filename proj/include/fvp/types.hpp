#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "fvp/errors.hpp"

namespace fvp {

inline constexpr const char* kVersion = "0.1.0";

// Complex scalars throughout so non-selfadjoint spectra are admissible.
using Scalar = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double kLogDblMax = 709.782712893384;  // log(DBL_MAX)

// A nonnegative quantity carried as (value, log value) so it survives
// overflow of the plain representation. log_value = -inf encodes zero.
struct LogScaled {
  double value = 0.0;
  double log_value = -std::numeric_limits<double>::infinity();

  static LogScaled from_log(double lv) {
    return {lv > kLogDblMax ? std::numeric_limits<double>::infinity()
                            : std::exp(lv),
            lv};
  }
  static LogScaled zero() { return {}; }
};

// Running logsumexp accumulator for sums of positive terms given in log form.
class LogSum {
 public:
  void add_log(double lt) {
    if (lt == -std::numeric_limits<double>::infinity()) return;
    if (lt > max_) {
      if (max_ == -std::numeric_limits<double>::infinity())
        rest_ = 0.0;
      else
        rest_ = rest_ * std::exp(max_ - lt) + std::exp(max_ - lt);
      max_ = lt;
    } else {
      rest_ += std::exp(lt - max_);
    }
  }
  // log of the accumulated sum; -inf when empty.
  double log() const {
    if (max_ == -std::numeric_limits<double>::infinity()) return max_;
    return max_ + std::log1p(rest_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double rest_ = 0.0;  // sum of exp(term - max_), excluding max_ itself
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DimensionMismatch(what);
}

inline bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
      return false;
  return true;
}

}  // namespace fvp
