#pragma once

// Variation-of-constants machinery: the source yield y_f, full solution
// paths, and midpoint quadrature on graded grids for improper integrals.
//
// The convolution uses *product quadrature*: on each cell the exponential
// kernel is integrated exactly against the interpolated f, so stiff modes
// (large lambda_j) cost nothing in accuracy. With E = e^{-h lambda},
//   phi1(x) = (1 - e^{-x})/x,      int_0^h e^{-s lam} ds        = h phi1
//   phi2(x) = (1-(1+x)e^{-x})/x^2, int_0^h s e^{-s lam} ds      = h^2 phi2
// and the cell ending at t_{i+1} contributes
//   piecewise-constant-left: f_i * h * phi1
//   piecewise-linear:        f_{i+1} * h * phi1 - (f_{i+1}-f_i) * h * phi2.

#include <functional>
#include <utility>
#include <vector>

#include "fvp/operator_core.hpp"
#include "fvp/semigroup.hpp"
#include "fvp/source_term.hpp"
#include "fvp/time_grid.hpp"

namespace fvp {

inline double phi1(double x) {
  if (x < 1e-4) return 1.0 - x / 2 + x * x / 6 - x * x * x / 24;
  return -std::expm1(-x) / x;
}

inline double phi2(double x) {
  if (x < 1e-4) return 0.5 - x / 3 + x * x / 8 - x * x * x / 30;
  return (1.0 - (1.0 + x) * std::exp(-x)) / (x * x);
}

namespace detail {

inline Mat phi_series(const Mat& ha, int shift) {
  // sum_{n>=0} (-ha)^n * (n+1+shift choose weights); shift 0 -> phi1,
  // shift 1 -> phi2 via coefficients (n+1)/(n+2)!.
  const Eigen::Index n = ha.rows();
  Mat acc = Mat::Zero(n, n);
  Mat pw = Mat::Identity(n, n);
  for (int k = 0; k < 24; ++k) {
    double coef;
    if (shift == 0) {
      coef = 1.0;
      for (int i = 2; i <= k + 1; ++i) coef /= double(i);  // 1/(k+1)!
    } else {
      coef = double(k + 1);
      for (int i = 2; i <= k + 2; ++i) coef /= double(i);  // (k+1)/(k+2)!
    }
    acc += coef * pw;
    pw = pw * (-ha);
    if (pw.norm() * coef < 1e-18) break;
  }
  return acc;
}

struct CellKernels {
  Mat decay;  // e^{-h A}
  Mat p1;     // phi1(h A)
  Mat p2;     // phi2(h A)
};

inline CellKernels cell_kernels(const LaxMilgramOperator& a, double h) {
  CellKernels k;
  const Mat ha = h * a.op;
  k.decay = (-ha).exp();
  if (ha.norm() < 0.25) {
    k.p1 = phi_series(ha, 0);
    k.p2 = phi_series(ha, 1);
  } else {
    const Eigen::Index n = ha.rows();
    Eigen::PartialPivLU<Mat> lu(ha);
    k.p1 = lu.solve(Mat::Identity(n, n) - k.decay);
    k.p2 = lu.solve(k.p1 - k.decay);  // x^2 phi2 = x phi1 - x e^{-x}
  }
  return k;
}

}  // namespace detail

// Convolution states int_0^{t_k} e^{-(t_k - s)A} f(s) ds for every node,
// via the cell recursion conv_{k+1} = e^{-h_k A} conv_k + cell_k.
inline std::vector<Vec> convolution_states(const SpectralModel& m,
                                           const SourceTerm& f,
                                           const TimeGrid& grid) {
  check_source(f, grid, m.eigenvalues.size());
  const Eigen::Index n = m.eigenvalues.size();
  std::vector<Vec> conv(grid.nodes.size());
  conv[0] = Vec::Zero(n);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    const double h = grid.width(i);
    Vec next(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double x = h * m.eigenvalues[j];
      Scalar cell;
      if (f.interpolation == Interp::PiecewiseConstantLeft) {
        cell = f.samples[i][j] * (h * phi1(x));
      } else {
        cell = f.samples[i + 1][j] * (h * phi1(x)) -
               (f.samples[i + 1][j] - f.samples[i][j]) * (h * phi2(x));
      }
      next[j] = conv[i][j] * std::exp(-x) + cell;
    }
    conv[i + 1] = std::move(next);
  }
  return conv;
}

inline std::vector<Vec> convolution_states(const LaxMilgramOperator& a,
                                           const SourceTerm& f,
                                           const TimeGrid& grid) {
  check_source(f, grid, a.triple.dim);
  std::vector<Vec> conv(grid.nodes.size());
  conv[0] = Vec::Zero(a.triple.dim);
  // Kernel matrices depend only on the cell width; uniform grids build one.
  double last_h = -1.0;
  detail::CellKernels k;
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    const double h = grid.width(i);
    if (h != last_h) {
      k = detail::cell_kernels(a, h);
      last_h = h;
    }
    Vec cell;
    if (f.interpolation == Interp::PiecewiseConstantLeft)
      cell = h * (k.p1 * f.samples[i]);
    else
      cell = h * (k.p1 * f.samples[i + 1]) -
             h * (k.p2 * (f.samples[i + 1] - f.samples[i]));
    conv[i + 1] = k.decay * conv[i] + cell;
  }
  return conv;
}

inline std::vector<Vec> convolution_states(const AnyOperator& op,
                                           const SourceTerm& f,
                                           const TimeGrid& grid) {
  return std::visit(
      [&](const auto& o) { return convolution_states(o, f, grid); }, op);
}

// y_f = int_0^T e^{-(T-s)A} f(s) ds.
template <class Op>
Vec source_yield(const Op& op, const SourceTerm& f, const TimeGrid& grid) {
  return convolution_states(op, f, grid).back();
}

struct SolutionPath {
  TimeGrid grid;
  std::vector<Vec> states;
  std::vector<Vec> derivative_states;  // empty when not computed
  bool has_derivatives() const { return !derivative_states.empty(); }
};

struct DuhamelParts {
  std::vector<Vec> homogeneous;  // e^{-t_k A} u0, evaluated directly
  std::vector<Vec> convolution;
};

template <class Op>
DuhamelParts duhamel_parts(const Op& op, const Vec& u0, const SourceTerm& f,
                           const TimeGrid& grid) {
  require(u0.size() == op_dim(op), "duhamel: u0 dim mismatch");
  DuhamelParts parts;
  parts.homogeneous.reserve(grid.nodes.size());
  for (double t : grid.nodes) parts.homogeneous.push_back(evolve(op, t, u0));
  parts.convolution = convolution_states(op, f, grid);
  return parts;
}

// states[k] = e^{-t_k A} u0 + int_0^{t_k} e^{-(t_k-s)A} f(s) ds,
// derivative_states[k] = f(t_k) - A states[k].
template <class Op>
SolutionPath duhamel_path(const Op& op, const Vec& u0, const SourceTerm& f,
                          const TimeGrid& grid) {
  auto parts = duhamel_parts(op, u0, f, grid);
  SolutionPath path;
  path.grid = grid;
  path.states.resize(grid.nodes.size());
  path.derivative_states.resize(grid.nodes.size());
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    path.states[k] = parts.homogeneous[k] + parts.convolution[k];
    path.derivative_states[k] = f.samples[k] - apply_op(op, path.states[k]);
  }
  return path;
}

// Composite midpoint rule for improper Bochner integrals; evaluates at the
// image of each cell's parameter midpoint, never at s = T. The returned
// estimate is |result(M) - result(M/2)| in the Euclidean (H) norm — a
// practical a posteriori bound, not a guarantee.
using VectorSampler = std::function<Vec(double)>;

inline std::pair<Vec, double> graded_bochner_integral(
    const VectorSampler& sampler, const TimeGrid& grid) {
  auto accumulate = [&sampler](const TimeGrid& g) {
    Vec acc;
    for (std::size_t i = 0; i < g.cells(); ++i) {
      const double s = g.param_midpoint(i);
      Vec v = sampler(s);
      if (!all_finite(v))
        throw NonFiniteSample("graded_bochner_integral: non-finite sample at s=" +
                              std::to_string(s));
      if (acc.size() == 0)
        acc = g.width(i) * v;
      else
        acc += g.width(i) * v;
    }
    return acc;
  };
  Vec full = accumulate(grid);
  if (grid.cells() < 2) return {full, 0.0};
  Vec half = accumulate(grid.coarsened());
  return {full, (full - half).norm()};
}

}  // namespace fvp
