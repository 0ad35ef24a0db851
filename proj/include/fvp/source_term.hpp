#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fvp/time_grid.hpp"
#include "fvp/types.hpp"

namespace fvp {

enum class Interp { PiecewiseConstantLeft, PiecewiseLinear };

// Sampled right-hand side f in V* coordinates, one vector per grid node.
struct SourceTerm {
  std::vector<Vec> samples;
  Interp interpolation = Interp::PiecewiseConstantLeft;
  std::string closed_form;  // free-form tag for oracle bookkeeping, unused here

  static SourceTerm zero(Eigen::Index dim, const TimeGrid& grid) {
    SourceTerm f;
    f.samples.assign(grid.nodes.size(), Vec::Zero(dim));
    return f;
  }

  bool is_zero() const {
    for (const auto& s : samples)
      if (!s.isZero(0.0)) return false;
    return true;
  }
};

inline void check_source(const SourceTerm& f, const TimeGrid& grid,
                         Eigen::Index dim) {
  if (f.samples.size() != grid.nodes.size())
    throw GridMismatch("source term has " + std::to_string(f.samples.size()) +
                       " samples for " + std::to_string(grid.nodes.size()) +
                       " nodes");
  for (const auto& s : f.samples)
    if (s.size() != dim) throw GridMismatch("source sample dim mismatch");
}

inline Vec source_value_at(const SourceTerm& f, const TimeGrid& grid,
                           double s) {
  const auto& t = grid.nodes;
  if (s <= t.front()) return f.samples.front();
  if (s >= t.back()) return f.samples.back();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t i = std::size_t(it - t.begin()) - 1;  // s in [t_i, t_{i+1})
  if (f.interpolation == Interp::PiecewiseConstantLeft) return f.samples[i];
  const double w = (s - t[i]) / (t[i + 1] - t[i]);
  return (1.0 - w) * f.samples[i] + w * f.samples[i + 1];
}

}  // namespace fvp
