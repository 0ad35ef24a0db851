#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fvp/errors.hpp"

namespace fvp {

// Partition 0 = t_0 < ... < t_M = T, optionally graded toward one endpoint
// with exponent q: clustering at End places t_{M-i} = T - T*(i/M)^q, so cells
// shrink like q*T*(i/M)^{q-1}/M near s = T. q = 1 reproduces uniform nodes.
struct TimeGrid {
  enum class Cluster { None, Start, End };

  double T = 0.0;
  std::vector<double> nodes;
  double grading = 1.0;
  Cluster cluster = Cluster::None;

  static TimeGrid uniform(double t_final, std::size_t cells) {
    check_params(t_final, cells, 1.0);
    TimeGrid g;
    g.T = t_final;
    g.grading = 1.0;
    g.cluster = Cluster::None;
    g.nodes.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
      g.nodes[i] = t_final * (double(i) / double(cells));
    g.nodes.back() = t_final;
    return g;
  }

  static TimeGrid graded_end(double t_final, std::size_t cells, double q) {
    check_params(t_final, cells, q);
    TimeGrid g;
    g.T = t_final;
    g.grading = q;
    g.cluster = Cluster::End;
    g.nodes.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
      g.nodes[cells - i] =
          t_final - t_final * std::pow(double(i) / double(cells), q);
    g.nodes.front() = 0.0;
    g.nodes.back() = t_final;
    return g;
  }

  static TimeGrid graded_start(double t_final, std::size_t cells, double q) {
    check_params(t_final, cells, q);
    TimeGrid g;
    g.T = t_final;
    g.grading = q;
    g.cluster = Cluster::Start;
    g.nodes.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
      g.nodes[i] = t_final * std::pow(double(i) / double(cells), q);
    g.nodes.front() = 0.0;
    g.nodes.back() = t_final;
    return g;
  }

  std::size_t cells() const { return nodes.size() - 1; }
  double width(std::size_t i) const { return nodes[i + 1] - nodes[i]; }

  // Image of the cell's midpoint in the grading parameter. For graded grids
  // this is where the midpoint rule must sample to keep its order against
  // endpoint singularities; it coincides with the geometric midpoint when
  // nodes are uniform.
  double param_midpoint(std::size_t i) const {
    const double m = double(cells());
    switch (cluster) {
      case Cluster::End:
        return T - T * std::pow((m - double(i) - 0.5) / m, grading);
      case Cluster::Start:
        return T * std::pow((double(i) + 0.5) / m, grading);
      case Cluster::None:
        break;
    }
    return 0.5 * (nodes[i] + nodes[i + 1]);
  }

  std::vector<double> trapezoid_weights() const {
    const std::size_t m = cells();
    std::vector<double> w(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] += 0.5 * width(i);
      w[i + 1] += 0.5 * width(i);
    }
    return w;
  }

  // Same construction, half the cells; used for a posteriori estimates.
  TimeGrid coarsened() const {
    const std::size_t m = cells() > 1 ? cells() / 2 : 1;
    switch (cluster) {
      case Cluster::End:
        return graded_end(T, m, grading);
      case Cluster::Start:
        return graded_start(T, m, grading);
      case Cluster::None:
        break;
    }
    return uniform(T, m);
  }

 private:
  static void check_params(double t_final, std::size_t cells, double q) {
    if (!(t_final > 0)) throw GridMismatch("final time must be positive");
    if (cells < 1) throw GridMismatch("grid needs at least one cell");
    if (!(q >= 1.0)) throw GridMismatch("grading exponent must be >= 1");
  }
};

}  // namespace fvp
