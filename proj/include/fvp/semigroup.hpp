#pragma once

// The analytic semigroup e^{-tA}, its unbounded inverse e^{tA}, the
// truncation diagnostic for membership in D(e^{TA}), and the height-function
// convexity profile h(t) = |e^{-tA} u0|.

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fvp/operator_core.hpp"
#include "fvp/time_grid.hpp"
#include "fvp/types.hpp"

namespace fvp {

inline Vec evolve(const SpectralModel& m, double t, const Vec& x) {
  if (t < 0) throw NegativeTime("evolve: t must be >= 0");
  require(x.size() == m.eigenvalues.size(), "evolve: dim mismatch");
  Vec y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    y[j] = x[j] * std::exp(-t * m.eigenvalues[j]);
  return y;
}

inline Vec evolve(const LaxMilgramOperator& a, double t, const Vec& x) {
  if (t < 0) throw NegativeTime("evolve: t must be >= 0");
  require(x.size() == a.triple.dim, "evolve: dim mismatch");
  if (t == 0) return x;
  // Scaling-and-squaring Pade approximant; accuracy validated against a
  // Taylor-series oracle in the test suite.
  const Mat e = (-t * a.op).exp();
  return e * x;
}

inline Vec evolve(const AnyOperator& op, double t, const Vec& x) {
  return std::visit([&](const auto& o) { return evolve(o, t, x); }, op);
}

// e^{tA} x, the exact inverse of evolve at the same t in the truncated model.
// Zero coordinates stay zero regardless of the factor; a nonzero coordinate
// raises OverflowRisk when the *result* exp(t*lambda_j)*|x_j| would leave the
// representable range. Large factors are assembled in log-space.
inline Vec inverse_evolve(const SpectralModel& m, double t, const Vec& x) {
  if (t < 0) throw NegativeTime("inverse_evolve: t must be >= 0");
  require(x.size() == m.eigenvalues.size(), "inverse_evolve: dim mismatch");
  Vec y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] == Scalar(0)) {
      y[j] = Scalar(0);
      continue;
    }
    const double e = t * m.eigenvalues[j];
    const double log_result = e + std::log(std::abs(x[j]));
    if (log_result > kLogDblMax)
      throw OverflowRisk("inverse_evolve: coordinate " + std::to_string(j) +
                             " overflows (log magnitude " +
                             std::to_string(log_result) + ")",
                         long(j));
    y[j] = e <= 600.0 ? x[j] * std::exp(e)
                      : std::polar(std::exp(log_result), std::arg(x[j]));
  }
  return y;
}

inline Vec inverse_evolve(const LaxMilgramOperator& a, double t,
                          const Vec& x) {
  if (t < 0) throw NegativeTime("inverse_evolve: t must be >= 0");
  require(x.size() == a.triple.dim, "inverse_evolve: dim mismatch");
  if (t == 0) return x;
  const Mat e = (t * a.op).exp();
  Vec y = e * x;
  if (!all_finite(y))
    throw OverflowRisk("inverse_evolve: matrix exponential overflow");
  return y;
}

inline Vec inverse_evolve(const AnyOperator& op, double t, const Vec& x) {
  return std::visit([&](const auto& o) { return inverse_evolve(o, t, x); },
                    op);
}

// --- membership diagnostic for D(e^{TA}) -------------------------------------

enum class Verdict { InDomain, Borderline, NotInDomain };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::InDomain:
      return "InDomain";
    case Verdict::Borderline:
      return "Borderline";
    case Verdict::NotInDomain:
      return "NotInDomain";
  }
  return "?";
}

// Membership in D(e^{TA}) is undecidable from finitely many coordinates; this
// is a truncation-stability test over per-level graph norms
//   G_N^2 = sum_{j<=N} (1 + e^{2 T lambda_j}) |c_j|^2,
// computed in log-space so astronomically large norms still classify.
struct DomainDiagnostic {
  std::vector<Eigen::Index> levels;
  std::vector<LogScaled> graph_norms;  // per level
  std::vector<double> ratios;          // successive growth factors
  Verdict verdict = Verdict::NotInDomain;
  double threshold = 0.0;  // tau

  // Extras behind the verdict, kept for reports.
  double cauchy_gap = 0.0;          // 1 - G_{L-1}/G_L
  double log_amplification = 0.0;   // log(G_top / |x_top|)
  double amplification_guard = 0.0;
  bool single_term_overflow = false;
  double log_graph_term = -std::numeric_limits<double>::infinity();
  // ^ log of sum e^{2T lambda_j}|c_j|^2 at the top level (the |e^{TA}x|^2 part)
};

using CoefficientRule = std::function<Scalar(Eigen::Index)>;

inline constexpr double kDefaultMembershipTau = 1e-6;
inline constexpr double kDefaultAmplificationGuard = 18.0;

inline DomainDiagnostic domain_membership(
    const SpectralModel& m, double T, const CoefficientRule& rule,
    std::vector<Eigen::Index> levels, double tau = kDefaultMembershipTau,
    double guard = kDefaultAmplificationGuard) {
  if (T < 0) throw NegativeTime("domain_membership: T must be >= 0");
  require(!levels.empty(), "domain_membership: need at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(levels[i] >= 1 && levels[i] <= m.eigenvalues.size(),
            "domain_membership: level outside model");
    require(i == 0 || levels[i] > levels[i - 1],
            "domain_membership: levels must increase");
  }

  DomainDiagnostic d;
  d.levels = levels;
  d.threshold = tau;
  d.amplification_guard = guard;

  LogSum graph2;     // sum of (1 + e^{2T lambda}) |c|^2
  LogSum data2;      // sum of |c|^2
  LogSum growth2;    // sum of e^{2T lambda} |c|^2
  std::size_t level_at = 0;
  for (Eigen::Index j = 0; j < levels.back(); ++j) {
    const Scalar c = rule(j);
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw NonFiniteSample("domain_membership: rule produced non-finite c_" +
                            std::to_string(j));
    if (c != Scalar(0)) {
      const double log_c2 = 2.0 * std::log(std::abs(c));
      const double e2 = 2.0 * T * m.eigenvalues[j];
      // log((1 + e^{e2}) |c|^2), stable for large e2
      const double log_term = e2 + std::log1p(std::exp(-e2)) + log_c2;
      if (log_term > kLogDblMax) d.single_term_overflow = true;
      graph2.add_log(log_term);
      data2.add_log(log_c2);
      growth2.add_log(e2 + log_c2);
    }
    while (level_at < levels.size() && j + 1 == levels[level_at]) {
      d.graph_norms.push_back(LogScaled::from_log(0.5 * graph2.log()));
      ++level_at;
    }
  }
  d.log_graph_term = growth2.log();

  const auto& gn = d.graph_norms;
  for (std::size_t i = 0; i + 1 < gn.size(); ++i) {
    const double r = std::exp(gn[i + 1].log_value - gn[i].log_value);
    d.ratios.push_back(std::isnan(r) ? 1.0 : r);  // 0/0: empty data
  }

  const double log_top = gn.back().log_value;
  const bool empty = log_top == -std::numeric_limits<double>::infinity();
  if (empty) {
    // All coordinates vanish: trivially in every domain.
    d.verdict = Verdict::InDomain;
    d.ratios.assign(gn.size() - 1, 1.0);
    return d;
  }

  // with a single level there is nothing to compare against; the guard is
  // then the only line of defense
  d.cauchy_gap =
      gn.size() >= 2
          ? -std::expm1(gn[gn.size() - 2].log_value - gn.back().log_value)
          : 0.0;
  d.log_amplification = log_top - 0.5 * data2.log();

  const double final_ratio = d.ratios.empty() ? 1.0 : d.ratios.back();
  const bool guard_ok =
      !d.single_term_overflow && d.log_amplification <= guard;
  if (!guard_ok)
    d.verdict = Verdict::NotInDomain;
  else if (final_ratio <= 1.0 + tau && d.cauchy_gap <= tau)
    d.verdict = Verdict::InDomain;
  else if (final_ratio > 1.0 + 10.0 * tau || d.cauchy_gap > 10.0 * tau)
    d.verdict = Verdict::NotInDomain;
  else
    d.verdict = Verdict::Borderline;
  return d;
}

// Data-vector convenience: coordinates beyond the vector are zero.
inline DomainDiagnostic domain_membership(
    const SpectralModel& m, double T, const Vec& x,
    std::vector<Eigen::Index> levels, double tau = kDefaultMembershipTau,
    double guard = kDefaultAmplificationGuard) {
  return domain_membership(
      m, T,
      [&x](Eigen::Index j) { return j < x.size() ? x[j] : Scalar(0); },
      std::move(levels), tau, guard);
}

inline std::vector<Eigen::Index> default_levels(Eigen::Index dim) {
  std::vector<Eigen::Index> lv;
  for (Eigen::Index n : {dim / 4, dim / 2, dim})
    if (n >= 1 && (lv.empty() || n > lv.back())) lv.push_back(n);
  if (lv.size() < 2 && dim >= 2) lv = {1, dim};
  if (lv.empty()) lv = {1};
  return lv;
}

// --- height function ---------------------------------------------------------

struct HeightProfile {
  std::vector<double> times;
  std::vector<double> values;              // h(t_k) = |e^{-t_k A} u0|
  std::vector<double> second_differences;  // divided differences, interior
  double initial_slope = 0.0;              // one-sided estimate of h'(0)
  double slope_bound = 0.0;                // -m(A) * h(0)
  double min_second_difference = 0.0;
};

template <class Op>
HeightProfile height_profile(const Op& op, const Vec& u0,
                             const TimeGrid& grid) {
  if (u0.size() == 0 || u0.isZero(0.0))
    throw ZeroInitialState("height_profile: u0 must be nonzero");

  HeightProfile p;
  p.times = grid.nodes;
  p.values.reserve(grid.nodes.size());
  for (double t : grid.nodes) p.values.push_back(h_norm(op, evolve(op, t, u0)));

  // Divided second differences keep the convexity sign on graded grids too.
  for (std::size_t k = 1; k + 1 < p.values.size(); ++k) {
    const double hl = p.times[k] - p.times[k - 1];
    const double hr = p.times[k + 1] - p.times[k];
    const double dd = 2.0 *
                      ((p.values[k + 1] - p.values[k]) / hr -
                       (p.values[k] - p.values[k - 1]) / hl) /
                      (hl + hr);
    p.second_differences.push_back(dd);
  }
  p.min_second_difference =
      p.second_differences.empty()
          ? std::numeric_limits<double>::quiet_NaN()
          : *std::min_element(p.second_differences.begin(),
                              p.second_differences.end());

  // Second-order one-sided difference with the documented step T/1000.
  const double dt = grid.T / 1000.0;
  const double h0 = p.values.front();
  const double h1 = h_norm(op, evolve(op, dt, u0));
  const double h2 = h_norm(op, evolve(op, 2 * dt, u0));
  p.initial_slope = (-3.0 * h0 + 4.0 * h1 - h2) / (2.0 * dt);
  p.slope_bound = -lower_bound_H(op) * h0;
  return p;
}

}  // namespace fvp
