#pragma once

// Finite-dimensional Gelfand triples V -> H -> V* represented by two Gram
// matrices in a shared coordinate basis, and the operators induced by
// bounded V-elliptic sesquilinear forms. V* is never materialized: dual
// quantities go through the Gram pencil, which keeps duality exact.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fvp/errors.hpp"
#include "fvp/types.hpp"

namespace fvp {

inline constexpr double kTolPd = 1e-12;  // PD cutoff relative to max eigenvalue

namespace detail {

inline void check_hermitian(const Mat& g, const std::string& name) {
  const double scale = g.norm();
  if ((g - g.adjoint()).norm() > 1e-12 * std::max(scale, 1.0))
    throw NotPositiveDefinite(name + " is not Hermitian");
}

// Eigenvalues of the Hermitian pencil (S, B), B positive definite.
inline RealVec pencil_eigenvalues(const Mat& s, const Mat& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(s, b,
                                                   Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NotPositiveDefinite("generalized eigensolve failed");
  return es.eigenvalues();
}

}  // namespace detail

struct GelfandTriple {
  Eigen::Index dim = 0;
  Mat gram_H;
  Mat gram_V;
  // |x| <= embedding * ||x||  and  ||x||_* <= embedding * |x|.
  double embedding = 0.0;

  Eigen::LLT<Mat> llt_H;  // cached for A = gram_H^{-1} * S
  Eigen::LLT<Mat> llt_V;  // cached for dual-norm solves

  static GelfandTriple create(Mat gram_h, Mat gram_v) {
    if (gram_h.rows() != gram_h.cols() || gram_v.rows() != gram_v.cols() ||
        gram_h.rows() != gram_v.rows())
      throw DimensionMismatch("gram matrices must be square and equal size");
    detail::check_hermitian(gram_h, "gram_H");
    detail::check_hermitian(gram_v, "gram_V");

    GelfandTriple t;
    t.dim = gram_h.rows();
    t.gram_H = std::move(gram_h);
    t.gram_V = std::move(gram_v);

    for (const auto* g : {&t.gram_H, &t.gram_V}) {
      Eigen::SelfAdjointEigenSolver<Mat> es(*g, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (!(lo > kTolPd * std::max(hi, 0.0)))
        throw NotPositiveDefinite("gram matrix is not positive definite");
    }

    // Embedding constant from the pencil (gram_H, gram_V).
    t.embedding = std::sqrt(
        detail::pencil_eigenvalues(t.gram_H, t.gram_V).maxCoeff());
    t.llt_H.compute(t.gram_H);
    t.llt_V.compute(t.gram_V);
    return t;
  }
};

struct NormTriple {
  double h = 0.0;     // |x|
  double v = 0.0;     // ||x||
  double dual = 0.0;  // ||x||_*
};

struct LaxMilgramOperator {
  GelfandTriple triple;
  Mat form;            // S with a(u,v) = v^* S u
  Mat op;              // A solving gram_H * A = S
  double ellipticity;  // alpha: Re(x^* S x) >= alpha x^* gram_V x
  double bound;        // C with |a(u,v)| <= C ||u|| ||v||
  double lower_bound_H;  // m(A) = min Re<Ax,x>_H over |x|_H = 1
};

inline LaxMilgramOperator build_lax_milgram(const Mat& gram_h,
                                            const Mat& gram_v,
                                            const Mat& form) {
  if (form.rows() != form.cols() || form.rows() != gram_h.rows())
    throw DimensionMismatch("form must be square, same size as the grams");
  auto triple = GelfandTriple::create(gram_h, gram_v);

  const Mat herm = 0.5 * (form + form.adjoint());
  const Mat skew_h = (form - form.adjoint()) / Scalar(0, 2);  // Hermitian

  const RealVec ev_v = detail::pencil_eigenvalues(herm, triple.gram_V);
  const double alpha = ev_v.minCoeff();
  if (!(alpha > 0)) throw NotElliptic("form is not V-elliptic");

  const double c_herm = ev_v.cwiseAbs().maxCoeff();
  const double c_skew =
      detail::pencil_eigenvalues(skew_h, triple.gram_V).cwiseAbs().maxCoeff();

  const double m_a =
      detail::pencil_eigenvalues(herm, triple.gram_H).minCoeff();

  LaxMilgramOperator a;
  a.op = triple.llt_H.solve(form);
  a.form = form;
  a.triple = std::move(triple);
  a.ellipticity = alpha;
  a.bound = c_herm + c_skew;
  a.lower_bound_H = m_a;
  return a;
}

// Ascending positive eigenvalues standing in for -Laplace_D: gram_H = I,
// gram_V = diag(lambda), A = diag(lambda).
struct SpectralModel {
  RealVec eigenvalues;
  std::string label;
  // Mode numbers behind each eigenvalue when the model comes from a domain
  // ((j,0) for intervals, (j,k) for rectangles); empty otherwise.
  std::vector<std::array<int, 2>> mode_ids;
};

inline SpectralModel make_spectral_model(
    RealVec eigenvalues, std::string label = {},
    std::vector<std::array<int, 2>> mode_ids = {}) {
  if (eigenvalues.size() == 0)
    throw DimensionMismatch("spectral model needs at least one eigenvalue");
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    if (!(eigenvalues[j] > 0))
      throw NotElliptic("eigenvalues must be strictly positive");
    if (j > 0 && eigenvalues[j] < eigenvalues[j - 1])
      throw NotElliptic("eigenvalues must be non-decreasing");
  }
  if (!mode_ids.empty() && Eigen::Index(mode_ids.size()) != eigenvalues.size())
    throw DimensionMismatch("mode_ids length must match eigenvalues");
  return {std::move(eigenvalues), std::move(label), std::move(mode_ids)};
}

using AnyOperator = std::variant<SpectralModel, LaxMilgramOperator>;

// --- uniform accessors -----------------------------------------------------

inline Eigen::Index op_dim(const SpectralModel& m) {
  return m.eigenvalues.size();
}
inline Eigen::Index op_dim(const LaxMilgramOperator& a) {
  return a.triple.dim;
}
inline Eigen::Index op_dim(const AnyOperator& op) {
  return std::visit([](const auto& o) { return op_dim(o); }, op);
}

inline double lower_bound_H(const SpectralModel& m) {
  return m.eigenvalues[0];
}
inline double lower_bound_H(const LaxMilgramOperator& a) {
  return a.lower_bound_H;
}
inline double lower_bound_H(const AnyOperator& op) {
  return std::visit([](const auto& o) { return lower_bound_H(o); }, op);
}

inline Vec apply_op(const SpectralModel& m, const Vec& x) {
  require(x.size() == m.eigenvalues.size(), "apply_op: dim mismatch");
  return m.eigenvalues.cast<Scalar>().cwiseProduct(x);
}
inline Vec apply_op(const LaxMilgramOperator& a, const Vec& x) {
  require(x.size() == a.triple.dim, "apply_op: dim mismatch");
  return a.op * x;
}
inline Vec apply_op(const AnyOperator& op, const Vec& x) {
  return std::visit([&](const auto& o) { return apply_op(o, x); }, op);
}

// --- the three norms of the triple ------------------------------------------

inline NormTriple norms(const GelfandTriple& t, const Vec& x) {
  require(x.size() == t.dim, "norms: dim mismatch");
  NormTriple n;
  n.h = std::sqrt(std::abs((x.adjoint() * (t.gram_H * x))(0).real()));
  n.v = std::sqrt(std::abs((x.adjoint() * (t.gram_V * x))(0).real()));
  // ||x||_*^2 = (G_H x)^* G_V^{-1} (G_H x)
  const Vec w = t.gram_H * x;
  n.dual = std::sqrt(std::abs(w.dot(t.llt_V.solve(w)).real()));
  return n;
}

inline NormTriple norms(const SpectralModel& m, const Vec& x) {
  require(x.size() == m.eigenvalues.size(), "norms: dim mismatch");
  NormTriple n;
  double h2 = 0, v2 = 0, d2 = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a2 = std::norm(x[j]);
    h2 += a2;
    v2 += m.eigenvalues[j] * a2;
    d2 += a2 / m.eigenvalues[j];
  }
  n.h = std::sqrt(h2);
  n.v = std::sqrt(v2);
  n.dual = std::sqrt(d2);
  return n;
}

inline NormTriple norms(const LaxMilgramOperator& a, const Vec& x) {
  return norms(a.triple, x);
}
inline NormTriple norms(const AnyOperator& op, const Vec& x) {
  return std::visit([&](const auto& o) { return norms(o, x); }, op);
}

template <class Op>
double h_norm(const Op& op, const Vec& x) {
  return norms(op, x).h;
}
template <class Op>
double dual_norm(const Op& op, const Vec& x) {
  return norms(op, x).dual;
}

inline double embedding_constant(const SpectralModel& m) {
  return 1.0 / std::sqrt(m.eigenvalues[0]);
}
inline double embedding_constant(const LaxMilgramOperator& a) {
  return a.triple.embedding;
}

}  // namespace fvp
