#include <catch2/catch_amalgamated.hpp>

#include "fvp/fvp_solver.hpp"
#include "helpers.hpp"

using namespace fvp;
namespace ft = fvp::testing;

namespace {

SpectralModel squares(int n) {
  RealVec lam(n);
  for (int j = 1; j <= n; ++j) lam[j - 1] = double(j) * j;
  return make_spectral_model(lam);
}

// compatible random instance: draw u0 and f, run the forward map
FinalValueProblem random_instance(std::mt19937_64& g, const SpectralModel& m,
                                  const TimeGrid& grid) {
  const Eigen::Index n = m.eigenvalues.size();
  std::normal_distribution<double> nd;
  Vec u0(n);
  for (Eigen::Index j = 0; j < n; ++j)
    u0[j] = Scalar(nd(g), nd(g)) / (1.0 + m.eigenvalues[j]);
  SourceTerm f;
  f.interpolation = Interp::PiecewiseLinear;
  for (std::size_t k = 0; k < grid.nodes.size(); ++k)
    f.samples.push_back(ft::random_vec(g, n));
  auto path = duhamel_path(m, u0, f, grid);
  return FinalValueProblem{AnyOperator(m), std::move(f), path.states.back(),
                           grid};
}

}  // namespace

TEST_CASE("roundtrip through a known initial state") {
  auto g = ft::rng(31);
  RealVec lam(6);
  lam << 1, 2, 4, 8, 16, 32;
  auto m = make_spectral_model(lam);
  auto grid = TimeGrid::uniform(1.0, 64);
  // decaying coordinates, so the level-wise graph sums of the recovered
  // state stabilise and the classifier can certify membership
  Vec u0 = ft::random_vec(g, 6);
  for (Eigen::Index j = 0; j < u0.size(); ++j)
    u0[j] /= (1.0 + lam[j]) * (1.0 + lam[j]);
  Vec u_T = evolve(m, grid.T, u0);
  FinalValueProblem p{AnyOperator(m), SourceTerm::zero(6, grid), u_T, grid};
  auto rep = compatibility_check(p, 0.05, {2, 4, 6});
  REQUIRE(rep.in_domain());
  CHECK((rep.reconstructed_u0 - u0).norm() <= 1e-9 * u0.norm());
  // the report invariant: evolve(T, u0_rec) + y_f = u_T
  Vec fwd = evolve(m, grid.T, rep.reconstructed_u0) + rep.y_f;
  CHECK((fwd - u_T).norm() <= 1e-9 * u_T.norm());
}

TEST_CASE("a final-state spike is incompatible") {
  auto m = squares(32);
  auto grid = TimeGrid::uniform(1.0, 32);
  Vec spike = Vec::Zero(32);
  spike[5] = 1;  // mode k = 6
  FinalValueProblem p{AnyOperator(m), SourceTerm::zero(32, grid), spike, grid};
  auto rep = compatibility_check(p);
  CHECK(rep.diagnostic.verdict == Verdict::NotInDomain);
  CHECK(rep.diagnostic.graph_norms.back().log_value ==
        Catch::Approx(36.0).margin(1e-6));
  CHECK_THROWS_AS(solve_final_value(p, rep), NotCompatible);
}

TEST_CASE("u_T equal to the source yield reconstructs a zero initial state") {
  RealVec lam(2);
  lam << 1, 4;
  auto m = make_spectral_model(lam);
  const double T = 1.0;
  auto grid = TimeGrid::uniform(T, 128);
  SourceTerm f;  // f = e_1, constant in time
  f.interpolation = Interp::PiecewiseConstantLeft;
  Vec e1 = Vec::Zero(2);
  e1[0] = 1;
  f.samples.assign(grid.nodes.size(), e1);
  Vec u_T = Vec::Zero(2);
  u_T[0] = (1.0 - std::exp(-T * lam[0])) / lam[0];
  FinalValueProblem p{AnyOperator(m), f, u_T, grid};
  auto rep = compatibility_check(p, 0.05, {1, 2});
  REQUIRE(rep.in_domain());
  CHECK(rep.reconstructed_u0.norm() < 1e-10);
}

TEST_CASE("scalar problem with constant source recovers 1 - e^{-t}") {
  auto m = make_spectral_model((RealVec(1) << 1).finished());
  const double T = 1.0;
  auto grid = TimeGrid::uniform(T, 256);
  SourceTerm f;
  f.interpolation = Interp::PiecewiseConstantLeft;
  f.samples.assign(grid.nodes.size(), Vec::Ones(1));
  Vec u_T = Vec::Constant(1, Scalar(1.0 - std::exp(-T), 0));
  FinalValueProblem p{AnyOperator(m), f, u_T, grid};
  auto rep = compatibility_check(p, 0.05, {1});
  REQUIRE(rep.in_domain());
  CHECK(rep.reconstructed_u0.norm() < 1e-10);
  auto path = solve_final_value(p, rep);
  for (std::size_t k = 0; k < grid.nodes.size(); ++k)
    CHECK(path.states[k][0].real() ==
          Catch::Approx(1.0 - std::exp(-grid.nodes[k])).margin(1e-10));
}

TEST_CASE("homogeneous solve returns the evolved states exactly") {
  auto g = ft::rng(12);
  RealVec lam(4);
  lam << 0.5, 1, 2, 3;
  auto m = make_spectral_model(lam);
  auto grid = TimeGrid::uniform(0.75, 32);
  Vec u0 = ft::random_vec(g, 4);
  FinalValueProblem p{AnyOperator(m), SourceTerm::zero(4, grid),
                      evolve(m, grid.T, u0), grid};
  auto rep = compatibility_check(p, 0.05, {4});
  REQUIRE(rep.in_domain());
  auto path = solve_final_value(p, rep);
  for (std::size_t k = 0; k < grid.nodes.size(); ++k)
    CHECK((path.states[k] - evolve(m, grid.nodes[k], rep.reconstructed_u0))
              .norm() == 0.0);
}

TEST_CASE("every forward path passes the compatibility check") {
  auto g = ft::rng(77);
  auto m = squares(16);
  std::uniform_real_distribution<double> ud(0.25, 1.0);
  for (int i = 0; i < 50; ++i) {
    auto grid = TimeGrid::uniform(ud(g), 48);
    auto p = random_instance(g, m, grid);
    auto rep = compatibility_check(p, 0.05, {4, 8, 16});
    CHECK(rep.in_domain());
  }
}

TEST_CASE("forward smoothing beats e^{-T lam} per coordinate") {
  auto g = ft::rng(55);
  auto m = squares(12);
  const double T = 0.8;
  Vec u0 = ft::random_vec(g, 12);
  Vec u_T = evolve(m, T, u0);
  for (int j = 0; j < 12; ++j)
    CHECK(std::abs(u_T[j]) <=
          std::exp(-T * m.eigenvalues[j]) * u0.norm() * (1 + 1e-12));
}

TEST_CASE("x norm: closed form for one slow mode over a long window") {
  auto m = make_spectral_model((RealVec(1) << 1).finished());
  auto grid = TimeGrid::uniform(5.0, 4096);
  auto path = duhamel_path(m, Vec::Ones(1), SourceTerm::zero(1, grid), grid);
  // u = e^{-t}: integral of u^2 + u'^2 tends to 1, sup is 1
  CHECK(x_norm(AnyOperator(m), path) ==
        Catch::Approx(std::sqrt(2.0)).margin(1e-3));
}

TEST_CASE("x norm is homogeneous and needs derivatives") {
  auto g = ft::rng(8);
  RealVec lam(3);
  lam << 1, 2, 5;
  auto m = make_spectral_model(lam);
  auto grid = TimeGrid::uniform(1.0, 64);
  auto p1 = duhamel_path(m, ft::random_vec(g, 3), SourceTerm::zero(3, grid),
                         grid);
  auto p2 = p1;
  for (auto& s : p2.states) s *= 2.0;
  for (auto& s : p2.derivative_states) s *= 2.0;
  CHECK(x_norm(AnyOperator(m), p2) ==
        Catch::Approx(2.0 * x_norm(AnyOperator(m), p1)).epsilon(1e-12));

  auto zero = duhamel_path(m, Vec::Zero(3), SourceTerm::zero(3, grid), grid);
  CHECK(x_norm(AnyOperator(m), zero) == 0.0);

  p2.derivative_states.clear();
  CHECK_THROWS_AS(x_norm(AnyOperator(m), p2), MissingDerivatives);
}

TEST_CASE("instability table") {
  auto m = squares(8);
  auto rows = instability_table(m, 1.0, {1, 2, 3});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].log_norm == Catch::Approx(1.0).margin(1e-12));
  CHECK(rows[1].log_norm == Catch::Approx(4.0).margin(1e-12));
  CHECK(rows[2].log_norm == Catch::Approx(9.0).margin(1e-12));
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].log_norm > rows[i - 1].log_norm);

  for (auto& r : instability_table(m, 0.0, {1, 2, 3}))
    CHECK(r.log_norm == 0.0);
  auto doubled = instability_table(m, 2.0, {1, 2, 3});
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(doubled[i].log_norm == Catch::Approx(2 * rows[i].log_norm));

  CHECK_THROWS_AS(instability_table(m, 1.0, {0}), DimensionMismatch);
  CHECK_THROWS_AS(instability_table(m, 1.0, {9}), DimensionMismatch);
}

TEST_CASE("y norm dominates both data terms") {
  auto g = ft::rng(91);
  auto m = squares(12);
  auto grid = TimeGrid::uniform(0.5, 64);
  for (int i = 0; i < 10; ++i) {
    auto p = random_instance(g, m, grid);
    auto rep = compatibility_check(p, 0.05, {6, 12});
    REQUIRE(rep.in_domain());
    CHECK(rep.y_norm.value + 1e-12 >= rep.data_norm);
    CHECK(rep.y_norm.value * rep.y_norm.value + 1e-9 >= rep.f_dual_l2);
  }
}

TEST_CASE("stability probe is deterministic and grows with more samples") {
  auto m = squares(8);
  auto grid = TimeGrid::uniform(1.0, 32);
  auto a = stability_probe(m, grid, 20, 4242);
  auto b = stability_probe(m, grid, 20, 4242);
  CHECK(a.empirical_c == b.empirical_c);
  REQUIRE(a.samples.size() == 20);
  for (auto& s : a.samples) {
    CHECK(std::isfinite(s.ratio));
    CHECK(s.ratio > 0);
  }
  auto c = stability_probe(m, grid, 40, 4242);
  CHECK(c.empirical_c >= a.empirical_c);  // running max over a shared prefix
}
