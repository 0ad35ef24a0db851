#pragma once

// Experiment orchestration for the CLI: loads a problem file, dispatches the
// subcommand, and writes report.json, the per-table CSVs, and manifest.json.
// Identical config + seed must produce byte-identical report.json, so nothing
// time- or path-dependent goes into the report (the manifest carries the
// invocation context instead).

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fvp/fvp_solver.hpp"
#include "fvp/heat_dirichlet.hpp"
#include "fvp/problem_io.hpp"

namespace fvp {

struct ExperimentConfig {
  std::string subcommand;
  std::string problem_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::optional<double> tau;
  std::optional<std::vector<Eigen::Index>> levels;
};

namespace run_detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json json_scalar(const Scalar& s) {
  return Json::array({s.real(), s.imag()});
}

inline Json json_vec(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_scalar(v[i]));
  return a;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

// CSV with fixed documented columns; floats at 17 significant digits.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(std::move(header)); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }
  void save(const std::filesystem::path& path) const {
    write_text(path, body_);
  }

 private:
  std::string body_;
};

inline std::vector<std::string> path_csv_header(Eigen::Index dim) {
  std::vector<std::string> h{"t"};
  for (Eigen::Index j = 0; j < dim; ++j) {
    h.push_back("re_" + std::to_string(j));
    h.push_back("im_" + std::to_string(j));
  }
  return h;
}

inline void save_path_csv(const std::filesystem::path& file,
                          const TimeGrid& grid, const std::vector<Vec>& states) {
  Csv csv(path_csv_header(states.empty() ? 0 : states.front().size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::vector<std::string> row{fmt17(grid.nodes[k])};
    for (Eigen::Index j = 0; j < states[k].size(); ++j) {
      row.push_back(fmt17(states[k][j].real()));
      row.push_back(fmt17(states[k][j].imag()));
    }
    csv.row(row);
  }
  csv.save(file);
}

struct ResolvedTolerances {
  double tau = kDefaultMembershipTau;
  std::vector<Eigen::Index> levels;
  double guard = kDefaultAmplificationGuard;
};

inline ResolvedTolerances resolve_tolerances(const ExperimentConfig& cfg,
                                             const ProblemInputs& p,
                                             Eigen::Index dim) {
  ResolvedTolerances r;
  r.tau = cfg.tau ? *cfg.tau : p.tol.tau.value_or(kDefaultMembershipTau);
  if (cfg.levels)
    r.levels = *cfg.levels;
  else if (p.tol.levels)
    r.levels = *p.tol.levels;
  else
    r.levels = default_levels(dim);
  r.guard = p.tol.guard.value_or(kDefaultAmplificationGuard);
  return r;
}

inline Json grid_json(const TimeGrid& g) {
  const char* cluster = g.cluster == TimeGrid::Cluster::End     ? "end"
                        : g.cluster == TimeGrid::Cluster::Start ? "start"
                                                                : "none";
  return Json{{"M", g.cells()}, {"grading", g.grading}, {"cluster", cluster}};
}

inline Json tolerances_json(const ResolvedTolerances& t) {
  return Json{{"tau", t.tau},
              {"levels", t.levels},
              {"guard", t.guard}};
}

inline Json diagnostic_json(const DomainDiagnostic& d) {
  Json gn = Json::array(), lg = Json::array();
  for (const auto& g : d.graph_norms) {
    gn.push_back(g.value);
    lg.push_back(g.log_value);
  }
  return Json{{"levels", d.levels},
              {"graph_norms", gn},
              {"log_graph_norms", lg},
              {"ratios", d.ratios},
              {"cauchy_gap", d.cauchy_gap},
              {"log_amplification", d.log_amplification},
              {"single_term_overflow", d.single_term_overflow}};
}

inline void compat_into(Json& report, const CompatibilityReport& rep) {
  report["verdict"] = to_string(rep.diagnostic.verdict);
  report["diagnostic"] = diagnostic_json(rep.diagnostic);
  report["y_norm"] = rep.y_norm.value;
  report["log_y_norm"] = rep.y_norm.log_value;
  Json parts{{"u_T", rep.data_norm},
             {"f_dual_l2", rep.f_dual_l2},
             {"graph_term", rep.graph_term.value},
             {"log_graph_term", rep.graph_term.log_value}};
  if (rep.has_g) parts["g_h12"] = rep.g_h12;
  report["norm_parts"] = parts;
  if (rep.in_domain())
    report["reconstructed_u0"] = json_vec(rep.reconstructed_u0);
}

inline const SpectralModel& need_spectral(const AnyOperator& op,
                                          const char* sub) {
  const auto* m = std::get_if<SpectralModel>(&op);
  if (!m)
    throw ConfigError(std::string(sub) +
                      " needs a spectral operator or a domain");
  return *m;
}

inline SourceTerm resolve_source(const ProblemInputs& p, Eigen::Index dim,
                                 const TimeGrid& grid) {
  if (!p.f) return SourceTerm::zero(dim, grid);
  check_source(*p.f, grid, dim);  // GridMismatch explains itself
  return *p.f;
}

}  // namespace run_detail

inline int run(const ExperimentConfig& cfg) {
  namespace rd = run_detail;
  namespace fs = std::filesystem;
  try {
    const Json pj = load_json_file(cfg.problem_path);
    ProblemInputs p = parse_problem(pj);
    fs::create_directories(cfg.out_dir);
    const fs::path out = cfg.out_dir;

    Json manifest{{"subcommand", cfg.subcommand},
                  {"inputs", Json{{"problem", cfg.problem_path}}},
                  {"seed", cfg.seed},
                  {"version", kVersion}};
    Json report;
    int exit_code = 0;

    auto require_op = [&]() -> const AnyOperator& {
      if (!p.op)
        throw ConfigError(cfg.subcommand +
                          " requires an 'operator' or 'domain' entry");
      return *p.op;
    };

    if (cfg.subcommand == "instability") {
      const auto& m = rd::need_spectral(require_op(), "instability");
      std::vector<int> ks = p.ks;
      if (ks.empty())
        for (int k = 1; k <= std::min<Eigen::Index>(8, m.eigenvalues.size());
             ++k)
          ks.push_back(k);
      const auto rows = instability_table(m, p.T, ks);
      rd::Csv csv({"k", "lambda", "log_norm", "norm"});
      Json jrows = Json::array();
      for (const auto& r : rows) {
        csv.row({std::to_string(r.k), rd::fmt17(r.lambda),
                 rd::fmt17(r.log_norm), rd::fmt17(r.norm)});
        jrows.push_back(Json{{"k", r.k},
                             {"lambda", r.lambda},
                             {"log_norm", r.log_norm},
                             {"norm", r.norm}});
      }
      csv.save(out / "instability.csv");
      report = Json{{"T", p.T}, {"dim", m.eigenvalues.size()}, {"rows", jrows}};
    } else if (cfg.subcommand == "compat" || cfg.subcommand == "solve") {
      const AnyOperator& op = require_op();
      const Eigen::Index n = op_dim(op);
      const TimeGrid grid = p.make_grid();
      if (!p.u_T) throw ConfigError(cfg.subcommand + " requires 'u_T'");
      if (p.u_T->size() != n)
        throw ConfigError("'u_T' length does not match the operator dim");
      const auto tol = rd::resolve_tolerances(cfg, p, n);
      FinalValueProblem fvp{op, rd::resolve_source(p, n, grid), *p.u_T, grid};
      const auto rep =
          compatibility_check(fvp, tol.tau, tol.levels, tol.guard);

      report = Json{{"T", grid.T},
                    {"dim", n},
                    {"grid", rd::grid_json(grid)},
                    {"tolerances", rd::tolerances_json(tol)}};
      rd::compat_into(report, rep);

      if (cfg.subcommand == "solve") {
        if (rep.in_domain()) {
          const SolutionPath path = solve_final_value(fvp, rep);
          report["x_norm"] = x_norm(op, path);
          report["final_state_rel_err"] =
              (path.states.back() - *p.u_T).norm() / p.u_T->norm();
          rd::save_path_csv(out / "path.csv", grid, path.states);
        } else {
          exit_code = 4;
        }
      }
    } else if (cfg.subcommand == "heat") {
      if (!p.domain) throw ConfigError("heat requires a 'domain' entry");
      const SpectralModel model = eigenbasis(*p.domain);
      const Eigen::Index n = model.eigenvalues.size();
      const TimeGrid grid = p.make_grid();
      if (!p.u_T) throw ConfigError("heat requires 'u_T'");
      if (p.u_T->size() != n)
        throw ConfigError("'u_T' length does not match the eigenbasis size");
      const auto tol = rd::resolve_tolerances(cfg, p, n);
      const SourceTerm f = rd::resolve_source(p, n, grid);
      const BoundaryData g = shape_boundary(p.g_raw, *p.domain, grid);
      const auto rep = heat_compatibility(*p.domain, f, g, *p.u_T, grid,
                                          tol.tau, tol.levels, tol.guard);

      report = Json{{"T", grid.T},
                    {"dim", n},
                    {"grid", rd::grid_json(grid)},
                    {"tolerances", rd::tolerances_json(tol)}};
      rd::compat_into(report, rep);

      if (rep.in_domain()) {
        const HeatSolution sol = solve_heat_fvp(*p.domain, f, g, grid, rep);
        report["x_norm"] = x1_norm(*p.domain, sol.path);
        report["final_state_rel_err"] =
            (sol.path.states.back() - *p.u_T).norm() / p.u_T->norm();
        rd::save_path_csv(out / "path.csv", grid, sol.path.states);
        rd::save_path_csv(out / "term_initial.csv", grid, sol.term_initial);
        rd::save_path_csv(out / "term_source.csv", grid, sol.term_source);
        rd::save_path_csv(out / "term_boundary.csv", grid, sol.term_boundary);
      } else {
        exit_code = 4;
      }
    } else if (cfg.subcommand == "roundtrip") {
      const auto& m = rd::need_spectral(require_op(), "roundtrip");
      const Eigen::Index n = m.eigenvalues.size();
      const TimeGrid grid = p.make_grid();
      const auto tol = rd::resolve_tolerances(cfg, p, n);
      std::mt19937_64 rng(cfg.seed);
      std::normal_distribution<double> nd(0.0, 1.0);
      rd::Csv csv({"sample", "verdict", "rel_final_err"});
      double max_err = 0.0;
      int failures = 0;
      for (int s = 0; s < p.n_samples; ++s) {
        Vec u0(n);
        for (Eigen::Index j = 0; j < n; ++j)
          u0[j] = Scalar(nd(rng) / (1.0 + m.eigenvalues[j]), 0.0);
        SourceTerm f;
        f.samples.resize(grid.nodes.size());
        for (auto& row : f.samples) {
          row.resize(n);
          for (Eigen::Index j = 0; j < n; ++j) row[j] = Scalar(nd(rng), 0.0);
        }
        const SolutionPath fwd = duhamel_path(m, u0, f, grid);
        FinalValueProblem prob{AnyOperator(m), f, fwd.states.back(), grid};
        const auto rep =
            compatibility_check(prob, tol.tau, tol.levels, tol.guard);
        double err = std::numeric_limits<double>::quiet_NaN();
        if (rep.in_domain()) {
          const SolutionPath back = solve_final_value(prob, rep);
          err = (back.states.back() - fwd.states.back()).norm() /
                fwd.states.back().norm();
          max_err = std::max(max_err, err);
        } else {
          ++failures;
        }
        csv.row({std::to_string(s), to_string(rep.diagnostic.verdict),
                 rd::fmt17(err)});
      }
      csv.save(out / "roundtrip.csv");
      report = Json{{"T", grid.T},
                    {"dim", n},
                    {"grid", rd::grid_json(grid)},
                    {"tolerances", rd::tolerances_json(tol)},
                    {"n_samples", p.n_samples},
                    {"failures", failures},
                    {"max_rel_final_err", max_err}};
    } else if (cfg.subcommand == "convexity") {
      const AnyOperator& op = require_op();
      if (!p.u0) throw ConfigError("convexity requires 'u0'");
      if (p.u0->size() != op_dim(op))
        throw ConfigError("'u0' length does not match the operator dim");
      const TimeGrid grid = p.make_grid();
      const HeightProfile prof = height_profile(op, *p.u0, grid);
      rd::Csv csv({"t", "h", "second_difference"});
      for (std::size_t k = 0; k < prof.times.size(); ++k) {
        const bool interior = k >= 1 && k + 1 < prof.times.size();
        csv.row({rd::fmt17(prof.times[k]), rd::fmt17(prof.values[k]),
                 interior ? rd::fmt17(prof.second_differences[k - 1])
                          : std::string()});
      }
      csv.save(out / "profile.csv");
      report = Json{{"T", grid.T},
                    {"dim", op_dim(op)},
                    {"grid", rd::grid_json(grid)},
                    {"m_A", lower_bound_H(op)},
                    {"h0", prof.values.front()},
                    {"initial_slope", prof.initial_slope},
                    {"slope_bound", prof.slope_bound},
                    {"min_second_difference", prof.min_second_difference}};
    } else if (cfg.subcommand == "weyl") {
      if (!p.domain) throw ConfigError("weyl requires a 'domain' entry");
      if (!p.lambda_max) throw ConfigError("weyl requires 'lambda_max'");
      const auto rows = weyl_count(*p.domain, *p.lambda_max);
      rd::Csv csv({"lambda", "count", "ratio"});
      Json jrows = Json::array();
      for (const auto& r : rows) {
        csv.row({rd::fmt17(r.lambda), std::to_string(r.count),
                 rd::fmt17(r.ratio)});
        jrows.push_back(Json{
            {"lambda", r.lambda}, {"count", r.count}, {"ratio", r.ratio}});
      }
      csv.save(out / "weyl.csv");
      report = Json{{"lambda_max", *p.lambda_max},
                    {"dimension", std::holds_alternative<Domain1D>(*p.domain)
                                      ? 1
                                      : 2},
                    {"ratio_at_max", rows.back().ratio},
                    {"rows", jrows}};
    } else if (cfg.subcommand == "probe") {
      const auto& m = rd::need_spectral(require_op(), "probe");
      const TimeGrid grid = p.make_grid();
      const ProbeResult res =
          stability_probe(m, grid, p.n_samples, cfg.seed);
      rd::Csv csv({"sample", "x_norm", "y_norm", "ratio"});
      for (std::size_t s = 0; s < res.samples.size(); ++s)
        csv.row({std::to_string(s), rd::fmt17(res.samples[s].x),
                 rd::fmt17(res.samples[s].y), rd::fmt17(res.samples[s].ratio)});
      csv.save(out / "probe.csv");
      report = Json{{"T", grid.T},
                    {"dim", m.eigenvalues.size()},
                    {"grid", rd::grid_json(grid)},
                    {"n_samples", p.n_samples},
                    {"empirical_c", res.empirical_c}};
    } else {
      throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
    }

    rd::write_json(out / "report.json", report);
    rd::write_json(out / "manifest.json", manifest);
    return exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 3;
  }
}

}  // namespace fvp
