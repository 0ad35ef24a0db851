#pragma once

// Problem-file schema (JSON). One file describes the operator (directly or
// via a heat domain), the time horizon and grid, and whichever data fields
// the subcommand needs. Scalars are plain numbers or [re, im] pairs.

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fvp/heat_dirichlet.hpp"
#include "fvp/operator_core.hpp"
#include "fvp/source_term.hpp"
#include "fvp/time_grid.hpp"

namespace fvp {

using Json = nlohmann::json;

struct ToleranceOverrides {
  std::optional<double> tau;
  std::optional<std::vector<Eigen::Index>> levels;
  std::optional<double> guard;
};

struct ProblemInputs {
  std::optional<AnyOperator> op;    // resolved operator (domain-derived if needed)
  std::optional<HeatDomain> domain;
  double T = 1.0;
  std::size_t grid_m = 512;
  double grid_q = 2.0;
  TimeGrid::Cluster grid_cluster = TimeGrid::Cluster::End;
  std::optional<SourceTerm> f;      // raw samples; validated against the grid
  Json g_raw;                        // boundary data, shaped once grid known
  std::optional<Vec> u_T;
  std::optional<Vec> u0;
  std::vector<int> ks;
  std::optional<double> lambda_max;
  int n_samples = 100;
  ToleranceOverrides tol;

  TimeGrid make_grid() const {
    switch (grid_cluster) {
      case TimeGrid::Cluster::End:
        return TimeGrid::graded_end(T, grid_m, grid_q);
      case TimeGrid::Cluster::Start:
        return TimeGrid::graded_start(T, grid_m, grid_q);
      case TimeGrid::Cluster::None:
        break;
    }
    return TimeGrid::uniform(T, grid_m);
  }
};

namespace io_detail {

inline ConfigError bad(const std::string& where, const std::string& what) {
  return ConfigError("problem file: " + where + ": " + what);
}

inline Scalar parse_scalar(const Json& j, const std::string& where) {
  if (j.is_number()) return Scalar(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Scalar(j[0].get<double>(), j[1].get<double>());
  throw bad(where, "expected a number or an [re, im] pair");
}

inline Vec parse_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw bad(where, "expected an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[Eigen::Index(i)] = parse_scalar(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Mat parse_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw bad(where, "expected a nonempty 2d array");
  const std::size_t rows = j.size();
  Mat m;
  for (std::size_t r = 0; r < rows; ++r) {
    const Vec row = parse_vector(j[r], where + "[" + std::to_string(r) + "]");
    if (r == 0)
      m.resize(Eigen::Index(rows), row.size());
    else if (row.size() != m.cols())
      throw bad(where, "ragged rows");
    m.row(Eigen::Index(r)) = row.transpose();
  }
  return m;
}

inline Interp parse_interp(const Json& j, const std::string& where) {
  const auto s = j.get<std::string>();
  if (s == "constant" || s == "piecewise_constant_left")
    return Interp::PiecewiseConstantLeft;
  if (s == "linear" || s == "piecewise_linear") return Interp::PiecewiseLinear;
  throw bad(where, "interpolation must be 'constant' or 'linear'");
}

}  // namespace io_detail

inline ProblemInputs parse_problem(const Json& j) {
  using io_detail::bad;
  if (!j.is_object()) throw bad("/", "root must be an object");
  ProblemInputs p;

  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    const std::string kind = d.value("kind", "");
    if (!d.contains("lengths") || !d.at("lengths").is_array())
      throw bad("/domain/lengths", "expected an array of side lengths");
    const auto& ls = d.at("lengths");
    if (kind == "interval") {
      if (ls.size() != 1) throw bad("/domain/lengths", "interval takes one length");
      Domain1D dom{ls[0].get<double>(), d.value("truncation", 0)};
      if (dom.truncation < 1) throw bad("/domain/truncation", "must be >= 1");
      p.domain = dom;
    } else if (kind == "rectangle") {
      if (ls.size() != 2) throw bad("/domain/lengths", "rectangle takes two lengths");
      if (!d.contains("truncation") || !d.at("truncation").is_array() ||
          d.at("truncation").size() != 2)
        throw bad("/domain/truncation", "rectangle takes [Nx, Ny]");
      Domain2DRect dom{ls[0].get<double>(), ls[1].get<double>(),
                       d.at("truncation")[0].get<int>(),
                       d.at("truncation")[1].get<int>()};
      if (dom.truncation_x < 1 || dom.truncation_y < 1)
        throw bad("/domain/truncation", "must be >= 1");
      p.domain = dom;
    } else {
      throw bad("/domain/kind", "expected 'interval' or 'rectangle'");
    }
    try {
      p.op = AnyOperator(eigenbasis(*p.domain));
    } catch (const Error& e) {
      throw bad("/domain", e.what());
    }
  }

  if (j.contains("operator")) {
    const auto& o = j.at("operator");
    const std::string kind = o.value("kind", "");
    try {
      if (kind == "spectral") {
        if (!o.contains("eigenvalues"))
          throw bad("/operator/eigenvalues", "missing");
        const Vec raw =
            io_detail::parse_vector(o.at("eigenvalues"), "/operator/eigenvalues");
        if (raw.size() == 0) throw bad("/operator/eigenvalues", "empty");
        RealVec lam = raw.real();
        if (raw.imag().cwiseAbs().maxCoeff() != 0.0)
          throw bad("/operator/eigenvalues", "must be real");
        p.op = AnyOperator(
            make_spectral_model(std::move(lam), o.value("label", "spectral")));
      } else if (kind == "matrix") {
        for (const char* key : {"gram_H", "gram_V", "form"})
          if (!o.contains(key))
            throw bad(std::string("/operator/") + key, "missing");
        p.op = AnyOperator(build_lax_milgram(
            io_detail::parse_matrix(o.at("gram_H"), "/operator/gram_H"),
            io_detail::parse_matrix(o.at("gram_V"), "/operator/gram_V"),
            io_detail::parse_matrix(o.at("form"), "/operator/form")));
      } else {
        throw bad("/operator/kind", "expected 'spectral' or 'matrix'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw bad("/operator", e.what());
    }
  }

  if (j.contains("T")) {
    if (!j.at("T").is_number()) throw bad("/T", "expected a number");
    p.T = j.at("T").get<double>();
    if (!(p.T > 0)) throw bad("/T", "must be positive");
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const int m = g.value("M", 512);
    if (m < 1) throw bad("/grid/M", "must be >= 1");
    p.grid_m = std::size_t(m);
    p.grid_q = g.value("grading", 2.0);
    if (!(p.grid_q >= 1.0)) throw bad("/grid/grading", "must be >= 1");
    const std::string c = g.value("cluster", "end");
    if (c == "end")
      p.grid_cluster = TimeGrid::Cluster::End;
    else if (c == "start")
      p.grid_cluster = TimeGrid::Cluster::Start;
    else if (c == "none")
      p.grid_cluster = TimeGrid::Cluster::None;
    else
      throw bad("/grid/cluster", "expected 'end', 'start' or 'none'");
  }

  if (j.contains("f") && !j.at("f").is_null()) {
    const auto& fj = j.at("f");
    if (fj.value("kind", "") != "zero") {
      if (!fj.contains("samples") || !fj.at("samples").is_array())
        throw bad("/f/samples", "expected an array of per-node sample rows");
      SourceTerm f;
      for (std::size_t r = 0; r < fj.at("samples").size(); ++r)
        f.samples.push_back(io_detail::parse_vector(
            fj.at("samples")[r], "/f/samples[" + std::to_string(r) + "]"));
      if (fj.contains("interpolation"))
        f.interpolation =
            io_detail::parse_interp(fj.at("interpolation"), "/f/interpolation");
      f.closed_form = fj.value("closed_form", "");
      p.f = std::move(f);
    }
  }

  if (j.contains("g") && !j.at("g").is_null()) p.g_raw = j.at("g");

  if (j.contains("u_T"))
    p.u_T = io_detail::parse_vector(j.at("u_T"), "/u_T");
  if (j.contains("u0")) p.u0 = io_detail::parse_vector(j.at("u0"), "/u0");

  if (j.contains("ks")) {
    if (!j.at("ks").is_array()) throw bad("/ks", "expected an array");
    for (const auto& e : j.at("ks")) p.ks.push_back(e.get<int>());
  }
  if (j.contains("lambda_max"))
    p.lambda_max = j.at("lambda_max").get<double>();
  if (j.contains("n_samples")) {
    p.n_samples = j.at("n_samples").get<int>();
    if (p.n_samples < 1) throw bad("/n_samples", "must be >= 1");
  }

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (t.contains("tau")) p.tol.tau = t.at("tau").get<double>();
    if (t.contains("guard")) p.tol.guard = t.at("guard").get<double>();
    if (t.contains("levels")) {
      std::vector<Eigen::Index> lv;
      for (const auto& e : t.at("levels")) lv.push_back(e.get<Eigen::Index>());
      p.tol.levels = std::move(lv);
    }
  }
  return p;
}

// Boundary data needs the resolved grid and domain, so it is shaped late.
inline BoundaryData shape_boundary(const Json& g_raw, const HeatDomain& dom,
                                   const TimeGrid& grid) {
  using io_detail::bad;
  BoundaryData g;
  g.grid = grid;
  const std::size_t comps =
      std::visit([](const auto& d) { return boundary_components(d); }, dom);
  if (g_raw.is_null()) {
    g.components.assign(
        comps, std::vector<Vec>(grid.nodes.size(), Vec::Zero(1)));
    return g;
  }
  const bool interval = std::holds_alternative<Domain1D>(dom);
  if (!g_raw.contains("components") || !g_raw.at("components").is_array())
    throw bad("/g/components", "expected per-component trace arrays");
  const auto& cj = g_raw.at("components");
  if (cj.size() != comps)
    throw bad("/g/components",
              "expected " + std::to_string(comps) + " components");
  for (std::size_t c = 0; c < comps; ++c) {
    const auto& rows = cj[c];
    if (!rows.is_array() || rows.size() != grid.nodes.size())
      throw bad("/g/components[" + std::to_string(c) + "]",
                "expected one entry per grid node (" +
                    std::to_string(grid.nodes.size()) + ")");
    std::vector<Vec> series;
    series.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string where =
          "/g/components[" + std::to_string(c) + "][" + std::to_string(r) + "]";
      // Interval traces are scalars per node; rectangle traces are arrays of
      // edge-mode coefficients per node (so [a, b] is unambiguous).
      if (interval) {
        Vec v(1);
        v[0] = io_detail::parse_scalar(rows[r], where);
        series.push_back(std::move(v));
      } else {
        series.push_back(io_detail::parse_vector(rows[r], where));
      }
    }
    g.components.push_back(std::move(series));
  }
  if (g_raw.contains("interpolation"))
    g.interpolation =
        io_detail::parse_interp(g_raw.at("interpolation"), "/g/interpolation");
  return g;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("problem file is not valid JSON: " +
                      std::string(e.what()));
  }
  return j;
}

}  // namespace fvp
