// fvp command line driver. Every subcommand takes the same flags and writes
// report.json / manifest.json (+ CSV tables) into --out.

#include <CLI11.hpp>

#include "fvp/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"final value problems for parabolic equations"};
  app.require_subcommand(1);

  fvp::ExperimentConfig cfg;
  double tol = 0.0;
  std::vector<Eigen::Index> levels;

  const char* names[] = {"instability", "roundtrip", "compat", "solve",
                         "heat",        "convexity", "weyl",   "probe"};
  const char* blurbs[] = {
      "tabulate the backward growth factor exp(T*lambda_k)",
      "forward-solve random data, then recover it from the final state",
      "classify final data as compatible / borderline / incompatible",
      "reconstruct the trajectory from final data",
      "heat equation on an interval or rectangle with boundary data",
      "height function t -> |u(t)| along a forward solve",
      "eigenvalue counting function vs the Weyl asymptotic",
      "sample random problems and estimate the stability constant",
  };
  for (int i = 0; i < 8; ++i) {
    auto* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--problem", cfg.problem_path, "problem description JSON")
        ->required();
    sub->add_option("--out", cfg.out_dir, "output directory")->required();
    sub->add_option("--seed", cfg.seed, "seed for randomized subcommands");
    auto* t = sub->add_option("--tol", tol, "membership tolerance override");
    auto* l = sub->add_option("--levels", levels,
                              "truncation levels override, e.g. 16,32,64")
                  ->delimiter(',');
    sub->callback([&, i, t, l] {
      cfg.subcommand = names[i];
      if (t->count()) cfg.tau = tol;
      if (l->count()) cfg.levels = levels;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad usage is a config error
  }
  return fvp::run(cfg);
}
