#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tiltnewton/experiment.hpp"

using namespace tiltnewton;
using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"tiltnewton: generalized Newton experiments for tilt-stable minimizers"};
  app.require_subcommand(1);

  std::string config_path, outdir_override;
  std::uint64_t seed_override = 0;
  bool seed_set = false, outdir_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--outdir", outdir_override, "output directory")
        ->each([&](const std::string&) { outdir_set = true; });
    cmd->add_option("--seed", seed_override, "RNG seed for probes")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run configured algorithm variants and probes");
  add_common(run_cmd);
  CLI::App* probe_cmd = app.add_subcommand("probe", "run configured probes only");
  add_common(probe_cmd);
  CLI::App* sqp_cmd =
      app.add_subcommand("compare-sqp", "print the reduced and SQP subproblems side by side");
  sqp_cmd->add_option("config", config_path, "experiment config (JSON, NLP problem)")->required();
  std::string sqp_out;
  sqp_cmd->add_option("--out", sqp_out, "write the comparison JSON to a file");
  double sqp_r = 0.1;
  sqp_cmd->add_option("--r", sqp_r, "Moreau parameter for the reduced side");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config = ExperimentConfig::from_file(config_path);
    if (outdir_set) config.outdir = outdir_override;
    if (seed_set) config.seed = seed_override;

    if (run_cmd->parsed() || probe_cmd->parsed()) {
      const RunReport report =
          run_cmd->parsed() ? run_experiment(config) : run_probes(config);
      for (const auto& r : report.runs) {
        std::printf("run %-20s start %d: %-18s iters=%d grad_norm=%.3e\n", r.variant.c_str(),
                    r.start_index, r.status.c_str(), r.iterations, r.final_grad_norm);
      }
      for (const auto& p : report.probes) {
        if (p.error.empty())
          std::printf("probe %-16s: samples=%d violations=%d worst_ratio=%.3e\n", p.type.c_str(),
                      p.report.samples, p.report.violations, p.report.worst_ratio);
        else
          std::printf("probe %-16s: error: %s\n", p.type.c_str(), p.error.c_str());
      }
      std::printf("report: %s/report.json\n", config.outdir.c_str());
      return report.all_classifiable ? 0 : 1;
    }

    if (sqp_cmd->parsed()) {
      if (config.start_points.empty())
        throw ConfigInvalidError("compare-sqp needs an x0 or start_points entry");
      Vector lambda = Vector::Zero(config.problem.nlp() ? config.problem.nlp()->m : 0);
      const json cmp =
          compare_sqp_subproblems(config.problem, config.start_points.front(), lambda, sqp_r);
      if (!sqp_out.empty()) {
        std::ofstream f(sqp_out);
        f << cmp.dump(2) << "\n";
      }
      std::cout << cmp.dump(2) << std::endl;
      return 0;
    }
  } catch (const ConfigInvalidError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
