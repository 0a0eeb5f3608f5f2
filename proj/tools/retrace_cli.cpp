// Command-line surface for the retrace engine: run exploration/inference
// benchmarks against a world fixture, evaluate results files, inspect
// buffer/memory snapshots, and compare runs.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "retrace/retrace.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int rounds = 0;
  int parallel = 0;
  bool baseline = false;
  std::vector<std::string> ablations;
  std::string load_buffer;
  std::string load_memory;
};

void add_run_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run config file (JSON)")->required();
  cmd->add_option("--out", flags.out_dir, "output directory override");
  cmd->add_option("--seed", flags.seed, "seed override")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--rounds", flags.rounds, "rounds override");
  cmd->add_option("--parallel", flags.parallel, "episode parallelism (1 = serial)");
  cmd->add_flag("--baseline", flags.baseline, "run the memoryless baseline agent");
  cmd->add_option("--ablate", flags.ablations,
                  "disable a component: reflection | navigation | failed-trajectories");
  cmd->add_option("--load-buffer", flags.load_buffer, "resume from a buffer snapshot");
  cmd->add_option("--load-memory", flags.load_memory, "resume from a memory store");
}

retrace::RunConfig make_config(const CommonFlags& flags) {
  retrace::RunConfig config = retrace::RunConfig::from_file(flags.config_path);
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.seed_set) config.seed = flags.seed;
  if (flags.rounds > 0) config.rounds = flags.rounds;
  if (flags.parallel > 0) config.parallelism = flags.parallel;
  if (flags.baseline) config.agent = "baseline";
  for (const auto& a : flags.ablations) {
    if (a == "reflection") {
      config.ablate_reflection = true;
    } else if (a == "navigation") {
      config.ablate_navigation = true;
    } else if (a == "failed-trajectories") {
      config.validated_only = true;
    } else {
      throw retrace::SchemaError("unknown ablation: " + a);
    }
  }
  config.validate();
  return config;
}

retrace::detail::ResumeState make_resume(const CommonFlags& flags) {
  return {flags.load_buffer, flags.load_memory};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrace: replay-graph navigation memory for web agents"};
  app.require_subcommand(1);

  CommonFlags run_flags, explore_flags, infer_flags;
  auto* run = app.add_subcommand("run", "explore + infer for the configured rounds");
  add_run_flags(run, run_flags);
  auto* explore = app.add_subcommand("explore", "exploration phase only");
  add_run_flags(explore, explore_flags);
  auto* infer = app.add_subcommand("infer", "inference phase only");
  add_run_flags(infer, infer_flags);

  std::string eval_results, eval_out = "out";
  auto* eval = app.add_subcommand("eval", "aggregate a results file into a report");
  eval->add_option("--results", eval_results, "results file")->required();
  eval->add_option("--out", eval_out, "output directory");

  std::string inspect_kind, inspect_path;
  bool graphviz = false;
  auto* inspect = app.add_subcommand("inspect", "dump a buffer or memory snapshot");
  inspect->add_option("kind", inspect_kind, "buffer | memory")->required();
  inspect->add_option("path", inspect_path, "snapshot file")->required();
  inspect->add_flag("--graphviz", graphviz, "emit the buffer as a dot graph");

  std::string cmp_baseline, cmp_candidate;
  auto* compare = app.add_subcommand("compare", "delta report between two runs");
  compare->add_option("--baseline", cmp_baseline, "baseline report.json")->required();
  compare->add_option("--candidate", cmp_candidate, "candidate report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return retrace::cmd_run(make_config(run_flags), make_resume(run_flags));
    if (explore->parsed()) {
      return retrace::cmd_explore(make_config(explore_flags), make_resume(explore_flags));
    }
    if (infer->parsed()) {
      return retrace::cmd_infer(make_config(infer_flags), make_resume(infer_flags));
    }
    if (eval->parsed()) return retrace::cmd_eval(eval_results, eval_out);
    if (inspect->parsed()) {
      if (inspect_kind == "buffer") {
        return retrace::cmd_inspect_buffer(inspect_path, graphviz, std::cout);
      }
      if (inspect_kind == "memory") return retrace::cmd_inspect_memory(inspect_path, std::cout);
      std::cerr << "inspect kind must be buffer or memory\n";
      return retrace::kExitConfig;
    }
    if (compare->parsed()) return retrace::cmd_compare(cmp_baseline, cmp_candidate, std::cout);
  } catch (const retrace::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return retrace::kExitConfig;
  } catch (const retrace::VersionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return retrace::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return retrace::kExitRun;
  }
  return retrace::kExitConfig;
}
