#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <ttsr/ttsr.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitRemote = 3;

ttsr::RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ttsr::ConfigError("cannot open config file " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded()) throw ttsr::ConfigError("config file is not valid JSON: " + path);
  return j.get<ttsr::RunConfig>();
}

// Re-derives the end-of-run policy deterministically from the persisted
// config: runs are seeded, so replaying the loop reproduces the final
// parameters without weight checkpoints.
ttsr::ToyRunner rerun_toy(const std::filesystem::path& run_dir) {
  std::ifstream f(run_dir / "config.json");
  if (!f) throw ttsr::IoError("missing config.json under " + run_dir.string());
  ttsr::RunConfig cfg = nlohmann::json::parse(f).get<ttsr::RunConfig>();
  if (cfg.backend != ttsr::Backend::toy)
    throw ttsr::ConfigError("eval requires a toy-backend run directory");
  ttsr::ToyRunner runner(cfg);
  for (int t = 1; t <= cfg.iterations; ++t) runner.run_iteration(t);
  return runner;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Test-time self-evolution engine"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute a full test-time adaptation run");
  std::string run_config, run_mode, run_out = "run_out";
  std::optional<std::uint64_t> run_seed;
  run_cmd->add_option("--config", run_config, "Config JSON path")->required();
  run_cmd->add_option("--mode", run_mode, "Override mode (ttsr|ttrl|frozen|no_teacher_update|no_sim_penalty)");
  run_cmd->add_option("--seed", run_seed, "Override seed");
  run_cmd->add_option("--out", run_out, "Run directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the final policy of a finished run");
  std::string eval_dir, eval_mode = "greedy";
  int eval_k = 32;
  eval_cmd->add_option("--run-dir", eval_dir, "Run directory")->required();
  eval_cmd->add_option("--mode", eval_mode, "greedy or mean@k");
  eval_cmd->add_option("--k", eval_k, "Samples per question for mean@k");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Verify a run directory's persisted artifacts");
  std::string replay_dir;
  replay_cmd->add_option("--run-dir", replay_dir, "Run directory")->required();

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Print one iteration's snapshot");
  std::string inspect_dir;
  int inspect_iter = 1;
  inspect_cmd->add_option("--run-dir", inspect_dir, "Run directory")->required();
  inspect_cmd->add_option("--iteration", inspect_iter, "Iteration index (1-based)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    ttsr::RunConfig cfg = load_config_file(run_config);
    if (!run_mode.empty()) cfg.mode = ttsr::mode_from_string(run_mode);
    if (run_seed) cfg.seed = *run_seed;
    cfg = ttsr::validate_config(cfg);
    ttsr::RunWriter writer(run_out);
    ttsr::RunReport rep;
    if (cfg.backend == ttsr::Backend::toy) {
      ttsr::ToyRunner runner(cfg, &writer);
      rep = runner.run();
    } else {
      ttsr::RemoteRunner runner(cfg, &writer);
      rep = runner.run();
    }
    std::cout << nlohmann::json(rep).dump(2) << "\n";
    return kExitOk;
  }

  if (eval_cmd->parsed()) {
    ttsr::ToyRunner runner = rerun_toy(eval_dir);
    nlohmann::json out;
    if (eval_mode == "greedy") {
      out = {{"mode", "greedy"},
             {"accuracy", runner.evaluate_greedy(runner.holdout_set())}};
    } else if (eval_mode == "mean@k") {
      out = {{"mode", "mean@k"},
             {"k", eval_k},
             {"accuracy", runner.evaluate_mean_at_k(runner.holdout_set(), eval_k)}};
    } else {
      throw ttsr::ConfigError("eval mode must be greedy or mean@k");
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }

  if (replay_cmd->parsed()) {
    ttsr::RunReport rep = ttsr::replay_run(replay_dir);
    std::cout << "replay ok: " << rep.iterations.size() << " iterations, config "
              << rep.config_hash << "\n";
    return kExitOk;
  }

  if (inspect_cmd->parsed()) {
    std::ifstream iters(std::filesystem::path(inspect_dir) / "iterations.jsonl");
    if (!iters) throw ttsr::IoError("missing iterations.jsonl under " + inspect_dir);
    std::string line;
    while (std::getline(iters, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      if (j.at("iteration").get<int>() == inspect_iter) {
        std::cout << j.dump(2) << "\n";
        return kExitOk;
      }
    }
    throw ttsr::IoError("iteration " + std::to_string(inspect_iter) + " not found in " +
                        inspect_dir);
  }

  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ttsr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ttsr::RemoteError& e) {
    std::cerr << "remote error: " << e.what() << "\n";
    return kExitRemote;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
