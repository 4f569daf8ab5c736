#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include <json.hpp>
#include <ttsr/orchestrator.hpp>

using namespace ttsr;
namespace fs = std::filesystem;

namespace {

// Scaled-down run that keeps each test case under a second.
RunConfig fast_config(Mode mode, std::uint64_t seed = 3) {
  RunConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.iterations = 3;
  cfg.batch_size = 6;
  cfg.group_size = 4;
  cfg.variants_per_iteration = 3;
  cfg.toy.test_size = 8;
  cfg.toy.holdout_size = 8;
  cfg.toy.feature_dim = 64;
  cfg.toy.pretrain_samples = 500;
  cfg.toy.pretrain_epochs = 1;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ttsr_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

nlohmann::json report_without_clock(const RunReport& r) {
  nlohmann::json j = r;
  j.erase("wall_clock_s");
  return j;
}

}  // namespace

TEST_CASE("reruns from the same config are bit-identical") {
  const RunConfig cfg = fast_config(Mode::ttsr);
  ToyRunner a(cfg), b(cfg);
  const RunReport ra = a.run();
  const RunReport rb = b.run();
  CHECK(report_without_clock(ra) == report_without_clock(rb));
  CHECK(a.policy().student_params() == b.policy().student_params());
  CHECK(a.policy().teacher_params() == b.policy().teacher_params());
  REQUIRE(a.snapshots().size() == b.snapshots().size());
  for (std::size_t i = 0; i < a.snapshots().size(); ++i)
    CHECK(nlohmann::json(a.snapshots()[i]) == nlohmann::json(b.snapshots()[i]));
  // different seeds draw different test sets
  ToyRunner c(fast_config(Mode::ttsr, 4));
  CHECK(c.test_set()[0].body() != a.test_set()[0].body());
}

TEST_CASE("frozen mode changes no parameters and spawns no variants") {
  ToyRunner runner(fast_config(Mode::frozen));
  const auto student0 = runner.policy().student_params();
  const auto teacher0 = runner.policy().teacher_params();
  const RunReport rep = runner.run();
  CHECK(runner.policy().student_params() == student0);
  CHECK(runner.policy().teacher_params() == teacher0);
  for (const auto& snap : runner.snapshots()) {
    CHECK(snap.variants.empty());
    CHECK(snap.reflections.empty());
  }
  for (const auto& m : rep.iterations) {
    CHECK(m.variants_admitted == 0);
    CHECK(m.kl_value == 0.0);  // never evaluated away from the snapshot
  }
}

TEST_CASE("ttrl mode trains the student but never runs the teacher phase") {
  ToyRunner runner(fast_config(Mode::ttrl));
  const auto student0 = runner.policy().student_params();
  const auto teacher0 = runner.policy().teacher_params();
  runner.run();
  CHECK(runner.policy().student_params() != student0);
  CHECK(runner.policy().teacher_params() == teacher0);
  std::set<std::string> test_ids;
  for (const auto& q : runner.test_set()) test_ids.insert(q.id());
  for (const auto& snap : runner.snapshots()) {
    CHECK(snap.variants.empty());
    // D_t never grows beyond X_test
    CHECK(std::set<std::string>(snap.training_set_ids.begin(), snap.training_set_ids.end()) ==
          test_ids);
  }
}

TEST_CASE("no_teacher_update freezes the teacher table only") {
  ToyRunner runner(fast_config(Mode::no_teacher_update));
  const auto teacher0 = runner.policy().teacher_params();
  runner.run();
  CHECK(runner.policy().teacher_params() == teacher0);
  bool any_variant = false;
  for (const auto& snap : runner.snapshots()) any_variant |= !snap.variants.empty();
  CHECK(any_variant);  // synthesis still happens, only the update is skipped
}

TEST_CASE("no_sim_penalty scores variants by difficulty alone") {
  ToyRunner runner(fast_config(Mode::no_sim_penalty));
  runner.run();
  int seen = 0;
  for (const auto& snap : runner.snapshots()) {
    for (const auto& v : snap.variants) {
      CHECK(v.r_teacher == v.r_diff);
      ++seen;
    }
  }
  CHECK(seen > 0);
}

TEST_CASE("loop invariants hold on every snapshot") {
  RunConfig cfg = fast_config(Mode::ttsr);
  ToyRunner runner(cfg);
  runner.run();
  std::set<std::string> test_ids;
  for (const auto& q : runner.test_set()) test_ids.insert(q.id());
  REQUIRE(runner.snapshots().size() == static_cast<std::size_t>(cfg.iterations));
  for (const auto& snap : runner.snapshots()) {
    // X_test is a subset of D_t
    std::set<std::string> d_ids(snap.training_set_ids.begin(), snap.training_set_ids.end());
    for (const auto& id : test_ids) CHECK(d_ids.count(id) == 1);
    CHECK(snap.groups.size() == std::min<std::size_t>(cfg.batch_size, d_ids.size()));
    for (const auto& g : snap.groups) {
      CHECK(g.trajectories.size() == static_cast<std::size_t>(cfg.group_size));
      REQUIRE(g.rewards.size() == g.trajectories.size());
      double adv_sum = 0.0;
      int winners = 0;
      for (std::size_t i = 0; i < g.rewards.size(); ++i) {
        CHECK((g.rewards[i] == 0.0 || g.rewards[i] == 1.0));
        if (g.rewards[i] == 1.0) {
          CHECK(g.trajectories[i].answer_canonical == g.pseudo_target);
          ++winners;
        }
        adv_sum += g.advantages[i];
      }
      CHECK(std::abs(adv_sum) < 1e-9 * static_cast<double>(g.rewards.size()));
      // score_s is exactly the winning fraction
      CHECK(g.score_s == static_cast<double>(winners) / static_cast<double>(g.size()));
    }
    CHECK(snap.variants.size() <= static_cast<std::size_t>(cfg.variants_per_iteration));
    for (const auto& v : snap.variants) {
      REQUIRE(v.question.origin_id().has_value());
      CHECK(d_ids.count(*v.question.origin_id()) == 1);
      CHECK(v.gated);
      CHECK(v.r_teacher >= 0.0);
      CHECK(v.question.source() == QuestionSource::variant);
    }
  }
}

TEST_CASE("M = 0 disables the teacher phase without error") {
  RunConfig cfg = fast_config(Mode::ttsr);
  cfg.variants_per_iteration = 0;
  ToyRunner runner(cfg);
  runner.run();
  for (const auto& snap : runner.snapshots()) CHECK(snap.variants.empty());
}

TEST_CASE("T = 0 produces an empty but valid report") {
  RunConfig cfg = fast_config(Mode::ttsr);
  cfg.iterations = 0;
  ToyRunner runner(cfg);
  const RunReport rep = runner.run();
  CHECK(rep.iterations.empty());
  CHECK(rep.greedy_accuracy >= 0.0);
  CHECK(rep.greedy_accuracy <= 1.0);
  CHECK(rep.config_hash == config_hash(runner.config()));
}

TEST_CASE("evaluation is deterministic and bounded") {
  ToyRunner runner(fast_config(Mode::frozen));
  const double g1 = runner.evaluate_greedy(runner.holdout_set());
  const double g2 = runner.evaluate_greedy(runner.holdout_set());
  CHECK(g1 == g2);
  const double m1 = runner.evaluate_mean_at_k(runner.holdout_set(), 8);
  const double m2 = runner.evaluate_mean_at_k(runner.holdout_set(), 8);
  CHECK(m1 == m2);
  CHECK(m1 >= 0.0);
  CHECK(m1 <= 1.0);
  CHECK_THROWS_AS(runner.evaluate_greedy({}), DomainError);
  CHECK_THROWS_AS(runner.evaluate_mean_at_k(runner.holdout_set(), 0), DomainError);
}

TEST_CASE("run directory persistence and replay round-trip") {
  TempDir tmp("persist");
  RunConfig cfg = fast_config(Mode::ttsr);
  RunWriter writer(tmp.path);
  ToyRunner runner(cfg, &writer);
  const RunReport rep = runner.run();

  for (const char* name :
       {"config.json", "iterations.jsonl", "trajectories.jsonl", "curriculum.jsonl",
        "metrics.csv", "report.json"})
    CHECK(fs::exists(tmp.path / name));

  // metrics.csv: header plus one row per iteration
  std::ifstream csv(tmp.path / "metrics.csv");
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  CHECK(line.rfind("iteration,mean_reward", 0) == 0);
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.iterations);

  const RunReport replayed = replay_run(tmp.path);
  CHECK(nlohmann::json(replayed) == nlohmann::json(rep));

  // trajectories.jsonl carries the full groups that iterations.jsonl omits
  std::ifstream traj(tmp.path / "trajectories.jsonl");
  int tlines = 0;
  while (std::getline(traj, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("groups").size() == runner.snapshots()[static_cast<std::size_t>(tlines)].groups.size());
    ++tlines;
  }
  CHECK(tlines == cfg.iterations);
}

TEST_CASE("replay detects tampered metrics") {
  TempDir tmp("tamper");
  RunConfig cfg = fast_config(Mode::ttsr);
  RunWriter writer(tmp.path);
  ToyRunner runner(cfg, &writer);
  runner.run();

  nlohmann::json rep;
  {
    std::ifstream in(tmp.path / "report.json");
    in >> rep;
  }
  rep["iterations"][0]["mean_reward"] = 0.123456;
  {
    std::ofstream out(tmp.path / "report.json");
    out << rep.dump(2);
  }
  CHECK_THROWS_WITH(replay_run(tmp.path), "metrics mismatch at iteration 1");

  rep["seed"] = rep["seed"].get<std::uint64_t>() + 1;  // desync the config hash
  {
    std::ofstream out(tmp.path / "report.json");
    out << rep.dump(2);
  }
  // hash field still matches config.json, so only the metric mismatch fires
  CHECK_THROWS_AS(replay_run(tmp.path), IoError);
}

TEST_CASE("toy runner rejects the remote backend and bad configs") {
  RunConfig cfg = fast_config(Mode::ttsr);
  cfg.backend = Backend::remote;
  cfg.endpoint.url = "http://localhost:1";
  cfg.questions_file = "q.jsonl";
  CHECK_THROWS_AS(ToyRunner(cfg), DomainError);
  RunConfig bad = fast_config(Mode::ttsr);
  bad.group_size = 1;
  CHECK_THROWS_AS(ToyRunner(bad), ConfigError);
}
