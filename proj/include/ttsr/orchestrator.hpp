#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/config.hpp"
#include "ttsr/consensus.hpp"
#include "ttsr/curriculum.hpp"
#include "ttsr/errors.hpp"
#include "ttsr/grpo.hpp"
#include "ttsr/question.hpp"
#include "ttsr/remote.hpp"
#include "ttsr/rng.hpp"
#include "ttsr/snapshot.hpp"
#include "ttsr/teacher_rewards.hpp"
#include "ttsr/toy_policy.hpp"
#include "ttsr/trajectory.hpp"

namespace ttsr {

struct IterationMetrics {
  int iteration = 0;
  double mean_reward = 0.0;
  double mean_s = 0.0;
  double clip_fraction = 0.0;
  double kl_value = 0.0;
  double variant_acceptance_rate = 0.0;
  double mean_r_teacher = 0.0;
  double mean_variant_pairwise_sim = 0.0;
  int variants_admitted = 0;
};

struct RunReport {
  std::vector<IterationMetrics> iterations;
  double greedy_accuracy = 0.0;
  double mean_at_k_accuracy = 0.0;
  int eval_k = 32;
  double wall_clock_s = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

inline void to_json(nlohmann::json& j, const IterationMetrics& m) {
  j = nlohmann::json{{"iteration", m.iteration},
                     {"mean_reward", m.mean_reward},
                     {"mean_s", m.mean_s},
                     {"clip_fraction", m.clip_fraction},
                     {"kl_value", m.kl_value},
                     {"variant_acceptance_rate", m.variant_acceptance_rate},
                     {"mean_r_teacher", m.mean_r_teacher},
                     {"mean_variant_pairwise_sim", m.mean_variant_pairwise_sim},
                     {"variants_admitted", m.variants_admitted}};
}

inline void from_json(const nlohmann::json& j, IterationMetrics& m) {
  j.at("iteration").get_to(m.iteration);
  j.at("mean_reward").get_to(m.mean_reward);
  j.at("mean_s").get_to(m.mean_s);
  j.at("clip_fraction").get_to(m.clip_fraction);
  j.at("kl_value").get_to(m.kl_value);
  j.at("variant_acceptance_rate").get_to(m.variant_acceptance_rate);
  j.at("mean_r_teacher").get_to(m.mean_r_teacher);
  j.at("mean_variant_pairwise_sim").get_to(m.mean_variant_pairwise_sim);
  j.at("variants_admitted").get_to(m.variants_admitted);
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = nlohmann::json{{"iterations", r.iterations},
                     {"greedy_accuracy", r.greedy_accuracy},
                     {"mean_at_k_accuracy", r.mean_at_k_accuracy},
                     {"eval_k", r.eval_k},
                     {"wall_clock_s", r.wall_clock_s},
                     {"seed", r.seed},
                     {"config_hash", r.config_hash}};
}

inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("iterations").get_to(r.iterations);
  j.at("greedy_accuracy").get_to(r.greedy_accuracy);
  j.at("mean_at_k_accuracy").get_to(r.mean_at_k_accuracy);
  j.at("eval_k").get_to(r.eval_k);
  j.at("wall_clock_s").get_to(r.wall_clock_s);
  j.at("seed").get_to(r.seed);
  j.at("config_hash").get_to(r.config_hash);
}

// Append-only writer for one run directory.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create run directory " + dir_.string() + ": " + ec.message());
    iterations_.open(dir_ / "iterations.jsonl", std::ios::app);
    trajectories_.open(dir_ / "trajectories.jsonl", std::ios::app);
    curriculum_.open(dir_ / "curriculum.jsonl", std::ios::app);
    const bool fresh = !std::filesystem::exists(dir_ / "metrics.csv") ||
                       std::filesystem::file_size(dir_ / "metrics.csv") == 0;
    metrics_.open(dir_ / "metrics.csv", std::ios::app);
    if (!iterations_ || !trajectories_ || !curriculum_ || !metrics_)
      throw IoError("cannot open run artifacts under " + dir_.string());
    if (fresh)
      metrics_ << "iteration,mean_reward,mean_s,clip_fraction,kl_value,variant_acceptance_rate,"
                  "mean_r_teacher,mean_variant_pairwise_sim,variants_admitted\n";
  }

  void write_config(const RunConfig& cfg) {
    std::ofstream f(dir_ / "config.json");
    if (!f) throw IoError("cannot write config.json");
    f << nlohmann::json(cfg).dump(2) << "\n";
  }

  void persist_snapshot(const IterationSnapshot& snap, const IterationMetrics& m) {
    IterationSnapshot lean = snap;
    lean.groups.clear();  // groups go to trajectories.jsonl
    iterations_ << nlohmann::json(lean).dump() << "\n";
    trajectories_ << nlohmann::json{{"iteration", snap.iteration}, {"groups", snap.groups}}.dump()
                  << "\n";
    curriculum_ << nlohmann::json{{"iteration", snap.iteration}, {"variants", snap.variants}}.dump()
                << "\n";
    char row[512];
    std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d",
                  m.iteration, m.mean_reward, m.mean_s, m.clip_fraction, m.kl_value,
                  m.variant_acceptance_rate, m.mean_r_teacher, m.mean_variant_pairwise_sim,
                  m.variants_admitted);
    metrics_ << row << "\n";
    iterations_.flush();
    trajectories_.flush();
    curriculum_.flush();
    metrics_.flush();
    if (!iterations_ || !trajectories_ || !curriculum_ || !metrics_)
      throw IoError("write failure in run directory " + dir_.string());
  }

  void write_report(const RunReport& rep) {
    std::ofstream f(dir_ / "report.json");
    if (!f) throw IoError("cannot write report.json");
    f << nlohmann::json(rep).dump(2) << "\n";
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::ofstream iterations_, trajectories_, curriculum_, metrics_;
};

// The TTSR control loop over the toy backend: fully deterministic given the
// validated config, including its seed.
class ToyRunner {
 public:
  explicit ToyRunner(RunConfig cfg, RunWriter* writer = nullptr)
      : cfg_(validate_config(std::move(cfg))), writer_(writer) {
    if (cfg_.backend != Backend::toy) throw DomainError("ToyRunner requires the toy backend");
    Rng family_rng = Rng::substream(cfg_.seed, 1);
    policy_ = std::make_unique<ToyPolicy>(make_family(cfg_.toy, family_rng),
                                          cfg_.toy.feature_dim, cfg_.toy.score_buckets);
    Rng pretrain_rng = Rng::substream(cfg_.seed, 2);
    policy_->pretrain(cfg_.toy, pretrain_rng);

    Rng q_rng = Rng::substream(cfg_.seed, 3);
    std::set<std::string> bodies;
    x_test_ = draw_distinct_questions(cfg_.toy.test_size, "t", q_rng, bodies);
    holdout_ = draw_distinct_questions(cfg_.toy.holdout_size, "h", q_rng, bodies);
  }

  const RunConfig& config() const { return cfg_; }
  const std::vector<Question>& test_set() const { return x_test_; }
  const std::vector<Question>& holdout_set() const { return holdout_; }
  const ToyPolicy& policy() const { return *policy_; }
  const std::vector<Question>& variant_pool() const { return x_var_; }
  const std::vector<IterationSnapshot>& snapshots() const { return snapshots_; }

  // One full Student-then-Teacher iteration.
  IterationSnapshot run_iteration(int t) {
    Rng iter_rng = Rng::substream(cfg_.seed, 1000 + static_cast<std::uint64_t>(t));
    const bool update_student = cfg_.mode != Mode::frozen;
    const bool teacher_phase = cfg_.mode != Mode::ttrl && cfg_.mode != Mode::frozen;
    const bool update_teacher = teacher_phase && cfg_.mode != Mode::no_teacher_update;
    const double lambda_eff =
        cfg_.mode == Mode::no_sim_penalty ? 0.0 : cfg_.similarity_lambda;

    IterationSnapshot snap;
    snap.iteration = t;

    // (1) training set and (2) batch
    const std::vector<Question> d_t = build_training_set(x_test_, x_var_);
    for (const auto& q : d_t) snap.training_set_ids.push_back(q.id());
    std::map<std::string, QuestionView> by_id;
    for (const auto& q : d_t) by_id.emplace(q.id(), q.reward_view());
    auto batch_idx = iter_rng.sample_without_replacement(
        d_t.size(), static_cast<std::size_t>(cfg_.batch_size));

    // (3) rollout groups, vote, rewards, advantages
    const std::vector<double> student_old = policy_->student_params();
    for (auto bi : batch_idx) {
      const QuestionView view = d_t[bi].reward_view();
      TrajectoryGroup g = policy_->sample_group(student_old, view, cfg_.group_size,
                                                cfg_.temperature, iter_rng);
      score_group(g);
      snap.groups.push_back(std::move(g));
    }

    // (4) Student GRPO step
    IterationMetrics m;
    m.iteration = t;
    {
      std::vector<GroupEval> evals = build_student_evals(student_old, snap.groups, by_id);
      SurrogateReport rep;
      if (update_student) {
        rep = grpo_step(student_handle(snap.groups, by_id), evals, cfg_.epsilon, cfg_.kl_coef,
                        cfg_.learning_rate);
      } else {
        rep = grpo_objective(evals, cfg_.epsilon, cfg_.kl_coef,
                             policy_->student_params().size(), nullptr);
      }
      m.clip_fraction = rep.clip_fraction;
      m.kl_value = rep.kl_value;
    }
    double reward_sum = 0.0, s_sum = 0.0;
    std::size_t reward_n = 0;
    for (const auto& g : snap.groups) {
      for (double r : g.rewards) {
        reward_sum += r;
        ++reward_n;
      }
      s_sum += g.score_s;
    }
    m.mean_reward = reward_n ? reward_sum / static_cast<double>(reward_n) : 0.0;
    m.mean_s = snap.groups.empty() ? 0.0 : s_sum / static_cast<double>(snap.groups.size());

    // (5)-(7) Teacher phase
    std::vector<VariantQuestion> admitted;
    if (teacher_phase && cfg_.variants_per_iteration > 0) {
      std::vector<FailedInstance> failed = collect_failed_instances(snap.groups, by_id);
      if (!failed.empty()) {
        std::vector<FailedInstance> sampled =
            sample_failed(failed, cfg_.failed_sample_cap, iter_rng);
        snap.reflections.push_back(make_toy_reflection(sampled));

        std::vector<ToyVariantCandidate> candidates = policy_->synthesize_variants(
            policy_->teacher_params(), sampled, cfg_.variants_per_iteration, iter_rng);

        // format gate, then score each surviving candidate
        std::vector<ToyVariantCandidate> gated;
        std::vector<VariantQuestion> scored;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
          GateResult gate = format_gate(candidates[j].tagged_text);
          if (!gate.accepted()) continue;
          gated.push_back(candidates[j]);
          VariantQuestion v;
          v.gated = true;
          v.question = Question::make_toy_variant(
              "v" + std::to_string(t) + "_" + std::to_string(j), candidates[j].payload,
              candidates[j].source_id);
          scored.push_back(std::move(v));
        }
        m.variant_acceptance_rate =
            candidates.empty() ? 0.0
                               : static_cast<double>(gated.size()) /
                                     static_cast<double>(candidates.size());

        // difficulty: fresh G rollouts under the post-update student
        const std::vector<double>& student_now = policy_->student_params();
        std::vector<TokenSeq> cand_tokens;
        for (auto& v : scored)
          cand_tokens.push_back(tokenize_question(v.question.body()));
        for (std::size_t j = 0; j < scored.size(); ++j) {
          TrajectoryGroup vg = policy_->sample_group(student_now, scored[j].question.reward_view(),
                                                     cfg_.group_size, cfg_.temperature, iter_rng);
          score_group(vg);
          scored[j].s_score = vg.score_s;
          scored[j].r_diff = difficulty_reward(vg.score_s);
          // group-level penalty over the other variants plus the source question
          std::vector<TokenSeq> others;
          for (std::size_t o = 0; o < scored.size(); ++o)
            if (o != j) others.push_back(cand_tokens[o]);
          others.push_back(tokenize_question(by_id.at(gated[j].source_id).body));
          scored[j].r_sim = similarity_penalty(cand_tokens[j], others, cfg_.similarity_tau);
          scored[j].r_teacher = teacher_reward(scored[j].r_diff, scored[j].r_sim, lambda_eff);
        }

        // (6) Teacher GRPO step on R_T
        if (update_teacher && scored.size() >= 2) {
          std::vector<double> rewards;
          for (const auto& v : scored) rewards.push_back(v.r_teacher);
          GroupEval ge;
          ge.advantages = compute_group_advantages(rewards, cfg_.advantage_delta);
          for (const auto& c : gated) {
            TokenEval te;
            te.sampled = c.action;
            te.old_dist = c.action_dist;
            te.new_dist = policy_->action_distribution(policy_->teacher_params(), c.source_s);
            te.old_logprob = c.action_logprob;
            te.new_logprob = std::log(std::max(te.new_dist[te.sampled], 1e-300));
            ge.trajectories.push_back({te});
          }
          std::vector<GroupEval> tevals{std::move(ge)};
          grpo_step(teacher_handle(gated), tevals, cfg_.epsilon, cfg_.kl_coef,
                    cfg_.teacher_learning_rate);
        }

        if (!scored.empty()) {
          double rt_sum = 0.0;
          for (const auto& v : scored) rt_sum += v.r_teacher;
          m.mean_r_teacher = rt_sum / static_cast<double>(scored.size());
        }

        // (7) admission
        admitted = admit_variants(scored, cfg_.variants_per_iteration);
      }
    }
    snap.variants = admitted;
    m.variants_admitted = static_cast<int>(admitted.size());
    if (admitted.size() >= 2) {
      double sim_sum = 0.0;
      int pairs = 0;
      std::vector<TokenSeq> toks;
      for (const auto& v : admitted) toks.push_back(tokenize_question(v.question.body()));
      for (std::size_t a = 0; a < toks.size(); ++a)
        for (std::size_t b = a + 1; b < toks.size(); ++b) {
          sim_sum += similarity_ratio(toks[a], toks[b]);
          ++pairs;
        }
      m.mean_variant_pairwise_sim = sim_sum / pairs;
    }
    x_var_.clear();
    for (const auto& v : admitted) x_var_.push_back(v.question);

    fill_snapshot_metrics(snap, m);
    metrics_.push_back(m);
    snapshots_.push_back(snap);
    if (writer_) writer_->persist_snapshot(snap, m);
    return snap;
  }

  RunReport run() {
    const auto t0 = std::chrono::steady_clock::now();
    if (writer_) writer_->write_config(cfg_);
    for (int t = 1; t <= cfg_.iterations; ++t) run_iteration(t);
    RunReport rep;
    rep.iterations = metrics_;
    rep.seed = cfg_.seed;
    rep.config_hash = config_hash(cfg_);
    rep.greedy_accuracy = evaluate_greedy(holdout_);
    rep.mean_at_k_accuracy = evaluate_mean_at_k(holdout_, rep.eval_k);
    rep.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (writer_) writer_->write_report(rep);
    return rep;
  }

  // Greedy pass@1 against ground truth; the only reader of ground truth.
  double evaluate_greedy(const std::vector<Question>& eval_set) const {
    if (eval_set.empty()) throw DomainError("evaluate: empty eval set");
    int hits = 0;
    for (const auto& q : eval_set) {
      if (!q.has_ground_truth()) throw DomainError("evaluate: question " + q.id() + " lacks ground truth");
      if (policy_->greedy_answer(policy_->student_params(), *q.toy_payload()) ==
          q.ground_truth_for_eval())
        ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(eval_set.size());
  }

  double evaluate_mean_at_k(const std::vector<Question>& eval_set, int k) const {
    if (eval_set.empty()) throw DomainError("evaluate: empty eval set");
    if (k < 1) throw DomainError("evaluate: k must be >= 1");
    Rng eval_rng = Rng::substream(cfg_.seed, 5);
    double total = 0.0;
    for (const auto& q : eval_set) {
      if (!q.has_ground_truth()) throw DomainError("evaluate: question " + q.id() + " lacks ground truth");
      TrajectoryGroup g = policy_->sample_group(policy_->student_params(), q.reward_view(), k,
                                                cfg_.temperature, eval_rng);
      int hits = 0;
      for (const auto& traj : g.trajectories)
        if (traj.answer_canonical == q.ground_truth_for_eval()) ++hits;
      total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(eval_set.size());
  }

 private:
  std::vector<Question> draw_distinct_questions(int n, const std::string& prefix, Rng& rng,
                                                std::set<std::string>& used_bodies) {
    std::vector<Question> out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < n) {
      if (++attempts > n * 1000)
        throw DomainError("toy family too small for requested question count");
      const int k = policy_->family().min_k +
                    static_cast<int>(rng.next_index(static_cast<std::size_t>(
                        policy_->family().max_k - policy_->family().min_k + 1)));
      ToyPayload p = sample_family_payload(policy_->family(), k, rng);
      const std::string body = render_toy_body(p);
      if (!used_bodies.insert(body).second) continue;
      out.push_back(Question::make_toy_test(
          prefix + std::to_string(out.size() + 1), std::move(p)));
    }
    return out;
  }

  void score_group(TrajectoryGroup& g) const {
    std::vector<std::string> answers;
    for (const auto& t : g.trajectories) answers.push_back(t.answer_canonical);
    ConsensusResult vote = majority_vote(answers);
    g.pseudo_target = vote.pseudo_target;
    g.tie_flag = vote.tie_flag;
    g.score_s = vote.score_s;
    g.rewards.clear();
    for (const auto& t : g.trajectories)
      g.rewards.push_back(pseudo_reward(t.answer_canonical, g.pseudo_target));
    g.advantages = compute_group_advantages(g.rewards, cfg_.advantage_delta);
  }

  std::vector<GroupEval> build_student_evals(
      const std::vector<double>& old_params, const std::vector<TrajectoryGroup>& groups,
      const std::map<std::string, QuestionView>& by_id) const {
    std::vector<GroupEval> evals;
    for (const auto& g : groups) {
      GroupEval ge;
      ge.advantages = g.advantages;
      const ToyPayload& payload = *by_id.at(g.question_id).toy_payload;
      for (const auto& traj : g.trajectories) {
        validate_trajectory_for_update(traj);
        ge.trajectories.push_back(policy_->eval_tokens(old_params, policy_->student_params(),
                                                       payload, traj.token_ids,
                                                       cfg_.temperature));
      }
      evals.push_back(std::move(ge));
    }
    return evals;
  }

  PolicyHandle student_handle(const std::vector<TrajectoryGroup>& groups,
                              const std::map<std::string, QuestionView>& by_id) {
    PolicyHandle h;
    h.read_params = [this] { return policy_->student_params(); };
    h.write_params = [this](const std::vector<double>& p) { policy_->student_params() = p; };
    h.gradient = [this, &groups, &by_id](std::size_t g, std::size_t i,
                                         const std::vector<std::vector<double>>& coeffs,
                                         std::vector<double>& grad) {
      const TrajectoryGroup& group = groups[g];
      const ToyPayload& payload = *by_id.at(group.question_id).toy_payload;
      policy_->student_logprob_grad(policy_->student_params(), payload,
                                    group.trajectories[i].token_ids, cfg_.temperature, coeffs,
                                    grad);
    };
    return h;
  }

  PolicyHandle teacher_handle(const std::vector<ToyVariantCandidate>& candidates) {
    PolicyHandle h;
    h.read_params = [this] { return policy_->teacher_params(); };
    h.write_params = [this](const std::vector<double>& p) { policy_->teacher_params() = p; };
    h.gradient = [this, &candidates](std::size_t, std::size_t i,
                                     const std::vector<std::vector<double>>& coeffs,
                                     std::vector<double>& grad) {
      policy_->teacher_logprob_grad(policy_->teacher_params(), candidates[i].source_s, coeffs[0],
                                    grad);
    };
    return h;
  }

  // Deterministic diagnosis summary standing in for model-side reflection;
  // the remote backend produces this record from the actual completion.
  static ReflectionRecord make_toy_reflection(const std::vector<FailedInstance>& sampled) {
    ReflectionRecord r;
    std::set<char> ops;
    for (const auto& f : sampled)
      if (f.question.toy_payload)
        for (const auto& s : f.question.toy_payload->op_chain) ops.insert(s.op);
    std::string op_list;
    for (char o : ops) op_list += op_list.empty() ? std::string(1, o) : ", " + std::string(1, o);
    r.reasoning_weakness =
        "The student misfolds modular operation chains, drifting from the running value before "
        "the final step.";
    r.trigger_conditions = {"chains mixing the operators " + op_list,
                            "results close to the modulus boundary"};
    r.failure_signature = {"answer digits inconsistent with the final operation",
                           "disagreement across resamples of the same chain"};
    r.localization_summary =
        "Across " + std::to_string(sampled.size()) +
        " failed traces the deviation appears at the last fold step.";
    return r;
  }

  static void fill_snapshot_metrics(IterationSnapshot& snap, const IterationMetrics& m) {
    snap.metrics["mean_reward"] = m.mean_reward;
    snap.metrics["mean_s"] = m.mean_s;
    snap.metrics["clip_fraction"] = m.clip_fraction;
    snap.metrics["kl_value"] = m.kl_value;
    snap.metrics["variant_acceptance_rate"] = m.variant_acceptance_rate;
    snap.metrics["mean_r_teacher"] = m.mean_r_teacher;
    snap.metrics["mean_variant_pairwise_sim"] = m.mean_variant_pairwise_sim;
    snap.metrics["variants_admitted"] = static_cast<double>(m.variants_admitted);
  }

  RunConfig cfg_;
  RunWriter* writer_ = nullptr;
  std::unique_ptr<ToyPolicy> policy_;
  std::vector<Question> x_test_, holdout_, x_var_;
  std::vector<IterationMetrics> metrics_;
  std::vector<IterationSnapshot> snapshots_;
};

// Reads a run directory back into a RunReport and re-checks loop invariants
// from the persisted snapshots.
inline RunReport replay_run(const std::filesystem::path& dir) {
  std::ifstream report_file(dir / "report.json");
  if (!report_file) throw IoError("missing report.json under " + dir.string());
  RunReport rep = nlohmann::json::parse(report_file).get<RunReport>();

  std::ifstream config_file(dir / "config.json");
  if (!config_file) throw IoError("missing config.json under " + dir.string());
  RunConfig cfg = nlohmann::json::parse(config_file).get<RunConfig>();
  if (config_hash(cfg) != rep.config_hash)
    throw IoError("config hash mismatch between config.json and report.json");

  std::ifstream iters(dir / "iterations.jsonl");
  if (!iters) throw IoError("missing iterations.jsonl under " + dir.string());
  std::string line;
  std::vector<IterationMetrics> rebuilt;
  while (std::getline(iters, line)) {
    if (line.empty()) continue;
    IterationSnapshot snap = nlohmann::json::parse(line).get<IterationSnapshot>();
    IterationMetrics m;
    m.iteration = snap.iteration;
    m.mean_reward = snap.metrics.at("mean_reward");
    m.mean_s = snap.metrics.at("mean_s");
    m.clip_fraction = snap.metrics.at("clip_fraction");
    m.kl_value = snap.metrics.at("kl_value");
    m.variant_acceptance_rate = snap.metrics.at("variant_acceptance_rate");
    m.mean_r_teacher = snap.metrics.at("mean_r_teacher");
    m.mean_variant_pairwise_sim = snap.metrics.at("mean_variant_pairwise_sim");
    m.variants_admitted = static_cast<int>(snap.metrics.at("variants_admitted"));
    rebuilt.push_back(m);
    if (static_cast<int>(snap.variants.size()) > cfg.variants_per_iteration)
      throw IoError("snapshot violates |X_var| <= M");
    std::set<std::string> ids(snap.training_set_ids.begin(), snap.training_set_ids.end());
    for (const auto& v : snap.variants) {
      if (!v.question.origin_id() || !ids.count(*v.question.origin_id()))
        throw IoError("variant origin missing from training set of its iteration");
    }
  }
  if (rebuilt.size() != rep.iterations.size())
    throw IoError("iteration count mismatch between iterations.jsonl and report.json");
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    if (nlohmann::json(rebuilt[i]) != nlohmann::json(rep.iterations[i]))
      throw IoError("metrics mismatch at iteration " + std::to_string(rebuilt[i].iteration));
  }
  return rep;
}

}  // namespace ttsr
