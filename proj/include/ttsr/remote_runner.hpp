#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/config.hpp"
#include "ttsr/consensus.hpp"
#include "ttsr/curriculum.hpp"
#include "ttsr/errors.hpp"
#include "ttsr/grpo.hpp"
#include "ttsr/orchestrator.hpp"
#include "ttsr/question.hpp"
#include "ttsr/remote.hpp"
#include "ttsr/rng.hpp"
#include "ttsr/similarity.hpp"
#include "ttsr/snapshot.hpp"
#include "ttsr/teacher_rewards.hpp"

namespace ttsr {

// Loads a jsonl file of {"id": ..., "body": ...} records into Questions.
inline std::vector<Question> load_question_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open questions file " + path.string());
  std::vector<Question> out;
  std::string line;
  std::set<std::string> ids;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("questions file: invalid JSON line");
    if (!j.contains("id") || !j.contains("body"))
      throw ConfigError("questions file: each record needs id and body");
    Question q = Question::make_test(j.at("id").get<std::string>(),
                                     j.at("body").get<std::string>());
    if (!ids.insert(q.id()).second) throw ConfigError("questions file: duplicate id " + q.id());
    out.push_back(std::move(q));
  }
  if (out.empty()) throw ConfigError("questions file: no questions");
  return out;
}

// Remote-endpoint control loop: the same iteration structure as the toy
// backend, but sampling and measurement only. The endpoint's weights never
// change, so no GRPO step runs; reflection and synthesis go through the real
// prompt templates and strict parsers.
class RemoteRunner {
 public:
  explicit RemoteRunner(RunConfig cfg, RunWriter* writer = nullptr)
      : cfg_(validate_config(std::move(cfg))), writer_(writer), client_(cfg_.endpoint) {
    if (cfg_.backend != Backend::remote) throw DomainError("RemoteRunner requires the remote backend");
    x_test_ = load_question_file(cfg_.questions_file);
  }

  const RunConfig& config() const { return cfg_; }

  IterationSnapshot run_iteration(int t) {
    Rng iter_rng = Rng::substream(cfg_.seed, 1000 + static_cast<std::uint64_t>(t));
    const bool teacher_phase = cfg_.mode != Mode::ttrl && cfg_.mode != Mode::frozen;
    const double lambda_eff = cfg_.mode == Mode::no_sim_penalty ? 0.0 : cfg_.similarity_lambda;

    IterationSnapshot snap;
    snap.iteration = t;
    const std::vector<Question> d_t = build_training_set(x_test_, x_var_);
    for (const auto& q : d_t) snap.training_set_ids.push_back(q.id());
    std::map<std::string, QuestionView> by_id;
    for (const auto& q : d_t) by_id.emplace(q.id(), q.reward_view());
    auto batch_idx = iter_rng.sample_without_replacement(
        d_t.size(), static_cast<std::size_t>(cfg_.batch_size));

    IterationMetrics m;
    m.iteration = t;
    double reward_sum = 0.0, s_sum = 0.0;
    std::size_t reward_n = 0;
    for (auto bi : batch_idx) {
      TrajectoryGroup g =
          client_.sample_group(d_t[bi].reward_view(), cfg_.group_size, cfg_.max_len);
      score_group(g, cfg_.advantage_delta);
      for (double r : g.rewards) {
        reward_sum += r;
        ++reward_n;
      }
      s_sum += g.score_s;
      snap.groups.push_back(std::move(g));
    }
    m.mean_reward = reward_n ? reward_sum / static_cast<double>(reward_n) : 0.0;
    m.mean_s = snap.groups.empty() ? 0.0 : s_sum / static_cast<double>(snap.groups.size());

    std::vector<VariantQuestion> admitted;
    if (teacher_phase && cfg_.variants_per_iteration > 0) {
      std::vector<FailedInstance> failed = collect_failed_instances(snap.groups, by_id);
      if (!failed.empty()) {
        std::vector<FailedInstance> sampled =
            sample_failed(failed, cfg_.failed_sample_cap, iter_rng);
        const std::string reflection_raw =
            client_.teacher_call(build_reflection_prompt(sampled), cfg_.max_len);
        ParseOutcome<ReflectionRecord> reflection = parse_reflection(reflection_raw);
        if (reflection.ok()) {
          snap.reflections.push_back(*reflection.value);

          std::vector<VariantQuestion> scored;
          std::vector<std::string> source_ids;
          int produced = 0;
          for (int j = 0; j < cfg_.variants_per_iteration; ++j) {
            const std::string raw = client_.teacher_call(
                build_synthesis_prompt(sampled, *reflection.value), cfg_.max_len);
            ++produced;
            ParseOutcome<SynthesisRecord> rec = parse_synthesis(raw);
            if (!rec.ok()) continue;
            // schema path: the generated_question field is the gated payload,
            // already nonempty-checked by the parser
            const std::string src = sampled[iter_rng.next_index(sampled.size())].question.id;
            VariantQuestion v;
            v.gated = true;
            v.question = Question::make_variant(
                "v" + std::to_string(t) + "_" + std::to_string(j), rec.value->generated_question,
                src);
            source_ids.push_back(src);
            scored.push_back(std::move(v));
          }
          m.variant_acceptance_rate =
              produced ? static_cast<double>(scored.size()) / produced : 0.0;

          std::vector<TokenSeq> cand_tokens;
          for (const auto& v : scored) cand_tokens.push_back(tokenize_question(v.question.body()));
          for (std::size_t j = 0; j < scored.size(); ++j) {
            TrajectoryGroup vg = client_.sample_group(scored[j].question.reward_view(),
                                                      cfg_.group_size, cfg_.max_len);
            score_group(vg, cfg_.advantage_delta);
            scored[j].s_score = vg.score_s;
            scored[j].r_diff = difficulty_reward(vg.score_s);
            std::vector<TokenSeq> others;
            for (std::size_t o = 0; o < scored.size(); ++o)
              if (o != j) others.push_back(cand_tokens[o]);
            others.push_back(tokenize_question(by_id.at(source_ids[j]).body));
            scored[j].r_sim = similarity_penalty(cand_tokens[j], others, cfg_.similarity_tau);
            scored[j].r_teacher = teacher_reward(scored[j].r_diff, scored[j].r_sim, lambda_eff);
          }
          if (!scored.empty()) {
            double rt = 0.0;
            for (const auto& v : scored) rt += v.r_teacher;
            m.mean_r_teacher = rt / static_cast<double>(scored.size());
          }
          admitted = admit_variants(scored, cfg_.variants_per_iteration);
        }
      }
    }
    snap.variants = admitted;
    m.variants_admitted = static_cast<int>(admitted.size());
    if (admitted.size() >= 2) {
      std::vector<TokenSeq> toks;
      for (const auto& v : admitted) toks.push_back(tokenize_question(v.question.body()));
      double sim_sum = 0.0;
      int pairs = 0;
      for (std::size_t a = 0; a < toks.size(); ++a)
        for (std::size_t b = a + 1; b < toks.size(); ++b) {
          sim_sum += similarity_ratio(toks[a], toks[b]);
          ++pairs;
        }
      m.mean_variant_pairwise_sim = sim_sum / pairs;
    }
    x_var_.clear();
    for (const auto& v : admitted) x_var_.push_back(v.question);

    snap.metrics["mean_reward"] = m.mean_reward;
    snap.metrics["mean_s"] = m.mean_s;
    snap.metrics["clip_fraction"] = m.clip_fraction;
    snap.metrics["kl_value"] = m.kl_value;
    snap.metrics["variant_acceptance_rate"] = m.variant_acceptance_rate;
    snap.metrics["mean_r_teacher"] = m.mean_r_teacher;
    snap.metrics["mean_variant_pairwise_sim"] = m.mean_variant_pairwise_sim;
    snap.metrics["variants_admitted"] = static_cast<double>(m.variants_admitted);
    metrics_.push_back(m);
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
    // label-free setting: no held-out accuracy for remote questions
    rep.greedy_accuracy = 0.0;
    rep.mean_at_k_accuracy = 0.0;
    rep.eval_k = 0;
    rep.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (writer_) writer_->write_report(rep);
    return rep;
  }

 private:
  static void score_group(TrajectoryGroup& g, double delta) {
    std::vector<std::string> answers;
    for (const auto& t : g.trajectories) answers.push_back(t.answer_canonical);
    ConsensusResult vote = majority_vote(answers);
    g.pseudo_target = vote.pseudo_target;
    g.tie_flag = vote.tie_flag;
    g.score_s = vote.score_s;
    g.rewards.clear();
    for (const auto& t : g.trajectories)
      g.rewards.push_back(pseudo_reward(t.answer_canonical, g.pseudo_target));
    g.advantages = compute_group_advantages(g.rewards, delta);
  }

  RunConfig cfg_;
  RunWriter* writer_ = nullptr;
  RemoteClient client_;
  std::vector<Question> x_test_, x_var_;
  std::vector<IterationMetrics> metrics_;
};

}  // namespace ttsr
