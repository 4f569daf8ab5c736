#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/errors.hpp"
#include "ttsr/question.hpp"

namespace ttsr {

// One sampled reasoning trajectory. For the toy backend token_ids and
// old_logprobs are populated; remote trajectories are text-only (no token
// stream, no logprobs) because remote mode never runs parameter updates.
struct Trajectory {
  std::string question_id;
  std::vector<int> token_ids;
  std::string text;
  std::string answer_raw;
  std::string answer_canonical;
  std::vector<double> old_logprobs;

  std::size_t length() const { return token_ids.size(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Invariants required before a trajectory may enter a GRPO update.
inline void validate_trajectory_for_update(const Trajectory& t) {
  if (t.token_ids.empty()) throw DomainError("trajectory needs |y| >= 1");
  if (t.old_logprobs.size() != t.token_ids.size())
    throw DomainError("old_logprobs length must equal token count");
  for (double lp : t.old_logprobs) {
    if (!(lp <= 0.0) || !std::isfinite(lp))
      throw DomainError("old_logprobs must be finite and <= 0");
  }
}

struct TrajectoryGroup {
  std::string question_id;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::string pseudo_target;
  bool tie_flag = false;
  double score_s = 0.0;

  std::size_t size() const { return trajectories.size(); }

  friend bool operator==(const TrajectoryGroup&, const TrajectoryGroup&) = default;
};

// (x, y, y_hat) for a zero-reward trajectory. Carries the reward-facing view
// only; the Teacher never sees ground truth.
struct FailedInstance {
  QuestionView question;
  Trajectory trajectory;
  std::string pseudo_target;
  double score_s = 0.0;  // group score of the source question, used for teacher conditioning
};

inline void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"question_id", t.question_id}, {"token_ids", t.token_ids},
                     {"text", t.text},               {"answer_raw", t.answer_raw},
                     {"answer_canonical", t.answer_canonical}, {"old_logprobs", t.old_logprobs}};
}

inline void from_json(const nlohmann::json& j, Trajectory& t) {
  j.at("question_id").get_to(t.question_id);
  j.at("token_ids").get_to(t.token_ids);
  j.at("text").get_to(t.text);
  j.at("answer_raw").get_to(t.answer_raw);
  j.at("answer_canonical").get_to(t.answer_canonical);
  j.at("old_logprobs").get_to(t.old_logprobs);
}

inline void to_json(nlohmann::json& j, const TrajectoryGroup& g) {
  j = nlohmann::json{{"question_id", g.question_id}, {"trajectories", g.trajectories},
                     {"rewards", g.rewards},         {"advantages", g.advantages},
                     {"pseudo_target", g.pseudo_target}, {"tie_flag", g.tie_flag},
                     {"score_s", g.score_s}};
}

inline void from_json(const nlohmann::json& j, TrajectoryGroup& g) {
  j.at("question_id").get_to(g.question_id);
  j.at("trajectories").get_to(g.trajectories);
  j.at("rewards").get_to(g.rewards);
  j.at("advantages").get_to(g.advantages);
  j.at("pseudo_target").get_to(g.pseudo_target);
  j.at("tie_flag").get_to(g.tie_flag);
  j.at("score_s").get_to(g.score_s);
}

}  // namespace ttsr
