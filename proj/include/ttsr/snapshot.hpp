#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/curriculum.hpp"
#include "ttsr/question.hpp"
#include "ttsr/teacher_rewards.hpp"
#include "ttsr/trajectory.hpp"

namespace ttsr {

// Full state of one test-time iteration, for persistence and replay.
struct IterationSnapshot {
  int iteration = 0;
  std::vector<std::string> training_set_ids;
  std::vector<TrajectoryGroup> groups;
  std::vector<ReflectionRecord> reflections;
  std::vector<VariantQuestion> variants;  // admitted variants of this iteration
  std::map<std::string, double> metrics;
};

inline void to_json(nlohmann::json& j, const ReflectionRecord& r) {
  j = nlohmann::json{{"reasoning_weakness", r.reasoning_weakness},
                     {"trigger_conditions", r.trigger_conditions},
                     {"failure_signature", r.failure_signature},
                     {"localization_summary", r.localization_summary}};
}

inline void from_json(const nlohmann::json& j, ReflectionRecord& r) {
  j.at("reasoning_weakness").get_to(r.reasoning_weakness);
  j.at("trigger_conditions").get_to(r.trigger_conditions);
  j.at("failure_signature").get_to(r.failure_signature);
  j.at("localization_summary").get_to(r.localization_summary);
}

inline void to_json(nlohmann::json& j, const VariantQuestion& v) {
  j = nlohmann::json{{"question", v.question}, {"s_score", v.s_score}, {"r_diff", v.r_diff},
                     {"r_sim", v.r_sim},       {"r_teacher", v.r_teacher}, {"gated", v.gated}};
}

inline void from_json(const nlohmann::json& j, VariantQuestion& v) {
  j.at("question").get_to(v.question);
  j.at("s_score").get_to(v.s_score);
  j.at("r_diff").get_to(v.r_diff);
  j.at("r_sim").get_to(v.r_sim);
  j.at("r_teacher").get_to(v.r_teacher);
  j.at("gated").get_to(v.gated);
}

inline void to_json(nlohmann::json& j, const IterationSnapshot& s) {
  j = nlohmann::json{{"iteration", s.iteration},
                     {"training_set_ids", s.training_set_ids},
                     {"groups", s.groups},
                     {"reflections", s.reflections},
                     {"variants", s.variants},
                     {"metrics", s.metrics}};
}

inline void from_json(const nlohmann::json& j, IterationSnapshot& s) {
  j.at("iteration").get_to(s.iteration);
  j.at("training_set_ids").get_to(s.training_set_ids);
  j.at("groups").get_to(s.groups);
  j.at("reflections").get_to(s.reflections);
  j.at("variants").get_to(s.variants);
  j.at("metrics").get_to(s.metrics);
}

}  // namespace ttsr
