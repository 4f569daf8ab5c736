#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/errors.hpp"
#include "ttsr/question.hpp"
#include "ttsr/rng.hpp"
#include "ttsr/teacher_rewards.hpp"
#include "ttsr/trajectory.hpp"

namespace ttsr {

// Teacher reflection output: a schema-validated weakness diagnosis.
struct ReflectionRecord {
  std::string reasoning_weakness;
  std::vector<std::string> trigger_conditions;
  std::vector<std::string> failure_signature;
  std::string localization_summary;
};

// Teacher synthesis output: one generated variant plus its rationale and
// self-test verdicts (each verdict must begin with YES or NO).
struct SynthesisRecord {
  std::vector<std::string> anchor_structure;
  struct Strategy {
    std::vector<std::string> what_to_avoid;
    std::vector<std::string> what_to_add;
    std::vector<std::string> shortcut_to_block;
    std::string fairness_check;
  } error_hitting_strategy;
  std::string generated_question;
  std::vector<std::string> hit_rationale;
  struct SelfTest {
    std::string likely_to_trigger_weakness;
    std::string learnable_frontier;
    std::string not_surface_paraphrase;
  } self_test;
};

template <class T>
struct ParseOutcome {
  std::optional<T> value;
  std::string error;  // includes the offending field name when one exists

  bool ok() const { return value.has_value(); }
};

// --- prompt templates -------------------------------------------------------

namespace prompts {

inline const std::string kReflectionHeader =
    "[ROLE: TEACHER]\n"
    "\n"
    "Your task is to extract a generalizable reasoning weakness from an original question and a "
    "failed or unstable reasoning trace produced by a student model.\n"
    "\n"
    "You must strictly base your analysis on the given inputs. Do not introduce external "
    "knowledge, do not assume access to the correct answer, and do not judge final "
    "correctness.\n";

inline const std::string kReflectionGuidelines =
    "[ANALYSIS GUIDELINES]\n"
    "(1) Error Localization: Identify the first point where the reasoning becomes unreliable, "
    "incomplete, or invalid.\n"
    "(2) Weakness Abstraction: Summarize the underlying reasoning weakness in one abstract "
    "sentence, without referring to specific values or variables.\n"
    "(3) Trigger Conditions: Describe what problem structures or conditions are likely to "
    "trigger this weakness.\n"
    "(4) Failure Signature: Describe typical reasoning patterns or behaviors when this weakness "
    "appears.\n";

inline const std::string kReflectionOutputRequirements =
    "[OUTPUT REQUIREMENTS]\n"
    "Output must be valid JSON and contain the following fields:\n"
    "{\n"
    "  \"reasoning_weakness\": \"...\",\n"
    "  \"trigger_conditions\": [\"...\"],\n"
    "  \"failure_signature\": [\"...\"],\n"
    "  \"localization_summary\": \"...\"\n"
    "}\n";

inline const std::string kReflectionExample =
    "[EXAMPLE]\n"
    "\n"
    "[ORIGINAL_QUESTION]\n"
    "Let x and y be real numbers such that x + y = 10 and x^2 + y^2 = 58. Find the maximum "
    "possible value of x.\n"
    "\n"
    "[FAILED_REASONING_TRACE]\n"
    "From x + y = 10, y = 10 - x. Substituting gives x^2 + (10 - x)^2 = 58. Solving yields "
    "x = 3 or x = 7. The reasoning directly selects 7 as the maximum.\n"
    "\n"
    "[OUTPUT]\n"
    "{\n"
    "  \"reasoning_weakness\": \"When multiple valid solutions exist, the reasoning directly "
    "selects the numerically larger solution without semantic justification.\",\n"
    "  \"trigger_conditions\": [\"Multiple algebraic solutions\", \"Extremal objectives\"],\n"
    "  \"failure_signature\": [\"Selecting the largest root immediately\", \"Equating magnitude "
    "with optimality\"],\n"
    "  \"localization_summary\": \"The reasoning deviates when it selects the larger algebraic "
    "solution solely based on its value.\"\n"
    "}\n";

inline const std::string kSynthesisHeader =
    "[ROLE: TEACHER]\n"
    "\n"
    "Your task is to generate one new training question based on the original question, a "
    "failed reasoning trace, and an extracted reasoning weakness.\n"
    "\n"
    "The goal is not to make the question arbitrarily harder, but to produce a question that is "
    "targeted, learnable, and close to the student's capability frontier.\n"
    "\n"
    "You must ensure that:\n"
    "(1) The new question preserves the core reasoning structure of the original question.\n"
    "(2) The new question is more likely to trigger the given reasoning weakness.\n"
    "(3) The new question is self-contained, solvable, and unambiguous.\n"
    "(4) The new question is not a superficial paraphrase or simple numerical substitution.\n";

inline const std::string kSynthesisSteps =
    "[STEP-BY-STEP INSTRUCTIONS]\n"
    "\n"
    "Step 1: Anchor Structure.\n"
    "Summarize the core reasoning structure of the original question, including key concepts, "
    "variable relationships, constraints, and the main reasoning steps required for a correct "
    "solution.\n"
    "Use structural language rather than restating the original question.\n"
    "\n"
    "Step 2: Error-Hitting Strategy.\n"
    "Explicitly state how the new question will be designed to more reliably trigger the given "
    "reasoning weakness, while remaining solvable and fair.\n"
    "Explain what aspects will be modified, what shortcuts are targeted, and how superficial "
    "paraphrasing is avoided.\n"
    "\n"
    "Step 3: Generate One New Question.\n"
    "Generate a single, fully self-contained question that requires multi-step reasoning and is "
    "likely to trigger the weakness under common shortcuts.\n"
    "Avoid changing only numbers, swapping story contexts, or adding irrelevant complexity.\n"
    "\n"
    "Step 4: Hit Rationale.\n"
    "Briefly explain why the generated question is likely to expose the reasoning weakness and "
    "how a correct solution would avoid the shortcut.\n"
    "\n"
    "Step 5: Self-Test Filter.\n"
    "Verify whether the question is likely to trigger the weakness, remains learnable, and is "
    "not a surface-level paraphrase.\n"
    "If any check fails, regenerate the question.\n";

inline const std::string kSynthesisOutputRequirements =
    "[OUTPUT REQUIREMENTS]\n"
    "\n"
    "The output must be valid JSON. Do not include markdown or additional explanations.\n"
    "All fields must be present and filled according to the schema below.\n"
    "\n"
    "{\n"
    "  \"anchor_structure\": [\n"
    "    \"...core structural element 1...\",\n"
    "    \"...core structural element 2...\"\n"
    "  ],\n"
    "  \"error_hitting_strategy\": {\n"
    "    \"what_to_avoid\": [\"...simple variants that would not trigger the weakness...\"],\n"
    "    \"what_to_add\": [\"...structural modifications to increase weakness exposure...\"],\n"
    "    \"shortcut_to_block\": [\"...erroneous shortcut to be induced or blocked...\"],\n"
    "    \"fairness_check\": \"...how solvability and unambiguity are ensured...\"\n"
    "  },\n"
    "  \"generated_question\": \"...fully self-contained question text...\",\n"
    "  \"hit_rationale\": [\n"
    "    \"...why the question is likely to trigger the weakness...\",\n"
    "    \"...what a correct reasoning process would need to check...\"\n"
    "  ],\n"
    "  \"self_test\": {\n"
    "    \"likely_to_trigger_weakness\": \"YES/NO + brief reason\",\n"
    "    \"learnable_frontier\": \"YES/NO + brief reason\",\n"
    "    \"not_surface_paraphrase\": \"YES/NO + brief reason\"\n"
    "  }\n"
    "}\n";

}  // namespace prompts

// Renders the reflection template with one question/trace pair per failed
// instance. Byte-stable for identical inputs.
inline std::string build_reflection_prompt(const std::vector<FailedInstance>& failed) {
  if (failed.empty()) throw DomainError("build_reflection_prompt: empty failed set");
  std::string out = prompts::kReflectionHeader;
  for (const auto& f : failed) {
    out += "\n[ORIGINAL_QUESTION]\n" + f.question.body + "\n";
    out += "\n[FAILED_REASONING_TRACE]\n" + f.trajectory.text + "\n";
  }
  out += "\n" + prompts::kReflectionGuidelines;
  out += "\n" + prompts::kReflectionOutputRequirements;
  out += "\n" + prompts::kReflectionExample;
  return out;
}

inline std::string build_synthesis_prompt(const std::vector<FailedInstance>& failed,
                                          const ReflectionRecord& reflection) {
  if (failed.empty()) throw DomainError("build_synthesis_prompt: empty failed set");
  nlohmann::json weakness = {{"reasoning_weakness", reflection.reasoning_weakness},
                             {"trigger_conditions", reflection.trigger_conditions},
                             {"failure_signature", reflection.failure_signature}};
  std::string out = prompts::kSynthesisHeader;
  out += "\n[INPUT]\n";
  for (const auto& f : failed) {
    out += "\n[ORIGINAL_QUESTION]\n" + f.question.body + "\n";
    out += "\n[FAILED_REASONING_TRACE]\n" + f.trajectory.text + "\n";
  }
  out += "\n[WEAKNESS_JSON]\n" + weakness.dump(2) + "\n";
  out += "\n" + prompts::kSynthesisSteps;
  out += "\n" + prompts::kSynthesisOutputRequirements;
  return out;
}

// --- parsers ----------------------------------------------------------------

namespace detail {

// Model output may wrap the JSON document in prose; fall back to the
// outermost brace span.
inline std::optional<nlohmann::json> parse_json_lenient(const std::string& raw) {
  auto try_parse = [](const std::string& s) -> std::optional<nlohmann::json> {
    nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(raw)) return j;
  const std::size_t b = raw.find('{');
  const std::size_t e = raw.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e <= b) return std::nullopt;
  return try_parse(raw.substr(b, e - b + 1));
}

inline bool get_nonempty_string(const nlohmann::json& j, const char* field, std::string& out,
                                std::string& err) {
  if (!j.contains(field)) {
    err = std::string("missing ") + field;
    return false;
  }
  if (!j.at(field).is_string()) {
    err = std::string("wrong type for ") + field;
    return false;
  }
  out = j.at(field).get<std::string>();
  if (out.empty()) {
    err = std::string("empty ") + field;
    return false;
  }
  return true;
}

inline bool get_string_list(const nlohmann::json& j, const char* field,
                            std::vector<std::string>& out, std::string& err) {
  if (!j.contains(field)) {
    err = std::string("missing ") + field;
    return false;
  }
  if (!j.at(field).is_array()) {
    err = std::string("wrong type for ") + field;
    return false;
  }
  out.clear();
  for (const auto& e : j.at(field)) {
    if (!e.is_string()) {
      err = std::string("wrong type for ") + field;
      return false;
    }
    out.push_back(e.get<std::string>());
  }
  if (out.empty()) {
    err = std::string("empty ") + field;
    return false;
  }
  return true;
}

inline bool yes_no_prefixed(const std::string& s) {
  return s.rfind("YES", 0) == 0 || s.rfind("NO", 0) == 0;
}

}  // namespace detail

// Strict parse against the four-field reflection schema; unknown fields are
// ignored, missing or empty fields fail with the field name.
inline ParseOutcome<ReflectionRecord> parse_reflection(const std::string& raw) {
  auto j = detail::parse_json_lenient(raw);
  if (!j) return {std::nullopt, "malformed document"};
  ReflectionRecord rec;
  std::string err;
  if (!detail::get_nonempty_string(*j, "reasoning_weakness", rec.reasoning_weakness, err))
    return {std::nullopt, err};
  if (!detail::get_string_list(*j, "trigger_conditions", rec.trigger_conditions, err))
    return {std::nullopt, err};
  if (!detail::get_string_list(*j, "failure_signature", rec.failure_signature, err))
    return {std::nullopt, err};
  if (!detail::get_nonempty_string(*j, "localization_summary", rec.localization_summary, err))
    return {std::nullopt, err};
  return {rec, ""};
}

inline ParseOutcome<SynthesisRecord> parse_synthesis(const std::string& raw) {
  auto j = detail::parse_json_lenient(raw);
  if (!j) return {std::nullopt, "malformed document"};
  SynthesisRecord rec;
  std::string err;
  if (!detail::get_string_list(*j, "anchor_structure", rec.anchor_structure, err))
    return {std::nullopt, err};
  if (!j->contains("error_hitting_strategy"))
    return {std::nullopt, "missing error_hitting_strategy"};
  const auto& ehs = j->at("error_hitting_strategy");
  if (!ehs.is_object()) return {std::nullopt, "wrong type for error_hitting_strategy"};
  if (!detail::get_string_list(ehs, "what_to_avoid", rec.error_hitting_strategy.what_to_avoid, err))
    return {std::nullopt, err};
  if (!detail::get_string_list(ehs, "what_to_add", rec.error_hitting_strategy.what_to_add, err))
    return {std::nullopt, err};
  if (!detail::get_string_list(ehs, "shortcut_to_block",
                               rec.error_hitting_strategy.shortcut_to_block, err))
    return {std::nullopt, err};
  if (!detail::get_nonempty_string(ehs, "fairness_check",
                                   rec.error_hitting_strategy.fairness_check, err))
    return {std::nullopt, err};
  if (!detail::get_nonempty_string(*j, "generated_question", rec.generated_question, err))
    return {std::nullopt, err};
  if (!detail::get_string_list(*j, "hit_rationale", rec.hit_rationale, err))
    return {std::nullopt, err};
  if (!j->contains("self_test")) return {std::nullopt, "missing self_test"};
  const auto& st = j->at("self_test");
  if (!st.is_object()) return {std::nullopt, "wrong type for self_test"};
  if (!detail::get_nonempty_string(st, "likely_to_trigger_weakness",
                                   rec.self_test.likely_to_trigger_weakness, err))
    return {std::nullopt, err};
  if (!detail::get_nonempty_string(st, "learnable_frontier", rec.self_test.learnable_frontier,
                                   err))
    return {std::nullopt, err};
  if (!detail::get_nonempty_string(st, "not_surface_paraphrase",
                                   rec.self_test.not_surface_paraphrase, err))
    return {std::nullopt, err};
  for (const auto* field : {&rec.self_test.likely_to_trigger_weakness,
                            &rec.self_test.learnable_frontier,
                            &rec.self_test.not_surface_paraphrase}) {
    if (!detail::yes_no_prefixed(*field))
      return {std::nullopt, "self_test values must begin YES or NO"};
  }
  return {rec, ""};
}

// --- failed-instance handling and training-set construction ------------------

// One FailedInstance per zero-reward trajectory, in group order.
inline std::vector<FailedInstance> collect_failed_instances(
    const std::vector<TrajectoryGroup>& groups,
    const std::map<std::string, QuestionView>& questions_by_id) {
  std::vector<FailedInstance> out;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      if (g.rewards.at(i) == 0.0) {
        FailedInstance f;
        f.question = questions_by_id.at(g.question_id);
        f.trajectory = g.trajectories[i];
        f.pseudo_target = g.pseudo_target;
        f.score_s = g.score_s;
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

// Uniform sample without replacement of size min(cap, |pool|).
inline std::vector<FailedInstance> sample_failed(const std::vector<FailedInstance>& pool,
                                                 int cap, Rng& rng) {
  if (cap < 1) throw DomainError("sample_failed: cap must be >= 1");
  auto idx = rng.sample_without_replacement(pool.size(), static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());  // preserve pool order in the sample
  std::vector<FailedInstance> out;
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

// D_t = X_test union X_var^(t-1); duplicate ids are an error.
inline std::vector<Question> build_training_set(const std::vector<Question>& x_test,
                                                const std::vector<Question>& x_var_prev) {
  std::vector<Question> d;
  std::set<std::string> ids;
  for (const auto& q : x_test) {
    if (!ids.insert(q.id()).second) throw DomainError("duplicate question id: " + q.id());
    d.push_back(q);
  }
  for (const auto& q : x_var_prev) {
    if (!ids.insert(q.id()).second) throw DomainError("duplicate question id: " + q.id());
    d.push_back(q);
  }
  return d;
}

// Keeps the top-M gated variants by teacher reward; ties break to the lower
// question id. These become the next iteration's variant pool.
inline std::vector<VariantQuestion> admit_variants(std::vector<VariantQuestion> scored, int m) {
  for (const auto& v : scored) {
    if (!v.gated) throw DomainError("admit_variants: ungated variant " + v.question.id());
  }
  std::stable_sort(scored.begin(), scored.end(), [](const VariantQuestion& a,
                                                    const VariantQuestion& b) {
    if (a.r_teacher != b.r_teacher) return a.r_teacher > b.r_teacher;
    return a.question.id() < b.question.id();
  });
  if (static_cast<int>(scored.size()) > m) scored.resize(static_cast<std::size_t>(m));
  return scored;
}

}  // namespace ttsr
