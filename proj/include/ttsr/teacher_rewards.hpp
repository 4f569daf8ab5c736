#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ttsr/errors.hpp"
#include "ttsr/question.hpp"
#include "ttsr/similarity.hpp"

namespace ttsr {

// A format-gated synthesized question with its teacher-side scores.
struct VariantQuestion {
  Question question;  // source = variant
  double s_score = 0.0;
  double r_diff = 0.0;
  double r_sim = 0.0;
  double r_teacher = 0.0;
  bool gated = false;
};

// Binary entropy of Bern(s), normalized to [0,1]; peaks at s = 0.5, the
// capability frontier.
inline double difficulty_reward(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("difficulty_reward: s must lie in [0,1]");
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return -(xlogx(s) + xlogx(1.0 - s)) / std::log(2.0);
}

// Mean thresholded excess similarity of a candidate against the rest of the
// generation batch (variants plus the reference question).
inline double similarity_penalty(const TokenSeq& candidate,
                                 const std::vector<TokenSeq>& others, double tau) {
  if (others.empty()) throw DomainError("similarity_penalty: empty comparison set");
  double total = 0.0;
  for (const auto& other : others) {
    total += std::max(0.0, similarity_ratio(candidate, other) - tau);
  }
  return total / static_cast<double>(others.size());
}

inline double teacher_reward(double r_diff, double r_sim, double lambda) {
  if (!(r_diff >= 0.0 && r_diff <= 1.0)) throw DomainError("teacher_reward: r_diff outside [0,1]");
  if (r_sim < 0.0) throw DomainError("teacher_reward: r_sim must be >= 0");
  if (lambda < 0.0) throw DomainError("teacher_reward: lambda must be >= 0");
  return std::max(0.0, r_diff - lambda * r_sim);
}

enum class GateRejection { missing_open_tag, missing_close_tag, empty_body, nested_tags };

inline std::string to_string(GateRejection r) {
  switch (r) {
    case GateRejection::missing_open_tag: return "missing open tag";
    case GateRejection::missing_close_tag: return "missing close tag";
    case GateRejection::empty_body: return "empty body";
    case GateRejection::nested_tags: return "nested tags";
  }
  return "unknown";
}

struct GateResult {
  std::optional<std::string> question;      // set iff accepted
  std::optional<GateRejection> rejection;   // set iff rejected

  bool accepted() const { return question.has_value(); }
};

// Accepts only outputs carrying one well-formed <question>...</question>
// envelope with a nonempty body. Rejected outputs are excluded from reward
// computation entirely rather than zero-rewarded.
inline GateResult format_gate(const std::string& raw_output) {
  static const std::string open = "<question>";
  static const std::string close = "</question>";
  const std::size_t o = raw_output.find(open);
  if (o == std::string::npos) return {std::nullopt, GateRejection::missing_open_tag};
  const std::size_t body_start = o + open.size();
  const std::size_t c = raw_output.find(close, body_start);
  if (c == std::string::npos) return {std::nullopt, GateRejection::missing_close_tag};
  const std::string body = raw_output.substr(body_start, c - body_start);
  if (body.find(open) != std::string::npos) return {std::nullopt, GateRejection::nested_tags};
  std::size_t b = 0, e = body.size();
  while (b < e && std::isspace(static_cast<unsigned char>(body[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(body[e - 1]))) --e;
  if (b == e) return {std::nullopt, GateRejection::empty_body};
  return {body.substr(b, e - b), std::nullopt};
}

}  // namespace ttsr
