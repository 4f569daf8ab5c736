#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/errors.hpp"

namespace ttsr {

enum class QuestionSource { test, variant };

inline std::string to_string(QuestionSource s) {
  return s == QuestionSource::test ? "test" : "variant";
}

struct OpStep {
  char op = '+';  // one of '+', '-', '*'
  int operand = 0;

  friend bool operator==(const OpStep&, const OpStep&) = default;
};

// Structured instance of the synthetic task: fold op_chain from 0 modulo p.
struct ToyPayload {
  int modulus = 97;
  int difficulty = 1;  // k, the chain length
  std::vector<OpStep> op_chain;

  friend bool operator==(const ToyPayload&, const ToyPayload&) = default;
};

inline int fold_chain(const ToyPayload& p) {
  if (p.modulus < 2) throw DomainError("toy modulus must be >= 2");
  long long acc = 0;
  for (const auto& s : p.op_chain) {
    switch (s.op) {
      case '+': acc = acc + s.operand; break;
      case '-': acc = acc - s.operand; break;
      case '*': acc = acc * s.operand; break;
      default: throw DomainError(std::string("unknown operator: ") + s.op);
    }
    acc %= p.modulus;
    if (acc < 0) acc += p.modulus;
  }
  return static_cast<int>(acc);
}

inline std::string op_word(char op) {
  switch (op) {
    case '+': return "add";
    case '-': return "subtract";
    case '*': return "multiply by";
  }
  throw DomainError(std::string("unknown operator: ") + op);
}

// Deterministic natural-language rendering; this is what similarity and
// prompts operate on.
inline std::string render_toy_body(const ToyPayload& p) {
  std::string out = "Start from 0 and work modulo " + std::to_string(p.modulus) + ".";
  for (std::size_t i = 0; i < p.op_chain.size(); ++i) {
    out += " Step " + std::to_string(i + 1) + ": " + op_word(p.op_chain[i].op) + " " +
           std::to_string(p.op_chain[i].operand) + ".";
  }
  out += " What is the final value?";
  return out;
}

// Ground-truth-free projection of a Question. Every reward-computing
// operation takes this view, so pseudo-rewards cannot read the answer.
struct QuestionView {
  std::string id;
  std::string body;
  QuestionSource source = QuestionSource::test;
  std::optional<std::string> origin_id;
  std::optional<ToyPayload> toy_payload;

  friend bool operator==(const QuestionView&, const QuestionView&) = default;
};

// A solvable task instance. ground_truth is private: it is set at
// construction (toy questions only) and readable solely through
// ground_truth_for_eval(), which the evaluation path is the one caller of.
class Question {
 public:
  Question() = default;

  static Question make_test(std::string id, std::string body) {
    Question q;
    q.id_ = std::move(id);
    q.body_ = std::move(body);
    q.source_ = QuestionSource::test;
    q.check();
    return q;
  }

  static Question make_toy_test(std::string id, ToyPayload payload) {
    Question q;
    q.id_ = std::move(id);
    q.toy_payload_ = std::move(payload);
    q.body_ = render_toy_body(*q.toy_payload_);
    q.source_ = QuestionSource::test;
    q.ground_truth_ = std::to_string(fold_chain(*q.toy_payload_));
    q.check();
    return q;
  }

  static Question make_variant(std::string id, std::string body, std::string origin_id) {
    Question q;
    q.id_ = std::move(id);
    q.body_ = std::move(body);
    q.source_ = QuestionSource::variant;
    q.origin_id_ = std::move(origin_id);
    q.check();
    return q;
  }

  static Question make_toy_variant(std::string id, ToyPayload payload, std::string origin_id) {
    Question q = make_toy_test(std::move(id), std::move(payload));
    q.source_ = QuestionSource::variant;
    q.origin_id_ = std::move(origin_id);
    q.check();
    return q;
  }

  const std::string& id() const { return id_; }
  const std::string& body() const { return body_; }
  QuestionSource source() const { return source_; }
  const std::optional<std::string>& origin_id() const { return origin_id_; }
  const std::optional<ToyPayload>& toy_payload() const { return toy_payload_; }
  bool has_ground_truth() const { return ground_truth_.has_value(); }

  // Evaluation-only accessor; the single read point for the canonical answer.
  const std::string& ground_truth_for_eval() const {
    if (!ground_truth_) throw DomainError("question " + id_ + " carries no ground truth");
    return *ground_truth_;
  }

  QuestionView reward_view() const {
    return QuestionView{id_, body_, source_, origin_id_, toy_payload_};
  }

  friend bool operator==(const Question&, const Question&) = default;

  friend void to_json(nlohmann::json& j, const Question& q) {
    j = nlohmann::json{{"id", q.id_},
                       {"body", q.body_},
                       {"source", to_string(q.source_)}};
    if (q.origin_id_) j["origin_id"] = *q.origin_id_;
    if (q.toy_payload_) {
      nlohmann::json chain = nlohmann::json::array();
      for (const auto& s : q.toy_payload_->op_chain)
        chain.push_back({std::string(1, s.op), s.operand});
      j["toy_payload"] = {{"modulus", q.toy_payload_->modulus},
                          {"difficulty", q.toy_payload_->difficulty},
                          {"op_chain", chain}};
    }
    if (q.ground_truth_) j["ground_truth"] = *q.ground_truth_;
  }

  friend void from_json(const nlohmann::json& j, Question& q) {
    q.id_ = j.at("id").get<std::string>();
    q.body_ = j.at("body").get<std::string>();
    q.source_ = j.at("source").get<std::string>() == "variant" ? QuestionSource::variant
                                                               : QuestionSource::test;
    if (j.contains("origin_id")) q.origin_id_ = j.at("origin_id").get<std::string>();
    if (j.contains("toy_payload")) {
      ToyPayload p;
      const auto& tp = j.at("toy_payload");
      p.modulus = tp.at("modulus").get<int>();
      p.difficulty = tp.at("difficulty").get<int>();
      for (const auto& s : tp.at("op_chain")) {
        OpStep step;
        step.op = s.at(0).get<std::string>().at(0);
        step.operand = s.at(1).get<int>();
        p.op_chain.push_back(step);
      }
      q.toy_payload_ = std::move(p);
    }
    if (j.contains("ground_truth")) q.ground_truth_ = j.at("ground_truth").get<std::string>();
    q.check();
  }

 private:
  void check() const {
    if (id_.empty()) throw DomainError("question id must be nonempty");
    if (source_ == QuestionSource::variant && !origin_id_)
      throw DomainError("variant question " + id_ + " lacks origin_id");
    if (toy_payload_) {
      if (toy_payload_->difficulty != static_cast<int>(toy_payload_->op_chain.size()))
        throw DomainError("question " + id_ + ": difficulty does not match chain length");
      if (!ground_truth_) throw DomainError("toy question " + id_ + " lacks ground truth");
      if (*ground_truth_ != std::to_string(fold_chain(*toy_payload_)))
        throw DomainError("question " + id_ + ": ground truth does not match op_chain fold");
    }
  }

  std::string id_;
  std::string body_;
  QuestionSource source_ = QuestionSource::test;
  std::optional<std::string> origin_id_;
  std::optional<ToyPayload> toy_payload_;
  std::optional<std::string> ground_truth_;
};

}  // namespace ttsr
