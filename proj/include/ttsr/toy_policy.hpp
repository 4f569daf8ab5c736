#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ttsr/config.hpp"
#include "ttsr/consensus.hpp"
#include "ttsr/errors.hpp"
#include "ttsr/grpo.hpp"
#include "ttsr/question.hpp"
#include "ttsr/rng.hpp"
#include "ttsr/trajectory.hpp"

namespace ttsr {

// Desk-scale stand-in for a pretrained language model. The Student block is a
// position-wise softmax-linear digit emitter over hashed question features;
// the Teacher block is a logit table over chain-perturbation actions indexed
// by a bucketed difficulty score. Both are updated by the same GRPO machinery.

inline constexpr int kDigits = 2;        // answers render as two base-10 digit tokens
inline constexpr int kVocab = 10;
inline constexpr int kTeacherActions = 5;  // delta-k in {-2..+2} plus operand reseed

inline int teacher_action_delta(std::size_t action) { return static_cast<int>(action) - 2; }

// A run-scoped task family: a small operand pool and difficulty range, from
// which the test set, the held-out set and synthesized variants are all drawn.
struct ToyFamily {
  int modulus = 97;
  std::vector<int> operand_pool;
  std::vector<char> ops = {'+', '-', '*'};
  int min_k = 1;
  int max_k = 3;
};

inline ToyFamily make_family(const ToySettings& ts, Rng& rng) {
  ToyFamily fam;
  fam.modulus = ts.modulus;
  fam.min_k = ts.min_difficulty;
  fam.max_k = ts.max_difficulty;
  // distinct operands in [2, p-1]; 0 and 1 degenerate under '*'
  std::vector<int> all;
  for (int v = 2; v < ts.modulus; ++v) all.push_back(v);
  auto idx = rng.sample_without_replacement(all.size(),
                                            static_cast<std::size_t>(ts.operand_pool));
  for (auto i : idx) fam.operand_pool.push_back(all[i]);
  return fam;
}

inline ToyPayload sample_family_payload(const ToyFamily& fam, int k, Rng& rng) {
  if (k < 1) throw DomainError("difficulty k must be >= 1");
  ToyPayload p;
  p.modulus = fam.modulus;
  p.difficulty = k;
  for (int i = 0; i < k; ++i) {
    OpStep s;
    s.op = fam.ops[rng.next_index(fam.ops.size())];
    s.operand = fam.operand_pool[rng.next_index(fam.operand_pool.size())];
    p.op_chain.push_back(s);
  }
  return p;
}

// Broad generator: operands uniform over [0, p). Used by tests and for
// questions outside any run family.
inline Question gen_toy_question(int k, int p, Rng& rng, const std::string& id) {
  if (k < 1) throw DomainError("difficulty k must be >= 1");
  if (p < 2) throw DomainError("modulus p must be >= 2");
  static const char kOps[3] = {'+', '-', '*'};
  ToyPayload payload;
  payload.modulus = p;
  payload.difficulty = k;
  for (int i = 0; i < k; ++i) {
    OpStep s;
    s.op = kOps[rng.next_index(3)];
    s.operand = static_cast<int>(rng.next_index(static_cast<std::size_t>(p)));
    payload.op_chain.push_back(s);
  }
  return Question::make_toy_test(id, std::move(payload));
}

// Hashed indicator features: one bucket per (position, operator, operand)
// step, plus one bucket for the (prefix-before-last, operator, operand)
// triple that determines the answer. Multiplicity kept.
inline std::vector<int> question_features(const ToyPayload& p, int feature_dim) {
  std::vector<int> active;
  for (std::size_t t = 0; t < p.op_chain.size(); ++t) {
    const auto& s = p.op_chain[t];
    std::uint64_t h = mix64(0x1111ULL + t * 0x9e37ULL) ^
                      mix64(0x2222ULL + static_cast<std::uint64_t>(s.op)) ^
                      mix64(0x3333ULL + static_cast<std::uint64_t>(s.operand));
    active.push_back(static_cast<int>(mix64(h) % static_cast<std::uint64_t>(feature_dim)));
  }
  if (!p.op_chain.empty()) {
    ToyPayload prefix = p;
    prefix.op_chain.pop_back();
    prefix.difficulty -= 1;
    const int pre = fold_chain(prefix);
    const auto& last = p.op_chain.back();
    std::uint64_t h = mix64(0x4444ULL + static_cast<std::uint64_t>(pre)) ^
                      mix64(0x5555ULL + static_cast<std::uint64_t>(last.op)) ^
                      mix64(0x6666ULL + static_cast<std::uint64_t>(last.operand));
    active.push_back(static_cast<int>(mix64(h) % static_cast<std::uint64_t>(feature_dim)));
  }
  return active;
}

namespace detail {

inline void softmax_inplace(std::vector<double>& z, double temperature) {
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp((v - zmax) / temperature);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace detail

struct ToyVariantCandidate {
  std::string tagged_text;
  ToyPayload payload;
  std::string source_id;
  double source_s = 0.0;
  std::size_t action = 0;
  double action_logprob = 0.0;
  std::vector<double> action_dist;  // behavior distribution at synthesis time
};

class ToyPolicy {
 public:
  ToyPolicy(ToyFamily family, int feature_dim, int score_buckets)
      : family_(std::move(family)), feature_dim_(feature_dim), score_buckets_(score_buckets) {
    student_.assign(static_cast<std::size_t>(kDigits) * kVocab * input_dim(), 0.0);
    teacher_.assign(static_cast<std::size_t>(score_buckets_) * kTeacherActions, 0.0);
  }

  const ToyFamily& family() const { return family_; }
  int feature_dim() const { return feature_dim_; }
  int score_buckets() const { return score_buckets_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(feature_dim_) + kVocab + 1; }

  std::vector<double>& student_params() { return student_; }
  const std::vector<double>& student_params() const { return student_; }
  std::vector<double>& teacher_params() { return teacher_; }
  const std::vector<double>& teacher_params() const { return teacher_; }

  // --- student ---

  // Per-position digit distribution under arbitrary parameters.
  std::vector<double> digit_distribution(const std::vector<double>& params, const ToyPayload& q,
                                         int position, int prev_digit,
                                         double temperature) const {
    const std::vector<int> active = question_features(q, feature_dim_);
    return digit_distribution_cached(params, active, position, prev_digit, temperature);
  }

  // Samples G answer trajectories autoregressively; records behavior-policy
  // logprobs. temperature == 0 collapses to greedy decoding.
  TrajectoryGroup sample_group(const std::vector<double>& params, const QuestionView& q, int G,
                               double temperature, Rng& rng) const {
    const ToyPayload& payload = require_payload(q);
    const std::vector<int> active = question_features(payload, feature_dim_);
    TrajectoryGroup group;
    group.question_id = q.id;
    for (int s = 0; s < G; ++s) {
      Trajectory traj;
      traj.question_id = q.id;
      int prev = -1;
      for (int d = 0; d < kDigits; ++d) {
        const std::vector<double> dist =
            digit_distribution_cached(params, active, d, prev, std::max(temperature, 0.0));
        int tok;
        if (temperature <= 0.0) {
          tok = 0;
          for (int v = 1; v < kVocab; ++v)
            if (dist[v] > dist[tok]) tok = v;
        } else {
          double u = rng.next_real(), acc = 0.0;
          tok = kVocab - 1;
          for (int v = 0; v < kVocab; ++v) {
            acc += dist[v];
            if (u < acc) {
              tok = v;
              break;
            }
          }
        }
        traj.token_ids.push_back(tok);
        traj.old_logprobs.push_back(std::log(std::max(dist[tok], 1e-300)));
        prev = tok;
      }
      traj.text = std::string(1, static_cast<char>('0' + traj.token_ids[0])) +
                  static_cast<char>('0' + traj.token_ids[1]);
      traj.answer_raw = traj.text;
      traj.answer_canonical = canonicalize_answer_toy(traj.text);
      group.trajectories.push_back(std::move(traj));
    }
    return group;
  }

  // Re-scores a trajectory's tokens under old and new parameter vectors,
  // producing the per-token material grpo_objective consumes.
  std::vector<TokenEval> eval_tokens(const std::vector<double>& old_params,
                                     const std::vector<double>& new_params, const ToyPayload& q,
                                     const std::vector<int>& token_ids,
                                     double temperature) const {
    const std::vector<int> active = question_features(q, feature_dim_);
    std::vector<TokenEval> out;
    int prev = -1;
    for (std::size_t t = 0; t < token_ids.size(); ++t) {
      TokenEval te;
      te.sampled = static_cast<std::size_t>(token_ids[t]);
      te.old_dist = digit_distribution_cached(old_params, active, static_cast<int>(t), prev,
                                              temperature);
      te.new_dist = digit_distribution_cached(new_params, active, static_cast<int>(t), prev,
                                              temperature);
      te.old_logprob = std::log(std::max(te.old_dist[te.sampled], 1e-300));
      te.new_logprob = std::log(std::max(te.new_dist[te.sampled], 1e-300));
      prev = token_ids[t];
      out.push_back(std::move(te));
    }
    return out;
  }

  // Exact gradient of sum_t sum_v coeffs[t][v] * log pi(v | context_t) with
  // respect to the student parameters, accumulated into grad.
  void student_logprob_grad(const std::vector<double>& params, const ToyPayload& q,
                            const std::vector<int>& token_ids, double temperature,
                            const std::vector<std::vector<double>>& coeffs,
                            std::vector<double>& grad) const {
    if (grad.size() != student_.size())
      throw DomainError("student gradient buffer dimension mismatch");
    if (coeffs.size() != token_ids.size())
      throw DomainError("coefficient row count must match token count");
    const std::vector<int> active = question_features(q, feature_dim_);
    int prev = -1;
    for (std::size_t t = 0; t < token_ids.size(); ++t) {
      const std::vector<double> dist =
          digit_distribution_cached(params, active, static_cast<int>(t), prev, temperature);
      double ctot = 0.0;
      for (double c : coeffs[t]) ctot += c;
      for (int v = 0; v < kVocab; ++v) {
        const double gv = (coeffs[t][static_cast<std::size_t>(v)] - ctot * dist[v]) / temperature;
        if (gv == 0.0) continue;
        for (int f : active) grad[widx(static_cast<int>(t), v, f)] += gv;
        if (t > 0) grad[widx(static_cast<int>(t), v, feature_dim_ + prev)] += gv;
        grad[widx(static_cast<int>(t), v, feature_dim_ + kVocab)] += gv;
      }
      prev = token_ids[t];
    }
  }

  std::string greedy_answer(const std::vector<double>& params, const ToyPayload& q) const {
    Rng dummy(0);
    QuestionView view;
    view.id = "greedy";
    view.toy_payload = q;
    TrajectoryGroup g = sample_group(params, view, 1, 0.0, dummy);
    return g.trajectories[0].answer_canonical;
  }

  // Weakly supervised initialization: cross-entropy SGD on family questions
  // whose labels carry noise. This stands in for the competence a pretrained
  // model brings to the test distribution; without it majority voting has no
  // signal to amplify.
  void pretrain(const ToySettings& ts, Rng& rng) {
    const int p = family_.modulus;
    for (int epoch = 0; epoch < ts.pretrain_epochs; ++epoch) {
      for (int n = 0; n < ts.pretrain_samples; ++n) {
        const int k = family_.min_k +
                      static_cast<int>(rng.next_index(
                          static_cast<std::size_t>(family_.max_k - family_.min_k + 1)));
        const ToyPayload q = sample_family_payload(family_, k, rng);
        const int label = fold_chain(q);
        int digits[kDigits] = {label / 10, label % 10};
        const double u = rng.next_real();
        if (u < ts.pretrain_distractor_rate) {
          // systematic distractor: neighboring first digit, diffuse second
          digits[0] = (digits[0] + 1) % 10;
          digits[1] = static_cast<int>(rng.next_index(10));
        } else if (u < ts.pretrain_distractor_rate + ts.pretrain_label_noise) {
          const int r = static_cast<int>(rng.next_index(static_cast<std::size_t>(p)));
          digits[0] = r / 10;
          digits[1] = r % 10;
        }
        const std::vector<int> active = question_features(q, feature_dim_);
        int prev = -1;
        for (int d = 0; d < kDigits; ++d) {
          const std::vector<double> dist =
              digit_distribution_cached(student_, active, d, prev, 1.0);
          for (int v = 0; v < kVocab; ++v) {
            const double gv = ts.pretrain_lr * ((v == digits[d] ? 1.0 : 0.0) - dist[v]);
            if (gv == 0.0) continue;
            for (int f : active) student_[widx(d, v, f)] += gv;
            if (d > 0) student_[widx(d, v, feature_dim_ + prev)] += gv;
            student_[widx(d, v, feature_dim_ + kVocab)] += gv;
          }
          prev = digits[d];  // teacher forcing on the label
        }
      }
    }
  }

  // --- teacher ---

  int score_bucket(double s) const {
    int b = static_cast<int>(s * score_buckets_);
    return std::min(std::max(b, 0), score_buckets_ - 1);
  }

  std::vector<double> action_distribution(const std::vector<double>& teacher_params,
                                          double source_s) const {
    const int b = score_bucket(source_s);
    std::vector<double> z(kTeacherActions);
    for (int a = 0; a < kTeacherActions; ++a)
      z[static_cast<std::size_t>(a)] = teacher_params[static_cast<std::size_t>(b) * kTeacherActions + a];
    detail::softmax_inplace(z, 1.0);
    return z;
  }

  // Draws M perturbation actions over the sampled failed set: shift the
  // difficulty by delta-k (clamped at 1), keep the operator multiset, reseed
  // every operand from the family pool, and emit the rendered text inside
  // <question> tags. Action logprobs are recorded so the Teacher block can be
  // GRPO-updated with R_T as the reward.
  std::vector<ToyVariantCandidate> synthesize_variants(
      const std::vector<double>& teacher_params, const std::vector<FailedInstance>& failed,
      int M, Rng& rng) const {
    if (failed.empty()) throw DomainError("synthesize_variants: empty failed set");
    std::vector<ToyVariantCandidate> out;
    for (int j = 0; j < M; ++j) {
      const FailedInstance& src = failed[rng.next_index(failed.size())];
      const ToyPayload& sp = require_payload(src.question);
      ToyVariantCandidate cand;
      cand.source_id = src.question.id;
      cand.source_s = src.score_s;
      cand.action_dist = action_distribution(teacher_params, src.score_s);
      double u = rng.next_real(), acc = 0.0;
      cand.action = kTeacherActions - 1;
      for (std::size_t a = 0; a < kTeacherActions; ++a) {
        acc += cand.action_dist[a];
        if (u < acc) {
          cand.action = a;
          break;
        }
      }
      cand.action_logprob = std::log(std::max(cand.action_dist[cand.action], 1e-300));

      const int new_k = std::max(1, sp.difficulty + teacher_action_delta(cand.action));
      ToyPayload np;
      np.modulus = sp.modulus;
      np.difficulty = new_k;
      for (int i = 0; i < new_k; ++i) {
        OpStep s;
        s.op = i < static_cast<int>(sp.op_chain.size())
                   ? sp.op_chain[static_cast<std::size_t>(i)].op
                   : family_.ops[rng.next_index(family_.ops.size())];
        s.operand = family_.operand_pool[rng.next_index(family_.operand_pool.size())];
        np.op_chain.push_back(s);
      }
      cand.payload = np;
      cand.tagged_text = "<question>" + render_toy_body(np) + "</question>";
      out.push_back(std::move(cand));
    }
    return out;
  }

  // Gradient counterpart of action_distribution for the teacher logit table.
  void teacher_logprob_grad(const std::vector<double>& teacher_params, double source_s,
                            const std::vector<double>& action_coeffs,
                            std::vector<double>& grad) const {
    if (grad.size() != teacher_.size())
      throw DomainError("teacher gradient buffer dimension mismatch");
    const int b = score_bucket(source_s);
    const std::vector<double> dist = action_distribution(teacher_params, source_s);
    double ctot = 0.0;
    for (double c : action_coeffs) ctot += c;
    for (int a = 0; a < kTeacherActions; ++a) {
      grad[static_cast<std::size_t>(b) * kTeacherActions + a] +=
          action_coeffs[static_cast<std::size_t>(a)] - ctot * dist[static_cast<std::size_t>(a)];
    }
  }

 private:
  static const ToyPayload& require_payload(const QuestionView& q) {
    if (!q.toy_payload) throw DomainError("question " + q.id + " carries no toy payload");
    return *q.toy_payload;
  }

  std::size_t widx(int d, int v, int f) const {
    return (static_cast<std::size_t>(d) * kVocab + static_cast<std::size_t>(v)) * input_dim() +
           static_cast<std::size_t>(f);
  }

  std::vector<double> digit_distribution_cached(const std::vector<double>& params,
                                                const std::vector<int>& active, int position,
                                                int prev_digit, double temperature) const {
    if (params.size() != student_.size())
      throw DomainError("student parameter vector dimension mismatch");
    std::vector<double> z(kVocab, 0.0);
    for (int v = 0; v < kVocab; ++v) {
      double s = 0.0;
      for (int f : active) s += params[widx(position, v, f)];
      if (prev_digit >= 0) s += params[widx(position, v, feature_dim_ + prev_digit)];
      s += params[widx(position, v, feature_dim_ + kVocab)];
      z[static_cast<std::size_t>(v)] = s;
    }
    if (temperature <= 0.0) {
      // greedy handled by caller via argmax on a temperature-1 softmax
      detail::softmax_inplace(z, 1.0);
      return z;
    }
    detail::softmax_inplace(z, temperature);
    return z;
  }

  ToyFamily family_;
  int feature_dim_;
  int score_buckets_;
  std::vector<double> student_;
  std::vector<double> teacher_;
};

}  // namespace ttsr
