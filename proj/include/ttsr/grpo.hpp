#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ttsr/errors.hpp"

namespace ttsr {

// Evaluation artifacts of one clipped-surrogate pass.
struct SurrogateReport {
  double objective = 0.0;
  // one row per trajectory (groups concatenated), one column per token
  std::vector<std::vector<double>> per_token_terms;
  double clip_fraction = 0.0;
  double kl_value = 0.0;
  std::vector<double> gradient;
};

// Group-normalized advantages with population standard deviation:
//   A_i = (R_i - mean(R)) / (std(R) + delta)
inline std::vector<double> compute_group_advantages(const std::vector<double>& rewards,
                                                    double delta) {
  if (rewards.size() < 2) throw DomainError("group too small");
  if (!(delta > 0.0)) throw DomainError("delta must be > 0");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double sd = std::sqrt(var);
  std::vector<double> adv(rewards.size());
  if (sd == 0.0) {
    // all rewards equal: exactly zero advantages
    return adv;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + delta);
  return adv;
}

inline double token_ratio(double new_logprob, double old_logprob) {
  if (!std::isfinite(new_logprob) || !std::isfinite(old_logprob))
    throw DomainError("token_ratio: non-finite logprob");
  return std::exp(new_logprob - old_logprob);
}

inline double clipped_term(double ratio, double advantage, double epsilon) {
  if (!(ratio > 0.0)) throw DomainError("clipped_term: ratio must be > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("clipped_term: epsilon outside (0,1)");
  const double clamped = std::min(std::max(ratio, 1.0 - epsilon), 1.0 + epsilon);
  return std::min(ratio * advantage, clamped * advantage);
}

// Exact categorical KL(new || old) for one position, 0*log 0 := 0.
inline double kl_divergence(const std::vector<double>& new_dist,
                            const std::vector<double>& old_dist) {
  if (new_dist.size() != old_dist.size())
    throw DomainError("kl_divergence: support size mismatch");
  double sn = 0.0, so = 0.0;
  for (double p : new_dist) sn += p;
  for (double p : old_dist) so += p;
  if (std::abs(sn - 1.0) > 1e-9 || std::abs(so - 1.0) > 1e-9)
    throw DomainError("kl_divergence: probabilities must sum to 1");
  double kl = 0.0;
  for (std::size_t v = 0; v < new_dist.size(); ++v) {
    if (new_dist[v] > 0.0) {
      if (old_dist[v] <= 0.0) throw DomainError("absolute continuity violated");
      kl += new_dist[v] * std::log(new_dist[v] / old_dist[v]);
    }
  }
  return kl;
}

// Average KL over several token positions.
inline double kl_divergence(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& positions) {
  if (positions.empty()) throw DomainError("kl_divergence: no positions");
  double total = 0.0;
  for (const auto& [n, o] : positions) total += kl_divergence(n, o);
  return total / static_cast<double>(positions.size());
}

// Per-token evaluation of one trajectory under the current parameters.
// `sampled` indexes the token actually taken; old values come from the
// sampling-time snapshot.
struct TokenEval {
  std::size_t sampled = 0;
  double new_logprob = 0.0;
  double old_logprob = 0.0;
  std::vector<double> new_dist;
  std::vector<double> old_dist;
};

// One rollout group prepared for objective evaluation: advantages already
// computed, token evaluations filled under the current parameters.
struct GroupEval {
  std::vector<double> advantages;                    // per trajectory
  std::vector<std::vector<TokenEval>> trajectories;  // [i][t]
};

// Accumulates into `grad` the exact gradient of
//   sum_t sum_v coeffs[t][v] * log pi(v | context of token t)
// for the identified trajectory. Implemented by each updatable policy.
using WeightedLogprobGrad =
    std::function<void(std::size_t group, std::size_t traj,
                       const std::vector<std::vector<double>>& coeffs,
                       std::vector<double>& grad)>;

// Clipped surrogate plus KL:
//   mean over groups of (1/G) sum_i (1/|y_i|) sum_t
//     [ min(r A, clip(r, 1-eps, 1+eps) A) - beta * KL_t(new || old) ]
// The gradient is exact. The surrogate term contributes r*A on the sampled
// token when the unclipped branch is selected and nothing when the clip is
// strictly active; the KL term contributes new_dist[v]*log(new/old) on every
// support element (the normalization term cancels because the coefficients
// of a fixed position sum against a probability gradient of zero).
inline SurrogateReport grpo_objective(const std::vector<GroupEval>& groups, double epsilon,
                                      double beta, std::size_t param_dim,
                                      const WeightedLogprobGrad& grad_fn) {
  if (groups.empty()) throw DomainError("grpo_objective: no groups");
  SurrogateReport rep;
  rep.gradient.assign(param_dim, 0.0);
  const double group_w = 1.0 / static_cast<double>(groups.size());
  std::size_t tokens_total = 0, tokens_clipped = 0;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupEval& ge = groups[g];
    const std::size_t G = ge.trajectories.size();
    if (G == 0) throw DomainError("grpo_objective: empty group");
    if (ge.advantages.size() != G) throw DomainError("grpo_objective: advantage count mismatch");

    for (std::size_t i = 0; i < G; ++i) {
      const auto& toks = ge.trajectories[i];
      if (toks.empty()) throw DomainError("grpo_objective: trajectory with no tokens");
      const double scale = group_w / static_cast<double>(G) / static_cast<double>(toks.size());
      const double adv = ge.advantages[i];
      std::vector<std::vector<double>> coeffs(toks.size());
      std::vector<double> row(toks.size(), 0.0);
      bool any_coeff = false;

      for (std::size_t t = 0; t < toks.size(); ++t) {
        const TokenEval& te = toks[t];
        if (te.new_dist.size() != te.old_dist.size())
          throw DomainError("grpo_objective: token distribution size mismatch");
        if (te.sampled >= te.new_dist.size() && !te.new_dist.empty())
          throw DomainError("grpo_objective: sampled token outside support");
        const double r = token_ratio(te.new_logprob, te.old_logprob);
        const double raw = r * adv;
        const double clamped = std::min(std::max(r, 1.0 - epsilon), 1.0 + epsilon);
        const double clipped = clamped * adv;
        const double surr = std::min(raw, clipped);
        const bool clip_active = clipped < raw;  // min picked a strictly different value
        ++tokens_total;
        if (clip_active) ++tokens_clipped;

        double kl_t = 0.0;
        if (!te.new_dist.empty()) kl_t = kl_divergence(te.new_dist, te.old_dist);
        rep.kl_value += scale * kl_t;
        const double term = surr - beta * kl_t;
        rep.objective += scale * term;
        row[t] = term;

        coeffs[t].assign(te.new_dist.size(), 0.0);
        if (!te.new_dist.empty()) {
          if (!clip_active && adv != 0.0) {
            coeffs[t][te.sampled] += scale * r * adv;
            any_coeff = true;
          }
          if (beta != 0.0) {
            for (std::size_t v = 0; v < te.new_dist.size(); ++v) {
              if (te.new_dist[v] > 0.0) {
                coeffs[t][v] -=
                    beta * scale * te.new_dist[v] * std::log(te.new_dist[v] / te.old_dist[v]);
              }
            }
            any_coeff = true;
          }
        }
      }
      rep.per_token_terms.push_back(std::move(row));
      if (any_coeff && grad_fn) grad_fn(g, i, coeffs, rep.gradient);
    }
  }
  rep.clip_fraction =
      tokens_total ? static_cast<double>(tokens_clipped) / static_cast<double>(tokens_total) : 0.0;
  return rep;
}

// Minimal capability record for a policy whose parameters GRPO may update.
struct PolicyHandle {
  std::function<std::vector<double>()> read_params;
  std::function<void(const std::vector<double>&)> write_params;
  WeightedLogprobGrad gradient;
};

// One plain gradient-ascent step: params <- params + lr * grad. Returns the
// pre-step report. Aborts without writing when the gradient is non-finite.
inline SurrogateReport grpo_step(const PolicyHandle& policy, const std::vector<GroupEval>& groups,
                                 double epsilon, double beta, double learning_rate) {
  std::vector<double> params = policy.read_params();
  SurrogateReport rep = grpo_objective(groups, epsilon, beta, params.size(), policy.gradient);
  for (std::size_t k = 0; k < rep.gradient.size(); ++k) {
    if (!std::isfinite(rep.gradient[k]))
      throw DomainError("grpo_step: non-finite gradient at parameter " + std::to_string(k));
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k] += learning_rate * rep.gradient[k];
  policy.write_params(params);
  return rep;
}

}  // namespace ttsr
