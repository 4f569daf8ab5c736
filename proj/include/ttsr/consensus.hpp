#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "ttsr/config.hpp"
#include "ttsr/errors.hpp"

namespace ttsr {

// Sentinel for an empty or unparseable answer. Participates in the vote
// denominator but can only become the target when every answer is empty.
inline const std::string kEmptyAnswer = "\xE2\x88\x85";  // U+2205

struct ConsensusResult {
  std::string pseudo_target;
  std::map<std::string, int> counts;
  bool tie_flag = false;
  double score_s = 0.0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Toy canonical form: a plain integer, no leading zeros, no sign noise.
inline std::string canonicalize_answer_toy(const std::string& raw) {
  std::string s = detail::trim(raw);
  if (s.empty()) return kEmptyAnswer;
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  if (i == s.size()) return kEmptyAnswer;
  std::string digits;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return kEmptyAnswer;
    digits += s[i];
  }
  std::size_t nz = digits.find_first_not_of('0');
  if (nz == std::string::npos) return "0";
  digits = digits.substr(nz);
  return neg ? "-" + digits : digits;
}

// Remote canonical form: take the last \boxed{...} payload if present, else
// the last nonempty line; then lowercase and collapse whitespace.
inline std::string canonicalize_answer_remote(const std::string& raw) {
  std::string extracted;
  std::size_t pos = raw.rfind("\\boxed{");
  if (pos != std::string::npos) {
    std::size_t start = pos + 7;
    int depth = 1;
    std::size_t i = start;
    for (; i < raw.size() && depth > 0; ++i) {
      if (raw[i] == '{') ++depth;
      else if (raw[i] == '}') --depth;
    }
    extracted = raw.substr(start, (depth == 0 ? i - 1 : raw.size()) - start);
  } else {
    std::size_t end = raw.size();
    while (end > 0) {
      std::size_t nl = raw.rfind('\n', end - 1);
      std::size_t begin = (nl == std::string::npos) ? 0 : nl + 1;
      std::string line = detail::trim(raw.substr(begin, end - begin));
      if (!line.empty()) {
        extracted = line;
        break;
      }
      if (nl == std::string::npos) break;
      end = nl;
    }
  }
  extracted = detail::trim(extracted);
  std::string out;
  bool in_space = false;
  for (char c : extracted) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (out.empty()) return kEmptyAnswer;
  return out;
}

inline std::string canonicalize_answer(const std::string& raw, Backend backend) {
  return backend == Backend::toy ? canonicalize_answer_toy(raw) : canonicalize_answer_remote(raw);
}

// Majority vote over canonical answers. Ties break to the lexicographically
// smallest answer (deterministic across platforms); tie_flag marks them.
inline ConsensusResult majority_vote(const std::vector<std::string>& answers) {
  if (answers.empty()) throw DomainError("majority_vote: empty answer list");
  ConsensusResult res;
  for (const auto& a : answers) res.counts[a]++;

  int best = 0;
  bool all_empty = true;
  for (const auto& [ans, n] : res.counts) {
    if (ans == kEmptyAnswer) continue;
    all_empty = false;
    best = std::max(best, n);
  }
  if (all_empty) {
    res.pseudo_target = kEmptyAnswer;
    res.tie_flag = res.counts.size() > 1;
    res.score_s = static_cast<double>(res.counts[kEmptyAnswer]) / answers.size();
    return res;
  }
  std::vector<std::string> winners;
  for (const auto& [ans, n] : res.counts)
    if (ans != kEmptyAnswer && n == best) winners.push_back(ans);
  res.pseudo_target = *std::min_element(winners.begin(), winners.end());
  res.tie_flag = winners.size() > 1;
  res.score_s = static_cast<double>(best) / static_cast<double>(answers.size());
  return res;
}

inline double pseudo_reward(const std::string& answer, const std::string& target) {
  if (answer == kEmptyAnswer && target != kEmptyAnswer) return 0.0;
  return answer == target ? 1.0 : 0.0;
}

inline double pseudo_correctness_score(const std::vector<double>& rewards) {
  if (rewards.empty()) throw DomainError("pseudo_correctness_score: empty rewards");
  long long hits = 0;
  for (double r : rewards) hits += (r != 0.0);
  // integer tally divided once; matches ConsensusResult.score_s exactly
  return static_cast<double>(hits) / static_cast<double>(rewards.size());
}

}  // namespace ttsr
