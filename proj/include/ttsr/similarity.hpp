#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "ttsr/errors.hpp"

namespace ttsr {

using TokenSeq = std::vector<std::string>;

// Word-level tokenization: lowercase, split on whitespace, strip surrounding
// punctuation from each token.
inline TokenSeq tokenize_question(const std::string& text) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  return out;
}

// A contiguous run common to both sequences: S1[i..i+n) == S2[j..j+n).
struct MatchBlock {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t n = 0;

  friend bool operator==(const MatchBlock&, const MatchBlock&) = default;
};

namespace detail {

// Longest common contiguous block within the given index windows.
// Ties break to the smallest i, then the smallest j.
inline MatchBlock longest_match(const TokenSeq& s1, std::size_t lo1, std::size_t hi1,
                                const TokenSeq& s2, std::size_t lo2, std::size_t hi2) {
  MatchBlock best;
  if (lo1 >= hi1 || lo2 >= hi2) return best;
  const std::size_t w = hi2 - lo2;
  std::vector<std::size_t> prev(w, 0), cur(w, 0);
  for (std::size_t i = lo1; i < hi1; ++i) {
    for (std::size_t j = lo2; j < hi2; ++j) {
      std::size_t& c = cur[j - lo2];
      if (s1[i] == s2[j]) {
        c = (j > lo2 ? prev[j - lo2 - 1] : 0) + 1;
        const std::size_t bi = i + 1 - c, bj = j + 1 - c;
        if (c > best.n ||
            (c == best.n && (bi < best.i || (bi == best.i && bj < best.j)))) {
          best = MatchBlock{bi, bj, c};
        }
      } else {
        c = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

inline void collect_blocks(const TokenSeq& s1, std::size_t lo1, std::size_t hi1,
                           const TokenSeq& s2, std::size_t lo2, std::size_t hi2,
                           std::vector<MatchBlock>& out) {
  MatchBlock m = longest_match(s1, lo1, hi1, s2, lo2, hi2);
  if (m.n == 0) return;
  collect_blocks(s1, lo1, m.i, s2, lo2, m.j, out);
  out.push_back(m);
  collect_blocks(s1, m.i + m.n, hi1, s2, m.j + m.n, hi2, out);
}

}  // namespace detail

// Longest block first, then recurse on the left and right flanks. Returned
// blocks are non-overlapping and monotone in both i and j (sorted by i).
inline std::vector<MatchBlock> matching_blocks(const TokenSeq& s1, const TokenSeq& s2) {
  std::vector<MatchBlock> out;
  detail::collect_blocks(s1, 0, s1.size(), s2, 0, s2.size(), out);
  return out;
}

// sim = 2M / T with M the total matched token count and T = |S1| + |S2|.
// Both-empty is defined as 1.0.
inline double similarity_ratio(const TokenSeq& s1, const TokenSeq& s2) {
  if (s1.empty() && s2.empty()) return 1.0;
  std::size_t matched = 0;
  for (const auto& b : matching_blocks(s1, s2)) matched += b.n;
  return 2.0 * static_cast<double>(matched) / static_cast<double>(s1.size() + s2.size());
}

}  // namespace ttsr
