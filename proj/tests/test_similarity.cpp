#include <catch_amalgamated.hpp>

#include <ttsr/similarity.hpp>

using namespace ttsr;

namespace {

// Reference implementation: enumerate every (i, j, n) common block by brute
// force, keep the longest with the smallest i then j, recurse on the flanks.
MatchBlock oracle_longest(const TokenSeq& s1, std::size_t lo1, std::size_t hi1,
                          const TokenSeq& s2, std::size_t lo2, std::size_t hi2) {
  MatchBlock best;
  for (std::size_t i = lo1; i < hi1; ++i) {
    for (std::size_t j = lo2; j < hi2; ++j) {
      std::size_t n = 0;
      while (i + n < hi1 && j + n < hi2 && s1[i + n] == s2[j + n]) ++n;
      if (n > best.n) best = MatchBlock{i, j, n};
    }
  }
  return best;
}

void oracle_collect(const TokenSeq& s1, std::size_t lo1, std::size_t hi1, const TokenSeq& s2,
                    std::size_t lo2, std::size_t hi2, std::vector<MatchBlock>& out) {
  MatchBlock m = oracle_longest(s1, lo1, hi1, s2, lo2, hi2);
  if (m.n == 0) return;
  oracle_collect(s1, lo1, m.i, s2, lo2, m.j, out);
  out.push_back(m);
  oracle_collect(s1, m.i + m.n, hi1, s2, m.j + m.n, hi2, out);
}

double oracle_similarity(const TokenSeq& s1, const TokenSeq& s2) {
  if (s1.empty() && s2.empty()) return 1.0;
  std::vector<MatchBlock> blocks;
  oracle_collect(s1, 0, s1.size(), s2, 0, s2.size(), blocks);
  std::size_t m = 0;
  for (const auto& b : blocks) m += b.n;
  return 2.0 * static_cast<double>(m) / static_cast<double>(s1.size() + s2.size());
}

std::vector<TokenSeq> all_sequences_up_to(std::size_t max_len) {
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  std::vector<TokenSeq> out = {{}};
  std::vector<TokenSeq> frontier = {{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& seq : frontier) {
      for (const auto& sym : alphabet) {
        TokenSeq s = seq;
        s.push_back(sym);
        next.push_back(s);
        out.push_back(s);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("tokenization") {
  CHECK(tokenize_question("What is 2+2?") == TokenSeq{"what", "is", "2+2"});
  CHECK(tokenize_question("") == TokenSeq{});
  CHECK(tokenize_question("A  a") == TokenSeq{"a", "a"});
  CHECK(tokenize_question("(hello), world!") == TokenSeq{"hello", "world"});
}

TEST_CASE("matching blocks spot cases") {
  CHECK(matching_blocks({"a", "b", "c"}, {"a", "b", "c"}) ==
        std::vector<MatchBlock>{{0, 0, 3}});
  CHECK(matching_blocks({"a", "b", "c", "d"}, {"b", "c", "d", "e"}) ==
        std::vector<MatchBlock>{{1, 0, 3}});
  CHECK(matching_blocks({"a", "b"}, {"c", "d"}).empty());
}

TEST_CASE("similarity spot values") {
  CHECK(similarity_ratio({"a", "b", "c", "d"}, {"b", "c", "d", "e"}) == 0.75);
  CHECK(similarity_ratio({"x", "y"}, {"x", "y"}) == 1.0);
  CHECK(similarity_ratio({"a"}, {"b"}) == 0.0);
  CHECK(similarity_ratio({}, {}) == 1.0);
  CHECK(similarity_ratio({}, {"a"}) == 0.0);
}

// Exhaustive equivalence over all ordered pairs of sequences of length <= 5 on
// a 3-symbol alphabet (364 x 364 pairs, no subsampling).
TEST_CASE("exhaustive oracle equivalence, length <= 5, 3 symbols") {
  const std::vector<TokenSeq> seqs = all_sequences_up_to(5);
  REQUIRE(seqs.size() == 364);  // 1 + 3 + 9 + 27 + 81 + 243
  for (const auto& s1 : seqs) {
    for (const auto& s2 : seqs) {
      const double got = similarity_ratio(s1, s2);
      const double want = oracle_similarity(s1, s2);
      if (got != want) {
        CAPTURE(s1, s2);
        REQUIRE(got == want);
      }
      REQUIRE(got >= 0.0);
      REQUIRE(got <= 1.0);
    }
  }
}

TEST_CASE("block structure invariants") {
  const std::vector<TokenSeq> seqs = all_sequences_up_to(4);
  for (const auto& s1 : seqs) {
    for (const auto& s2 : seqs) {
      const auto blocks = matching_blocks(s1, s2);
      std::size_t total = 0;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& b = blocks[k];
        REQUIRE(b.n >= 1);
        for (std::size_t t = 0; t < b.n; ++t) REQUIRE(s1[b.i + t] == s2[b.j + t]);
        if (k > 0) {
          REQUIRE(blocks[k - 1].i + blocks[k - 1].n <= b.i);
          REQUIRE(blocks[k - 1].j + blocks[k - 1].n <= b.j);
        }
        total += b.n;
      }
      REQUIRE(total <= std::min(s1.size(), s2.size()));
      if (!s1.empty() && similarity_ratio(s1, s2) == 1.0) REQUIRE(s1 == s2);
    }
  }
}
