#include <catch_amalgamated.hpp>

#include <ttsr/consensus.hpp>
#include <ttsr/rng.hpp>

using namespace ttsr;

TEST_CASE("toy canonicalization") {
  CHECK(canonicalize_answer_toy(" 042 ") == "42");
  CHECK(canonicalize_answer_toy("") == kEmptyAnswer);
  CHECK(canonicalize_answer_toy("  ") == kEmptyAnswer);
  CHECK(canonicalize_answer_toy("+7") == "7");
  CHECK(canonicalize_answer_toy("-0") == "0");
  CHECK(canonicalize_answer_toy("000") == "0");
  CHECK(canonicalize_answer_toy("-012") == "-12");
  CHECK(canonicalize_answer_toy("12a") == kEmptyAnswer);
  CHECK(canonicalize_answer_toy("-") == kEmptyAnswer);
}

TEST_CASE("remote canonicalization") {
  CHECK(canonicalize_answer_remote("The answer is \\boxed{7}.") == "7");
  CHECK(canonicalize_answer_remote("steps...\nmore\n  Final Answer: 12  \n\n") ==
        "final answer: 12");
  CHECK(canonicalize_answer_remote("\\boxed{\\frac{1}{2}}") == "\\frac{1}{2}");
  CHECK(canonicalize_answer_remote("a \\boxed{1} b \\boxed{2} c") == "2");
  CHECK(canonicalize_answer_remote("") == kEmptyAnswer);
  CHECK(canonicalize_answer_remote("  A   B\tC ") == "a b c");
  CHECK(canonicalize_answer(" 042 ", Backend::toy) == "42");
  CHECK(canonicalize_answer("X\nY", Backend::remote) == "y");
}

TEST_CASE("majority vote hand tallies") {
  ConsensusResult r = majority_vote({"7", "7", "3", "7", "5"});
  CHECK(r.pseudo_target == "7");
  CHECK(r.score_s == 0.6);
  CHECK_FALSE(r.tie_flag);

  ConsensusResult tie = majority_vote({"a", "a", "b", "b"});
  CHECK(tie.pseudo_target == "a");
  CHECK(tie.tie_flag);

  ConsensusResult single = majority_vote({"x"});
  CHECK(single.pseudo_target == "x");
  CHECK(single.score_s == 1.0);

  CHECK_THROWS_AS(majority_vote({}), DomainError);
}

TEST_CASE("empty sentinel never wins unless unanimous-empty") {
  ConsensusResult r = majority_vote({kEmptyAnswer, kEmptyAnswer, kEmptyAnswer, "9"});
  CHECK(r.pseudo_target == "9");
  CHECK(r.score_s == 0.25);

  ConsensusResult all_empty = majority_vote({kEmptyAnswer, kEmptyAnswer});
  CHECK(all_empty.pseudo_target == kEmptyAnswer);
  CHECK(all_empty.score_s == 1.0);
}

TEST_CASE("pseudo reward") {
  CHECK(pseudo_reward("7", "7") == 1.0);
  CHECK(pseudo_reward("7", "8") == 0.0);
  CHECK(pseudo_reward(kEmptyAnswer, "7") == 0.0);
  CHECK(pseudo_reward(kEmptyAnswer, kEmptyAnswer) == 1.0);
}

TEST_CASE("pseudo correctness score matches vote score") {
  Rng rng(7);
  const std::vector<std::string> alphabet = {"1", "2", "3", kEmptyAnswer};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 1 + rng.next_index(9);
    std::vector<std::string> answers;
    for (std::size_t i = 0; i < g; ++i) answers.push_back(alphabet[rng.next_index(4)]);
    ConsensusResult vote = majority_vote(answers);
    std::vector<double> rewards;
    for (const auto& a : answers) rewards.push_back(pseudo_reward(a, vote.pseudo_target));
    CHECK(pseudo_correctness_score(rewards) == vote.score_s);
    // the mode occurs at least once
    CHECK(vote.score_s >= 1.0 / static_cast<double>(g));
  }
  CHECK(pseudo_correctness_score({1, 1, 0, 1, 0}) == 0.6);
  CHECK(pseudo_correctness_score({1, 1}) == 1.0);
  CHECK(pseudo_correctness_score({0, 0}) == 0.0);
  CHECK_THROWS_AS(pseudo_correctness_score({}), DomainError);
}
