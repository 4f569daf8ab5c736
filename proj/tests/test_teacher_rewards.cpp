#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>
#include <ttsr/teacher_rewards.hpp>

using namespace ttsr;

namespace {

std::string data_path(const std::string& name) {
  return std::string(TTSR_TEST_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("difficulty reward exact values") {
  CHECK(difficulty_reward(0.5) == 1.0);
  CHECK(difficulty_reward(0.0) == 0.0);
  CHECK(difficulty_reward(1.0) == 0.0);
  // H(0.25)/log 2 = (0.25*2 + 0.75*log2(4/3))
  const double want = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)) / std::log(2.0);
  CHECK(std::abs(difficulty_reward(0.25) - want) < 1e-15);
  CHECK_THROWS_AS(difficulty_reward(-0.1), DomainError);
  CHECK_THROWS_AS(difficulty_reward(1.1), DomainError);
}

TEST_CASE("difficulty reward symmetry and unimodality on a 101-point grid") {
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double s = k / 100.0;
    const double v = difficulty_reward(s);
    CHECK(std::abs(v - difficulty_reward(1.0 - s)) < 1e-12);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (k >= 1 && k <= 50) CHECK(v > prev);  // strictly increasing up to 0.5
    prev = v;
  }
}

TEST_CASE("similarity penalty") {
  // candidate vs one other with ratio 0.85, tau 0.75 -> 0.10
  const TokenSeq cand = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  TokenSeq other = cand;
  other[9] = "z";  // blocks: (0,0,9) -> sim = 18/20 = 0.9
  other[8] = "y";  // now 16/20 = 0.8
  other[7] = "x";  // now 14/20 = 0.7 — under tau
  CHECK(similarity_ratio(cand, other) == 0.7);
  CHECK(similarity_penalty(cand, {other}, 0.75) == 0.0);

  TokenSeq close_one = cand;
  close_one[9] = "z";
  CHECK(std::abs(similarity_penalty(cand, {close_one}, 0.75) - 0.15) < 1e-12);

  // mean over a mixed batch: (0.15 + 0.0 + 0.25) / 3
  CHECK(std::abs(similarity_penalty(cand, {close_one, other, cand}, 0.75) -
                 (0.15 + 0.0 + 0.25) / 3.0) < 1e-12);
  CHECK_THROWS_AS(similarity_penalty(cand, {}, 0.75), DomainError);
}

TEST_CASE("teacher reward composition and clamp") {
  CHECK(teacher_reward(1.0, 0.0, 1.0) == 1.0);
  CHECK(std::abs(teacher_reward(0.8, 0.1, 1.0) - 0.7) < 1e-15);
  CHECK(teacher_reward(0.2, 0.5, 1.0) == 0.0);   // clamped at zero
  CHECK(teacher_reward(0.2, 0.5, 0.0) == 0.2);   // lambda 0 disables the penalty
  CHECK(std::abs(teacher_reward(0.9, 0.2, 2.0) - 0.5) < 1e-15);
  CHECK_THROWS_AS(teacher_reward(1.2, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(teacher_reward(0.5, -0.1, 1.0), DomainError);
  CHECK_THROWS_AS(teacher_reward(0.5, 0.0, -1.0), DomainError);
}

TEST_CASE("format gate fixture table") {
  std::ifstream in(data_path("format_gate_cases.jsonl"));
  REQUIRE(in.good());
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    CAPTURE(j.at("name").get<std::string>());
    const GateResult got = format_gate(j.at("raw").get<std::string>());
    if (j.at("accept").get<bool>()) {
      REQUIRE(got.accepted());
      CHECK(*got.question == j.at("question").get<std::string>());
      CHECK_FALSE(got.rejection.has_value());
    } else {
      REQUIRE_FALSE(got.accepted());
      REQUIRE(got.rejection.has_value());
      CHECK(to_string(*got.rejection) == j.at("reject").get<std::string>());
    }
    ++cases;
  }
  CHECK(cases == 12);
}
