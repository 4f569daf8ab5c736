#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include <ttsr/teacher_rewards.hpp>
#include <ttsr/toy_policy.hpp>

using namespace ttsr;

namespace {

ToyPolicy small_policy(std::uint64_t seed, int feature_dim = 32) {
  ToySettings ts;
  ts.operand_pool = 4;
  Rng rng = Rng::substream(seed, 1);
  return ToyPolicy(make_family(ts, rng), feature_dim, ts.score_buckets);
}

}  // namespace

TEST_CASE("fold_chain hand examples") {
  // ((0 + 5) * 2) mod 11 = 10
  CHECK(fold_chain({11, 2, {{'+', 5}, {'*', 2}}}) == 10);
  // ((0 - 5) mod 7) = 2, then * 4 = 8 mod 7 = 1
  CHECK(fold_chain({7, 2, {{'-', 5}, {'*', 4}}}) == 1);
  CHECK(fold_chain({97, 1, {{'+', 100}}}) == 3);
  CHECK(fold_chain({5, 0, {}}) == 0);
  CHECK_THROWS_AS(fold_chain({1, 0, {}}), DomainError);
  CHECK_THROWS_AS(fold_chain({7, 1, {{'/', 2}}}), DomainError);
}

TEST_CASE("toy body rendering is deterministic and readable") {
  const ToyPayload p{11, 2, {{'+', 5}, {'*', 2}}};
  CHECK(render_toy_body(p) ==
        "Start from 0 and work modulo 11. Step 1: add 5. Step 2: multiply by 2. "
        "What is the final value?");
  CHECK(render_toy_body(p) == render_toy_body(p));
}

TEST_CASE("family operands are distinct and nondegenerate") {
  ToySettings ts;
  ts.operand_pool = 5;
  Rng rng(3);
  const ToyFamily fam = make_family(ts, rng);
  REQUIRE(fam.operand_pool.size() == 5);
  std::set<int> uniq(fam.operand_pool.begin(), fam.operand_pool.end());
  CHECK(uniq.size() == 5);
  for (int v : fam.operand_pool) {
    CHECK(v >= 2);
    CHECK(v < ts.modulus);
  }
}

TEST_CASE("ground truth stays behind the eval accessor") {
  Rng rng(2);
  const Question q = gen_toy_question(2, 97, rng, "q");
  CHECK(q.has_ground_truth());
  const QuestionView view = q.reward_view();
  // the reward-facing view carries no answer field at all
  CHECK(view.id == "q");
  CHECK(view.body == q.body());
  CHECK(q.ground_truth_for_eval() == std::to_string(fold_chain(*q.toy_payload())));

  const Question plain = Question::make_test("p", "no payload");
  CHECK_FALSE(plain.has_ground_truth());
  CHECK_THROWS_AS(plain.ground_truth_for_eval(), DomainError);
}

TEST_CASE("digit distributions are simplex points") {
  ToyPolicy pol = small_policy(4);
  Rng rng(4);
  for (auto& w : pol.student_params()) w = rng.next_real() - 0.5;
  const ToyPayload q = *gen_toy_question(3, 97, rng, "x").toy_payload();
  for (int d = 0; d < kDigits; ++d) {
    for (int prev : {-1, 0, 7}) {
      for (double temp : {0.3, 1.0, 2.5}) {
        const auto dist = pol.digit_distribution(pol.student_params(), q, d, prev, temp);
        REQUIRE(dist.size() == kVocab);
        double sum = 0.0;
        for (double v : dist) {
          CHECK(v > 0.0);
          sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
      }
    }
  }
  const auto adist = pol.action_distribution(pol.teacher_params(), 0.4);
  double asum = 0.0;
  for (double v : adist) asum += v;
  CHECK(std::abs(asum - 1.0) < 1e-12);
}

TEST_CASE("sampling is deterministic under a fixed stream and greedy at temp 0") {
  ToyPolicy pol = small_policy(5);
  Rng rng(9);
  for (auto& w : pol.student_params()) w = rng.next_real() - 0.5;
  const Question q = gen_toy_question(2, 97, rng, "q");

  Rng a(123), b(123);
  const TrajectoryGroup ga = pol.sample_group(pol.student_params(), q.reward_view(), 6, 0.7, a);
  const TrajectoryGroup gb = pol.sample_group(pol.student_params(), q.reward_view(), 6, 0.7, b);
  CHECK(ga == gb);

  Rng c(1);
  const TrajectoryGroup greedy =
      pol.sample_group(pol.student_params(), q.reward_view(), 3, 0.0, c);
  CHECK(greedy.trajectories[0] == greedy.trajectories[1]);
  CHECK(greedy.trajectories[0] == greedy.trajectories[2]);
  CHECK(greedy.trajectories[0].answer_canonical ==
        pol.greedy_answer(pol.student_params(), *q.toy_payload()));
  // greedy token is the argmax of the temperature-agnostic distribution
  const auto d0 = pol.digit_distribution(pol.student_params(), *q.toy_payload(), 0, -1, 1.0);
  int arg = 0;
  for (int v = 1; v < kVocab; ++v)
    if (d0[v] > d0[arg]) arg = v;
  CHECK(greedy.trajectories[0].token_ids[0] == arg);
}

TEST_CASE("recorded behavior logprobs match re-scoring") {
  ToyPolicy pol = small_policy(6);
  Rng rng(6);
  for (auto& w : pol.student_params()) w = rng.next_real() - 0.5;
  const Question q = gen_toy_question(3, 97, rng, "q");
  const double temp = 0.7;
  const TrajectoryGroup g = pol.sample_group(pol.student_params(), q.reward_view(), 8, temp, rng);
  for (const auto& t : g.trajectories) {
    validate_trajectory_for_update(t);
    const auto evals = pol.eval_tokens(pol.student_params(), pol.student_params(),
                                       *q.toy_payload(), t.token_ids, temp);
    REQUIRE(evals.size() == t.token_ids.size());
    for (std::size_t k = 0; k < evals.size(); ++k) {
      CHECK(std::abs(evals[k].old_logprob - t.old_logprobs[k]) < 1e-12);
      CHECK(evals[k].new_logprob == evals[k].old_logprob);
      CHECK(evals[k].new_dist == evals[k].old_dist);
    }
  }
}

TEST_CASE("student gradient is linear in the coefficients") {
  ToyPolicy pol = small_policy(7, 16);
  Rng rng(7);
  for (auto& w : pol.student_params()) w = rng.next_real() - 0.5;
  const ToyPayload q = *gen_toy_question(2, 97, rng, "q").toy_payload();
  const std::vector<int> toks = {4, 9};
  std::vector<std::vector<double>> coeffs(2, std::vector<double>(kVocab, 0.0));
  coeffs[0][4] = 0.3;
  coeffs[1][9] = -0.8;
  coeffs[1][2] = 0.1;
  std::vector<double> g1(pol.student_params().size(), 0.0);
  pol.student_logprob_grad(pol.student_params(), q, toks, 0.7, coeffs, g1);
  for (auto& row : coeffs)
    for (auto& c : row) c *= 2.0;
  std::vector<double> g2(pol.student_params().size(), 0.0);
  pol.student_logprob_grad(pol.student_params(), q, toks, 0.7, coeffs, g2);
  double worst = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) worst = std::max(worst, std::abs(g2[i] - 2 * g1[i]));
  CHECK(worst < 1e-12);

  // zero coefficients accumulate nothing
  std::vector<std::vector<double>> zeros(2, std::vector<double>(kVocab, 0.0));
  std::vector<double> gz(pol.student_params().size(), 0.0);
  pol.student_logprob_grad(pol.student_params(), q, toks, 0.7, zeros, gz);
  for (double v : gz) CHECK(v == 0.0);
}

TEST_CASE("teacher gradient rows are zero-sum within a bucket") {
  ToyPolicy pol = small_policy(8);
  Rng rng(8);
  for (auto& w : pol.teacher_params()) w = rng.next_real() - 0.5;
  std::vector<double> coeffs(kTeacherActions, 0.0);
  coeffs[3] = 0.6;
  std::vector<double> grad(pol.teacher_params().size(), 0.0);
  pol.teacher_logprob_grad(pol.teacher_params(), 0.42, coeffs, grad);
  const int b = pol.score_bucket(0.42);
  double row = 0.0;
  for (int a = 0; a < kTeacherActions; ++a) {
    row += grad[static_cast<std::size_t>(b) * kTeacherActions + a];
  }
  CHECK(std::abs(row) < 1e-15);
  // only the matching bucket is touched
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (static_cast<int>(i / kTeacherActions) != b) CHECK(grad[i] == 0.0);
  }
}

TEST_CASE("score buckets partition [0,1]") {
  ToyPolicy pol = small_policy(9);
  CHECK(pol.score_bucket(0.0) == 0);
  CHECK(pol.score_bucket(1.0) == pol.score_buckets() - 1);
  CHECK(pol.score_bucket(0.5) == pol.score_buckets() / 2);
  int prev = 0;
  for (int k = 0; k <= 100; ++k) {
    const int b = pol.score_bucket(k / 100.0);
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("synthesized variants respect clamps, pools, and the envelope") {
  ToyPolicy pol = small_policy(10);
  Rng rng(10);
  FailedInstance f;
  ToyPayload src{97, 1, {{'+', pol.family().operand_pool[0]}}};
  f.question = Question::make_toy_test("s1", src).reward_view();
  f.trajectory.question_id = "s1";
  f.trajectory.text = "wrong";
  f.score_s = 0.25;

  const auto cands = pol.synthesize_variants(pol.teacher_params(), {f}, 12, rng);
  REQUIRE(cands.size() == 12);
  std::set<int> pool(pol.family().operand_pool.begin(), pol.family().operand_pool.end());
  bool saw_shrunk_request = false;
  for (const auto& c : cands) {
    CHECK(c.source_id == "s1");
    CHECK(c.payload.difficulty >= 1);  // delta-k clamped at k = 1
    CHECK(c.payload.difficulty == static_cast<int>(c.payload.op_chain.size()));
    CHECK(c.payload.difficulty == std::max(1, src.difficulty + teacher_action_delta(c.action)));
    if (teacher_action_delta(c.action) < 0) saw_shrunk_request = true;
    for (const auto& s : c.payload.op_chain) CHECK(pool.count(s.operand) == 1);
    CHECK(c.payload.op_chain[0].op == '+');  // operator prefix preserved
    const GateResult gate = format_gate(c.tagged_text);
    REQUIRE(gate.accepted());
    CHECK(*gate.question == render_toy_body(c.payload));
    CHECK(std::abs(c.action_logprob - std::log(c.action_dist[c.action])) < 1e-12);
  }
  CHECK(saw_shrunk_request);  // the uniform teacher proposes negative deltas too
  CHECK_THROWS_AS(pol.synthesize_variants(pol.teacher_params(), {}, 2, rng), DomainError);
}

TEST_CASE("pretraining beats the uniform initialization on the family") {
  ToySettings ts;
  ts.operand_pool = 3;
  ts.feature_dim = 256;
  Rng fam_rng = Rng::substream(77, 1);
  ToyPolicy pol(make_family(ts, fam_rng), ts.feature_dim, ts.score_buckets);
  Rng qrng(31);
  std::vector<Question> probe;
  while (probe.size() < 60) {
    const int k = ts.min_difficulty +
                  static_cast<int>(qrng.next_index(
                      static_cast<std::size_t>(ts.max_difficulty - ts.min_difficulty + 1)));
    ToyPayload p = sample_family_payload(pol.family(), k, qrng);
    // a zero-initialized policy answers "0" greedily, and chains that open
    // with a multiply genuinely fold to 0; keep nonzero answers so the
    // baseline cannot win by accident
    if (fold_chain(p) == 0) continue;
    probe.push_back(Question::make_toy_test("p" + std::to_string(probe.size()), std::move(p)));
  }
  auto accuracy = [&] {
    int hits = 0;
    for (const auto& q : probe)
      if (pol.greedy_answer(pol.student_params(), *q.toy_payload()) ==
          q.ground_truth_for_eval())
        ++hits;
    return static_cast<double>(hits) / static_cast<double>(probe.size());
  };
  const double before = accuracy();
  Rng prng = Rng::substream(77, 2);
  pol.pretrain(ts, prng);
  const double after = accuracy();
  CHECK(after > before);
  CHECK(after >= 0.15);  // far above the 1/97 uniform-guess floor
}
