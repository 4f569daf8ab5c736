#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsr/errors.hpp"

namespace ttsr {

enum class Mode { ttsr, ttrl, frozen, no_teacher_update, no_sim_penalty };
enum class Backend { toy, remote };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::ttsr: return "ttsr";
    case Mode::ttrl: return "ttrl";
    case Mode::frozen: return "frozen";
    case Mode::no_teacher_update: return "no_teacher_update";
    case Mode::no_sim_penalty: return "no_sim_penalty";
  }
  return "ttsr";
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "ttsr") return Mode::ttsr;
  if (s == "ttrl") return Mode::ttrl;
  if (s == "frozen") return Mode::frozen;
  if (s == "no_teacher_update") return Mode::no_teacher_update;
  if (s == "no_sim_penalty") return Mode::no_sim_penalty;
  throw ConfigError("unknown mode: " + s);
}

inline std::string to_string(Backend b) { return b == Backend::toy ? "toy" : "remote"; }

inline Backend backend_from_string(const std::string& s) {
  if (s == "toy") return Backend::toy;
  if (s == "remote") return Backend::remote;
  throw ConfigError("unknown backend: " + s);
}

struct EndpointConfig {
  std::string url;
  std::string model;
  double temperature = 1.0;
  int concurrency = 4;
  double timeout_s = 30.0;
  // Retry pacing; tests shrink this so backoff paths stay fast.
  double backoff_base_ms = 100.0;
};

// Knobs of the built-in synthetic task family and its learnable policy.
struct ToySettings {
  int modulus = 97;
  int feature_dim = 256;
  int min_difficulty = 1;
  int max_difficulty = 3;
  int operand_pool = 3;      // operands per run family
  int test_size = 24;        // |X_test|
  int holdout_size = 48;     // evaluation set size
  int pretrain_samples = 8000;
  int pretrain_epochs = 2;
  double pretrain_lr = 0.25;
  double pretrain_label_noise = 0.05;
  // Rate of a systematic distractor label: first digit off by one, second
  // digit diffuse. Majority voting resolves it (the correct joint answer
  // stays the sampling mode) while greedy digit-wise decoding does not;
  // this is the gap test-time consensus training closes.
  double pretrain_distractor_rate = 0.50;
  int score_buckets = 5;     // teacher conditioning buckets over s
};

struct RunConfig {
  int group_size = 8;             // G
  int variants_per_iteration = 4; // M
  int failed_sample_cap = 0;      // M_fail; 0 means "default to M"
  int iterations = 20;            // T
  int batch_size = 16;
  double epsilon = 0.2;
  double kl_coef = 0.001;         // beta
  double advantage_delta = 1e-4;  // delta
  double similarity_lambda = 1.0; // lambda
  double similarity_tau = 0.75;   // tau
  double learning_rate = 1.0;
  // Separate step size for the teacher logit table; its action space is tiny,
  // so it tolerates (and needs) a larger step than the student.
  double teacher_learning_rate = 4.0;
  int max_len = 4096;
  Mode mode = Mode::ttsr;
  Backend backend = Backend::toy;
  std::uint64_t seed = 0;
  double temperature = 0.7;
  EndpointConfig endpoint;
  ToySettings toy;
  // Remote backend only: jsonl file of {"id": ..., "body": ...} test questions.
  std::string questions_file;
};

// Checks every RunConfig invariant and fills defaults for optional fields.
// Reports all violations at once. Idempotent.
inline RunConfig validate_config(RunConfig cfg) {
  std::vector<std::string> problems;
  if (cfg.group_size < 2) problems.push_back("G >= 2 required");
  if (cfg.variants_per_iteration < 0) problems.push_back("M >= 0 required");
  if (cfg.iterations < 0) problems.push_back("T >= 0 required");
  if (cfg.batch_size < 1) problems.push_back("batch_size >= 1 required");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) problems.push_back("epsilon in (0,1) required");
  if (!(cfg.similarity_tau >= 0.0 && cfg.similarity_tau < 1.0)) problems.push_back("tau in [0,1) required");
  if (!(cfg.advantage_delta > 0.0)) problems.push_back("delta > 0 required");
  if (cfg.similarity_lambda < 0.0) problems.push_back("lambda >= 0 required");
  if (cfg.kl_coef < 0.0) problems.push_back("beta >= 0 required");
  if (cfg.learning_rate < 0.0) problems.push_back("learning_rate >= 0 required");
  if (cfg.teacher_learning_rate < 0.0) problems.push_back("teacher_learning_rate >= 0 required");
  if (cfg.max_len < 1) problems.push_back("max_len >= 1 required");
  if (cfg.temperature < 0.0) problems.push_back("temperature >= 0 required");
  if (cfg.failed_sample_cap < 0) problems.push_back("M_fail >= 0 required");
  if (cfg.toy.modulus < 2) problems.push_back("toy.modulus >= 2 required");
  if (cfg.toy.modulus > 100) problems.push_back("toy.modulus <= 100 required (two-digit answers)");
  if (cfg.toy.min_difficulty < 1) problems.push_back("toy.min_difficulty >= 1 required");
  if (cfg.toy.max_difficulty < cfg.toy.min_difficulty)
    problems.push_back("toy.max_difficulty >= toy.min_difficulty required");
  if (cfg.toy.feature_dim < 1) problems.push_back("toy.feature_dim >= 1 required");
  if (cfg.toy.operand_pool < 1) problems.push_back("toy.operand_pool >= 1 required");
  if (cfg.toy.pretrain_label_noise < 0.0 || cfg.toy.pretrain_distractor_rate < 0.0 ||
      cfg.toy.pretrain_label_noise + cfg.toy.pretrain_distractor_rate > 1.0)
    problems.push_back("toy.pretrain_label_noise + toy.pretrain_distractor_rate in [0,1] required");
  if (cfg.backend == Backend::remote && cfg.endpoint.url.empty())
    problems.push_back("endpoint.url required for remote backend");
  if (cfg.backend == Backend::remote && cfg.questions_file.empty())
    problems.push_back("questions_file required for remote backend");
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  if (cfg.failed_sample_cap == 0) cfg.failed_sample_cap = cfg.variants_per_iteration;
  return cfg;
}

// --- config file serialization (field names as documented in the README) ---

inline void to_json(nlohmann::json& j, const EndpointConfig& e) {
  j = nlohmann::json{{"url", e.url},
                     {"model", e.model},
                     {"temperature", e.temperature},
                     {"concurrency", e.concurrency},
                     {"timeout_s", e.timeout_s},
                     {"backoff_base_ms", e.backoff_base_ms}};
}

inline void from_json(const nlohmann::json& j, EndpointConfig& e) {
  e.url = j.value("url", e.url);
  e.model = j.value("model", e.model);
  e.temperature = j.value("temperature", e.temperature);
  e.concurrency = j.value("concurrency", e.concurrency);
  e.timeout_s = j.value("timeout_s", e.timeout_s);
  e.backoff_base_ms = j.value("backoff_base_ms", e.backoff_base_ms);
}

inline void to_json(nlohmann::json& j, const ToySettings& t) {
  j = nlohmann::json{{"modulus", t.modulus},
                     {"feature_dim", t.feature_dim},
                     {"min_difficulty", t.min_difficulty},
                     {"max_difficulty", t.max_difficulty},
                     {"operand_pool", t.operand_pool},
                     {"test_size", t.test_size},
                     {"holdout_size", t.holdout_size},
                     {"pretrain_samples", t.pretrain_samples},
                     {"pretrain_epochs", t.pretrain_epochs},
                     {"pretrain_lr", t.pretrain_lr},
                     {"pretrain_label_noise", t.pretrain_label_noise},
                     {"pretrain_distractor_rate", t.pretrain_distractor_rate},
                     {"score_buckets", t.score_buckets}};
}

inline void from_json(const nlohmann::json& j, ToySettings& t) {
  t.modulus = j.value("modulus", t.modulus);
  t.feature_dim = j.value("feature_dim", t.feature_dim);
  t.min_difficulty = j.value("min_difficulty", t.min_difficulty);
  t.max_difficulty = j.value("max_difficulty", t.max_difficulty);
  t.operand_pool = j.value("operand_pool", t.operand_pool);
  t.test_size = j.value("test_size", t.test_size);
  t.holdout_size = j.value("holdout_size", t.holdout_size);
  t.pretrain_samples = j.value("pretrain_samples", t.pretrain_samples);
  t.pretrain_epochs = j.value("pretrain_epochs", t.pretrain_epochs);
  t.pretrain_lr = j.value("pretrain_lr", t.pretrain_lr);
  t.pretrain_label_noise = j.value("pretrain_label_noise", t.pretrain_label_noise);
  t.pretrain_distractor_rate = j.value("pretrain_distractor_rate", t.pretrain_distractor_rate);
  t.score_buckets = j.value("score_buckets", t.score_buckets);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"G", c.group_size},
                     {"M", c.variants_per_iteration},
                     {"M_fail", c.failed_sample_cap},
                     {"T", c.iterations},
                     {"batch_size", c.batch_size},
                     {"epsilon", c.epsilon},
                     {"beta", c.kl_coef},
                     {"delta", c.advantage_delta},
                     {"lambda", c.similarity_lambda},
                     {"tau", c.similarity_tau},
                     {"learning_rate", c.learning_rate},
                     {"teacher_learning_rate", c.teacher_learning_rate},
                     {"max_len", c.max_len},
                     {"mode", to_string(c.mode)},
                     {"backend", to_string(c.backend)},
                     {"seed", c.seed},
                     {"temperature", c.temperature},
                     {"endpoint", c.endpoint},
                     {"toy", c.toy},
                     {"questions_file", c.questions_file}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c.group_size = j.value("G", c.group_size);
  c.variants_per_iteration = j.value("M", c.variants_per_iteration);
  c.failed_sample_cap = j.value("M_fail", c.failed_sample_cap);
  c.iterations = j.value("T", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.kl_coef = j.value("beta", c.kl_coef);
  c.advantage_delta = j.value("delta", c.advantage_delta);
  c.similarity_lambda = j.value("lambda", c.similarity_lambda);
  c.similarity_tau = j.value("tau", c.similarity_tau);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.teacher_learning_rate = j.value("teacher_learning_rate", c.teacher_learning_rate);
  c.max_len = j.value("max_len", c.max_len);
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("backend")) c.backend = backend_from_string(j.at("backend").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.temperature = j.value("temperature", c.temperature);
  if (j.contains("endpoint")) j.at("endpoint").get_to(c.endpoint);
  if (j.contains("toy")) j.at("toy").get_to(c.toy);
  c.questions_file = j.value("questions_file", c.questions_file);
}

// FNV-1a over the canonical serialized form; identifies a validated config.
inline std::string config_hash(const RunConfig& cfg) {
  const std::string s = nlohmann::json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace ttsr
