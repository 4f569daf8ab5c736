#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ttsr/config.hpp"
#include "ttsr/consensus.hpp"
#include "ttsr/errors.hpp"
#include "ttsr/question.hpp"
#include "ttsr/trajectory.hpp"

namespace ttsr {

// Chat-completions adapter for real LLM endpoints. Sampling and scoring only:
// remote mode never updates weights, so trajectories are text-only and carry
// no logprobs.
class RemoteClient {
 public:
  explicit RemoteClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw RemoteError("remote endpoint url is empty");
  }

  int last_retry_count() const { return last_retries_; }

  // POST {url}/v1/chat/completions with n choices; returns choice contents in
  // response order.
  std::vector<std::string> chat(const std::string& user_content, int n, int max_tokens) {
    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", user_content}}})},
        {"n", n},
        {"temperature", cfg_.temperature},
        {"max_tokens", max_tokens}};
    const nlohmann::json resp = post_with_retries("/v1/chat/completions", body);
    if (!resp.contains("choices") || !resp.at("choices").is_array() || resp.at("choices").empty())
      throw RemoteError("malformed response body: no choices");
    std::vector<std::string> out;
    for (const auto& c : resp.at("choices")) {
      if (!c.contains("message") || !c.at("message").contains("content"))
        throw RemoteError("malformed response body: choice without message content");
      out.push_back(c.at("message").at("content").get<std::string>());
    }
    return out;
  }

  // Student role: one rollout group for a question.
  TrajectoryGroup sample_group(const QuestionView& q, int G, int max_tokens) {
    if (G < 1) throw RemoteError("sample_group: G must be >= 1");
    TrajectoryGroup group;
    group.question_id = q.id;
    std::vector<std::string> texts;
    try {
      texts = chat(q.body, G, max_tokens);
    } catch (const RemoteError& e) {
      throw RemoteError("question " + q.id + ": " + e.what());
    }
    for (const auto& t : texts) {
      Trajectory traj;
      traj.question_id = q.id;
      traj.text = t;
      traj.answer_raw = t;
      traj.answer_canonical = canonicalize_answer_remote(t);
      group.trajectories.push_back(std::move(traj));
    }
    return group;
  }

  // Teacher role: single completion returned verbatim for parsing/gating.
  std::string teacher_call(const std::string& prompt, int max_tokens) {
    auto texts = chat(prompt, 1, max_tokens);
    if (texts.front().empty()) throw RemoteError("empty completion body");
    return texts.front();
  }

 private:
  nlohmann::json post_with_retries(const std::string& path, const nlohmann::json& body) {
    static constexpr int kMaxRetries = 3;
    last_retries_ = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
      if (attempt > 0) {
        last_retries_ = attempt;
        const double delay_ms = cfg_.backoff_base_ms * static_cast<double>(1 << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
      }
      httplib::Client client(cfg_.url);
      client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
      client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
      httplib::Headers headers;
      if (const char* key = std::getenv("TTSR_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);
      auto res = client.Post(path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;  // retry
      }
      if (res->status >= 500) {
        last_error = "server error: status " + std::to_string(res->status);
        continue;  // retry
      }
      if (res->status < 200 || res->status >= 300)
        throw RemoteError("non-2xx status " + std::to_string(res->status));
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded()) throw RemoteError("malformed response body: invalid JSON");
      return j;
    }
    throw RemoteError(last_error + " (after " + std::to_string(kMaxRetries) + " retries)");
  }

  EndpointConfig cfg_;
  int last_retries_ = 0;
};

}  // namespace ttsr
