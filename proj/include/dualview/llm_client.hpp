#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include "dualview/common.hpp"

namespace dualview {

class TransportError : public Error {
 public:
  using Error::Error;
};

struct LlmClientConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_name = "Qwen3-Next-80B-A3B-Instruct";
  // Empty means the endpoint needs no Authorization header.
  std::string api_key_env = "DUALVIEW_API_KEY";
  double temperature = 0.7;
  int max_tokens = 2048;
  double request_timeout = 120.0;  // seconds
  int max_retries = 3;
  int max_in_flight = 4;
  double backoff_initial = 1.0;  // seconds, doubled per retry
  std::filesystem::path cache_dir;  // empty disables caching

  void validate() const;
};

// Cache file name for a request: hash of model, decoding parameters and the
// content hash of the prompt.
std::string completion_cache_key(const std::string& prompt, const LlmClientConfig& config);

// OpenAI-compatible chat-completions client with an on-disk response cache.
// Safe to call from several threads; at most max_in_flight requests are
// outstanding at once.
class LlmClient {
 public:
  explicit LlmClient(LlmClientConfig config);

  const LlmClientConfig& config() const { return config_; }

  // Assistant message content for a single-user-message conversation.
  std::string complete(const std::string& prompt);

  std::size_t network_calls() const { return network_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  std::optional<std::string> read_cache(const std::string& key) const;
  void write_cache(const std::string& key, const std::string& content) const;
  std::string post(const std::string& prompt);

  LlmClientConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

std::string request_completion(const std::string& prompt, const LlmClientConfig& config);

struct MockReply {
  int status = 200;
  std::string content;  // assistant text on 200, raw body otherwise
};

// In-process chat-completions server on 127.0.0.1 for offline runs and tests.
class MockLlmServer {
 public:
  using Handler = std::function<MockReply(const std::string& prompt)>;

  explicit MockLlmServer(Handler handler);
  ~MockLlmServer();
  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  // Scripted responses from `<dir>/responses.jsonl`: lines of
  // {"query", "response", optional "target"} matched against the prompt's query
  // line and, when "target" is given, its specific instruction negative.
  static std::unique_ptr<MockLlmServer> from_fixture_dir(const std::filesystem::path& dir);

  std::string base_url() const;
  std::size_t hits() const { return hits_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> hits_{0};
};

}  // namespace dualview
