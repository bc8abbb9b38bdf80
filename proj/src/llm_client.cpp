#include "dualview/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "dualview/corpus.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dualview {

using nlohmann::json;

void LlmClientConfig::validate() const {
  if (max_in_flight < 1 || max_in_flight > 1024) throw std::invalid_argument("max_in_flight must be in [1, 1024]");
  if (!std::isfinite(temperature) || temperature < 0) throw std::invalid_argument("temperature must be finite and >= 0");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (!(request_timeout > 0)) throw std::invalid_argument("request_timeout must be positive");
}

std::string completion_cache_key(const std::string& prompt, const LlmClientConfig& config) {
  std::ostringstream temp;
  temp.precision(17);
  temp << config.temperature;
  Fnv1a64 h;
  h.field(config.model_name).field(temp.str()).field(std::to_string(config.max_tokens));
  h.field(to_hex16(fnv1a64(prompt)));
  return to_hex16(h.digest());
}

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("base_url lacks a scheme: '" + url + "'");
  std::size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

LlmClient::LlmClient(LlmClientConfig config) : config_(std::move(config)), in_flight_(config_.max_in_flight) {
  config_.validate();
  std::tie(scheme_host_port_, path_prefix_) = split_base_url(config_.base_url);
  if (!config_.cache_dir.empty()) std::filesystem::create_directories(config_.cache_dir);
}

std::optional<std::string> LlmClient::read_cache(const std::string& key) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  std::ifstream in(config_.cache_dir / key, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void LlmClient::write_cache(const std::string& key, const std::string& content) const {
  if (config_.cache_dir.empty()) return;
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  auto tmp = config_.cache_dir / tmp_name.str();
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, config_.cache_dir / key);
}

std::string LlmClient::post(const std::string& prompt) {
  std::string api_key;
  if (!config_.api_key_env.empty()) {
    const char* value = std::getenv(config_.api_key_env.c_str());
    if (value == nullptr || *value == '\0')
      throw TransportError("missing API key: environment variable " + config_.api_key_env + " is not set");
    api_key = value;
  }

  json body{{"model", config_.model_name},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", config_.temperature},
            {"max_tokens", config_.max_tokens}};
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client http(scheme_host_port_);
  auto timeout = std::chrono::duration<double>(config_.request_timeout);
  http.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  http.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  http.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::duration<double>(config_.backoff_initial * std::ldexp(1.0, attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    network_calls_.fetch_add(1);
    auto res = http.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
    try {
      json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed completion response: ") + e.what() + ": " + excerpt(res->body));
    }
  }
  throw TransportError("giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::string LlmClient::complete(const std::string& prompt) {
  const std::string key = completion_cache_key(prompt, config_);
  if (auto hit = read_cache(key)) {
    cache_hits_.fetch_add(1);
    return *hit;
  }
  in_flight_.acquire();
  std::string content;
  try {
    content = post(prompt);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  write_cache(key, content);
  return content;
}

std::string request_completion(const std::string& prompt, const LlmClientConfig& config) {
  LlmClient client(config);
  return client.complete(prompt);
}

struct MockLlmServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
};

MockLlmServer::MockLlmServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post(R"(.*/chat/completions)", [this, handler = std::move(handler)](const httplib::Request& req,
                                                                                      httplib::Response& res) {
    hits_.fetch_add(1);
    std::string prompt;
    try {
      json body = json::parse(req.body);
      prompt = body.at("messages").back().at("content").get<std::string>();
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    MockReply reply = handler(prompt);
    res.status = reply.status;
    if (reply.status == 200) {
      json out{{"object", "chat.completion"},
               {"choices", json::array({json{{"index", 0},
                                             {"message", json{{"role", "assistant"}, {"content", reply.content}}},
                                             {"finish_reason", "stop"}}})}};
      res.set_content(out.dump(), "application/json");
    } else {
      res.set_content(reply.content, "text/plain");
    }
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) throw TransportError("mock LLM server could not bind to 127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockLlmServer::~MockLlmServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockLlmServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1"; }

std::unique_ptr<MockLlmServer> MockLlmServer::from_fixture_dir(const std::filesystem::path& dir) {
  // Lines are {"query", "response"} with an optional "target" holding the
  // text of the specific instruction negative; targeted entries win.
  auto lines = read_lines(dir / "responses.jsonl");
  std::unordered_map<std::string, std::string> by_query;
  std::unordered_map<std::string, std::string> by_target;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      json j = json::parse(lines[i]);
      auto query = j.at("query").get<std::string>();
      auto response = j.at("response").get<std::string>();
      if (j.contains("target")) {
        by_target[query + '\n' + j.at("target").get<std::string>()] = response;
      } else {
        by_query[query] = response;
      }
    } catch (const json::exception& e) {
      throw SchemaError((dir / "responses.jsonl").string() + ": line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  auto line_after = [](const std::string& prompt, std::string_view marker) -> std::optional<std::string> {
    std::size_t at = prompt.find(marker);
    if (at == std::string::npos) return std::nullopt;
    at += marker.size();
    return prompt.substr(at, prompt.find('\n', at) - at);
  };
  return std::make_unique<MockLlmServer>(
      [by_query = std::move(by_query), by_target = std::move(by_target), line_after](const std::string& prompt) {
        auto query = line_after(prompt, "\n- Query: ");
        if (!query) return MockReply{400, "prompt has no query line"};
        if (auto target = line_after(prompt, "\n- Specific instruction negative passage: ")) {
          auto it = by_target.find(*query + '\n' + *target);
          if (it != by_target.end()) return MockReply{200, it->second};
        }
        auto it = by_query.find(*query);
        if (it == by_query.end()) return MockReply{404, "no scripted response for query: " + *query};
        return MockReply{200, it->second};
      });
}

}  // namespace dualview
