#pragma once

// Completion-endpoint client. The endpoint URL and API key arrive through
// environment variables (names are configurable) so credentials stay out of
// config files and command lines.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "funfuzz/config.hpp"
#include "funfuzz/generation.hpp"

namespace funfuzz {

struct ParsedUrl {
  std::string base;  // scheme://host:port
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  std::size_t slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpProvider : public GenerationProvider {
 public:
  explicit HttpProvider(const HttpProviderConfig& cfg,
                        std::function<void(int)> sleep_ms = {})
      : cfg_(cfg), sleep_ms_(std::move(sleep_ms)) {
    const char* url = std::getenv(cfg_.url_env.c_str());
    if (url == nullptr || *url == '\0')
      throw GenerationError("provider URL environment variable " + cfg_.url_env + " is not set");
    url_ = parse_url(url);
    if (const char* key = std::getenv(cfg_.key_env.c_str()); key != nullptr && *key != '\0')
      api_key_ = key;
  }

  // Transport errors, non-200 statuses, and malformed bodies are retried
  // with exponential backoff. A well-formed response with the wrong number
  // of completions is a contract violation and fails immediately.
  std::vector<std::string> generate(const std::string& prompt, std::size_t n, double temperature,
                                    std::size_t max_tokens) override {
    nlohmann::json body = {
        {"model", cfg_.model},  {"prompt", prompt},        {"n", n},
        {"temperature", temperature}, {"max_tokens", max_tokens},
    };
    const std::string payload = body.dump();
    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < cfg_.retries; ++attempt) {
      if (attempt > 0) wait(cfg_.backoff_ms << (attempt - 1));
      httplib::Client client(url_.base);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array()) {
        last_error = "malformed response body";
        continue;
      }
      std::vector<std::string> out;
      bool malformed = false;
      for (const auto& choice : parsed["choices"]) {
        if (!choice.contains("text") || !choice["text"].is_string()) {
          malformed = true;
          break;
        }
        out.push_back(choice["text"].get<std::string>());
      }
      if (malformed) {
        last_error = "malformed choice entry";
        continue;
      }
      if (out.size() != n)
        throw GenerationError("provider returned " + std::to_string(out.size()) +
                              " completions, expected " + std::to_string(n));
      return out;
    }
    throw GenerationError("request failed after " + std::to_string(cfg_.retries) +
                          " attempts: " + last_error);
  }

 private:
  void wait(int ms) const {
    if (sleep_ms_)
      sleep_ms_(ms);
    else
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }

  HttpProviderConfig cfg_;
  std::function<void(int)> sleep_ms_;
  ParsedUrl url_;
  std::string api_key_;
};

}  // namespace funfuzz
