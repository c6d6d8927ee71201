#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "cxrlabel/error.hpp"

namespace cxrlabel::llm {

struct Request {
  std::string sample_id;
  std::string prompt;
};

enum class FailureCategory { network, auth, rate_limit };

std::string_view category_name(FailureCategory c);

/// ErrorKind::transport with code "network", "auth" or "rate-limit".
class TransportError : public Error {
 public:
  TransportError(FailureCategory category, const std::string& message,
                 int attempts = 1);
  FailureCategory category() const noexcept { return category_; }
  int attempts() const noexcept { return attempts_; }

 private:
  FailureCategory category_;
  int attempts_;
};

/// Implementations must allow concurrent send() calls.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string send(const Request& request) = 0;
  /// Recorded verbatim in the audit log.
  virtual std::string model_id() const = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries network and rate-limit failures with exponential backoff;
/// authentication failures are rethrown at once. The final error carries
/// the number of attempts made.
class RetryingTransport : public Transport {
 public:
  RetryingTransport(Transport& inner, RetryPolicy policy = {}, Sleeper sleeper = {});
  std::string send(const Request& request) override;
  std::string model_id() const override { return inner_.model_id(); }

 private:
  Transport& inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

/// Canned responses keyed by sample id, read from a TSV with columns
/// sample_id and response. Unknown ids fail with a network error.
class MockTransport : public Transport {
 public:
  explicit MockTransport(std::map<std::string, std::string> responses,
                         std::string model = "mock");
  static MockTransport load(const std::filesystem::path& path,
                            std::string model = "mock");
  std::string send(const Request& request) override;
  std::string model_id() const override { return model_; }

 private:
  std::map<std::string, std::string> responses_;
  std::string model_;
};

struct HttpConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string api_key;
  std::string model;
  std::chrono::seconds timeout{60};

  /// From CXR_LLM_ENDPOINT, CXR_LLM_API_KEY and CXR_LLM_MODEL. Throws
  /// Error{usage, "llm", "missing-config"} naming the unset variable.
  static HttpConfig from_env();
};

/// OpenAI-compatible chat-completions client. HTTP 401/403 map to auth, 429
/// to rate-limit, everything else that fails to network.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpConfig config);
  std::string send(const Request& request) override;
  std::string model_id() const override { return config_.model; }

 private:
  HttpConfig config_;
};

}  // namespace cxrlabel::llm
