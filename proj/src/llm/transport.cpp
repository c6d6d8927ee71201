#include "cxrlabel/llm/transport.hpp"

#include <cmath>
#include <thread>

#include "cxrlabel/tsv.hpp"

namespace cxrlabel::llm {

std::string_view category_name(FailureCategory c) {
  switch (c) {
    case FailureCategory::network: return "network";
    case FailureCategory::auth: return "auth";
    case FailureCategory::rate_limit: break;
  }
  return "rate-limit";
}

TransportError::TransportError(FailureCategory category, const std::string& message,
                               int attempts)
    : Error(ErrorKind::transport, "llm", std::string(category_name(category)),
            message + " (attempts: " + std::to_string(attempts) + ")"),
      category_(category),
      attempts_(attempts) {}

RetryingTransport::RetryingTransport(Transport& inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(inner), policy_(policy), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  policy_.max_attempts = std::max(policy_.max_attempts, 1);
}

std::string RetryingTransport::send(const Request& request) {
  auto backoff = policy_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_.send(request);
    } catch (const TransportError& e) {
      if (e.category() == FailureCategory::auth) {
        throw TransportError(e.category(), "sample " + request.sample_id + ": " + e.detail(),
                             attempt);
      }
      if (attempt >= policy_.max_attempts) {
        throw TransportError(e.category(),
                             "sample " + request.sample_id + ": giving up: " + e.detail(),
                             attempt);
      }
    }
    sleeper_(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(std::llround(static_cast<double>(backoff.count()) *
                                            policy_.multiplier)));
  }
}

MockTransport::MockTransport(std::map<std::string, std::string> responses, std::string model)
    : responses_(std::move(responses)), model_(std::move(model)) {}

MockTransport MockTransport::load(const std::filesystem::path& path, std::string model) {
  const auto table = tsv::read(path);
  const auto id = table.require_column("sample_id");
  const auto resp = table.require_column("response");
  std::map<std::string, std::string> responses;
  for (const auto& row : table.rows) responses[row[id]] = row[resp];
  return MockTransport(std::move(responses), std::move(model));
}

std::string MockTransport::send(const Request& request) {
  const auto it = responses_.find(request.sample_id);
  if (it == responses_.end()) {
    throw TransportError(FailureCategory::network,
                         "mock has no response for sample " + request.sample_id);
  }
  return it->second;
}

}  // namespace cxrlabel::llm
