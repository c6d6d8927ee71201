#include <cstdlib>

#include "cxrlabel/llm/transport.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cxrlabel::llm {
namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) {
    throw Error(ErrorKind::usage, "llm", "missing-config",
                std::string("environment variable ") + name + " is not set");
  }
  return v;
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorKind::usage, "llm", "bad-endpoint",
                "endpoint must be an http(s) URL: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

HttpConfig HttpConfig::from_env() {
  HttpConfig c;
  c.endpoint = env("CXR_LLM_ENDPOINT");
  c.api_key = env("CXR_LLM_API_KEY");
  c.model = env("CXR_LLM_MODEL");
  return c;
}

HttpTransport::HttpTransport(HttpConfig config) : config_(std::move(config)) {
  split_url(config_.endpoint);
}

std::string HttpTransport::send(const Request& request) {
  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  const nlohmann::json body = {
      {"model", config_.model},
      {"temperature", 0},
      {"messages", {{{"role", "user"}, {"content", request.prompt}}}}};
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  const auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError(FailureCategory::network,
                         "request failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw TransportError(FailureCategory::auth,
                         "endpoint rejected credentials (HTTP " +
                             std::to_string(res->status) + ")");
  }
  if (res->status == 429) {
    throw TransportError(FailureCategory::rate_limit, "rate limited (HTTP 429)");
  }
  if (res->status != 200) {
    throw TransportError(FailureCategory::network,
                         "HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(FailureCategory::network,
                         std::string("malformed completion body: ") + e.what());
  }
}

}  // namespace cxrlabel::llm
