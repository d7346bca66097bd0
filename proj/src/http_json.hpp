#pragma once

#include <chrono>
#include <functional>
#include <string>

#include <json.hpp>

namespace limeattack::detail {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

Endpoint parse_endpoint(const std::string& url);

struct RetryPolicy {
  int retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{10000};
};

struct AttemptHooks {
  // Called before every attempt after the first; may throw to abort.
  std::function<void()> before_retry;
  // Called once for every attempt that received an HTTP response.
  std::function<void()> on_response;
};

// POSTs `body` and returns the parsed 200 response. 429 and 5xx responses and
// transport failures are retried with exponential backoff. Throws
// Error(Timeout | TransportError | ServerError | MalformedResponse).
nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body,
                         const RetryPolicy& policy, const AttemptHooks& hooks = {});

}  // namespace limeattack::detail
