#include "http_json.hpp"

#include <thread>

#include <httplib.h>

#include "limeattack/core.hpp"

namespace limeattack::detail {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http")
    throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  if (path_start == std::string::npos) {
    ep.base = url;
    ep.path = "/";
  } else {
    ep.base = url.substr(0, path_start);
    ep.path = url.substr(path_start);
  }
  if (ep.base.size() <= scheme_end + 3)
    throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' has no host");
  return ep;
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

bool timeout_error(httplib::Error err) {
  return err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
         err == httplib::Error::Write;
}

}  // namespace

nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body,
                         const RetryPolicy& policy, const AttemptHooks& hooks) {
  httplib::Client client(endpoint.base);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  const std::string payload = body.dump();
  std::chrono::milliseconds backoff = policy.initial_backoff;
  int last_status = 0;
  httplib::Error last_error = httplib::Error::Success;

  for (int attempt = 0; attempt <= policy.retries; ++attempt) {
    if (attempt > 0) {
      if (hooks.before_retry) hooks.before_retry();
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(endpoint.path, payload, "application/json");
    if (!res) {
      last_error = res.error();
      last_status = 0;
      continue;
    }
    if (hooks.on_response) hooks.on_response();
    last_status = res->status;
    if (res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
      }
    }
    if (!retryable_status(res->status))
      throw Error(ErrorCode::ServerError, "HTTP status " + std::to_string(res->status), res->status);
  }

  if (last_status != 0)
    throw Error(ErrorCode::ServerError, "HTTP status " + std::to_string(last_status), last_status);
  if (timeout_error(last_error))
    throw Error(ErrorCode::Timeout, "request to " + endpoint.base + endpoint.path + " timed out");
  throw Error(ErrorCode::TransportError,
              "request to " + endpoint.base + endpoint.path + " failed: " + httplib::to_string(last_error));
}

}  // namespace limeattack::detail
