#include "httplib.h"

#include "infogain/remote.hpp"

namespace infogain {

HttpTransport::HttpTransport(std::string endpoint, std::string api_key,
                             std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must start with http:// or https://");
  }
  const auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported endpoint scheme: " + scheme);
  }
#ifndef INFOGAIN_WITH_TLS
  if (scheme == "https") throw Error(ErrorCode::InvalidArgument, "built without TLS support");
#endif
  const auto path_start = endpoint.find('/', scheme_end + 3);
  origin_ = endpoint.substr(0, path_start);
  path_ = (path_start == std::string::npos ? std::string() : endpoint.substr(path_start)) +
          "/chat/completions";
}

nlohmann::json HttpTransport::post_chat(const nlohmann::json& body) {
  // httplib clients are not safe for concurrent use; one per request.
  httplib::Client cli(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request failed: " + httplib::to_string(res.error()), true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("server returned " + std::to_string(res->status), true, res->status);
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("server returned " + std::to_string(res->status) + ": " + res->body, false,
                         res->status);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("response body is not JSON: ") + e.what());
  }
}

}  // namespace infogain
