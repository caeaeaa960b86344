#include <cstdlib>

#include <httplib.h>

#include "localhealth/zeroshot.hpp"

namespace localhealth::zeroshot {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint '" + url + "' lacks a scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("endpoint scheme must be http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (p.origin.size() <= scheme_end + 3) throw ValidationError("endpoint '" + url + "' lacks a host");
  return p;
}

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientConfig config) : config_(std::move(config)), url_(parse_url(config_.endpoint)) {
    if (config_.model.empty()) throw ValidationError("zero-shot client: model name is required");
    if (config_.api_key.empty()) {
      if (const char* key = std::getenv(kApiKeyEnv)) config_.api_key = key;
    }
    if (config_.api_key.empty()) {
      throw ValidationError(std::string("zero-shot client: set ") + kApiKeyEnv + " to the API token");
    }
  }

  std::string complete(const std::string& prompt) override {
    // One connection object per call keeps the client usable from several threads.
    httplib::Client client(url_.origin);
    const auto t = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(t, 0);
    client.set_read_timeout(t, 0);
    client.set_write_timeout(t, 0);
    const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
    auto res = client.Post(url_.path, headers, request_body(config_.model, prompt), "application/json");
    if (!res) throw TransportError("request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) throw Error("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    return response_text(res->body);
  }

 private:
  HttpClientConfig config_;
  ParsedUrl url_;
};

}  // namespace

std::unique_ptr<ChatClient> make_http_client(HttpClientConfig config) {
  return std::make_unique<HttpChatClient>(std::move(config));
}

}  // namespace localhealth::zeroshot
