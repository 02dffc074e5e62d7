#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace wlm {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Blocking GET. nullopt means the request never produced a response.
class HttpGetter {
 public:
  virtual ~HttpGetter() = default;
  virtual std::optional<HttpResponse> get(const std::string& url) = 0;
};

// cpp-httplib backed getter; follows redirects (the API answers http:// with a redirect
// to https:// when TLS support is compiled in).
class HttplibGetter : public HttpGetter {
 public:
  explicit HttplibGetter(std::chrono::seconds timeout = std::chrono::seconds{10},
                         std::string user_agent = "wikipedia-live-monitor/1.0");
  std::optional<HttpResponse> get(const std::string& url) override;

 private:
  std::chrono::seconds timeout_;
  std::string user_agent_;
};

}  // namespace wlm
