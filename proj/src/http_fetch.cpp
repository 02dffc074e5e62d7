#include "wlm/http_fetch.hpp"

#include <httplib.h>

namespace wlm {

HttplibGetter::HttplibGetter(std::chrono::seconds timeout, std::string user_agent)
    : timeout_(timeout), user_agent_(std::move(user_agent)) {}

std::optional<HttpResponse> HttplibGetter::get(const std::string& url) {
  // scheme://host[:port]/path?query
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return std::nullopt;
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) return std::nullopt;
  client.set_follow_location(true);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Get(path, {{"User-Agent", user_agent_}});
  if (!res) return std::nullopt;
  return HttpResponse{res->status, res->body};
}

}  // namespace wlm
