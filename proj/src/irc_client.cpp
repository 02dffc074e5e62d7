#include "wlm/irc_client.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <random>
#include <stdexcept>

namespace wlm {

Millis backoff_delay(unsigned attempt, Millis initial, Millis cap) {
  Millis delay = initial;
  for (unsigned i = 0; i < attempt && delay < cap; ++i) delay *= 2;
  return std::min(delay, cap);
}

std::optional<IrcMessage> parse_irc_message(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  if (line.empty()) return std::nullopt;
  IrcMessage msg;
  if (line.front() == ':') {
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos) return std::nullopt;
    msg.prefix = std::string(line.substr(1, sp - 1));
    line.remove_prefix(sp + 1);
  }
  while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  const auto sp = line.find(' ');
  msg.command = std::string(line.substr(0, sp));
  if (msg.command.empty()) return std::nullopt;
  line = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
  while (!line.empty()) {
    if (line.front() == ':') {
      msg.params.emplace_back(line.substr(1));
      break;
    }
    const auto next = line.find(' ');
    if (next != 0) msg.params.emplace_back(line.substr(0, next));
    if (next == std::string_view::npos) break;
    line.remove_prefix(next + 1);
  }
  return msg;
}

namespace {

int open_socket(const std::string& host, uint16_t port, std::string& error) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    error = "resolve " + host + ": " + gai_strerror(rc);
    return -1;
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    error = "connect " + host + ": " + std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  return fd;
}

bool send_all(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

std::string random_nick() {
  std::random_device rd;
  return "wlm" + std::to_string(rd() % 100000);
}

}  // namespace

LiveIngest::LiveIngest(std::vector<std::string> languages, ChangeSink& sink, IrcConfig config)
    : sink_(sink), config_(std::move(config)) {
  if (languages.empty()) throw std::invalid_argument("no languages to monitor");
  for (const auto& lang : languages) {
    std::string channel = channel_for_language(lang);
    if (std::find(channels_.begin(), channels_.end(), channel) == channels_.end())
      channels_.push_back(std::move(channel));
  }
  if (config_.nick.empty()) config_.nick = random_nick();
  worker_ = std::thread([this] { run(); });
}

LiveIngest::~LiveIngest() { stop(); }

void LiveIngest::stop() {
  stop_ = true;
  if (worker_.joinable()) worker_.join();
}

IngestHealth LiveIngest::health() const {
  std::lock_guard lock(mu_);
  return health_;
}

void LiveIngest::set_error(std::string message) {
  std::lock_guard lock(mu_);
  health_.connected = false;
  health_.joined.clear();
  health_.last_error = std::move(message);
}

void LiveIngest::run() {
  unsigned attempt = 0;
  while (!stop_) {
    std::string error;
    const int fd = open_socket(config_.host, config_.port, error);
    bool registered = false;
    if (fd >= 0) {
      registered = session(fd);
      ::close(fd);
    } else {
      set_error(error);
    }
    if (stop_) break;
    if (registered) attempt = 0;
    {
      std::lock_guard lock(mu_);
      ++health_.reconnect_attempts;
    }
    const auto wake = std::chrono::steady_clock::now() +
                      backoff_delay(attempt++, config_.backoff_initial, config_.backoff_cap);
    while (!stop_ && std::chrono::steady_clock::now() < wake)
      std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
          Millis{50}, wake - std::chrono::steady_clock::now()));
  }
  std::lock_guard lock(mu_);
  health_.connected = false;
}

// Returns true if the server accepted our registration before the session ended.
bool LiveIngest::session(int fd) {
  std::string nick = config_.nick;
  if (!send_all(fd, "NICK " + nick + "\r\nUSER " + nick + " 0 * :wlm recent changes listener\r\n")) {
    set_error("send failed");
    return false;
  }
  bool registered = false;
  std::string buffer;
  char chunk[8192];
  while (!stop_) {
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready < 0 && errno != EINTR) {
      set_error(std::string("poll: ") + std::strerror(errno));
      return registered;
    }
    if (ready <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) {
      set_error(n == 0 ? "connection closed" : std::string("recv: ") + std::strerror(errno));
      return registered;
    }
    buffer.append(chunk, static_cast<size_t>(n));
    size_t eol;
    while ((eol = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, eol);
      buffer.erase(0, eol + 1);
      auto msg = parse_irc_message(line);
      if (!msg) continue;
      if (msg->command == "PING") {
        send_all(fd, "PONG :" + (msg->params.empty() ? std::string() : msg->params.back()) + "\r\n");
      } else if (msg->command == "001") {
        registered = true;
        for (const auto& channel : channels_) send_all(fd, "JOIN " + channel + "\r\n");
        std::lock_guard lock(mu_);
        health_.connected = true;
        ++health_.connects;
        health_.last_error.clear();
      } else if (msg->command == "433") {
        nick += "_";
        send_all(fd, "NICK " + nick + "\r\n");
      } else if (msg->command == "JOIN" && !msg->params.empty() &&
                 msg->prefix.starts_with(nick + "!")) {
        std::lock_guard lock(mu_);
        if (std::find(health_.joined.begin(), health_.joined.end(), msg->params[0]) ==
            health_.joined.end())
          health_.joined.push_back(msg->params[0]);
      } else if (msg->command == "PRIVMSG" && msg->params.size() >= 2) {
        RawLine raw{msg->params[0], msg->params[1], wall_now()};
        {
          std::lock_guard lock(mu_);
          ++health_.lines;
        }
        try {
          sink_.on_change(parse_rc_line(raw));
        } catch (const ParseError& e) {
          {
            std::lock_guard lock(mu_);
            ++health_.parse_errors;
          }
          sink_.on_skipped(raw, e);
        }
      }
    }
  }
  return registered;
}

std::unique_ptr<LiveIngest> connect_live(const std::vector<std::string>& languages,
                                         ChangeSink& sink, IrcConfig config) {
  return std::make_unique<LiveIngest>(languages, sink, std::move(config));
}

}  // namespace wlm
