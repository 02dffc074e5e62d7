#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wlm/clock.hpp"
#include "wlm/rc_ingest.hpp"

namespace wlm {

struct IrcConfig {
  std::string host = "irc.wikimedia.org";
  uint16_t port = 6667;
  std::string nick;  // generated when empty
  Millis backoff_initial{1000};
  Millis backoff_cap{60000};
};

struct IngestHealth {
  bool connected = false;
  uint64_t connects = 0;
  uint64_t reconnect_attempts = 0;
  uint64_t lines = 0;
  uint64_t parse_errors = 0;
  std::vector<std::string> joined;
  std::string last_error;
};

// Delay before reconnect attempt number `attempt` (0-based): initial * 2^attempt, capped.
Millis backoff_delay(unsigned attempt, Millis initial, Millis cap);

struct IrcMessage {
  std::string prefix;
  std::string command;
  std::vector<std::string> params;  // trailing parameter included as the last entry
};

std::optional<IrcMessage> parse_irc_message(std::string_view line);

// Listens on one recent-changes room per language. The connection is owned by a
// background thread that reconnects forever; failures show up only in health().
class LiveIngest {
 public:
  LiveIngest(std::vector<std::string> languages, ChangeSink& sink, IrcConfig config);
  ~LiveIngest();
  LiveIngest(const LiveIngest&) = delete;
  LiveIngest& operator=(const LiveIngest&) = delete;

  const std::vector<std::string>& channels() const { return channels_; }
  IngestHealth health() const;
  void stop();

 private:
  void run();
  bool session(int fd);
  void set_error(std::string message);

  std::vector<std::string> channels_;
  ChangeSink& sink_;
  IrcConfig config_;

  mutable std::mutex mu_;
  IngestHealth health_;
  std::atomic<bool> stop_{false};
  std::thread worker_;
};

// Throws std::invalid_argument for an empty list and InvalidLanguage for a bad token.
std::unique_ptr<LiveIngest> connect_live(const std::vector<std::string>& languages,
                                         ChangeSink& sink, IrcConfig config = {});

}  // namespace wlm
