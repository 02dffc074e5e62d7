#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wlm/clock.hpp"
#include "wlm/plausibility.hpp"
#include "wlm/wire.hpp"

namespace httplib {
class Server;
}

namespace wlm {

namespace wire_kind {
inline constexpr std::string_view kNewCluster = "newCluster";
inline constexpr std::string_view kExistingCluster = "existingCluster";
inline constexpr std::string_view kCandidate = "breakingNewsCandidate";
inline constexpr std::string_view kPlausibility = "plausibilityResult";
inline constexpr std::string_view kVerdict = "verdict";
inline constexpr std::string_view kStats = "stats";
}  // namespace wire_kind

// {"kind", "seq", "payload", "emitted_at"} on one line.
std::string serialize_event(std::string_view kind, uint64_t seq, const json& payload,
                            Timestamp emitted_at);

// One push-channel client. Holds serialized events not yet written to the socket.
class Subscription {
 public:
  // Next event, or nullopt after `timeout` or once closed and drained.
  std::optional<std::string> next(Millis timeout);
  bool closed() const;
  void close();
  size_t backlog() const;

 private:
  friend class Broadcaster;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

// Fan-out: every event is serialized once and queued for each client. A client
// whose backlog reaches max_backlog is disconnected.
class Broadcaster {
 public:
  explicit Broadcaster(size_t max_backlog = 1000);

  std::shared_ptr<Subscription> subscribe();
  size_t broadcast(std::string_view kind, const json& payload, Timestamp emitted_at);
  size_t client_count() const;
  uint64_t slow_disconnects() const;
  void close_all();

 private:
  size_t max_backlog_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> clients_;
  uint64_t seq_ = 0;
  uint64_t slow_disconnects_ = 0;
};

// Ordered hand-off from the monitor to the broadcaster. push() never blocks; when
// full, the oldest queued event is dropped and counted.
class EventPump {
 public:
  EventPump(Broadcaster& broadcaster, size_t capacity = 10000);
  ~EventPump();
  EventPump(const EventPump&) = delete;
  EventPump& operator=(const EventPump&) = delete;

  void push(std::string_view kind, json payload, Timestamp at);
  // Blocks until everything pushed so far has been broadcast.
  void flush();
  uint64_t dropped() const;

 private:
  struct Item {
    std::string kind;
    json payload;
    Timestamp at;
  };
  void run();

  Broadcaster& broadcaster_;
  size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Item> queue_;
  bool busy_ = false;
  bool stop_ = false;
  uint64_t dropped_ = 0;
  std::thread worker_;
};

enum class FsyncPolicy { kNever, kEveryRecord };

// Newline-delimited run log: {"offset", "kind", "record"} per line. Reopening an
// existing log continues after its last offset.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path, FsyncPolicy fsync = FsyncPolicy::kNever);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  uint64_t append(std::string_view kind, const json& record);
  uint64_t next_offset() const;
  const std::filesystem::path& path() const { return path_; }

  static std::vector<json> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  FsyncPolicy fsync_;
  mutable std::mutex mu_;
  std::FILE* file_ = nullptr;
  uint64_t next_offset_ = 0;
};

namespace log_kind {
inline constexpr std::string_view kCandidate = "candidate";
inline constexpr std::string_view kPlausibility = "plausibility";
inline constexpr std::string_view kVerdict = "verdict";
}  // namespace log_kind

// Replays a run log into a fresh store.
void replay_log(const std::filesystem::path& path, CandidateStore& store);

// Canonical serialization of the whole store.
std::string dump_store(const CandidateStore& store);

struct HttpReply {
  int status = 200;
  json body;
};

// Candidate persistence, verdict handling and the HTTP/push endpoints. Mutations of
// candidate state are serialized here: store, log and broadcast stay in step.
class Gateway {
 public:
  Gateway(CandidateStore& store, EventLog* log, Broadcaster& broadcaster);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void publish_candidate(const Candidate& candidate, Timestamp now);
  void publish_results(const std::string& candidate_id,
                       const std::vector<PlausibilityResult>& results, Timestamp now);
  void emit(std::string_view kind, json payload, Timestamp now);

  // Throws CandidateNotFound / VerdictConflict.
  Candidate submit_verdict(const Verdict& verdict);

  // HTTP mapping of submit_verdict: 200, 400 malformed, 404 unknown, 409 duplicate.
  HttpReply serve_verdict(std::string_view body);

  json candidates_json() const;
  json health() const;
  bool has_clients() const { return broadcaster_.client_count() > 0; }
  uint64_t verdicts_recorded() const { return store_.verdicts(); }

  void set_health_provider(std::function<json()> provider);
  void set_clock(std::function<Timestamp()> clock);

  // Starts the HTTP server on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int listen(const std::string& host, int port);
  void stop();
  void flush() { pump_.flush(); }
  uint64_t dropped_events() const { return pump_.dropped(); }

 private:
  CandidateStore& store_;
  EventLog* log_;
  Broadcaster& broadcaster_;
  EventPump pump_;
  std::mutex mu_;
  std::function<json()> health_provider_;
  std::function<Timestamp()> clock_ = wall_now;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

}  // namespace wlm
