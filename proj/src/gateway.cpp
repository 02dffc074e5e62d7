#include "wlm/gateway.hpp"

#include <unistd.h>

#include <fstream>
#include <stdexcept>

#include <httplib.h>

namespace wlm {

std::string serialize_event(std::string_view kind, uint64_t seq, const json& payload,
                            Timestamp emitted_at) {
  json j = {{"kind", kind}, {"seq", seq}, {"payload", payload},
            {"emitted_at", format_iso8601(emitted_at)}};
  return j.dump();
}

// ---------------------------------------------------------------------------

std::optional<std::string> Subscription::next(Millis timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  std::string out = *queue_.front();
  queue_.pop_front();
  return out;
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Subscription::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

size_t Subscription::backlog() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

Broadcaster::Broadcaster(size_t max_backlog) : max_backlog_(max_backlog) {}

std::shared_ptr<Subscription> Broadcaster::subscribe() {
  auto sub = std::make_shared<Subscription>();
  std::lock_guard lock(mu_);
  clients_.push_back(sub);
  return sub;
}

size_t Broadcaster::broadcast(std::string_view kind, const json& payload, Timestamp emitted_at) {
  std::lock_guard lock(mu_);
  const uint64_t seq = ++seq_;
  if (clients_.empty()) return 0;
  auto message = std::make_shared<const std::string>(serialize_event(kind, seq, payload, emitted_at));
  size_t delivered = 0;
  std::erase_if(clients_, [&](const std::shared_ptr<Subscription>& client) {
    std::lock_guard client_lock(client->mu_);
    if (client->closed_) return true;
    if (client->queue_.size() >= max_backlog_) {
      client->closed_ = true;
      client->queue_.clear();
      client->cv_.notify_all();
      ++slow_disconnects_;
      return true;
    }
    client->queue_.push_back(message);
    client->cv_.notify_one();
    ++delivered;
    return false;
  });
  return delivered;
}

size_t Broadcaster::client_count() const {
  std::lock_guard lock(mu_);
  size_t n = 0;
  for (const auto& c : clients_) n += c->closed() ? 0 : 1;
  return n;
}

uint64_t Broadcaster::slow_disconnects() const {
  std::lock_guard lock(mu_);
  return slow_disconnects_;
}

void Broadcaster::close_all() {
  std::lock_guard lock(mu_);
  for (auto& c : clients_) c->close();
  clients_.clear();
}

// ---------------------------------------------------------------------------

EventPump::EventPump(Broadcaster& broadcaster, size_t capacity)
    : broadcaster_(broadcaster), capacity_(capacity), worker_([this] { run(); }) {}

EventPump::~EventPump() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void EventPump::push(std::string_view kind, json payload, Timestamp at) {
  {
    std::lock_guard lock(mu_);
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back({std::string(kind), std::move(payload), at});
  }
  cv_.notify_one();
}

void EventPump::flush() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

uint64_t EventPump::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

void EventPump::run() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty() && stop_) break;
    Item item = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    broadcaster_.broadcast(item.kind, item.payload, item.at);
    lock.lock();
    busy_ = false;
    if (queue_.empty()) idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

// ---------------------------------------------------------------------------

EventLog::EventLog(std::filesystem::path path, FsyncPolicy fsync)
    : path_(std::move(path)), fsync_(fsync) {
  {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("offset"))
        next_offset_ = std::max(next_offset_, j["offset"].get<uint64_t>() + 1);
    }
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open log " + path_.string());
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

uint64_t EventLog::append(std::string_view kind, const json& record) {
  std::lock_guard lock(mu_);
  const uint64_t offset = next_offset_;
  const std::string line = json{{"offset", offset}, {"kind", kind}, {"record", record}}.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size())
    throw std::runtime_error("write to " + path_.string() + " failed");
  std::fflush(file_);
  if (fsync_ == FsyncPolicy::kEveryRecord) ::fsync(::fileno(file_));
  ++next_offset_;
  return offset;
}

uint64_t EventLog::next_offset() const {
  std::lock_guard lock(mu_);
  return next_offset_;
}

std::vector<json> EventLog::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read log " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

void replay_log(const std::filesystem::path& path, CandidateStore& store) {
  for (const json& entry : EventLog::read(path)) {
    const std::string kind = entry.at("kind").get<std::string>();
    const json& record = entry.at("record");
    if (kind == log_kind::kCandidate) {
      store.add(record.get<Candidate>());
    } else if (kind == log_kind::kPlausibility) {
      store.attach_results(record.at("candidate_id").get<std::string>(),
                           record.at("results").get<std::vector<PlausibilityResult>>());
    } else if (kind == log_kind::kVerdict) {
      store.record_verdict(record.get<Verdict>());
    }
  }
}

std::string dump_store(const CandidateStore& store) {
  return json(store.list()).dump();
}

// ---------------------------------------------------------------------------

Gateway::Gateway(CandidateStore& store, EventLog* log, Broadcaster& broadcaster)
    : store_(store), log_(log), broadcaster_(broadcaster), pump_(broadcaster) {}

Gateway::~Gateway() { stop(); }

void Gateway::publish_candidate(const Candidate& candidate, Timestamp now) {
  std::lock_guard lock(mu_);
  json j = candidate;
  if (log_) log_->append(log_kind::kCandidate, j);
  store_.add(candidate);
  pump_.push(wire_kind::kCandidate, std::move(j), now);
}

void Gateway::publish_results(const std::string& candidate_id,
                              const std::vector<PlausibilityResult>& results, Timestamp now) {
  std::lock_guard lock(mu_);
  if (!store_.get(candidate_id)) throw CandidateNotFound("unknown candidate " + candidate_id);
  if (log_) log_->append(log_kind::kPlausibility, {{"candidate_id", candidate_id}, {"results", results}});
  store_.attach_results(candidate_id, results);
  for (const auto& r : results)
    pump_.push(wire_kind::kPlausibility, {{"candidate_id", candidate_id}, {"result", r}}, now);
}

void Gateway::emit(std::string_view kind, json payload, Timestamp now) {
  pump_.push(kind, std::move(payload), now);
}

Candidate Gateway::submit_verdict(const Verdict& verdict) {
  std::lock_guard lock(mu_);
  auto current = store_.get(verdict.candidate_id);
  if (!current) throw CandidateNotFound("unknown candidate " + verdict.candidate_id);
  if (current->verdict != VerdictState::kPending)
    throw VerdictConflict("candidate " + verdict.candidate_id + " already has a verdict");
  if (log_) log_->append(log_kind::kVerdict, verdict);
  Candidate updated = store_.record_verdict(verdict);
  pump_.push(wire_kind::kVerdict, {{"verdict", verdict}, {"candidate", updated}}, verdict.decided_at);
  return updated;
}

HttpReply Gateway::serve_verdict(std::string_view body) {
  json req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object())
    return {400, {{"error", "body must be a JSON object"}}};
  for (const char* field : {"candidate_id", "decision", "evaluator"}) {
    if (!req.contains(field) || !req[field].is_string() || req[field].get<std::string>().empty())
      return {400, {{"error", std::string("missing field ") + field}}};
  }
  auto decision = verdict_state_from(req["decision"].get<std::string>());
  if (!decision || *decision == VerdictState::kPending)
    return {400, {{"error", "decision must be confirmed or rejected"}}};
  Verdict v{req["candidate_id"].get<std::string>(), *decision, req["evaluator"].get<std::string>(),
            clock_(), std::nullopt};
  if (req.contains("note") && req["note"].is_string()) v.note = req["note"].get<std::string>();
  try {
    return {200, submit_verdict(v)};
  } catch (const CandidateNotFound& e) {
    return {404, {{"error", e.what()}}};
  } catch (const VerdictConflict& e) {
    return {409, {{"error", e.what()}}};
  }
}

json Gateway::candidates_json() const { return store_.list(); }

json Gateway::health() const {
  json h = health_provider_ ? health_provider_() : json::object();
  h["clients"] = broadcaster_.client_count();
  h["dropped_events"] = pump_.dropped();
  h["slow_disconnects"] = broadcaster_.slow_disconnects();
  return h;
}

void Gateway::set_health_provider(std::function<json()> provider) {
  health_provider_ = std::move(provider);
}

void Gateway::set_clock(std::function<Timestamp()> clock) { clock_ = std::move(clock); }

int Gateway::listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;

  srv.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
    auto sub = broadcaster_.subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, idle = Millis{0}](size_t, httplib::DataSink& sink) mutable {
          constexpr Millis kPoll{200};
          auto msg = sub->next(kPoll);
          if (!msg) {
            if (sub->closed()) return false;
            idle += kPoll;
            if (idle >= Millis{10000}) {
              idle = Millis{0};
              return sink.write(": keepalive\n\n", 13);
            }
            return sink.is_writable();
          }
          idle = Millis{0};
          const std::string frame = "data: " + *msg + "\n\n";
          return sink.write(frame.data(), frame.size());
        },
        [sub](bool) { sub->close(); });
  });

  srv.Post("/verdicts", [this](const httplib::Request& req, httplib::Response& res) {
    HttpReply reply = serve_verdict(req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });

  srv.Get("/candidates", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(candidates_json().dump(), "application/json");
  });

  srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health().dump(), "application/json");
  });

  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void Gateway::stop() {
  if (server_) {
    broadcaster_.close_all();
    server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
    server_.reset();
  }
  pump_.flush();
}

}  // namespace wlm
