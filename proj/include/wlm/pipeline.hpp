#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "wlm/edit_classifier.hpp"
#include "wlm/gateway.hpp"
#include "wlm/lang_graph.hpp"
#include "wlm/monitor.hpp"
#include "wlm/plausibility.hpp"
#include "wlm/rc_ingest.hpp"

namespace wlm {

struct PipelineOptions {
  CriteriaConfig criteria;
  ClassifierConfig classifier;
  bool include_bots = false;
  std::vector<std::string> extra_bots;
  Millis check_timeout{10000};
  size_t fetch_workers = 4;
};

struct RunStats {
  uint64_t events_ingested = 0;
  uint64_t parse_errors = 0;
  uint64_t meta_skipped = 0;
  uint64_t bot_skipped = 0;
  uint64_t clusters_created = 0;
  uint64_t candidates_fired = 0;
  uint64_t verdicts_recorded = 0;
  uint64_t clusters_evicted = 0;
  uint64_t merges = 0;
  uint64_t live_clusters = 0;
};

// Wires parsed changes through link resolution, classification and the monitor to
// the gateway.
//
// Synchronous mode (replay): everything runs on the caller's thread in delivery order
// and time comes only from event timestamps, so runs are reproducible. Remote link
// and diff sources are not consulted inline in this mode.
//
// Asynchronous mode (live): on_change enqueues; one consumer thread owns the monitor.
// Remote lookups run on a small worker pool and feed results back through the same
// queue (late links may merge clusters; late diffs only upgrade display classes).
class Pipeline : public ChangeSink {
 public:
  Pipeline(PipelineOptions options, LangLinkCache& links, DiffSource& diffs,
           std::vector<std::shared_ptr<Connector>> connectors, Gateway& gateway);
  ~Pipeline() override;

  void on_change(const RecentChange& change) override;
  void on_skipped(const RawLine& line, const ParseError& error) override;

  // Eviction ticks fall on origin + k * eviction_period. Defaults to the first event time.
  void set_tick_origin(Timestamp origin);
  // Runs every eviction tick due at or before `now`.
  void advance_to(Timestamp now);

  void start_async();
  void stop_async();

  RunStats stats() const;
  json stats_json() const;
  Monitor& monitor() { return monitor_; }
  // Latest event time seen; the virtual clock in replay mode.
  Timestamp now() const { return latest_.load(); }

 private:
  struct LinksResolved {
    LangLinkSet links;
  };
  struct DiffResolved {
    ArticleKey article;
    int64_t diff_rev;
    EditClass cls;
  };
  using Work = std::variant<RecentChange, LinksResolved, DiffResolved>;

  void process(const RecentChange& change);
  void handle(std::vector<MonitorEvent> events);
  void post(Work work);
  void consumer_loop();
  void submit_fetch(std::function<void()> task);
  void fetch_loop();
  void refresh_stats();

  PipelineOptions options_;
  LangLinkCache& links_;
  DiffSource& diffs_;
  std::vector<std::shared_ptr<Connector>> connectors_;
  Gateway& gateway_;
  Monitor monitor_;

  std::optional<Timestamp> next_tick_;
  std::atomic<Timestamp> latest_{Timestamp{}};
  uint64_t events_ = 0;
  std::atomic<uint64_t> parse_errors_{0};
  uint64_t meta_skipped_ = 0;
  uint64_t bot_skipped_ = 0;
  uint64_t evicted_ = 0;

  // async mode
  bool async_ = false;
  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Work> queue_;
  bool stopping_ = false;
  std::thread consumer_;

  std::mutex fetch_mu_;
  std::condition_variable fetch_cv_;
  std::deque<std::function<void()>> fetch_queue_;
  std::set<std::string> pending_links_;
  std::vector<std::thread> fetchers_;
  std::vector<std::thread> checkers_;
  mutable std::mutex stats_mu_;
  RunStats snapshot_;
};

}  // namespace wlm
