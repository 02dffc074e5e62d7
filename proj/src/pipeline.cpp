#include "wlm/pipeline.hpp"

#include <chrono>

namespace wlm {

Pipeline::Pipeline(PipelineOptions options, LangLinkCache& links, DiffSource& diffs,
                   std::vector<std::shared_ptr<Connector>> connectors, Gateway& gateway)
    : options_(std::move(options)),
      links_(links),
      diffs_(diffs),
      connectors_(std::move(connectors)),
      gateway_(gateway),
      monitor_(options_.criteria) {}

Pipeline::~Pipeline() { stop_async(); }

void Pipeline::set_tick_origin(Timestamp origin) {
  next_tick_ = origin + std::chrono::seconds{options_.criteria.eviction_period_secs};
}

void Pipeline::advance_to(Timestamp now) {
  if (!next_tick_) set_tick_origin(now);
  if (now > latest_.load()) latest_ = now;
  const auto period = std::chrono::seconds{options_.criteria.eviction_period_secs};
  bool ticked = false;
  while (*next_tick_ <= now) {
    evicted_ += monitor_.evict(*next_tick_).size();
    ticked = true;
    if (gateway_.has_clients()) gateway_.emit(wire_kind::kStats, stats_json(), *next_tick_);
    *next_tick_ += period;
  }
  if (ticked) refresh_stats();
}

void Pipeline::on_change(const RecentChange& change) {
  if (async_) {
    post(change);
    return;
  }
  process(change);
}

void Pipeline::on_skipped(const RawLine& line, const ParseError&) {
  ++parse_errors_;
  if (!async_) advance_to(line.received_at);
}

void Pipeline::process(const RecentChange& change) {
  advance_to(change.timestamp);
  ++events_;
  if (is_meta_title(change.title)) {
    ++meta_skipped_;
    refresh_stats();
    return;
  }
  if (!options_.include_bots && is_bot_editor(change, options_.extra_bots)) {
    ++bot_skipped_;
    refresh_stats();
    return;
  }

  const ArticleKey key{change.language, change.title};
  LangLinkSet links;
  if (auto cached = links_.peek(key, change.timestamp)) {
    links = std::move(*cached);
  } else if (!async_ || links_.source_is_local()) {
    links = links_.fetch(key, change.timestamp);
  } else {
    links = LangLinkSet{key, {}, change.timestamp, false};
    bool first;
    {
      std::lock_guard lock(fetch_mu_);
      first = pending_links_.insert(key.identity()).second;
    }
    if (first) {
      submit_fetch([this, key, now = change.timestamp] {
        LangLinkSet fetched = links_.fetch(key, now);
        {
          std::lock_guard lock(fetch_mu_);
          pending_links_.erase(key.identity());
        }
        if (!fetched.siblings.empty()) post(LinksResolved{std::move(fetched)});
      });
    }
  }

  EditClass cls;
  const bool has_revs = change.diff_rev && change.old_rev && *change.diff_rev > 0 && *change.old_rev > 0;
  if (has_revs && (!async_ || diffs_.is_local())) {
    RevisionDiff diff = diffs_.fetch_diff(change.language, *change.old_rev, *change.diff_rev);
    check_against_delta(diff, change.delta);
    cls = classify(diff, change.comment, change.delta, options_.classifier);
  } else {
    cls = classify_without_diff(change.comment, change.delta, options_.classifier);
    if (has_revs) {
      submit_fetch([this, change, key] {
        RevisionDiff diff = diffs_.fetch_diff(change.language, *change.old_rev, *change.diff_rev);
        if (!diff.available) return;
        post(DiffResolved{key, *change.diff_rev,
                          classify(diff, change.comment, change.delta, options_.classifier)});
      });
    }
  }

  handle(monitor_.observe(change, links, cls));
  refresh_stats();
}

void Pipeline::handle(std::vector<MonitorEvent> events) {
  for (auto& ev : events) {
    if (ev.kind == MonitorEventKind::kBreakingNewsCandidate) {
      Candidate candidate = std::move(*ev.candidate);
      candidate.queries = build_queries(candidate);
      gateway_.publish_candidate(candidate, ev.at);
      if (connectors_.empty()) continue;
      auto check = [this, id = candidate.id, queries = candidate.queries, at = ev.at] {
        CheckOptions opts;
        opts.timeout = options_.check_timeout;
        auto results = run_checks(queries, connectors_, at, opts);
        gateway_.publish_results(id, results, at);
      };
      if (async_) checkers_.emplace_back(std::move(check));
      else check();
      continue;
    }
    if (!gateway_.has_clients()) continue;
    const Cluster* c = monitor_.cluster(ev.cluster);
    if (!c) continue;
    json payload = {{"cluster", cluster_view(*c, ev.at)}};
    if (ev.article) {
      payload["article"] = *ev.article;
      payload["old_rev"] = ev.old_rev ? json(*ev.old_rev) : json(nullptr);
      payload["diff_rev"] = ev.diff_rev ? json(*ev.diff_rev) : json(nullptr);
    }
    gateway_.emit(to_string(ev.kind), std::move(payload), ev.at);
  }
}

void Pipeline::refresh_stats() {
  std::lock_guard lock(stats_mu_);
  snapshot_.events_ingested = events_;
  snapshot_.parse_errors = parse_errors_;
  snapshot_.meta_skipped = meta_skipped_;
  snapshot_.bot_skipped = bot_skipped_;
  snapshot_.clusters_created = monitor_.clusters_created();
  snapshot_.candidates_fired = monitor_.candidates_fired();
  snapshot_.clusters_evicted = evicted_;
  snapshot_.merges = monitor_.merges();
  snapshot_.live_clusters = monitor_.live_clusters();
}

RunStats Pipeline::stats() const {
  RunStats s;
  {
    std::lock_guard lock(stats_mu_);
    s = snapshot_;
  }
  s.parse_errors = parse_errors_;
  s.verdicts_recorded = gateway_.verdicts_recorded();
  return s;
}

json Pipeline::stats_json() const {
  const RunStats s = stats();
  return {{"events_ingested", s.events_ingested}, {"parse_errors", s.parse_errors},
          {"meta_skipped", s.meta_skipped},       {"bot_skipped", s.bot_skipped},
          {"clusters_created", s.clusters_created}, {"candidates_fired", s.candidates_fired},
          {"verdicts_recorded", s.verdicts_recorded}, {"clusters_evicted", s.clusters_evicted},
          {"merges", s.merges},                   {"live_clusters", s.live_clusters}};
}

// ---------------------------------------------------------------------------

void Pipeline::post(Work work) {
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(work));
  }
  queue_cv_.notify_one();
}

void Pipeline::start_async() {
  if (async_) return;
  async_ = true;
  stopping_ = false;
  consumer_ = std::thread([this] { consumer_loop(); });
  for (size_t i = 0; i < options_.fetch_workers; ++i)
    fetchers_.emplace_back([this] { fetch_loop(); });
}

void Pipeline::stop_async() {
  if (!async_) return;
  {
    std::lock_guard lock(queue_mu_);
    stopping_ = true;
  }
  {
    std::lock_guard lock(fetch_mu_);
    fetch_queue_.clear();
  }
  queue_cv_.notify_all();
  fetch_cv_.notify_all();
  for (auto& t : fetchers_) t.join();
  fetchers_.clear();
  consumer_.join();
  for (auto& t : checkers_) t.join();
  checkers_.clear();
  async_ = false;
}

void Pipeline::consumer_loop() {
  while (true) {
    std::optional<Work> work;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait_for(lock, std::chrono::seconds{1},
                         [&] { return stopping_ || !queue_.empty(); });
      if (!queue_.empty()) {
        work = std::move(queue_.front());
        queue_.pop_front();
      } else if (stopping_) {
        break;
      }
    }
    if (!work) {
      advance_to(wall_now());
      continue;
    }
    if (auto* change = std::get_if<RecentChange>(&*work)) {
      process(*change);
    } else if (auto* resolved = std::get_if<LinksResolved>(&*work)) {
      const Timestamp now = std::max(latest_.load(), wall_now());
      handle(monitor_.apply_links(resolved->links, now));
      refresh_stats();
    } else if (auto* diff = std::get_if<DiffResolved>(&*work)) {
      monitor_.upgrade_display_class(diff->article, diff->diff_rev, diff->cls);
    }
  }
}

void Pipeline::submit_fetch(std::function<void()> task) {
  if (!async_) return;
  {
    std::lock_guard lock(fetch_mu_);
    fetch_queue_.push_back(std::move(task));
  }
  fetch_cv_.notify_one();
}

void Pipeline::fetch_loop() {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(fetch_mu_);
      fetch_cv_.wait(lock, [&] {
        std::lock_guard qlock(queue_mu_);
        return stopping_ || !fetch_queue_.empty();
      });
      {
        std::lock_guard qlock(queue_mu_);
        if (stopping_) return;
      }
      task = std::move(fetch_queue_.front());
      fetch_queue_.pop_front();
    }
    task();
  }
}

}  // namespace wlm
