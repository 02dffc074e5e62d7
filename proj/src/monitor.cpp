#include "wlm/monitor.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <stdexcept>

namespace wlm {

void CriteriaConfig::validate() const {
  if (min_occurrences <= 0 || max_secs_between_edits <= 0 || min_concurrent_editors <= 0 ||
      max_secs_since_last_edit <= 0 || ttl_secs <= 0 || eviction_period_secs <= 0)
    throw std::invalid_argument("criteria values must be positive");
  if (ttl_secs < max_secs_since_last_edit)
    throw std::invalid_argument("ttl must be at least the maximum idle time");
}

std::string_view to_string(MonitorEventKind kind) {
  switch (kind) {
    case MonitorEventKind::kNewCluster: return "newCluster";
    case MonitorEventKind::kExistingCluster: return "existingCluster";
    case MonitorEventKind::kBreakingNewsCandidate: return "breakingNewsCandidate";
  }
  return "";
}

ClusterSnapshot Cluster::snapshot() const {
  return ClusterSnapshot{id, members, occurrences,
                         std::vector<std::string>(editors.begin(), editors.end()), edits, max_gap};
}

namespace {

void add_member(std::vector<ArticleKey>& members, const ArticleKey& key) {
  auto it = std::lower_bound(members.begin(), members.end(), key);
  if (it == members.end() || !(*it == key)) members.insert(it, key);
}

void count_edit(Cluster& c, const EditRecord& e) {
  if (!e.counted) return;
  if (c.last_counted_at) c.max_gap = std::max(c.max_gap, Millis{e.timestamp - *c.last_counted_at});
  c.last_counted_at = e.timestamp;
  ++c.occurrences;
  c.editors.insert(e.editor);
}

}  // namespace

void recompute_statistics(Cluster& cluster) {
  cluster.occurrences = 0;
  cluster.editors.clear();
  cluster.max_gap = Millis{0};
  cluster.last_counted_at.reset();
  for (const auto& e : cluster.edits) count_edit(cluster, e);
  if (!cluster.edits.empty()) cluster.last_edit_at = cluster.edits.back().timestamp;
}

Cluster merge(Cluster a, Cluster b) {
  Cluster out;
  out.id = std::min(a.id, b.id);
  out.members = std::move(a.members);
  for (const auto& m : b.members) add_member(out.members, m);
  out.edits.reserve(a.edits.size() + b.edits.size());
  std::merge(std::make_move_iterator(a.edits.begin()), std::make_move_iterator(a.edits.end()),
             std::make_move_iterator(b.edits.begin()), std::make_move_iterator(b.edits.end()),
             std::back_inserter(out.edits),
             [](const EditRecord& x, const EditRecord& y) { return x.timestamp < y.timestamp; });
  out.created_at = std::min(a.created_at, b.created_at);
  out.last_edit_at = std::max(a.last_edit_at, b.last_edit_at);
  out.candidate_fired = a.candidate_fired || b.candidate_fired;
  recompute_statistics(out);
  return out;
}

bool criteria_met(const Cluster& c, Timestamp now, const CriteriaConfig& config) {
  using std::chrono::seconds;
  return c.occurrences >= static_cast<uint64_t>(config.min_occurrences) &&
         c.max_gap <= seconds{config.max_secs_between_edits} &&
         c.editors.size() >= static_cast<size_t>(config.min_concurrent_editors) &&
         c.last_counted_at && now - *c.last_counted_at <= seconds{config.max_secs_since_last_edit};
}

// ---------------------------------------------------------------------------

Monitor::Monitor(CriteriaConfig config) : config_(config) { config_.validate(); }

const Cluster* Monitor::cluster(ClusterId id) const {
  auto it = clusters_.find(id);
  return it == clusters_.end() ? nullptr : &it->second;
}

std::optional<ClusterId> Monitor::cluster_of_article(const ArticleKey& article) {
  return graph_.find(article);
}

std::vector<ClusterId> Monitor::live_cluster_ids() const {
  std::vector<ClusterId> ids;
  ids.reserve(clusters_.size());
  for (const auto& [id, c] : clusters_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void Monitor::absorb(const ClusterAssignment& assignment) {
  auto survivor = clusters_.find(assignment.id);
  if (survivor == clusters_.end()) return;
  for (ClusterId other : assignment.absorbed) {
    auto it = clusters_.find(other);
    if (it == clusters_.end()) continue;
    survivor->second = merge(std::move(survivor->second), std::move(it->second));
    clusters_.erase(it);
    ++merges_;
  }
  for (const auto& key : assignment.new_members) add_member(survivor->second.members, key);
}

std::vector<MonitorEvent> Monitor::observe(const RecentChange& change, const LangLinkSet& links,
                                           const EditClass& edit_class) {
  const ArticleKey key{change.language, change.title};
  const ClusterAssignment assignment = graph_.cluster_of(key, links);
  absorb(assignment);
  auto events = ingest_edit(change, assignment.id, edit_class);
  Cluster& c = clusters_.at(assignment.id);
  for (const auto& member : assignment.new_members) add_member(c.members, member);
  return events;
}

std::vector<MonitorEvent> Monitor::apply_links(const LangLinkSet& links, Timestamp now) {
  if (!graph_.find(links.source)) return {};
  const ClusterAssignment assignment = graph_.cluster_of(links.source, links);
  if (assignment.absorbed.empty() && assignment.new_members.empty()) return {};
  absorb(assignment);
  std::vector<MonitorEvent> events;
  Cluster& c = clusters_.at(assignment.id);
  events.push_back({MonitorEventKind::kExistingCluster, c.id, now, std::nullopt, std::nullopt,
                    std::nullopt, std::nullopt});
  if (auto fired = check_criteria(c, now)) events.push_back(std::move(*fired));
  return events;
}

std::vector<MonitorEvent> Monitor::ingest_edit(const RecentChange& change, ClusterId cluster_id,
                                               const EditClass& edit_class) {
  const ArticleKey key{change.language, change.title};
  auto [it, created] = clusters_.try_emplace(cluster_id);
  Cluster& c = it->second;
  if (created) {
    c.id = cluster_id;
    c.created_at = change.timestamp;
    ++clusters_created_;
  }
  add_member(c.members, key);

  EditRecord record{change.timestamp, change.editor,  key,       change.delta, change.old_rev,
                    change.diff_rev,  edit_class,     edit_class.level != EditLevel::kTrivial,
                    std::nullopt};
  if (c.edits.empty() || c.edits.back().timestamp <= record.timestamp) {
    count_edit(c, record);
    c.last_edit_at = record.timestamp;
    c.edits.push_back(std::move(record));
  } else {
    auto pos = std::upper_bound(
        c.edits.begin(), c.edits.end(), record.timestamp,
        [](Timestamp t, const EditRecord& e) { return t < e.timestamp; });
    c.edits.insert(pos, std::move(record));
    recompute_statistics(c);
  }

  std::vector<MonitorEvent> events;
  events.push_back({created ? MonitorEventKind::kNewCluster : MonitorEventKind::kExistingCluster,
                    c.id, change.timestamp, key, change.old_rev, change.diff_rev, std::nullopt});
  if (auto fired = check_criteria(c, change.timestamp)) events.push_back(std::move(*fired));
  return events;
}

std::optional<MonitorEvent> Monitor::check_criteria(Cluster& c, Timestamp now) {
  if (c.candidate_fired || !criteria_met(c, now, config_)) return std::nullopt;
  c.candidate_fired = true;
  ++candidates_fired_;
  Candidate candidate;
  char id[32];
  std::snprintf(id, sizeof id, "cand-%06llu", static_cast<unsigned long long>(candidates_fired_));
  candidate.id = id;
  candidate.cluster = c.snapshot();
  candidate.fired_at = now;
  return MonitorEvent{MonitorEventKind::kBreakingNewsCandidate, c.id, now, std::nullopt,
                      std::nullopt, std::nullopt, std::move(candidate)};
}

std::vector<ClusterId> Monitor::evict(Timestamp now) {
  std::vector<ClusterId> evicted;
  for (const auto& [id, c] : clusters_)
    if (now - c.last_edit_at >= std::chrono::seconds{config_.ttl_secs}) evicted.push_back(id);
  std::sort(evicted.begin(), evicted.end());
  for (ClusterId id : evicted) {
    auto it = clusters_.find(id);
    graph_.release(it->second.members);
    clusters_.erase(it);
  }
  return evicted;
}

bool Monitor::upgrade_display_class(const ArticleKey& article, int64_t diff_rev,
                                    const EditClass& cls) {
  auto id = graph_.find(article);
  if (!id) return false;
  auto it = clusters_.find(*id);
  if (it == clusters_.end()) return false;
  for (auto& e : it->second.edits) {
    if (e.diff_rev == diff_rev && e.article == article) {
      e.display_class = cls;
      return true;
    }
  }
  return false;
}

}  // namespace wlm
