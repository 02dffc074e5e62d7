#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wlm/candidate.hpp"
#include "wlm/clock.hpp"
#include "wlm/edit_classifier.hpp"
#include "wlm/lang_graph.hpp"
#include "wlm/rc_ingest.hpp"

namespace wlm {

// The four breaking-news thresholds plus the monitoring-loop lifetime.
struct CriteriaConfig {
  int64_t min_occurrences = 5;
  int64_t max_secs_between_edits = 60;
  int64_t min_concurrent_editors = 2;
  int64_t max_secs_since_last_edit = 240;
  int64_t ttl_secs = 240;
  int64_t eviction_period_secs = 240;

  // Throws std::invalid_argument when a value is non-positive or ttl < max idle.
  void validate() const;
};

struct Cluster {
  ClusterId id;
  std::vector<ArticleKey> members;  // sorted
  std::vector<EditRecord> edits;    // time-ordered, trivial edits included
  std::set<std::string> editors;    // over counted edits
  uint64_t occurrences = 0;         // counted edits
  Timestamp created_at{};
  Timestamp last_edit_at{};
  std::optional<Timestamp> last_counted_at;
  Millis max_gap{0};  // largest gap between consecutive counted edits
  bool candidate_fired = false;

  double max_gap_secs() const { return double(max_gap.count()) / 1000.0; }
  ClusterSnapshot snapshot() const;
};

enum class MonitorEventKind { kNewCluster, kExistingCluster, kBreakingNewsCandidate };

std::string_view to_string(MonitorEventKind kind);

struct MonitorEvent {
  MonitorEventKind kind;
  ClusterId cluster;
  Timestamp at{};
  std::optional<ArticleKey> article;         // the edited article, when an edit caused it
  std::optional<int64_t> old_rev, diff_rev;  // its revisions
  std::optional<Candidate> candidate;        // set for kBreakingNewsCandidate
};

// Both monitoring loops: per-edit statistics with criteria checks, and periodic
// eviction. Owned by a single consumer thread.
class Monitor {
 public:
  explicit Monitor(CriteriaConfig config = {});

  const CriteriaConfig& config() const { return config_; }

  // Resolves the edit's cluster through the link graph, merges clusters the links
  // join, then records the edit.
  std::vector<MonitorEvent> observe(const RecentChange& change, const LangLinkSet& links,
                                    const EditClass& edit_class);

  // Links that arrived after the article was first seen. May merge live clusters
  // and fire a candidate. No-op when the article has been evicted meanwhile.
  std::vector<MonitorEvent> apply_links(const LangLinkSet& links, Timestamp now);

  // Records one edit on `cluster_id`, creating the cluster when unseen.
  std::vector<MonitorEvent> ingest_edit(const RecentChange& change, ClusterId cluster_id,
                                        const EditClass& edit_class);

  // Removes every cluster idle for at least ttl_secs. Returned ids ascend.
  std::vector<ClusterId> evict(Timestamp now);

  // Attaches a diff-based class to an edit for display; criteria are untouched.
  bool upgrade_display_class(const ArticleKey& article, int64_t diff_rev, const EditClass& cls);

  const Cluster* cluster(ClusterId id) const;
  std::optional<ClusterId> cluster_of_article(const ArticleKey& article);
  size_t live_clusters() const { return clusters_.size(); }
  std::vector<ClusterId> live_cluster_ids() const;
  ClusterGraph& graph() { return graph_; }

  uint64_t clusters_created() const { return clusters_created_; }
  uint64_t candidates_fired() const { return candidates_fired_; }
  uint64_t merges() const { return merges_; }

 private:
  void absorb(const ClusterAssignment& assignment);
  std::optional<MonitorEvent> check_criteria(Cluster& cluster, Timestamp now);

  CriteriaConfig config_;
  ClusterGraph graph_;
  std::unordered_map<ClusterId, Cluster, ClusterIdHash> clusters_;
  uint64_t clusters_created_ = 0;
  uint64_t candidates_fired_ = 0;
  uint64_t merges_ = 0;
};

// Interleaves both timelines by time and recomputes every statistic.
Cluster merge(Cluster a, Cluster b);

// Recomputes occurrences, editors, gaps and times from the timeline.
void recompute_statistics(Cluster& cluster);

bool criteria_met(const Cluster& cluster, Timestamp now, const CriteriaConfig& config);

}  // namespace wlm
