#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wlm/clock.hpp"
#include "wlm/edit_classifier.hpp"
#include "wlm/lang_graph.hpp"

namespace wlm {

// One edit as kept in a cluster timeline.
struct EditRecord {
  Timestamp timestamp{};
  std::string editor;
  ArticleKey article;
  int64_t delta = 0;
  std::optional<int64_t> old_rev;
  std::optional<int64_t> diff_rev;
  EditClass edit_class;  // what the criteria saw
  bool counted = true;   // false for trivial edits
  std::optional<EditClass> display_class;  // later diff-based upgrade, display only
};

struct SearchQuery {
  std::string language;
  std::string query_text;

  bool operator==(const SearchQuery&) const = default;
};

struct SearchHit {
  std::string author;
  std::string text;
  std::string posted_at;
  std::string source_url;

  bool operator==(const SearchHit&) const = default;
};

enum class CheckStatus { kOk, kError, kEmpty };

struct PlausibilityResult {
  std::string connector;
  SearchQuery query;
  std::vector<SearchHit> hits;
  Timestamp fetched_at{};
  CheckStatus status = CheckStatus::kError;
  std::string error;
};

enum class VerdictState { kPending, kConfirmed, kRejected };

struct Verdict {
  std::string candidate_id;
  VerdictState decision = VerdictState::kConfirmed;  // never kPending
  std::string evaluator;
  Timestamp decided_at{};
  std::optional<std::string> note;
};

struct ClusterSnapshot {
  ClusterId cluster;
  std::vector<ArticleKey> members;
  uint64_t occurrences = 0;
  std::vector<std::string> editors;
  std::vector<EditRecord> timeline;
  Millis max_gap{0};
};

struct Candidate {
  std::string id;
  ClusterSnapshot cluster;
  Timestamp fired_at{};  // time of the edit (or late link merge) that met the criteria
  std::vector<SearchQuery> queries;
  std::vector<PlausibilityResult> plausibility;
  VerdictState verdict = VerdictState::kPending;
  std::optional<std::string> verdict_by;
  std::optional<Timestamp> verdict_at;
  std::optional<std::string> verdict_note;
};

}  // namespace wlm
