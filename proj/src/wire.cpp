#include "wlm/wire.hpp"

#include <stdexcept>

namespace wlm {

namespace {

std::string ts(Timestamp t) { return format_iso8601(t); }

Timestamp parse_ts(const json& j) {
  auto t = parse_iso8601(j.get<std::string>());
  if (!t) throw std::runtime_error("bad timestamp " + j.get<std::string>());
  return *t;
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

std::optional<Timestamp> get_optional_ts(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return parse_ts(j[key]);
}

EditLevel level_from(std::string_view s) {
  if (s == "trivial") return EditLevel::kTrivial;
  if (s == "major") return EditLevel::kMajor;
  return EditLevel::kMinor;
}

CheckStatus status_from(std::string_view s) {
  if (s == "ok") return CheckStatus::kOk;
  if (s == "empty") return CheckStatus::kEmpty;
  return CheckStatus::kError;
}

}  // namespace

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kOk: return "ok";
    case CheckStatus::kError: return "error";
    case CheckStatus::kEmpty: return "empty";
  }
  return "error";
}

std::string_view to_string(VerdictState state) {
  switch (state) {
    case VerdictState::kPending: return "pending";
    case VerdictState::kConfirmed: return "confirmed";
    case VerdictState::kRejected: return "rejected";
  }
  return "pending";
}

std::optional<VerdictState> verdict_state_from(std::string_view text) {
  if (text == "pending") return VerdictState::kPending;
  if (text == "confirmed") return VerdictState::kConfirmed;
  if (text == "rejected") return VerdictState::kRejected;
  return std::nullopt;
}

void to_json(json& j, const ArticleKey& v) { j = {{"language", v.language}, {"title", v.title}}; }
void from_json(const json& j, ArticleKey& v) {
  v.language = j.at("language").get<std::string>();
  v.title = j.at("title").get<std::string>();
}

void to_json(json& j, const EditClass& v) {
  j = {{"level", to_string(v.level)}, {"signals", v.signals}};
}
void from_json(const json& j, EditClass& v) {
  v.level = level_from(j.at("level").get<std::string>());
  v.signals = j.at("signals").get<std::set<std::string>>();
}

void to_json(json& j, const EditRecord& v) {
  j = {{"timestamp", ts(v.timestamp)}, {"editor", v.editor},   {"article", v.article},
       {"delta", v.delta},             {"class", v.edit_class}, {"counted", v.counted}};
  put_optional(j, "old_rev", v.old_rev);
  put_optional(j, "diff_rev", v.diff_rev);
  put_optional(j, "display_class", v.display_class);
}
void from_json(const json& j, EditRecord& v) {
  v.timestamp = parse_ts(j.at("timestamp"));
  v.editor = j.at("editor").get<std::string>();
  v.article = j.at("article").get<ArticleKey>();
  v.delta = j.at("delta").get<int64_t>();
  v.edit_class = j.at("class").get<EditClass>();
  v.counted = j.at("counted").get<bool>();
  v.old_rev = get_optional<int64_t>(j, "old_rev");
  v.diff_rev = get_optional<int64_t>(j, "diff_rev");
  v.display_class = get_optional<EditClass>(j, "display_class");
}

void to_json(json& j, const ClusterSnapshot& v) {
  j = {{"cluster_id", v.cluster.value}, {"members", v.members},
       {"occurrences", v.occurrences},  {"editors", v.editors},
       {"timeline", v.timeline},        {"max_gap_ms", v.max_gap.count()}};
}
void from_json(const json& j, ClusterSnapshot& v) {
  v.cluster = ClusterId{j.at("cluster_id").get<uint64_t>()};
  v.members = j.at("members").get<std::vector<ArticleKey>>();
  v.occurrences = j.at("occurrences").get<uint64_t>();
  v.editors = j.at("editors").get<std::vector<std::string>>();
  v.timeline = j.at("timeline").get<std::vector<EditRecord>>();
  v.max_gap = Millis{j.at("max_gap_ms").get<int64_t>()};
}

void to_json(json& j, const SearchQuery& v) {
  j = {{"language", v.language}, {"query_text", v.query_text}};
}
void from_json(const json& j, SearchQuery& v) {
  v.language = j.at("language").get<std::string>();
  v.query_text = j.at("query_text").get<std::string>();
}

void to_json(json& j, const SearchHit& v) {
  j = {{"author", v.author}, {"text", v.text}, {"posted_at", v.posted_at},
       {"source_url", v.source_url}};
}
void from_json(const json& j, SearchHit& v) {
  v.author = j.value("author", "");
  v.text = j.value("text", "");
  v.posted_at = j.value("posted_at", "");
  v.source_url = j.value("source_url", "");
}

void to_json(json& j, const PlausibilityResult& v) {
  j = {{"connector", v.connector},     {"query", v.query},
       {"hits", v.hits},               {"fetched_at", ts(v.fetched_at)},
       {"status", to_string(v.status)}, {"error", v.error}};
}
void from_json(const json& j, PlausibilityResult& v) {
  v.connector = j.at("connector").get<std::string>();
  v.query = j.at("query").get<SearchQuery>();
  v.hits = j.at("hits").get<std::vector<SearchHit>>();
  v.fetched_at = parse_ts(j.at("fetched_at"));
  v.status = status_from(j.at("status").get<std::string>());
  v.error = j.value("error", "");
}

void to_json(json& j, const Verdict& v) {
  j = {{"candidate_id", v.candidate_id},
       {"decision", to_string(v.decision)},
       {"evaluator", v.evaluator},
       {"decided_at", ts(v.decided_at)}};
  put_optional(j, "note", v.note);
}
void from_json(const json& j, Verdict& v) {
  v.candidate_id = j.at("candidate_id").get<std::string>();
  auto decision = verdict_state_from(j.at("decision").get<std::string>());
  if (!decision || *decision == VerdictState::kPending)
    throw std::runtime_error("verdict decision must be confirmed or rejected");
  v.decision = *decision;
  v.evaluator = j.at("evaluator").get<std::string>();
  v.decided_at = parse_ts(j.at("decided_at"));
  v.note = get_optional<std::string>(j, "note");
}

void to_json(json& j, const Candidate& v) {
  j = {{"id", v.id},
       {"cluster", v.cluster},
       {"fired_at", ts(v.fired_at)},
       {"queries", v.queries},
       {"plausibility", v.plausibility},
       {"verdict", to_string(v.verdict)}};
  put_optional(j, "verdict_by", v.verdict_by);
  j["verdict_at"] = v.verdict_at ? json(ts(*v.verdict_at)) : json(nullptr);
  put_optional(j, "verdict_note", v.verdict_note);
}
void from_json(const json& j, Candidate& v) {
  v.id = j.at("id").get<std::string>();
  v.cluster = j.at("cluster").get<ClusterSnapshot>();
  v.fired_at = parse_ts(j.at("fired_at"));
  v.queries = j.at("queries").get<std::vector<SearchQuery>>();
  v.plausibility = j.at("plausibility").get<std::vector<PlausibilityResult>>();
  v.verdict = verdict_state_from(j.at("verdict").get<std::string>()).value_or(VerdictState::kPending);
  v.verdict_by = get_optional<std::string>(j, "verdict_by");
  v.verdict_at = get_optional_ts(j, "verdict_at");
  v.verdict_note = get_optional<std::string>(j, "verdict_note");
}

json cluster_view(const Cluster& c, Timestamp now) {
  json members = json::array();
  for (const auto& m : c.members) members.push_back(m);
  const auto since = c.last_counted_at ? now - *c.last_counted_at : now - c.last_edit_at;
  return {{"cluster_id", c.id.value},
          {"members", std::move(members)},
          {"occurrences", c.occurrences},
          {"edits", c.edits.size()},
          {"editors", c.editors},
          {"num_editors", c.editors.size()},
          {"max_gap_secs", c.max_gap_secs()},
          {"secs_since_last_edit", double(Millis(since).count()) / 1000.0},
          {"created_at", ts(c.created_at)},
          {"last_edit_at", ts(c.last_edit_at)},
          {"candidate_fired", c.candidate_fired}};
}

}  // namespace wlm
