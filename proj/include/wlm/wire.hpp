#pragma once

// JSON forms shared by the push channel, the HTTP endpoints and the run log.

#include <json.hpp>

#include "wlm/candidate.hpp"
#include "wlm/monitor.hpp"

namespace wlm {

using json = nlohmann::json;

std::string_view to_string(CheckStatus status);
std::string_view to_string(VerdictState state);
std::optional<VerdictState> verdict_state_from(std::string_view text);

void to_json(json& j, const ArticleKey& v);
void from_json(const json& j, ArticleKey& v);
void to_json(json& j, const EditClass& v);
void from_json(const json& j, EditClass& v);
void to_json(json& j, const EditRecord& v);
void from_json(const json& j, EditRecord& v);
void to_json(json& j, const ClusterSnapshot& v);
void from_json(const json& j, ClusterSnapshot& v);
void to_json(json& j, const SearchQuery& v);
void from_json(const json& j, SearchQuery& v);
void to_json(json& j, const SearchHit& v);
void from_json(const json& j, SearchHit& v);
void to_json(json& j, const PlausibilityResult& v);
void from_json(const json& j, PlausibilityResult& v);
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
void to_json(json& j, const Candidate& v);
void from_json(const json& j, Candidate& v);

// Live cluster card: counts, editors, members and seconds since the last edit.
json cluster_view(const Cluster& cluster, Timestamp now);

}  // namespace wlm
