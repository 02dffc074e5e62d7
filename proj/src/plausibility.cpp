#include "wlm/plausibility.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace wlm {

using json = nlohmann::json;

std::vector<SearchQuery> build_queries(const Candidate& candidate) {
  std::vector<SearchQuery> queries;
  for (const auto& member : candidate.cluster.members) {
    std::string text = member.title;
    std::replace(text.begin(), text.end(), '_', ' ');
    if (text.empty()) continue;
    queries.push_back({member.language, std::move(text)});
  }
  std::sort(queries.begin(), queries.end(), [](const SearchQuery& a, const SearchQuery& b) {
    return a.language != b.language ? a.language < b.language : a.query_text < b.query_text;
  });
  queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
  return queries;
}

std::string sha1_hex(std::string_view text) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

CorpusConnector::CorpusConnector(std::filesystem::path root, std::string name)
    : root_(std::move(root)), name_(std::move(name)) {}

std::filesystem::path CorpusConnector::path_for(const std::filesystem::path& root,
                                                std::string_view name,
                                                std::string_view query_text) {
  return root / std::string(name) / (sha1_hex(query_text) + ".json");
}

std::vector<SearchHit> CorpusConnector::search(const SearchQuery& query) {
  std::ifstream in(path_for(root_, name_, query.query_text), std::ios::binary);
  if (!in) throw ConnectorError(name_ + ": no corpus entry for '" + query.query_text + "'");
  std::stringstream body;
  body << in.rdbuf();
  json doc = json::parse(body.str(), nullptr, false);
  if (doc.is_object() && doc.contains("hits")) doc = doc["hits"];
  if (doc.is_discarded() || !doc.is_array()) throw ConnectorError(name_ + ": malformed corpus entry");
  std::vector<SearchHit> hits;
  for (const auto& h : doc) {
    if (!h.is_object()) throw ConnectorError(name_ + ": malformed hit");
    hits.push_back({h.value("author", ""), h.value("text", ""), h.value("posted_at", ""),
                    h.value("source_url", "")});
  }
  return hits;
}

std::vector<std::shared_ptr<Connector>> corpus_connectors(const std::filesystem::path& root) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root, ec))
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  std::vector<std::shared_ptr<Connector>> out;
  for (auto& n : names) out.push_back(std::make_shared<CorpusConnector>(root, std::move(n)));
  return out;
}

namespace {

struct CheckState {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::optional<PlausibilityResult>> results;
  bool closed = false;  // collector gave up; late workers must not call back
  std::function<void(const PlausibilityResult&)> on_result;
};

}  // namespace

std::vector<PlausibilityResult> run_checks(const std::vector<SearchQuery>& queries,
                                           const std::vector<std::shared_ptr<Connector>>& connectors,
                                           Timestamp now, const CheckOptions& options) {
  auto state = std::make_shared<CheckState>();
  state->results.resize(queries.size() * connectors.size());
  state->on_result = options.on_result;

  for (size_t c = 0; c < connectors.size(); ++c) {
    for (size_t q = 0; q < queries.size(); ++q) {
      const size_t slot = c * queries.size() + q;
      std::thread([state, slot, connector = connectors[c], query = queries[q], now] {
        PlausibilityResult r{connector->name(), query, {}, now, CheckStatus::kError, {}};
        try {
          r.hits = connector->search(query);
          r.status = r.hits.empty() ? CheckStatus::kEmpty : CheckStatus::kOk;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        std::lock_guard lock(state->mu);
        if (state->closed) return;
        if (state->on_result) state->on_result(r);
        state->results[slot] = std::move(r);
        state->cv.notify_all();
      }).detach();
    }
  }

  const auto deadline = std::chrono::steady_clock::now() + options.timeout;
  std::unique_lock lock(state->mu);
  state->cv.wait_until(lock, deadline, [&] {
    return std::all_of(state->results.begin(), state->results.end(),
                       [](const auto& r) { return r.has_value(); });
  });
  state->closed = true;

  std::vector<PlausibilityResult> out;
  out.reserve(state->results.size());
  for (size_t c = 0; c < connectors.size(); ++c) {
    for (size_t q = 0; q < queries.size(); ++q) {
      auto& slot = state->results[c * queries.size() + q];
      if (slot) {
        out.push_back(std::move(*slot));
      } else {
        out.push_back({connectors[c]->name(), queries[q], {}, now, CheckStatus::kError, "timeout"});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void CandidateStore::add(Candidate candidate) {
  std::lock_guard lock(mu_);
  if (index_.count(candidate.id)) throw std::invalid_argument("duplicate candidate " + candidate.id);
  index_.emplace(candidate.id, candidates_.size());
  candidates_.push_back(std::move(candidate));
}

void CandidateStore::attach_results(const std::string& id,
                                    const std::vector<PlausibilityResult>& results) {
  std::lock_guard lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) throw CandidateNotFound("unknown candidate " + id);
  auto& target = candidates_[it->second].plausibility;
  target.insert(target.end(), results.begin(), results.end());
}

Candidate CandidateStore::record_verdict(const Verdict& verdict) {
  if (verdict.decision == VerdictState::kPending)
    throw std::invalid_argument("a verdict must confirm or reject");
  std::lock_guard lock(mu_);
  auto it = index_.find(verdict.candidate_id);
  if (it == index_.end()) throw CandidateNotFound("unknown candidate " + verdict.candidate_id);
  Candidate& c = candidates_[it->second];
  if (c.verdict != VerdictState::kPending)
    throw VerdictConflict("candidate " + c.id + " already has a verdict");
  c.verdict = verdict.decision;
  c.verdict_by = verdict.evaluator;
  c.verdict_at = verdict.decided_at;
  c.verdict_note = verdict.note;
  ++verdicts_;
  return c;
}

std::optional<Candidate> CandidateStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return candidates_[it->second];
}

std::vector<Candidate> CandidateStore::list() const {
  std::lock_guard lock(mu_);
  return candidates_;
}

size_t CandidateStore::size() const {
  std::lock_guard lock(mu_);
  return candidates_.size();
}

uint64_t CandidateStore::verdicts() const {
  std::lock_guard lock(mu_);
  return verdicts_;
}

}  // namespace wlm
