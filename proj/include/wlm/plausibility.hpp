#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wlm/candidate.hpp"

namespace wlm {

// One query per (language, title) of the candidate's members, ordered by language.
std::vector<SearchQuery> build_queries(const Candidate& candidate);

// A social-network search backend. search() throws on failure.
class Connector {
 public:
  virtual ~Connector() = default;
  virtual std::string name() const = 0;
  virtual std::vector<SearchHit> search(const SearchQuery& query) = 0;
};

class ConnectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha1_hex(std::string_view text);

// Canned responses under `<root>/<name>/<sha1-of-query-text>.json`, each a JSON
// array of {author, text, posted_at, source_url}.
class CorpusConnector : public Connector {
 public:
  CorpusConnector(std::filesystem::path root, std::string name);
  std::string name() const override { return name_; }
  std::vector<SearchHit> search(const SearchQuery& query) override;

  static std::filesystem::path path_for(const std::filesystem::path& root, std::string_view name,
                                        std::string_view query_text);

 private:
  std::filesystem::path root_;
  std::string name_;
};

// One CorpusConnector per subdirectory of `root`, sorted by name.
std::vector<std::shared_ptr<Connector>> corpus_connectors(const std::filesystem::path& root);

struct CheckOptions {
  std::chrono::milliseconds timeout{10000};
  // Invoked once per result as it completes, from a worker thread; calls are serialized.
  std::function<void(const PlausibilityResult&)> on_result;
};

// Runs every (connector, query) pair concurrently and returns one result per pair,
// connector-major in the given order. A pair that fails or misses the timeout yields
// status kError without affecting the others.
std::vector<PlausibilityResult> run_checks(const std::vector<SearchQuery>& queries,
                                           const std::vector<std::shared_ptr<Connector>>& connectors,
                                           Timestamp now, const CheckOptions& options = {});

class CandidateNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerdictConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Candidates in firing order with their plausibility results and verdicts.
// Candidates stay here after their cluster is evicted.
class CandidateStore {
 public:
  void add(Candidate candidate);
  void attach_results(const std::string& id, const std::vector<PlausibilityResult>& results);
  Candidate record_verdict(const Verdict& verdict);

  std::optional<Candidate> get(const std::string& id) const;
  std::vector<Candidate> list() const;
  size_t size() const;
  uint64_t verdicts() const;

 private:
  mutable std::mutex mu_;
  std::vector<Candidate> candidates_;
  std::unordered_map<std::string, size_t> index_;
  uint64_t verdicts_ = 0;
};

}  // namespace wlm
