#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wlm/clock.hpp"
#include "wlm/http_fetch.hpp"

namespace wlm {

// (language, canonical title). Titles compare with the first character
// case-insensitive, as MediaWiki capitalizes it.
struct ArticleKey {
  std::string language;
  std::string title;

  // Form used for equality, hashing and ordering.
  std::string identity() const;

  bool operator==(const ArticleKey& other) const;
  bool operator<(const ArticleKey& other) const;
};

struct ArticleKeyHash {
  size_t operator()(const ArticleKey& key) const;
};

struct LangLinkSet {
  ArticleKey source;
  std::vector<ArticleKey> siblings;  // sorted by language, one per language
  Timestamp fetched_at{};
  bool resolved = true;  // false when the lookup failed; siblings is then empty
};

struct ClusterId {
  uint64_t value = 0;
  auto operator<=>(const ClusterId&) const = default;
};

struct ClusterIdHash {
  size_t operator()(ClusterId id) const noexcept { return std::hash<uint64_t>{}(id.value); }
};

// RFC 3986 percent-encoding of UTF-8 bytes; only unreserved characters pass through.
std::string percent_encode(std::string_view text);

std::string langlinks_url(const ArticleKey& key);

// Parses a verbatim `action=query&prop=langlinks` response (format version 1 or 2).
// Throws std::runtime_error for a malformed body.
LangLinkSet parse_langlinks_response(const ArticleKey& source, std::string_view body,
                                     Timestamp fetched_at);

class LangLinkSource {
 public:
  virtual ~LangLinkSource() = default;
  virtual LangLinkSet fetch(const ArticleKey& key, Timestamp now) = 0;
  // Local sources answer without network latency and may be queried inline.
  virtual bool is_local() const = 0;
};

// Reads `<root>/langlinks/<lang>/<percent-encoded-title>.json`.
class FixtureLangLinks : public LangLinkSource {
 public:
  explicit FixtureLangLinks(std::filesystem::path root);
  LangLinkSet fetch(const ArticleKey& key, Timestamp now) override;
  bool is_local() const override { return true; }

  static std::filesystem::path path_for(const std::filesystem::path& root, const ArticleKey& key);

 private:
  std::filesystem::path root_;
};

class HttpLangLinks : public LangLinkSource {
 public:
  explicit HttpLangLinks(HttpGetter& http, Millis rate_limit_retry = Millis{1000});
  LangLinkSet fetch(const ArticleKey& key, Timestamp now) override;
  bool is_local() const override { return false; }

 private:
  HttpGetter& http_;
  Millis retry_delay_;
};

// No lookups at all: every article stays a singleton.
class NullLangLinks : public LangLinkSource {
 public:
  LangLinkSet fetch(const ArticleKey& key, Timestamp now) override;
  bool is_local() const override { return true; }
};

// TTL + LRU cache in front of a source. Safe for concurrent use.
class LangLinkCache {
 public:
  struct Options {
    Millis ttl = std::chrono::hours{6};
    size_t capacity = 100000;
  };

  LangLinkCache(LangLinkSource& source, Options options);
  explicit LangLinkCache(LangLinkSource& source) : LangLinkCache(source, Options{}) {}

  LangLinkSet fetch(const ArticleKey& key, Timestamp now);
  std::optional<LangLinkSet> peek(const ArticleKey& key, Timestamp now);
  bool source_is_local() const { return source_.is_local(); }

  size_t size() const;
  uint64_t hits() const;
  uint64_t misses() const;

 private:
  void insert_locked(const LangLinkSet& links);

  using Lru = std::list<ArticleKey>;
  struct Entry {
    LangLinkSet links;
    Lru::iterator position;
  };

  LangLinkSource& source_;
  Options options_;
  mutable std::mutex mu_;
  Lru lru_;
  std::unordered_map<ArticleKey, Entry, ArticleKeyHash> entries_;
  uint64_t hits_ = 0;
  uint64_t misses_ = 0;
};

struct ClusterAssignment {
  ClusterId id;
  bool created = false;                // no key of the link set was known before
  std::vector<ClusterId> absorbed;     // clusters folded into `id`, ascending
  std::vector<ArticleKey> new_members; // keys seen for the first time
};

// Union-find over article keys. Linking is undirected: any link joins both ends.
// When two clusters meet, the older (smaller) id survives.
class ClusterGraph {
 public:
  ClusterAssignment cluster_of(const ArticleKey& key, const LangLinkSet& links);
  std::optional<ClusterId> find(const ArticleKey& key);

  // Forgets a whole cluster. `members` must be every key of one cluster.
  void release(std::span<const ArticleKey> members);

  size_t key_count() const { return index_.size(); }

 private:
  struct Node {
    uint32_t parent;
    uint32_t rank;
    ClusterId id;
  };

  uint32_t root(uint32_t node);
  uint32_t add(const ArticleKey& key);

  std::unordered_map<ArticleKey, uint32_t, ArticleKeyHash> index_;
  std::vector<Node> nodes_;
  std::vector<uint32_t> free_;
  uint64_t next_id_ = 1;
};

}  // namespace wlm
