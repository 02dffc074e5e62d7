#include "wlm/lang_graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "wlm/rc_ingest.hpp"

namespace wlm {

using json = nlohmann::json;

std::string ArticleKey::identity() const {
  std::string out;
  out.reserve(language.size() + title.size() + 1);
  out += language;
  out += '\x1f';
  out += title;
  const size_t first = language.size() + 1;
  // ASCII only; other scripts keep their case.
  if (first < out.size() && out[first] >= 'a' && out[first] <= 'z') out[first] -= 'a' - 'A';
  return out;
}

bool ArticleKey::operator==(const ArticleKey& other) const {
  if (language != other.language || title.size() != other.title.size()) return false;
  if (title.empty()) return true;
  auto upper = [](char c) { return (c >= 'a' && c <= 'z') ? char(c - ('a' - 'A')) : c; };
  return upper(title[0]) == upper(other.title[0]) &&
         std::equal(title.begin() + 1, title.end(), other.title.begin() + 1);
}

bool ArticleKey::operator<(const ArticleKey& other) const { return identity() < other.identity(); }

size_t ArticleKeyHash::operator()(const ArticleKey& key) const {
  return std::hash<std::string>{}(key.identity());
}

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size() * 3);
  for (unsigned char c : text) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
        c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string langlinks_url(const ArticleKey& key) {
  return "http://" + key.language +
         ".wikipedia.org/w/api.php?action=query&format=json&prop=langlinks&titles=" +
         percent_encode(key.title) + "&lllimit=500";
}

LangLinkSet parse_langlinks_response(const ArticleKey& source, std::string_view body,
                                     Timestamp fetched_at) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object())
    throw std::runtime_error("langlinks response is not a JSON object");
  if (doc.contains("error")) throw std::runtime_error("langlinks API error");
  const auto query = doc.find("query");
  if (query == doc.end() || !query->is_object())
    throw std::runtime_error("langlinks response without query");

  LangLinkSet out{source, {}, fetched_at, true};
  const auto pages = query->find("pages");
  if (pages == query->end()) return out;

  auto collect = [&](const json& page) {
    const auto links = page.find("langlinks");
    if (links == page.end() || !links->is_array()) return;
    for (const auto& link : *links) {
      if (!link.is_object() || !link.contains("lang")) continue;
      std::string title;
      if (link.contains("*") && link["*"].is_string()) title = link["*"].get<std::string>();
      else if (link.contains("title") && link["title"].is_string())
        title = link["title"].get<std::string>();
      ArticleKey sibling{link["lang"].get<std::string>(), canonical_title(title)};
      if (sibling.language.empty() || sibling.title.empty() || sibling == source) continue;
      const bool seen = std::any_of(out.siblings.begin(), out.siblings.end(), [&](const auto& s) {
        return s.language == sibling.language;
      });
      if (!seen) out.siblings.push_back(std::move(sibling));
    }
  };
  if (pages->is_object()) {
    for (const auto& [id, page] : pages->items()) collect(page);
  } else if (pages->is_array()) {
    for (const auto& page : *pages) collect(page);
  } else {
    throw std::runtime_error("langlinks pages has unexpected type");
  }
  std::sort(out.siblings.begin(), out.siblings.end(),
            [](const ArticleKey& a, const ArticleKey& b) { return a.language < b.language; });
  return out;
}

// ---------------------------------------------------------------------------

FixtureLangLinks::FixtureLangLinks(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FixtureLangLinks::path_for(const std::filesystem::path& root,
                                                 const ArticleKey& key) {
  return root / "langlinks" / key.language / (percent_encode(key.title) + ".json");
}

LangLinkSet FixtureLangLinks::fetch(const ArticleKey& key, Timestamp now) {
  std::ifstream in(path_for(root_, key), std::ios::binary);
  if (!in) return {key, {}, now, false};
  std::stringstream body;
  body << in.rdbuf();
  try {
    return parse_langlinks_response(key, body.str(), now);
  } catch (const std::exception&) {
    return {key, {}, now, false};
  }
}

HttpLangLinks::HttpLangLinks(HttpGetter& http, Millis rate_limit_retry)
    : http_(http), retry_delay_(rate_limit_retry) {}

LangLinkSet HttpLangLinks::fetch(const ArticleKey& key, Timestamp now) {
  const std::string url = langlinks_url(key);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = http_.get(url);
    if (!res) break;
    bool rate_limited = res->status == 429;
    if (res->status == 200) {
      try {
        return parse_langlinks_response(key, res->body, now);
      } catch (const std::exception&) {
        json doc = json::parse(res->body, nullptr, false);
        rate_limited = !doc.is_discarded() && doc.is_object() && doc.contains("error") &&
                       doc["error"].value("code", "") == "ratelimited";
      }
    }
    if (!rate_limited) break;
    if (attempt == 0) std::this_thread::sleep_for(retry_delay_);
  }
  return {key, {}, now, false};
}

LangLinkSet NullLangLinks::fetch(const ArticleKey& key, Timestamp now) {
  return {key, {}, now, false};
}

// ---------------------------------------------------------------------------

LangLinkCache::LangLinkCache(LangLinkSource& source, Options options)
    : source_(source), options_(options) {}

std::optional<LangLinkSet> LangLinkCache::peek(const ArticleKey& key, Timestamp now) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (now - it->second.links.fetched_at >= options_.ttl) {
    lru_.erase(it->second.position);
    entries_.erase(it);
    return std::nullopt;
  }
  lru_.splice(lru_.begin(), lru_, it->second.position);
  return it->second.links;
}

LangLinkSet LangLinkCache::fetch(const ArticleKey& key, Timestamp now) {
  if (auto cached = peek(key, now)) {
    std::lock_guard lock(mu_);
    ++hits_;
    return *cached;
  }
  LangLinkSet links = source_.fetch(key, now);
  std::lock_guard lock(mu_);
  ++misses_;
  if (links.resolved) insert_locked(links);
  return links;
}

void LangLinkCache::insert_locked(const LangLinkSet& links) {
  if (options_.capacity == 0) return;
  auto it = entries_.find(links.source);
  if (it != entries_.end()) {
    it->second.links = links;
    lru_.splice(lru_.begin(), lru_, it->second.position);
    return;
  }
  while (entries_.size() >= options_.capacity) {
    entries_.erase(lru_.back());
    lru_.pop_back();
  }
  lru_.push_front(links.source);
  entries_.emplace(links.source, Entry{links, lru_.begin()});
}

size_t LangLinkCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

uint64_t LangLinkCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

uint64_t LangLinkCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

// ---------------------------------------------------------------------------

uint32_t ClusterGraph::root(uint32_t node) {
  uint32_t r = node;
  while (nodes_[r].parent != r) r = nodes_[r].parent;
  while (nodes_[node].parent != r) {
    const uint32_t next = nodes_[node].parent;
    nodes_[node].parent = r;
    node = next;
  }
  return r;
}

uint32_t ClusterGraph::add(const ArticleKey& key) {
  uint32_t n;
  if (!free_.empty()) {
    n = free_.back();
    free_.pop_back();
  } else {
    n = static_cast<uint32_t>(nodes_.size());
    nodes_.push_back({});
  }
  nodes_[n] = Node{n, 0, ClusterId{}};
  index_.emplace(key, n);
  return n;
}

std::optional<ClusterId> ClusterGraph::find(const ArticleKey& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return nodes_[root(it->second)].id;
}

ClusterAssignment ClusterGraph::cluster_of(const ArticleKey& key, const LangLinkSet& links) {
  ClusterAssignment out;
  std::vector<const ArticleKey*> keys{&key};
  for (const auto& s : links.siblings)
    if (!(s == key)) keys.push_back(&s);

  std::vector<ClusterId> existing;
  std::vector<uint32_t> roots;
  for (const ArticleKey* k : keys) {
    auto it = index_.find(*k);
    uint32_t node;
    if (it == index_.end()) {
      node = add(*k);
      out.new_members.push_back(*k);
    } else {
      node = root(it->second);
      existing.push_back(nodes_[node].id);
    }
    roots.push_back(node);
  }
  std::sort(existing.begin(), existing.end());
  existing.erase(std::unique(existing.begin(), existing.end()), existing.end());

  out.created = existing.empty();
  out.id = out.created ? ClusterId{next_id_++} : existing.front();
  if (!existing.empty())
    out.absorbed.assign(existing.begin() + 1, existing.end());

  uint32_t joined = root(roots.front());
  for (size_t i = 1; i < roots.size(); ++i) {
    uint32_t other = root(roots[i]);
    if (other == joined) continue;
    if (nodes_[joined].rank < nodes_[other].rank) std::swap(joined, other);
    nodes_[other].parent = joined;
    if (nodes_[joined].rank == nodes_[other].rank) ++nodes_[joined].rank;
  }
  nodes_[joined].id = out.id;
  return out;
}

void ClusterGraph::release(std::span<const ArticleKey> members) {
  for (const auto& key : members) {
    auto it = index_.find(key);
    if (it == index_.end()) continue;
    free_.push_back(it->second);
    index_.erase(it);
  }
}

}  // namespace wlm
