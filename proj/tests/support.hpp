#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wlm/clock.hpp"
#include "wlm/lang_graph.hpp"
#include "wlm/rc_ingest.hpp"

namespace wlm::test {

inline Timestamp at(std::string_view iso) { return *parse_iso8601(iso); }

inline Timestamp secs(int64_t s) { return from_epoch_ms(s * 1000); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("wlm-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline RecentChange make_change(std::string lang, std::string title, std::string editor,
                                Timestamp t, int64_t delta = 50, std::string comment = "update") {
  RecentChange c;
  c.language = std::move(lang);
  c.title = std::move(title);
  c.editor = std::move(editor);
  c.timestamp = t;
  c.delta = delta;
  c.comment = std::move(comment);
  c.url = "http://" + c.language + ".wikipedia.org/w/index.php?title=X";
  return c;
}

// Links held in memory; anything not registered resolves with no siblings.
class MapLangLinks : public LangLinkSource {
 public:
  void set(const ArticleKey& source, std::vector<ArticleKey> siblings) {
    std::lock_guard lock(mu_);
    links_[source.identity()] = std::move(siblings);
  }
  LangLinkSet fetch(const ArticleKey& key, Timestamp now) override {
    std::lock_guard lock(mu_);
    ++calls;
    auto it = links_.find(key.identity());
    LangLinkSet out{key, {}, now, true};
    if (it != links_.end()) out.siblings = it->second;
    std::sort(out.siblings.begin(), out.siblings.end());
    return out;
  }
  bool is_local() const override { return true; }
  int calls = 0;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<ArticleKey>> links_;
};

class RecordingSink : public ChangeSink {
 public:
  void on_change(const RecentChange& change) override {
    std::lock_guard lock(mu);
    changes.push_back(change);
  }
  void on_skipped(const RawLine& line, const ParseError&) override {
    std::lock_guard lock(mu);
    skipped.push_back(line);
  }
  std::mutex mu;
  std::vector<RecentChange> changes;
  std::vector<RawLine> skipped;
};

}  // namespace wlm::test
