#include <doctest.h>

#include <thread>

#include "support.hpp"
#include "wlm/pipeline.hpp"

using namespace wlm;
using namespace wlm::test;

namespace {

const std::filesystem::path kPope = std::filesystem::path(WLM_DATA_DIR) / "pope";

struct Rig {
  explicit Rig(LangLinkSource& source, std::vector<std::shared_ptr<Connector>> connectors = {},
               PipelineOptions options = {})
      : cache(source), gateway(store, nullptr, broadcaster),
        pipeline(options, cache, diffs, std::move(connectors), gateway) {}
  LangLinkCache cache;
  NullDiffs diffs;
  CandidateStore store;
  Broadcaster broadcaster;
  Gateway gateway;
  Pipeline pipeline;
};

// Link lookups that take a while and do not count as local.
class SlowLinks : public LangLinkSource {
 public:
  LangLinkSet fetch(const ArticleKey& key, Timestamp now) override {
    std::this_thread::sleep_for(Millis{150});
    return inner.fetch(key, now);
  }
  bool is_local() const override { return false; }
  MapLangLinks inner;
};

}  // namespace

TEST_CASE("pope replay through the pipeline") {
  FixtureLangLinks links(kPope / "fixtures");
  Rig rig(links);
  rig.pipeline.set_tick_origin(at("2013-02-11T10:58:00Z"));
  const auto summary = replay(kPope / "pope.tsv", {}, rig.pipeline);
  CHECK(summary.delivered == 6);
  const auto list = rig.store.list();
  REQUIRE(list.size() == 1);
  const Candidate& c = list[0];
  CHECK(c.id == "cand-000001");
  CHECK(format_iso8601(c.fired_at) == "2013-02-11T11:01:00Z");
  // linked siblings are members even without edits of their own
  CHECK(c.cluster.members.size() == 5);
  CHECK(c.cluster.occurrences == 5);
  CHECK(c.cluster.editors == std::vector<std::string>{"Corvalis", "Maelstrom42", "Pierrot-lune", "Tarnhelm"});
  CHECK(c.queries.size() == 5);
  CHECK(rig.pipeline.now() == at("2013-02-11T11:02:00Z"));

  const RunStats s = rig.pipeline.stats();
  CHECK(s.events_ingested == 6);
  CHECK(s.candidates_fired == 1);
  CHECK(s.clusters_created == 1);
  CHECK(s.live_clusters == 1);
  CHECK(s.parse_errors == 0);
}

TEST_CASE("without links the pope edits stay in two clusters and nothing fires") {
  NullLangLinks links;
  Rig rig(links);
  replay(kPope / "pope.tsv", {}, rig.pipeline);
  CHECK(rig.store.size() == 0);
  CHECK(rig.pipeline.stats().clusters_created == 2);
}

TEST_CASE("bots and meta pages are skipped") {
  MapLangLinks links;
  Rig rig(links);
  const Timestamp t0 = secs(1000);
  auto bot = make_change("en", "Topic", "HelperBot", t0);
  auto flagged = make_change("en", "Topic", "Human", t0 + Millis{1});
  flagged.flags = "B";
  rig.pipeline.on_change(bot);
  rig.pipeline.on_change(flagged);
  rig.pipeline.on_change(make_change("en", "User talk:Someone", "A", t0 + Millis{2}));
  rig.pipeline.on_change(make_change("en", "Topic", "A", t0 + Millis{3}));
  rig.pipeline.on_skipped(RawLine{"#en.wikipedia", "junk", t0 + Millis{4}}, ParseError("x", "junk"));
  const RunStats s = rig.pipeline.stats();
  CHECK(s.events_ingested == 4);
  CHECK(s.bot_skipped == 2);
  CHECK(s.meta_skipped == 1);
  CHECK(s.parse_errors == 1);
  CHECK(s.clusters_created == 1);

  PipelineOptions with_bots;
  with_bots.include_bots = true;
  Rig rig2(links, {}, with_bots);
  rig2.pipeline.on_change(bot);
  CHECK(rig2.pipeline.stats().bot_skipped == 0);
  CHECK(rig2.pipeline.stats().clusters_created == 1);
}

TEST_CASE("eviction ticks follow the event clock") {
  MapLangLinks links;
  Rig rig(links);
  const Timestamp t0 = secs(0);
  rig.pipeline.set_tick_origin(t0);
  rig.pipeline.on_change(make_change("en", "A", "x", t0 + std::chrono::seconds{10}));
  rig.pipeline.advance_to(t0 + std::chrono::seconds{240});
  CHECK(rig.pipeline.stats().live_clusters == 1);  // idle 230 s at the first tick
  rig.pipeline.advance_to(t0 + std::chrono::seconds{479});
  CHECK(rig.pipeline.stats().live_clusters == 1);
  rig.pipeline.advance_to(t0 + std::chrono::seconds{480});
  CHECK(rig.pipeline.stats().live_clusters == 0);
  CHECK(rig.pipeline.stats().clusters_evicted == 1);
  // Skipped lines move the clock too.
  rig.pipeline.on_change(make_change("en", "B", "x", t0 + std::chrono::seconds{481}));
  rig.pipeline.on_skipped(RawLine{"#en.wikipedia", "junk", t0 + std::chrono::seconds{960}},
                          ParseError("x", "junk"));
  CHECK(rig.pipeline.stats().live_clusters == 0);
}

TEST_CASE("plausibility results are attached in replay") {
  TempDir corpus;
  FixtureLangLinks links(kPope / "fixtures");
  for (const std::string name : {"alpha", "beta"}) {
    const auto p = CorpusConnector::path_for(corpus.path(), name, "Pope Benedict XVI");
    write_file(p, R"([{"author":"@news","text":"The pope resigns","posted_at":"2013-02-11T10:59:00Z","source_url":"http://example.org/a"}])");
  }
  Rig rig(links, corpus_connectors(corpus.path()));
  replay(kPope / "pope.tsv", {}, rig.pipeline);
  const auto list = rig.store.list();
  REQUIRE(list.size() == 1);
  const auto& results = list[0].plausibility;
  REQUIRE(results.size() == 10);  // 2 connectors x 5 queries
  int ok = 0;
  for (const auto& r : results) {
    CHECK(r.fetched_at == list[0].fired_at);
    if (r.status == CheckStatus::kOk) {
      ++ok;
      CHECK(r.query.query_text == "Pope Benedict XVI");
      CHECK(r.hits.size() == 1);
    } else {
      CHECK(r.status == CheckStatus::kError);  // no corpus entry for that query
    }
  }
  CHECK(ok == 2);
}

TEST_CASE("push clients see cluster events") {
  FixtureLangLinks links(kPope / "fixtures");
  Rig rig(links);
  auto sub = rig.broadcaster.subscribe();
  replay(kPope / "pope.tsv", {}, rig.pipeline);
  rig.gateway.flush();
  std::vector<std::string> kinds;
  while (auto m = sub->next(Millis{20})) kinds.push_back(json::parse(*m)["kind"]);
  REQUIRE(kinds.size() == 8);
  CHECK(kinds[0] == "newCluster");
  for (size_t i = 1; i < 4; ++i) CHECK(kinds[i] == "existingCluster");
  // the fifth edit fires, right after its own cluster event
  CHECK(kinds[4] == "existingCluster");
  CHECK(kinds[5] == "breakingNewsCandidate");
  CHECK(kinds[6] == "stats");  // tick at 11:02, before the last edit
  CHECK(kinds[7] == "existingCluster");
}

TEST_CASE("asynchronous mode merges on late links") {
  SlowLinks links;
  links.inner.set({"en", "Storm"}, {{"fr", "Tempête"}});
  links.inner.set({"fr", "Tempête"}, {{"en", "Storm"}});
  Rig rig(links);
  rig.pipeline.start_async();
  const Timestamp t0 = wall_now();
  for (int i = 0; i < 3; ++i)
    rig.pipeline.on_change(make_change("en", "Storm", "Alice", t0 + std::chrono::seconds{i}));
  for (int i = 3; i < 5; ++i)
    rig.pipeline.on_change(make_change("fr", "Tempête", "Bob", t0 + std::chrono::seconds{i}));
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds{5};
  while (rig.store.size() == 0 && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(Millis{20});
  rig.pipeline.stop_async();
  const auto list = rig.store.list();
  REQUIRE(list.size() == 1);
  CHECK(list[0].cluster.members.size() == 2);
  CHECK(list[0].cluster.occurrences == 5);
  CHECK(list[0].fired_at >= t0 + std::chrono::seconds{4});
  CHECK(rig.pipeline.stats().events_ingested == 5);
}
