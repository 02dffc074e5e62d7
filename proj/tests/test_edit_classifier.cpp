#include <doctest.h>

#include <deque>
#include <random>

#include "support.hpp"
#include "wlm/edit_classifier.hpp"

using namespace wlm;
using namespace wlm::test;

namespace {

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// One row per pair; a missing side becomes a lone added/removed row.
std::string compare_body(const std::vector<std::pair<std::optional<std::string>, std::optional<std::string>>>& rows,
                         std::optional<std::pair<int64_t, int64_t>> sizes = std::nullopt) {
  std::string html = "<tr><td colspan=\"2\" class=\"diff-lineno\">Line 1:</td></tr>\n";
  for (const auto& [removed, added] : rows) {
    html += "<tr>";
    if (removed) html += "<td class=\"diff-marker\">−</td><td class=\"diff-deletedline\"><div>" + escape(*removed) + "</div></td>";
    else html += "<td colspan=\"2\" class=\"diff-empty\"></td>";
    if (added) html += "<td class=\"diff-marker\">+</td><td class=\"diff-addedline\"><div>" + escape(*added) + "</div></td>";
    else html += "<td colspan=\"2\" class=\"diff-empty\"></td>";
    html += "</tr>\n";
  }
  std::string body = "{\"compare\":{\"fromrevid\":1,\"torevid\":2,";
  if (sizes) body += "\"fromsize\":" + std::to_string(sizes->first) + ",\"tosize\":" + std::to_string(sizes->second) + ",";
  std::string quoted;
  for (char c : html) {
    if (c == '"') quoted += "\\\"";
    else if (c == '\n') quoted += "\\n";
    else quoted.push_back(c);
  }
  body += "\"*\":\"" + quoted + "\"}}";
  return body;
}

RevisionDiff paired(std::string before, std::string after) {
  RevisionDiff d;
  d.removed = {std::move(before)};
  d.added = {std::move(after)};
  d.net_delta = static_cast<int64_t>(d.added[0].size()) - static_cast<int64_t>(d.removed[0].size());
  return d;
}

const std::vector<std::string> kSentences = {
    "Benedict XVI is the head of the Catholic Church and sovereign of the Vatican City State.",
    "The river is 104 miles long, and its watershed covers 3,400 square miles in Pennsylvania.",
    "She has published three novels; the second won a regional prize in 2009.",
    "The club, founded in 1899, plays its home games at the municipal stadium (capacity 12,000).",
    "Die Stadt liegt am Ufer des Flusses und hat rund 40.000 Einwohner.",
    "Le pape est l'évêque de Rome et le chef de l'Église catholique.",
};

}  // namespace

TEST_CASE("compare url") {
  CHECK(compare_url("en", 100, 200) ==
        "http://en.wikipedia.org/w/api.php?action=compare&torev=200&fromrev=100&format=json");
  CHECK_THROWS_AS(compare_url("en", 0, 1), InvalidRevision);
  CHECK_THROWS_AS(compare_url("en", 5, -1), InvalidRevision);
}

TEST_CASE("compare responses") {
  const auto body = compare_body({{std::string("a <b> & c"), std::string("a <b> & d")},
                                  {std::nullopt, std::string("new line")},
                                  {std::string("gone"), std::nullopt}},
                                 std::pair<int64_t, int64_t>{1000, 1013});
  const RevisionDiff d = parse_compare_response(body);
  CHECK(d.available);
  CHECK(d.from_rev == 1);
  CHECK(d.to_rev == 2);
  REQUIRE(d.added.size() == 2);
  REQUIRE(d.removed.size() == 2);
  CHECK(d.removed[0] == "a <b> & c");
  CHECK(d.added[0] == "a <b> & d");
  CHECK(d.added[1] == "new line");
  CHECK(d.removed[1] == "gone");
  CHECK(d.net_delta == 13);

  const RevisionDiff no_sizes = parse_compare_response(compare_body({{std::nullopt, std::string("abc")}}));
  CHECK(no_sizes.net_delta == 3);

  CHECK_THROWS(parse_compare_response("{}"));
  CHECK_THROWS(parse_compare_response("nope"));

  RevisionDiff s = no_sizes;
  check_against_delta(s, 3);
  CHECK_FALSE(s.stale);
  check_against_delta(s, 40);
  CHECK(s.stale);
}

TEST_CASE("punctuation-only mutations are trivial") {
  std::mt19937 rng(11);
  const std::string punct = ".,;:!?'\"()-";
  std::uniform_int_distribution<size_t> pick_sentence(0, kSentences.size() - 1);
  std::uniform_int_distribution<size_t> pick_punct(0, punct.size() - 1);
  std::uniform_int_distribution<int> ops(1, 3), kind(0, 3);
  int trivial = 0;
  for (int i = 0; i < 500; ++i) {
    const std::string before = kSentences[pick_sentence(rng)];
    std::string after = before;
    for (int n = ops(rng); n > 0; --n) {
      std::uniform_int_distribution<size_t> pos(0, after.size());
      const size_t p = pos(rng);
      switch (kind(rng)) {
        case 0: after.insert(p, 1, punct[pick_punct(rng)]); break;
        case 1: after.insert(p, 1, ' '); break;
        case 2: {
          const auto q = after.find_first_of(punct, p);
          if (q != std::string::npos) after.erase(q, 1);
          break;
        }
        default: {
          const auto q = after.find_first_of(punct, p);
          if (q != std::string::npos) after[q] = punct[pick_punct(rng)];
        }
      }
    }
    const RevisionDiff d = paired(before, after);
    const EditClass cls = classify(d, "", d.net_delta);
    if (cls.level == EditLevel::kTrivial) ++trivial;
    else MESSAGE("not trivial: " << after);
  }
  CHECK(trivial == 500);
}

TEST_CASE("removing the living-people category is major") {
  const std::string cat = "[[Category:Living people]]";
  SUBCASE("plain removal") {
    RevisionDiff d;
    d.removed = {cat};
    const auto cls = classify(d, "", -26);
    CHECK(cls.level == EditLevel::kMajor);
    CHECK(cls.has(signal::kLivingPeopleRemoved));
  }
  SUBCASE("removal beside other changes wins over every other rule") {
    RevisionDiff d = paired("Text. " + cat + " [[Category:1927 births]]",
                            "Text. [[Category:1927 births]] [[Category:2022 deaths]]");
    d.added.push_back(std::string(300, 'x'));
    const auto cls = classify(d, "", 400);
    CHECK(cls.level == EditLevel::kMajor);
    CHECK(cls.signals == std::set<std::string>{std::string(signal::kLivingPeopleRemoved)});
  }
  SUBCASE("sort key and underscore variants") {
    for (std::string v : {"[[Category:Living people|Smith, John]]", "[[category:living_people]]"}) {
      RevisionDiff d;
      d.removed = {v};
      CHECK(classify(d, "", -30).has(signal::kLivingPeopleRemoved));
    }
  }
  SUBCASE("moving the category is not a removal") {
    RevisionDiff d = paired("x " + cat, cat + " x");
    CHECK_FALSE(classify(d, "", 0).has(signal::kLivingPeopleRemoved));
  }
}

TEST_CASE("tense substitutions are major") {
  const std::vector<std::pair<std::string, std::string>> table = {
      {"is", "was"}, {"are", "were"}, {"has", "had"}};
  std::mt19937 rng(17);
  for (int i = 0; i < 100; ++i) {
    std::string before = "The subject";
    std::string after = "The subject";
    std::uniform_int_distribution<int> len(1, 4);
    std::uniform_int_distribution<size_t> pick(0, table.size() - 1);
    int subs = 0;
    for (int w = len(rng); w > 0; --w) {
      const auto& [present, past] = table[pick(rng)];
      const bool change = subs == 0 || (rng() & 1);
      before += " " + present + " notable,";
      after += " " + (change ? past : present) + " notable,";
      subs += change;
    }
    const RevisionDiff d = paired(before, after);
    const auto cls = classify(d, "", d.net_delta);
    CHECK(cls.level == EditLevel::kMajor);
    CHECK(cls.has(signal::kTenseChange));
  }
  // Any other word change defeats the rule.
  const RevisionDiff mixed = paired("He is a bishop", "He was a cardinal");
  CHECK_FALSE(classify(mixed, "", 2).has(signal::kTenseChange));
  // Reverse direction is not in the table.
  const RevisionDiff reverse = paired("He was a bishop", "He is a bishop");
  CHECK_FALSE(classify(reverse, "", -1).has(signal::kTenseChange));
}

TEST_CASE("new paragraph threshold") {
  RevisionDiff d;
  d.added = {std::string(199, 'a')};
  CHECK(classify(d, "", 199).level == EditLevel::kMinor);
  d.added = {std::string(200, 'a')};
  auto cls = classify(d, "", 200);
  CHECK(cls.level == EditLevel::kMajor);
  CHECK(cls.has(signal::kNewParagraph));

  // Inserted bytes inside a paired row count, the untouched text around them does not.
  const std::string base(500, 'b');
  RevisionDiff grown = paired(base, base.substr(0, 250) + std::string(200, 'c') + base.substr(250));
  CHECK(classify(grown, "", 200).has(signal::kNewParagraph));
  RevisionDiff small = paired(base, base.substr(0, 250) + std::string(150, 'c') + base.substr(250));
  CHECK(classify(small, "", 150).level == EditLevel::kMinor);
}

TEST_CASE("ordinary edits are minor") {
  const RevisionDiff d = paired("The population is 3,400.", "The population is 3,500.");
  CHECK(classify(d, "", 0).level == EditLevel::kMinor);
  const RevisionDiff words = paired("a b c", "a b d");
  CHECK(classify(words, "", 0).level == EditLevel::kMinor);
  // Punctuation-only but too large to be trivial.
  const RevisionDiff big = paired("x", "x" + std::string(7, '.'));
  CHECK(classify(big, "", 7).level == EditLevel::kMinor);
}

TEST_CASE("heuristics without a diff") {
  const ClassifierConfig config;
  CHECK(classify_without_diff("removed [[Category:Living people]]", -26, config)
            .has(signal::kLivingPeopleRemoved));
  CHECK(classify_without_diff("-[[Category:Living people]]", -26, config).level == EditLevel::kMajor);
  CHECK(classify_without_diff("added [[Category:Living people]]", 26, config).level == EditLevel::kMinor);
  CHECK(classify_without_diff("", 250, config).has(signal::kNewParagraph));
  CHECK(classify_without_diff("", -250, config).has(signal::kNewParagraph));
  CHECK(classify_without_diff("typo", 1, config).level == EditLevel::kTrivial);
  CHECK(classify_without_diff("fixed a typo", 40, config).level == EditLevel::kMinor);
  CHECK(classify_without_diff("update", 1, config).level == EditLevel::kMinor);
  CHECK(classify(unavailable_diff(1, 2), "typo", 1).level == EditLevel::kTrivial);
}

TEST_CASE("diff sources") {
  TempDir dir;
  write_file(dir / "compare/en/10_11.json",
             compare_body({{std::string("is"), std::string("was")}}, std::pair<int64_t, int64_t>{2, 3}));
  write_file(dir / "compare/en/10_12.json", "garbage");
  FixtureDiffs fixtures(dir.path());
  const auto d = fixtures.fetch_diff("en", 10, 11);
  CHECK(d.available);
  CHECK(d.from_rev == 10);
  CHECK(d.to_rev == 11);
  CHECK_FALSE(fixtures.fetch_diff("en", 10, 12).available);
  CHECK_FALSE(fixtures.fetch_diff("de", 10, 11).available);

  struct Getter : HttpGetter {
    std::deque<std::optional<HttpResponse>> replies;
    std::vector<std::string> urls;
    std::optional<HttpResponse> get(const std::string& url) override {
      urls.push_back(url);
      auto r = replies.front();
      replies.pop_front();
      return r;
    }
  } http;
  HttpDiffs remote(http);
  http.replies = {HttpResponse{200, compare_body({{std::nullopt, std::string("x")}})}};
  CHECK(remote.fetch_diff("fr", 5, 6).available);
  CHECK(http.urls.back() == compare_url("fr", 5, 6));
  http.replies = {HttpResponse{503, ""}};
  CHECK_FALSE(remote.fetch_diff("fr", 5, 6).available);
  http.replies = {std::nullopt};
  CHECK_FALSE(remote.fetch_diff("fr", 5, 6).available);
  CHECK_FALSE(remote.fetch_diff("fr", 0, 6).available);
  CHECK(http.urls.size() == 3);

  NullDiffs none;
  CHECK_FALSE(none.fetch_diff("en", 1, 2).available);
}
