#include <doctest.h>

#include <random>
#include <regex>

#include "rc_corpus.hpp"
#include "support.hpp"
#include "wlm/rc_ingest.hpp"

using namespace wlm;
using namespace wlm::test;

namespace {

RecentChange parse(const std::string& channel, const std::string& payload) {
  return parse_rc_line(RawLine{channel, payload, secs(100)});
}

}  // namespace

TEST_CASE("Juniata River sample message") {
  const RecentChange rc = parse("#en.wikipedia", kJuniata);
  CHECK(rc.language == "en");
  CHECK(rc.title == "Juniata River");
  CHECK(rc.diff_rev == 516269072);
  CHECK(rc.old_rev == 514659029);
  CHECK(rc.editor == "Johanna-Hypatia");
  CHECK(rc.delta == 67);
  CHECK(rc.comment == "Category:Place names of Native American origin in Pennsylvania");
  CHECK(rc.flags.empty());
  CHECK(rc.timestamp == secs(100));
}

TEST_CASE("malformed payloads are parse errors") {
  CHECK_THROWS_AS(parse("#en.wikipedia", "no brackets here"), ParseError);
  CHECK_THROWS_AS(parse("#en.wikipedia", "[[Title]] http://x * Ed"), ParseError);
  CHECK_THROWS_AS(parse("#en.wikipedia", "[[Title]] http://x * Ed * (+x) c"), ParseError);
  CHECK_THROWS_AS(parse("#en.wikipedia", "[[]] http://x * Ed * (+1) c"), ParseError);
  CHECK_THROWS_AS(parse("#en.wikipedia", "[[T]] http://x/?diff=5 * Ed * (+1) c"), ParseError);
  CHECK_THROWS_AS(parse("#en", kJuniata), ParseError);
  try {
    parse("#en.wikipedia", "no brackets here");
  } catch (const ParseError& e) {
    CHECK(e.payload() == "no brackets here");
  }
}

TEST_CASE("delta tokens") {
  CHECK(parse("#de.wikipedia", "[[A]] http://x * E * (-42) c").delta == -42);
  CHECK(parse("#de.wikipedia", "[[A]] http://x * E * (0)").delta == 0);
  CHECK(parse("#de.wikipedia", "[[A]] http://x * E * (+1234567)").delta == 1234567);
}

TEST_CASE("flags and urls without a diff") {
  const auto rc = parse("#fr.wikipedia",
                        "[[Paris]] MB http://fr.wikipedia.org/w/index.php?oldid=12&rcid=9 * Robot * (+3) x");
  CHECK(rc.flags == "MB");
  CHECK_FALSE(rc.diff_rev);
  CHECK(rc.old_rev == 12);
  const auto created = parse("#fr.wikipedia", "[[Lyon]] N http://fr.wikipedia.org/w/index.php?oldid=44 * A * (+900) new");
  CHECK(created.flags == "N");
}

TEST_CASE("channel names") {
  CHECK(channel_for_language("en") == "#en.wikipedia");
  CHECK(channel_for_language("zh-min-nan") == "#zh-min-nan.wikipedia");
  CHECK_THROWS_AS(channel_for_language(""), InvalidLanguage);
  CHECK_THROWS_AS(channel_for_language("e n"), InvalidLanguage);
  CHECK_THROWS_AS(channel_for_language("en.wikipedia"), InvalidLanguage);
  CHECK_THROWS_AS(channel_for_language(" en"), InvalidLanguage);
  for (const char* lang : {"en", "de", "be-x-old", "simple"})
    CHECK(language_from_channel(channel_for_language(lang)) == std::string(lang));
  CHECK_FALSE(language_from_channel("#en"));
  CHECK_FALSE(language_from_channel("en.wikipedia"));
  CHECK_FALSE(language_from_channel("#.wikipedia"));
}

TEST_CASE("control codes") {
  CHECK(strip_control_codes("\x03" "14[[\x03" "07Foo\x03" "14]]") == "[[Foo]]");
  CHECK(strip_control_codes("\x02" "bold\x0F \x1Fu\x1D" "i\x16") == "bold ui");
  CHECK(strip_control_codes("\x03" "4,12x") == "x");
  CHECK(strip_control_codes("\x03" ",5") == ",5");  // no foreground: the comma is text
  CHECK(strip_control_codes("\x03" "123") == "3");   // at most two digits
  CHECK(strip_control_codes("") == "");

  std::mt19937 rng(7);
  const std::string alphabet = std::string("ab ,0123456789") + '\x02' + '\x03' + '\x0F' + '\x16' +
                               '\x1D' + '\x1F';
  for (int i = 0; i < 500; ++i) {
    const std::string s = random_text(rng, 0, 30, alphabet);
    const std::string out = strip_control_codes(s);
    for (char c : {'\x02', '\x03', '\x0F', '\x16', '\x1D', '\x1F'})
      CHECK(out.find(c) == std::string::npos);
    CHECK(strip_control_codes(out) == out);
    CHECK(out.size() <= s.size());
  }
}

TEST_CASE("meta namespaces and bots") {
  CHECK(is_meta_title("Special:Log/upload"));
  CHECK(is_meta_title("User talk:Foo"));
  CHECK(is_meta_title("user_talk:Foo"));
  CHECK(is_meta_title("Wikipedia:Sandbox"));
  CHECK(is_meta_title("Talk:Paris"));
  CHECK(is_meta_title("Template:Infobox"));
  CHECK_FALSE(is_meta_title("Paris"));
  CHECK_FALSE(is_meta_title("Star Wars: A New Hope"));
  CHECK_FALSE(is_meta_title("Category:Living people"));

  RecentChange c = make_change("en", "X", "ClueBot NG", secs(0));
  CHECK_FALSE(is_bot_editor(c));
  c.editor = "SieBot";
  CHECK(is_bot_editor(c));
  c.editor = "ARCHIVEBOT";
  CHECK(is_bot_editor(c));
  c.editor = "Human";
  CHECK_FALSE(is_bot_editor(c));
  c.flags = "MB";
  CHECK(is_bot_editor(c));
  c.flags = "";
  const std::vector<std::string> extra = {"ClueBot NG", "Human"};
  CHECK(is_bot_editor(c, extra));
}

TEST_CASE("generated lines round-trip and agree with the reference tokenizer") {
  std::mt19937 rng(20130211);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    RecentChange c = random_change(rng);
    c.timestamp = secs(i);
    const std::string line = render_rc_line(c);
    const auto ref = reference_tokenize(line);
    REQUIRE_MESSAGE(ref, line);
    const RecentChange parsed = parse_rc_line(RawLine{channel_for_language(c.language), line, secs(i)});
    const RecentChange colored =
        parse_rc_line(RawLine{channel_for_language(c.language), colorize(c), secs(i)});
    const bool ok = parsed == c && colored == c && render_rc_line(parsed) == line &&
                    ref->title == parsed.title && ref->flags == parsed.flags &&
                    ref->url == parsed.url && ref->editor == parsed.editor &&
                    ref->delta == parsed.delta && ref->comment == parsed.comment;
    if (!ok) {
      ++failures;
      MESSAGE("mismatch: " << line);
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("replay files") {
  TempDir dir;
  const auto file = dir / "r.tsv";
  const std::string juniata_record = std::string("#en.wikipedia\t") + kJuniata;

  SUBCASE("virtual clock from the header") {
    write_file(file, "# a comment\n# start=2013-02-11T10:58:00Z\n\n0\t" + juniata_record +
                         "\n1500\t#en.wikipedia\tgarbage\n60000\t" + juniata_record + "\n");
    RecordingSink sink;
    const auto summary = replay(file, {}, sink);
    CHECK(summary.delivered == 2);
    CHECK(summary.skipped == 1);
    REQUIRE(sink.changes.size() == 2);
    CHECK(sink.changes[0].timestamp == at("2013-02-11T10:58:00Z"));
    CHECK(sink.changes[1].timestamp == at("2013-02-11T10:59:00Z"));
    REQUIRE(sink.skipped.size() == 1);
    CHECK(sink.skipped[0].received_at == at("2013-02-11T10:58:01.500Z"));
    CHECK(summary.end == at("2013-02-11T10:59:00Z"));

    ReplayOptions opts;
    opts.start = at("2020-01-01T00:00:00Z");
    RecordingSink sink2;
    replay(file, opts, sink2);
    CHECK(sink2.changes[0].timestamp == at("2020-01-01T00:00:00Z"));
  }

  SUBCASE("unsorted offsets are rejected before any delivery") {
    write_file(file, "10\t" + juniata_record + "\n5\t" + juniata_record + "\n");
    RecordingSink sink;
    CHECK_THROWS_AS(replay(file, {}, sink), ReplayFormatError);
    CHECK(sink.changes.empty());
  }

  SUBCASE("syntax errors") {
    write_file(file, "abc\t#en.wikipedia\tx\n");
    CHECK_THROWS_AS(validate_replay(file), ReplayFormatError);
    write_file(file, "5 no tabs\n");
    CHECK_THROWS_AS(validate_replay(file), ReplayFormatError);
    write_file(file, "# start=yesterday\n");
    CHECK_THROWS_AS(validate_replay(file), ReplayFormatError);
    CHECK_THROWS_AS(validate_replay(dir / "missing.tsv"), ReplayFormatError);
  }

  SUBCASE("empty file") {
    write_file(file, "");
    RecordingSink sink;
    const auto summary = replay(file, {}, sink);
    CHECK(summary.delivered == 0);
    CHECK(summary.skipped == 0);
  }

  SUBCASE("same output at any speedup") {
    std::string text = "# start=2013-02-11T10:58:00Z\n";
    for (int i = 0; i < 5; ++i) text += std::to_string(i * 10) + "\t" + juniata_record + "\n";
    write_file(file, text);
    RecordingSink fast, paced;
    replay(file, {}, fast);
    ReplayOptions opts;
    opts.speedup = 100;
    const auto wall = std::chrono::steady_clock::now();
    replay(file, opts, paced);
    CHECK(std::chrono::steady_clock::now() - wall >= std::chrono::microseconds{400});
    CHECK(fast.changes == paced.changes);
    CHECK(fast.changes.size() == 5);
  }

  SUBCASE("records format back to their line") {
    ReplayRecord r{1234, "#de.wikipedia", "[[A]] u * b * (+1)"};
    write_file(file, format_replay_record(r) + "\n");
    const auto back = read_replay(file);
    REQUIRE(back.size() == 1);
    CHECK(back[0].offset_ms == 1234);
    CHECK(back[0].channel == r.channel);
    CHECK(back[0].payload == r.payload);
  }
}
