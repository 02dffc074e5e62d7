#include "wlm/rc_ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

namespace wlm {

namespace {

constexpr std::string_view kChannelSuffix = ".wikipedia";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::optional<int64_t> parse_int(std::string_view s) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int64_t> query_param(std::string_view url, std::string_view name) {
  const auto q = url.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  std::string_view query = url.substr(q + 1);
  while (!query.empty()) {
    const auto amp = query.find('&');
    const std::string_view pair = amp == std::string_view::npos ? query : query.substr(0, amp);
    const auto eq = pair.find('=');
    if (eq != std::string_view::npos && pair.substr(0, eq) == name)
      return parse_int(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return std::nullopt;
}

// "(+67)", "(-42)" and "(0)".
std::optional<int64_t> parse_delta(std::string_view token) {
  if (token.size() < 3 || token.front() != '(' || token.back() != ')') return std::nullopt;
  std::string_view body = token.substr(1, token.size() - 2);
  bool negative = false;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  if (body.empty() || !std::all_of(body.begin(), body.end(), is_digit)) return std::nullopt;
  auto v = parse_int(body);
  if (!v) return std::nullopt;
  return negative ? -*v : *v;
}

}  // namespace

std::string channel_for_language(std::string_view lang) {
  if (trim(lang).empty() || trim(lang).size() != lang.size())
    throw InvalidLanguage("invalid language token '" + std::string(lang) + "'");
  for (char c : lang) {
    if (c == '.' || c == '#' || is_space(c) || static_cast<unsigned char>(c) < 0x20)
      throw InvalidLanguage("invalid language token '" + std::string(lang) + "'");
  }
  return "#" + std::string(lang) + std::string(kChannelSuffix);
}

std::optional<std::string> language_from_channel(std::string_view channel) {
  if (channel.size() <= 1 + kChannelSuffix.size() || channel.front() != '#') return std::nullopt;
  if (!channel.ends_with(kChannelSuffix)) return std::nullopt;
  std::string_view lang = channel.substr(1, channel.size() - 1 - kChannelSuffix.size());
  if (lang.find('.') != std::string_view::npos) return std::nullopt;
  if (std::any_of(lang.begin(), lang.end(), is_space)) return std::nullopt;
  return std::string(lang);
}

std::string strip_control_codes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    switch (c) {
      case '\x02':
      case '\x0F':
      case '\x16':
      case '\x1D':
      case '\x1F':
        break;
      case '\x03': {
        // \x03[fg[,bg]] with one or two digits each
        size_t j = i + 1;
        size_t n = 0;
        while (j < text.size() && n < 2 && is_digit(text[j])) ++j, ++n;
        if (n > 0 && j + 1 < text.size() && text[j] == ',' && is_digit(text[j + 1])) {
          ++j;
          n = 0;
          while (j < text.size() && n < 2 && is_digit(text[j])) ++j, ++n;
        }
        i = j - 1;
        break;
      }
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string canonical_title(std::string_view title) {
  std::string out(trim(title));
  std::replace(out.begin(), out.end(), '_', ' ');
  return std::string(trim(out));
}

bool is_meta_title(std::string_view title) {
  static constexpr std::array<std::string_view, 15> kPrefixes = {
      "special:",  "talk:",          "user:",        "user talk:",    "wikipedia:",
      "file:",     "template:",      "category talk:", "wikipedia talk:", "file talk:",
      "template talk:", "help:",     "mediawiki:",   "module:",       "portal talk:"};
  const auto colon = title.find(':');
  if (colon == std::string_view::npos) return false;
  std::string prefix(title.substr(0, colon + 1));
  std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                 [](unsigned char c) { return c == '_' ? ' ' : std::tolower(c); });
  return std::find(kPrefixes.begin(), kPrefixes.end(), prefix) != kPrefixes.end();
}

RecentChange parse_rc_line(const RawLine& line) {
  auto language = language_from_channel(line.channel);
  if (!language) throw ParseError("invalid channel '" + line.channel + "'", line.payload);

  const std::string clean = strip_control_codes(line.payload);
  const std::string_view text = clean;

  const auto open = text.find("[[");
  if (open == std::string_view::npos) throw ParseError("missing [[title]]", line.payload);
  const auto close = text.find("]]", open + 2);
  if (close == std::string_view::npos) throw ParseError("missing [[title]]", line.payload);

  RecentChange rc;
  rc.language = std::move(*language);
  rc.title = canonical_title(text.substr(open + 2, close - open - 2));
  if (rc.title.empty()) throw ParseError("empty title", line.payload);

  std::string_view rest = text.substr(close + 2);
  const auto star1 = rest.find('*');
  if (star1 == std::string_view::npos) throw ParseError("expected 3 '*' fields", line.payload);
  const auto star2 = rest.find('*', star1 + 1);
  if (star2 == std::string_view::npos) throw ParseError("expected 3 '*' fields", line.payload);

  // field 1: flags and revision URL
  std::string_view head = trim(rest.substr(0, star1));
  while (!head.empty()) {
    const auto sp = head.find(' ');
    std::string_view tok = head.substr(0, sp);
    if (tok.starts_with("http") || tok.starts_with("//")) {
      rc.url = std::string(tok);
    } else if (!tok.empty()) {
      rc.flags += tok;
    }
    if (sp == std::string_view::npos) break;
    head = trim(head.substr(sp + 1));
  }
  rc.diff_rev = query_param(rc.url, "diff");
  rc.old_rev = query_param(rc.url, "oldid");
  if (rc.diff_rev && !rc.old_rev) throw ParseError("diff without oldid", line.payload);

  rc.editor = std::string(trim(rest.substr(star1 + 1, star2 - star1 - 1)));

  std::string_view tail = trim(rest.substr(star2 + 1));
  const auto sp = tail.find(' ');
  auto delta = parse_delta(tail.substr(0, sp));
  if (!delta) throw ParseError("unparseable delta", line.payload);
  rc.delta = *delta;
  if (sp != std::string_view::npos) rc.comment = std::string(trim(tail.substr(sp + 1)));

  rc.timestamp = line.received_at;
  return rc;
}

std::string render_rc_line(const RecentChange& change) {
  std::string out = "[[" + change.title + "]] ";
  if (!change.flags.empty()) out += change.flags + " ";
  out += change.url;
  out += " * " + change.editor + " * (";
  out += change.delta < 0 ? "-" : "+";
  out += std::to_string(change.delta < 0 ? -change.delta : change.delta) + ")";
  if (!change.comment.empty()) out += " " + change.comment;
  return out;
}

bool is_bot_editor(const RecentChange& change, std::span<const std::string> extra_bots) {
  if (change.flags.find('B') != std::string::npos) return true;
  const std::string_view e = change.editor;
  if (e.ends_with("bot") || e.ends_with("Bot") || e.ends_with("BOT")) return true;
  return std::find(extra_bots.begin(), extra_bots.end(), change.editor) != extra_bots.end();
}

// ---------------------------------------------------------------------------

namespace {

struct ReplayLine {
  enum class Kind { kSkip, kHeader, kRecord } kind = Kind::kSkip;
  std::optional<Timestamp> start;
  ReplayRecord record;
};

ReplayLine parse_replay_line(std::string_view line, uint64_t line_no) {
  ReplayLine out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) return out;
  if (line.front() == '#') {
    constexpr std::string_view kStart = "# start=";
    if (line.starts_with(kStart)) {
      out.start = parse_iso8601(trim(line.substr(kStart.size())));
      if (!out.start)
        throw ReplayFormatError("line " + std::to_string(line_no) + ": bad start timestamp");
      out.kind = ReplayLine::Kind::kHeader;
    }
    return out;
  }
  const auto t1 = line.find('\t');
  const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
  if (t2 == std::string_view::npos)
    throw ReplayFormatError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
  auto offset = parse_int(line.substr(0, t1));
  if (!offset || *offset < 0)
    throw ReplayFormatError("line " + std::to_string(line_no) + ": bad offset");
  out.kind = ReplayLine::Kind::kRecord;
  out.record.offset_ms = *offset;
  out.record.channel = std::string(line.substr(t1 + 1, t2 - t1 - 1));
  out.record.payload = std::string(line.substr(t2 + 1));
  return out;
}

template <typename Fn>
ReplayHeader scan_replay(const std::filesystem::path& file, Fn&& on_record) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ReplayFormatError("cannot open replay file " + file.string());
  ReplayHeader header;
  std::string line;
  uint64_t line_no = 0;
  int64_t last_offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ReplayLine parsed = parse_replay_line(line, line_no);
    if (parsed.kind == ReplayLine::Kind::kHeader) {
      if (header.records > 0)
        throw ReplayFormatError("line " + std::to_string(line_no) + ": start header after records");
      header.start = parsed.start;
    } else if (parsed.kind == ReplayLine::Kind::kRecord) {
      if (parsed.record.offset_ms < last_offset)
        throw ReplayFormatError("line " + std::to_string(line_no) + ": offsets not sorted");
      last_offset = parsed.record.offset_ms;
      ++header.records;
      on_record(parsed.record);
    }
  }
  return header;
}

}  // namespace

ReplayHeader validate_replay(const std::filesystem::path& file) {
  return scan_replay(file, [](const ReplayRecord&) {});
}

std::vector<ReplayRecord> read_replay(const std::filesystem::path& file) {
  std::vector<ReplayRecord> records;
  scan_replay(file, [&](const ReplayRecord& r) { records.push_back(r); });
  return records;
}

std::string format_replay_record(const ReplayRecord& record) {
  return std::to_string(record.offset_ms) + "\t" + record.channel + "\t" + record.payload;
}

ReplaySummary replay(const std::filesystem::path& file, const ReplayOptions& options,
                     ChangeSink& sink) {
  const ReplayHeader header = validate_replay(file);
  ReplaySummary summary;
  summary.start = options.start.value_or(header.start.value_or(Timestamp{}));
  summary.end = summary.start;

  const bool paced = options.speedup > 0 && std::isfinite(options.speedup);
  const auto wall_start = std::chrono::steady_clock::now();

  scan_replay(file, [&](const ReplayRecord& record) {
    if (paced) {
      const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double, std::milli>(
                                            double(record.offset_ms) / options.speedup));
      std::this_thread::sleep_until(due);
    }
    RawLine raw{record.channel, record.payload, summary.start + Millis{record.offset_ms}};
    summary.end = raw.received_at;
    try {
      RecentChange rc = parse_rc_line(raw);
      ++summary.delivered;
      sink.on_change(rc);
    } catch (const ParseError& e) {
      ++summary.skipped;
      sink.on_skipped(raw, e);
    }
  });
  return summary;
}

}  // namespace wlm
