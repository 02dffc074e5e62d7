#include "wlm/edit_classifier.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace wlm {

using json = nlohmann::json;

std::string_view to_string(EditLevel level) {
  switch (level) {
    case EditLevel::kTrivial: return "trivial";
    case EditLevel::kMinor: return "minor";
    case EditLevel::kMajor: return "major";
  }
  return "minor";
}

std::string compare_url(std::string_view lang, int64_t from_rev, int64_t to_rev) {
  if (from_rev <= 0 || to_rev <= 0) throw InvalidRevision("revision ids must be positive");
  return "http://" + std::string(lang) + ".wikipedia.org/w/api.php?action=compare&torev=" +
         std::to_string(to_rev) + "&fromrev=" + std::to_string(from_rev) + "&format=json";
}

namespace {

std::string unescape_html(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kEntities = {{
      {"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"}, {"&quot;", "\""},
      {"&#039;", "'"}, {"&#39;", "'"}, {"&nbsp;", " "},
  }};
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      bool matched = false;
      for (const auto& [entity, text] : kEntities) {
        if (s.substr(i, entity.size()) == entity) {
          out += text;
          i += entity.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string strip_tags(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') in_tag = true;
    else if (c == '>' && in_tag) in_tag = false;
    else if (!in_tag) out.push_back(c);
  }
  return unescape_html(out);
}

struct DiffRow {
  std::optional<std::string> removed;
  std::optional<std::string> added;
};

std::vector<DiffRow> parse_diff_rows(std::string_view html) {
  std::vector<DiffRow> rows;
  size_t pos = 0;
  while ((pos = html.find("<tr", pos)) != std::string_view::npos) {
    const size_t end = html.find("</tr>", pos);
    const std::string_view row = html.substr(pos, end == std::string_view::npos ? end : end - pos);
    DiffRow parsed;
    size_t cell = 0;
    while ((cell = row.find("<td", cell)) != std::string_view::npos) {
      const size_t open_end = row.find('>', cell);
      if (open_end == std::string_view::npos) break;
      const std::string_view open = row.substr(cell, open_end - cell);
      const size_t close = row.find("</td>", open_end);
      const std::string_view body =
          row.substr(open_end + 1, (close == std::string_view::npos ? row.size() : close) - open_end - 1);
      if (open.find("diff-deletedline") != std::string_view::npos) parsed.removed = strip_tags(body);
      else if (open.find("diff-addedline") != std::string_view::npos) parsed.added = strip_tags(body);
      cell = close == std::string_view::npos ? row.size() : close + 5;
    }
    if (parsed.removed || parsed.added) rows.push_back(std::move(parsed));
    if (end == std::string_view::npos) break;
    pos = end + 5;
  }
  return rows;
}

}  // namespace

RevisionDiff parse_compare_response(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("compare") ||
      !doc["compare"].is_object())
    throw std::runtime_error("compare response without compare object");
  const json& cmp = doc["compare"];
  RevisionDiff diff;
  diff.from_rev = cmp.value("fromrevid", int64_t{0});
  diff.to_rev = cmp.value("torevid", int64_t{0});
  std::string html;
  if (cmp.contains("*") && cmp["*"].is_string()) html = cmp["*"].get<std::string>();
  else if (cmp.contains("body") && cmp["body"].is_string()) html = cmp["body"].get<std::string>();

  // Paired rows first so added[i] / removed[i] line up.
  std::vector<std::string> lone_added, lone_removed;
  for (auto& row : parse_diff_rows(html)) {
    if (row.added && row.removed) {
      diff.added.push_back(std::move(*row.added));
      diff.removed.push_back(std::move(*row.removed));
    } else if (row.added) {
      lone_added.push_back(std::move(*row.added));
    } else {
      lone_removed.push_back(std::move(*row.removed));
    }
  }
  diff.added.insert(diff.added.end(), lone_added.begin(), lone_added.end());
  diff.removed.insert(diff.removed.end(), lone_removed.begin(), lone_removed.end());

  if (cmp.contains("fromsize") && cmp.contains("tosize")) {
    diff.net_delta = cmp["tosize"].get<int64_t>() - cmp["fromsize"].get<int64_t>();
  } else {
    for (const auto& a : diff.added) diff.net_delta += static_cast<int64_t>(a.size());
    for (const auto& r : diff.removed) diff.net_delta -= static_cast<int64_t>(r.size());
  }
  return diff;
}

RevisionDiff unavailable_diff(int64_t from_rev, int64_t to_rev) {
  RevisionDiff diff;
  diff.from_rev = from_rev;
  diff.to_rev = to_rev;
  diff.available = false;
  return diff;
}

void check_against_delta(RevisionDiff& diff, int64_t feed_delta) {
  diff.stale = diff.available && diff.net_delta != feed_delta;
}

// ---------------------------------------------------------------------------

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool mentions_living_people(std::string_view fragment) {
  std::string norm = lower(fragment);
  std::replace(norm.begin(), norm.end(), '_', ' ');
  return norm.find("[[category:living people]]") != std::string::npos ||
         norm.find("[[category:living people|") != std::string::npos;
}

// Multi-byte punctuation and spacing seen in article text.
constexpr std::array<std::string_view, 12> kUtf8Punct = {
    "\xE2\x80\x94", "\xE2\x80\x93", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99",
    "\xE2\x80\xA6", "\xC2\xAB",     "\xC2\xBB",     "\xC2\xB7",     "\xC2\xA0",     "\xE2\x80\x89"};

std::string strip_punct_space(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      if (!std::ispunct(c) && !std::isspace(c)) out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    bool skipped = false;
    for (auto p : kUtf8Punct) {
      if (s.substr(i, p.size()) == p) {
        i += p.size();
        skipped = true;
        break;
      }
    }
    if (!skipped) out.push_back(s[i++]);
  }
  return out;
}

size_t inserted_bytes(std::string_view added, std::string_view removed) {
  size_t prefix = 0;
  const size_t limit = std::min(added.size(), removed.size());
  while (prefix < limit && added[prefix] == removed[prefix]) ++prefix;
  size_t suffix = 0;
  while (suffix < limit - prefix &&
         added[added.size() - 1 - suffix] == removed[removed.size() - 1 - suffix])
    ++suffix;
  return added.size() - prefix - suffix;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  auto wordy = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    size_t j = i + 1;
    if (wordy(c))
      while (j < s.size() && wordy(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_tense_pair(std::string_view before, std::string_view after) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kTable = {{
      {"is", "was"}, {"are", "were"}, {"has", "had"},
      {"Is", "Was"}, {"Are", "Were"}, {"Has", "Had"},
  }};
  return std::any_of(kTable.begin(), kTable.end(),
                     [&](const auto& p) { return p.first == before && p.second == after; });
}

bool only_tense_changes(const RevisionDiff& diff) {
  if (diff.added.size() != diff.removed.size() || diff.added.empty()) return false;
  size_t substitutions = 0;
  for (size_t i = 0; i < diff.added.size(); ++i) {
    const auto before = words(diff.removed[i]);
    const auto after = words(diff.added[i]);
    if (before.size() != after.size()) return false;
    for (size_t w = 0; w < before.size(); ++w) {
      if (before[w] == after[w]) continue;
      if (!is_tense_pair(before[w], after[w])) return false;
      ++substitutions;
    }
  }
  return substitutions > 0;
}

EditClass major(std::string_view tag) {
  return EditClass{EditLevel::kMajor, {std::string(tag)}};
}

int64_t magnitude(int64_t v) { return v < 0 ? -v : v; }

}  // namespace

EditClass classify_without_diff(std::string_view comment, int64_t delta,
                                const ClassifierConfig& config) {
  const std::string c = lower(comment);
  const auto living = c.find("living people");
  if (living != std::string::npos) {
    const auto removed = c.find("remov");
    const auto minus = c.find("-[[category:living");
    if ((removed != std::string::npos && removed < living) || minus != std::string::npos)
      return major(signal::kLivingPeopleRemoved);
  }
  if (magnitude(delta) >= static_cast<int64_t>(config.new_paragraph_bytes))
    return major(signal::kNewParagraph);
  if (magnitude(delta) <= config.trivial_max_delta) {
    static constexpr std::array<std::string_view, 8> kTrivialWords = {
        "typo", "punctuation", "spelling", "whitespace", "comma", "spacing", "formatting", "fmt"};
    const auto w = words(c);
    const bool trivial_comment =
        std::any_of(w.begin(), w.end(), [](std::string_view t) {
          return std::find(kTrivialWords.begin(), kTrivialWords.end(), t) != kTrivialWords.end() ||
                 t == "ce" || t == "sp";
        });
    if (trivial_comment) return EditClass{EditLevel::kTrivial, {}};
  }
  return EditClass{EditLevel::kMinor, {}};
}

EditClass classify(const RevisionDiff& diff, std::string_view comment, int64_t delta,
                   const ClassifierConfig& config) {
  if (!diff.available) return classify_without_diff(comment, delta, config);

  const bool removed_living = std::any_of(diff.removed.begin(), diff.removed.end(),
                                          [](const auto& f) { return mentions_living_people(f); });
  const bool added_living = std::any_of(diff.added.begin(), diff.added.end(),
                                        [](const auto& f) { return mentions_living_people(f); });
  if (removed_living && !added_living) return major(signal::kLivingPeopleRemoved);

  for (size_t i = 0; i < diff.added.size(); ++i) {
    const size_t bytes = i < diff.removed.size() ? inserted_bytes(diff.added[i], diff.removed[i])
                                                 : diff.added[i].size();
    if (bytes >= config.new_paragraph_bytes) return major(signal::kNewParagraph);
  }

  if (magnitude(delta) <= config.trivial_max_delta) {
    bool cosmetic = true;
    const size_t paired = std::min(diff.added.size(), diff.removed.size());
    for (size_t i = 0; i < paired && cosmetic; ++i)
      cosmetic = strip_punct_space(diff.added[i]) == strip_punct_space(diff.removed[i]);
    for (size_t i = paired; i < diff.added.size() && cosmetic; ++i)
      cosmetic = strip_punct_space(diff.added[i]).empty();
    for (size_t i = paired; i < diff.removed.size() && cosmetic; ++i)
      cosmetic = strip_punct_space(diff.removed[i]).empty();
    if (cosmetic) return EditClass{EditLevel::kTrivial, {}};
  }

  if (only_tense_changes(diff)) return major(signal::kTenseChange);
  return EditClass{EditLevel::kMinor, {}};
}

// ---------------------------------------------------------------------------

RevisionDiff FixtureDiffs::fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) {
  const auto path = root_ / "compare" / std::string(lang) /
                    (std::to_string(from_rev) + "_" + std::to_string(to_rev) + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return unavailable_diff(from_rev, to_rev);
  std::stringstream body;
  body << in.rdbuf();
  try {
    RevisionDiff diff = parse_compare_response(body.str());
    diff.from_rev = from_rev;
    diff.to_rev = to_rev;
    return diff;
  } catch (const std::exception&) {
    return unavailable_diff(from_rev, to_rev);
  }
}

RevisionDiff HttpDiffs::fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) {
  if (from_rev <= 0 || to_rev <= 0) return unavailable_diff(from_rev, to_rev);
  if (from_rev == to_rev) {
    RevisionDiff empty;
    empty.from_rev = from_rev;
    empty.to_rev = to_rev;
    return empty;
  }
  auto res = http_.get(compare_url(lang, from_rev, to_rev));
  if (!res || res->status != 200) return unavailable_diff(from_rev, to_rev);
  try {
    return parse_compare_response(res->body);
  } catch (const std::exception&) {
    return unavailable_diff(from_rev, to_rev);
  }
}

RevisionDiff NullDiffs::fetch_diff(std::string_view, int64_t from_rev, int64_t to_rev) {
  return unavailable_diff(from_rev, to_rev);
}

}  // namespace wlm
