#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wlm/http_fetch.hpp"

namespace wlm {

enum class EditLevel { kTrivial, kMinor, kMajor };

std::string_view to_string(EditLevel level);

namespace signal {
inline constexpr std::string_view kLivingPeopleRemoved = "living-people-removed";
inline constexpr std::string_view kNewParagraph = "new-paragraph";
inline constexpr std::string_view kTenseChange = "tense-change";
}  // namespace signal

struct EditClass {
  EditLevel level = EditLevel::kMinor;
  std::set<std::string> signals;

  bool has(std::string_view tag) const { return signals.count(std::string(tag)) > 0; }
  bool operator==(const EditClass&) const = default;
};

// Changed lines of one revision pair. added[i] and removed[i] come from the same
// diff row when both exist.
struct RevisionDiff {
  int64_t from_rev = 0;
  int64_t to_rev = 0;
  std::vector<std::string> added;
  std::vector<std::string> removed;
  int64_t net_delta = 0;
  bool available = true;
  bool stale = false;  // net_delta disagrees with the feed's delta
};

struct ClassifierConfig {
  int64_t trivial_max_delta = 6;
  size_t new_paragraph_bytes = 200;
};

class InvalidRevision : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string compare_url(std::string_view lang, int64_t from_rev, int64_t to_rev);

// Parses a verbatim `action=compare` response. The "*" member holds the HTML diff
// table; deleted/added cells become removed/added fragments.
RevisionDiff parse_compare_response(std::string_view body);

// Pure and total. First matching rule wins:
//   1. "[[Category:Living people]]" removed          -> Major, living-people-removed
//   2. one fragment inserts >= new_paragraph_bytes   -> Major, new-paragraph
//   3. |delta| <= trivial_max_delta, punctuation or
//      whitespace only changes                       -> Trivial
//   4. only is/are/has -> was/were/had substitutions -> Major, tense-change
//   5. otherwise                                     -> Minor
// An unavailable diff falls back to delta and comment heuristics.
EditClass classify(const RevisionDiff& diff, std::string_view comment, int64_t delta,
                   const ClassifierConfig& config = {});

// Heuristic used when no diff is at hand.
EditClass classify_without_diff(std::string_view comment, int64_t delta,
                                const ClassifierConfig& config = {});

class DiffSource {
 public:
  virtual ~DiffSource() = default;
  virtual RevisionDiff fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) = 0;
  virtual bool is_local() const = 0;
};

// Reads `<root>/compare/<lang>/<from>_<to>.json`.
class FixtureDiffs : public DiffSource {
 public:
  explicit FixtureDiffs(std::filesystem::path root) : root_(std::move(root)) {}
  RevisionDiff fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) override;
  bool is_local() const override { return true; }

 private:
  std::filesystem::path root_;
};

class HttpDiffs : public DiffSource {
 public:
  explicit HttpDiffs(HttpGetter& http) : http_(http) {}
  RevisionDiff fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) override;
  bool is_local() const override { return false; }

 private:
  HttpGetter& http_;
};

class NullDiffs : public DiffSource {
 public:
  RevisionDiff fetch_diff(std::string_view lang, int64_t from_rev, int64_t to_rev) override;
  bool is_local() const override { return true; }
};

RevisionDiff unavailable_diff(int64_t from_rev, int64_t to_rev);

// Marks the diff stale when its byte count disagrees with the feed's delta.
void check_against_delta(RevisionDiff& diff, int64_t feed_delta);

}  // namespace wlm
