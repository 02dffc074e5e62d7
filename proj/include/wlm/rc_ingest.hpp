#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wlm/clock.hpp"

namespace wlm {

// One message body as received from a recent-changes room.
struct RawLine {
  std::string channel;  // "#<lang>.wikipedia"
  std::string payload;
  Timestamp received_at{};
};

struct RecentChange {
  std::string language;
  std::string title;  // canonical: spaces for underscores, trimmed
  std::optional<int64_t> diff_rev;
  std::optional<int64_t> old_rev;
  std::string flags;  // N (new), M (minor), B (bot), ! (unpatrolled)
  std::string url;
  std::string editor;
  int64_t delta = 0;
  std::string comment;
  Timestamp timestamp{};

  bool operator==(const RecentChange&) const = default;
};

class InvalidLanguage : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for payloads that do not follow `[[title]] url * editor * (delta) comment`.
// Carries the raw payload so the caller can log it and move on.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string payload)
      : std::runtime_error(what), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

std::string channel_for_language(std::string_view lang);

// Inverse of channel_for_language; nullopt when the channel does not match the room scheme.
std::optional<std::string> language_from_channel(std::string_view channel);

// Removes mIRC formatting: bold, color (with its digit arguments), reset, reverse,
// italic and underline.
std::string strip_control_codes(std::string_view text);

std::string canonical_title(std::string_view title);

// True for talk, user, project and other non-article namespaces.
bool is_meta_title(std::string_view title);

RecentChange parse_rc_line(const RawLine& line);

// Wire form of a change, without control codes. parse_rc_line(render_rc_line(c))
// reproduces c for any change that came out of parse_rc_line.
std::string render_rc_line(const RecentChange& change);

bool is_bot_editor(const RecentChange& change, std::span<const std::string> extra_bots = {});

// Anything that consumes parsed changes. Called from one logical thread at a time.
class ChangeSink {
 public:
  virtual ~ChangeSink() = default;
  virtual void on_change(const RecentChange& change) = 0;
  virtual void on_skipped(const RawLine& line, const ParseError& error) = 0;
};

// ---------------------------------------------------------------------------
// Replay files: `offset_ms<TAB>channel<TAB>payload`, one record per line.
// A leading `# start=<ISO-8601>` line sets the virtual clock origin; other lines
// starting with '#' and blank lines are ignored.

struct ReplayRecord {
  int64_t offset_ms = 0;
  std::string channel;
  std::string payload;
};

class ReplayFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReplayHeader {
  std::optional<Timestamp> start;
  uint64_t records = 0;
};

// Reads the whole file, validating record syntax and offset order.
ReplayHeader validate_replay(const std::filesystem::path& file);

std::vector<ReplayRecord> read_replay(const std::filesystem::path& file);

std::string format_replay_record(const ReplayRecord& record);

struct ReplayOptions {
  double speedup = 0;  // <= 0 or infinity: as fast as possible
  std::optional<Timestamp> start;  // overrides the file header
};

struct ReplaySummary {
  uint64_t delivered = 0;
  uint64_t skipped = 0;
  Timestamp start{};
  Timestamp end{};
};

// Validates the file, then delivers every record at start + offset_ms on a virtual clock.
// Throws ReplayFormatError before any delivery when the file is malformed.
ReplaySummary replay(const std::filesystem::path& file, const ReplayOptions& options,
                     ChangeSink& sink);

}  // namespace wlm
