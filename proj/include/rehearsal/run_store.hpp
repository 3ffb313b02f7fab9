#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rehearsal/domain.hpp"

namespace rehearsal {

/// Append-only, line-delimited record file; one serialized RunRecord per
/// line, UTF-8. Stage snapshots are appended as they happen, so the last
/// line per (sample_id, method) is the current state — that is what
/// load_latest returns. Appends take an exclusive file lock.
class RunStore {
public:
  using Key = std::pair<std::string, Method>;

  explicit RunStore(std::filesystem::path path);

  void append(const RunRecord& record);

  /// Last snapshot per (sample_id, method). Throws ParseError with the
  /// offending line number on malformed content.
  std::map<Key, RunRecord> load_latest() const;

  /// Every snapshot in file order.
  std::vector<RunRecord> load_all() const;

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

std::int64_t now_ms();

}  // namespace rehearsal
