#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rdiaudit::files {

std::string read_text(const std::filesystem::path& path);
bool exists(const std::filesystem::path& path);

/// Writes to a sibling temp file, fsyncs, then renames over `path`.
/// Concurrent writers of identical content are safe.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Appends `line` plus a newline and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

/// Cuts a partial last line (no trailing newline) left by an interrupted
/// append. Returns true when something was removed.
bool repair_torn_tail(const std::filesystem::path& path);

/// Advisory exclusive lock (flock) held for the object's lifetime.
class FileLock {
 public:
  /// Throws Error(LedgerLocked) if another process holds the lock.
  explicit FileLock(const std::filesystem::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace rdiaudit::files
