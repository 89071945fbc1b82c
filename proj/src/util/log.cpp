#include "rdiaudit/util/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace rdiaudit::log {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& current_sink() {
  static Sink sink = [](Level level, std::string_view message) {
    static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
    std::cerr << '[' << kNames[static_cast<int>(level)] << "] " << message << '\n';
  };
  return sink;
}

std::atomic<Level> min_level{Level::Info};

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  Sink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void set_min_level(Level level) { min_level = level; }

void write(Level level, std::string_view message) {
  if (level < min_level.load()) return;
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace rdiaudit::log
