#pragma once

#include <string>

namespace rdiaudit {

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now_iso8601();

}  // namespace rdiaudit
