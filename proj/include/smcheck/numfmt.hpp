#pragma once

#include <string>

namespace smcheck {

/// Shortest decimal text that reads back as exactly `v` ("3", "0.1", "1e-20").
/// Non-finite values print as nan, inf and -inf.
std::string format_number(double v);

}  // namespace smcheck
