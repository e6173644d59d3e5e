#pragma once

#include <string>

namespace hybridjd {

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double v);

}  // namespace hybridjd
