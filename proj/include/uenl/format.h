#pragma once

#include <string>
#include <string_view>

namespace uenl {

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

// Parses all of `text` as a double. Returns false on leftover characters,
// empty input or a range error.
bool ParseDouble(std::string_view text, double& value);

}  // namespace uenl
