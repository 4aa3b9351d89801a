#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scilit::csv {

// RFC-4180-style parse: comma separated, double quotes with "" escapes,
// quoted fields may contain newlines. CRLF and LF both accepted. The final
// line may omit its terminator. Returns one vector of cells per row.
std::vector<std::vector<std::string>> parse(std::string_view input);

std::string escape_cell(std::string_view cell);

}  // namespace scilit::csv
