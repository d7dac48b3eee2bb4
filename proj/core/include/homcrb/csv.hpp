#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "homcrb/harness.hpp"

namespace homcrb {

inline constexpr std::string_view kCsvSchemaVersion = "homcrb-csv/1";

/// RFC 4180 quoting: fields containing a comma, quote or line break are
/// wrapped in quotes with embedded quotes doubled.
std::string csv_escape(std::string_view field);

/// Shortest round-trip-safe text ("%.17g"); nan/inf spelled out.
std::string format_double(double v);

std::string csv_header_line();

/// Writes the `#` metadata line, the column header and all rows.
void write_csv(std::ostream& out, const ExperimentReport& report, const ExperimentConfig& config);
std::string to_csv(const ExperimentReport& report, const ExperimentConfig& config);

}  // namespace homcrb
