#pragma once

// JSON-lines and CSV serialization of check results.

#include "gma/identities.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gma {

/// %.17g form of a double ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double v);

std::string to_json_line(const CheckResult& r);
CheckResult from_json_line(std::string_view line);

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_field(std::string_view s);

/// Header: name,kind,lhs,rhs,residual_or_slack,tolerance,pass
std::string to_csv(std::span<const CheckResult> results);

/// Stable sort by name.
void sort_by_name(std::vector<CheckResult>& results);

}  // namespace gma
