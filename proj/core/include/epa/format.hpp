#pragma once

#include <string>
#include <string_view>

namespace epa {

/// Shortest locale-independent rendering with `digits` significant digits
/// ("%.*g" semantics, '.' separator). Non-finite values render as nan/inf.
std::string format_sig(double value, int digits);

/// CSV numeric cell: 9 significant digits.
inline std::string csv_number(double value) { return format_sig(value, 9); }

/// Quotes a CSV field when it contains a comma, quote, or line break.
std::string csv_field(std::string_view text);

/// Escapes &, <, >, " and ' for XML text and attribute values.
std::string xml_escape(std::string_view text);

}  // namespace epa
