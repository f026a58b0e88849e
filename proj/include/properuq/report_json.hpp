#ifndef PROPERUQ_REPORT_JSON_HPP
#define PROPERUQ_REPORT_JSON_HPP

#include <string>

#include <json.hpp>

namespace properuq {

// Emitted floats are fixed to 12 significant digits so reruns under any
// thread count reproduce reports byte-for-byte (block-ordered reductions keep
// raw values within ~1e-13 relative; the rounding absorbs that).
double round_to_12_digits(double v);

// 12-significant-digit string for CSV cells; non-finite values render as
// "inf" / "-inf" / "nan".
std::string format_12_digits(double v);

// JSON value for a report number: the rounded double when finite, otherwise
// the explicit strings "inf" / "-inf" / "nan" (JSON has no non-finite
// literals and silent nulls would hide the flag).
nlohmann::json json_number(double v);

// Canonical report serialization: 2-space indent, trailing newline.
std::string dump_report(const nlohmann::json& report);

}  // namespace properuq

#endif
