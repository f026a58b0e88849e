#include "properuq/report_json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace properuq {

double round_to_12_digits(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::strtod(buf, nullptr);
}

std::string format_12_digits(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return round_to_12_digits(v);
    return format_12_digits(v);
}

std::string dump_report(const nlohmann::json& report) {
    return report.dump(2) + "\n";
}

}  // namespace properuq
