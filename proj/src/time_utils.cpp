#include "qkdsim/time_utils.hpp"
#include "qkdsim/errors.hpp"

#include <cmath>
#include <cstdio>

namespace qkdsim {

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

double parse_utc(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    char zone = '\0';
    int n = std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%lf%c", &y, &mo, &d, &h, &mi, &s, &zone);
    if (n < 6 || (n == 7 && zone != 'Z'))
        throw ParseError("bad UTC timestamp: '" + iso + "' (expect YYYY-MM-DDTHH:MM:SS[.fff]Z)");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s < 0.0 || s >= 61.0)
        throw ParseError("out-of-range field in UTC timestamp: '" + iso + "'");
    return static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
}

std::string format_utc(double t) {
    // round to milliseconds first so carries propagate through the date
    double ms = std::round(t * 1000.0);
    std::int64_t total_ms = static_cast<std::int64_t>(ms);
    std::int64_t days = total_ms / 86400000;
    std::int64_t rem = total_ms % 86400000;
    if (rem < 0) { rem += 86400000; days -= 1; }

    // civil date from day count (inverse of days_from_civil)
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);

    int hh = static_cast<int>(rem / 3600000);
    int mi = static_cast<int>((rem / 60000) % 60);
    int ss = static_cast<int>((rem / 1000) % 60);
    int mss = static_cast<int>(rem % 1000);

    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<long long>(y + (m <= 2)), m, d, hh, mi, ss, mss);
    return buf;
}

double gmst_rad(double t_utc) {
    // days since J2000.0 = 2000-01-01T12:00:00Z
    const double j2000 = 946728000.0;
    const double d = (t_utc - j2000) / 86400.0;
    const double t = d / 36525.0;
    double deg = 280.46061837 + 360.98564736629 * d + 0.000387933 * t * t - t * t * t / 38710000.0;
    double rad = deg * M_PI / 180.0;
    rad = std::fmod(rad, 2.0 * M_PI);
    if (rad < 0) rad += 2.0 * M_PI;
    return rad;
}

} // namespace qkdsim
