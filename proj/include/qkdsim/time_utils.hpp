#ifndef QKDSIM_TIME_UTILS_HPP
#define QKDSIM_TIME_UTILS_HPP

#include <cstdint>
#include <string>

namespace qkdsim {

// UTC timestamps are carried as double seconds since 1970-01-01T00:00:00Z.
// Leap seconds are ignored; the resulting error is far below the geometric
// tolerances used anywhere in the toolkit.

// Days from civil date to 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d);

// "YYYY-MM-DDTHH:MM:SS[.fff]Z" -> seconds since epoch. Throws ParseError.
double parse_utc(const std::string& iso);

// Inverse of parse_utc, millisecond precision, always with 'Z' suffix.
std::string format_utc(double t);

// Greenwich mean sidereal time in radians for a UTC instant
// (IAU 1982 polynomial, UT1 ~ UTC).
double gmst_rad(double t_utc);

} // namespace qkdsim

#endif
