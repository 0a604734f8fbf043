#include "qkdsim/orbit.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/time_utils.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qkdsim {

namespace {

constexpr double TWO_PI = 2.0 * M_PI;
constexpr double DEG = M_PI / 180.0;

double wrap_2pi(double a) {
    a = std::fmod(a, TWO_PI);
    if (a < 0) a += TWO_PI;
    return a;
}

std::string rstrip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    return s;
}

double parse_field_double(const std::string& line, int col0, int len, int lineno) {
    std::string f = line.substr(col0, len);
    try {
        size_t pos = 0;
        double v = std::stod(f, &pos);
        return v;
    } catch (...) {
        throw FormatError("TLE line " + std::to_string(lineno) + ": bad numeric field '" + f + "'");
    }
}

int parse_field_int(const std::string& line, int col0, int len, int lineno) {
    std::string f = line.substr(col0, len);
    try {
        return std::stoi(f);
    } catch (...) {
        throw FormatError("TLE line " + std::to_string(lineno) + ": bad integer field '" + f + "'");
    }
}

// "±NNNNN±E" -> ±0.NNNNN * 10^±E  (B* and nddot notation)
double parse_exp_field(const std::string& f) {
    std::string s = rstrip(f);
    if (s.empty()) return 0.0;
    double sign = 1.0;
    size_t i = 0;
    if (s[i] == '-') { sign = -1.0; ++i; }
    else if (s[i] == '+' || s[i] == ' ') ++i;
    std::string mant, exp;
    for (; i < s.size(); ++i) {
        if (s[i] == '+' || s[i] == '-') { exp = s.substr(i); break; }
        mant += s[i];
    }
    if (mant.empty()) return 0.0;
    double m = std::stod("0." + mant);
    int e = exp.empty() ? 0 : std::stoi(exp);
    return sign * m * std::pow(10.0, e);
}

double tle_epoch_to_utc(double epoch_field) {
    int yy = static_cast<int>(epoch_field / 1000.0);
    double doy = epoch_field - yy * 1000.0;
    int year = (yy >= 57) ? 1900 + yy : 2000 + yy;
    std::int64_t day0 = days_from_civil(year, 1, 1);
    return (static_cast<double>(day0) + (doy - 1.0)) * 86400.0;
}

void check_line(const std::string& line, char leading, int lineno) {
    if (line.size() != 69)
        throw FormatError("TLE line " + std::to_string(lineno) + ": expected 69 characters, got " +
                          std::to_string(line.size()));
    if (line[0] != leading)
        throw FormatError("TLE line " + std::to_string(lineno) + ": expected line number '" +
                          std::string(1, leading) + "'");
    int want = line[68] - '0';
    int got = tle_checksum(line);
    if (want != got)
        throw ChecksumError("TLE line " + std::to_string(lineno) + ": checksum " +
                            std::to_string(want) + " does not match computed " + std::to_string(got));
}

} // namespace

int tle_checksum(const std::string& line) {
    int sum = 0;
    size_t n = std::min<size_t>(68, line.size());
    for (size_t i = 0; i < n; ++i) {
        char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        else if (c == '-') sum += 1;
    }
    return sum % 10;
}

double OrbitElements::semi_major_axis_km() const {
    double T = period_s();
    return std::cbrt(earth::MU_KM3_S2 * T * T / (4.0 * M_PI * M_PI));
}

double OrbitElements::period_s() const { return 86400.0 / mean_motion; }

OrbitElements parse_tle(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = rstrip(line);
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() == 3) lines.erase(lines.begin()); // title line
    if (lines.size() != 2)
        throw FormatError("TLE record must be two element lines (plus optional title), got " +
                          std::to_string(lines.size()) + " lines");
    const std::string& l1 = lines[0];
    const std::string& l2 = lines[1];
    check_line(l1, '1', 1);
    check_line(l2, '2', 2);

    OrbitElements el;
    el.catalog_id = parse_field_int(l1, 2, 5, 1);
    int cat2 = parse_field_int(l2, 2, 5, 2);
    if (cat2 != el.catalog_id)
        throw FormatError("TLE line 2: catalog number mismatch with line 1");
    el.intl_designator = rstrip(l1.substr(9, 8));
    el.epoch = tle_epoch_to_utc(parse_field_double(l1, 18, 14, 1));
    el.drag_term = parse_exp_field(l1.substr(53, 8));
    el.element_set = parse_field_int(l1, 64, 4, 1);

    el.inclination = parse_field_double(l2, 8, 8, 2) * DEG;
    el.raan = wrap_2pi(parse_field_double(l2, 17, 8, 2) * DEG);
    el.eccentricity = std::stod("0." + l2.substr(26, 7));
    el.arg_perigee = wrap_2pi(parse_field_double(l2, 34, 8, 2) * DEG);
    el.mean_anomaly = wrap_2pi(parse_field_double(l2, 43, 8, 2) * DEG);
    el.mean_motion = parse_field_double(l2, 52, 11, 2);
    el.rev_at_epoch = parse_field_int(l2, 63, 5, 2);

    if (el.eccentricity < 0.0 || el.eccentricity >= 1.0)
        throw InvariantError("TLE eccentricity out of [0,1)");
    if (el.mean_motion <= 0.0)
        throw InvariantError("TLE mean motion must be positive");
    return el;
}

std::string format_tle(const OrbitElements& el) {
    // epoch back to YYDDD.DDDDDDDD
    double day = el.epoch / 86400.0;
    std::int64_t dfloor = static_cast<std::int64_t>(std::floor(day));
    // walk back to the civil year containing the epoch
    // (cheap linear scan over candidate years)
    int year = 1970 + static_cast<int>(dfloor / 366) - 1;
    while (days_from_civil(year + 1, 1, 1) <= dfloor) ++year;
    double doy = day - static_cast<double>(days_from_civil(year, 1, 1)) + 1.0;
    int yy = year % 100;

    // B* in TLE exponent notation
    char bstar[12];
    if (el.drag_term == 0.0) {
        std::snprintf(bstar, sizeof(bstar), " 00000+0");
    } else {
        double b = el.drag_term;
        int sign = b < 0 ? -1 : 1;
        b = std::fabs(b);
        int e = static_cast<int>(std::ceil(std::log10(b) + 1e-12));
        double mant = b / std::pow(10.0, e);
        int m5 = static_cast<int>(std::lround(mant * 100000.0));
        if (m5 >= 100000) { m5 /= 10; ++e; }
        std::snprintf(bstar, sizeof(bstar), "%c%05d%+d", sign < 0 ? '-' : ' ', m5, e);
    }

    char l1[80], l2[80];
    std::snprintf(l1, sizeof(l1), "1 %05dU %-8s %02d%012.8f  .00000000  00000+0 %s 0 %4d",
                  el.catalog_id, el.intl_designator.c_str(), yy, doy, bstar, el.element_set);
    int ecc7 = static_cast<int>(std::lround(el.eccentricity * 1e7));
    std::snprintf(l2, sizeof(l2), "2 %05d %8.4f %8.4f %07d %8.4f %8.4f %11.8f%5d",
                  el.catalog_id, el.inclination / DEG, el.raan / DEG, ecc7,
                  el.arg_perigee / DEG, el.mean_anomaly / DEG, el.mean_motion, el.rev_at_epoch);
    std::string s1(l1), s2(l2);
    s1 += std::to_string(tle_checksum(s1));
    s2 += std::to_string(tle_checksum(s2));
    return s1 + "\n" + s2 + "\n";
}

OrbitElements circular_orbit(double altitude_km, double inclination_deg,
                             double raan_deg, double epoch_utc) {
    if (altitude_km < 200.0 || altitude_km > 2000.0)
        throw RangeError("circular_orbit: altitude " + std::to_string(altitude_km) +
                         " km outside [200, 2000]");
    OrbitElements el;
    el.epoch = epoch_utc;
    el.inclination = wrap_2pi(inclination_deg * DEG);
    el.raan = wrap_2pi(raan_deg * DEG);
    el.eccentricity = 0.0;
    el.arg_perigee = 0.0;
    el.mean_anomaly = 0.0;
    double a = earth::R_EQ_KM + altitude_km;
    double T = TWO_PI * std::sqrt(a * a * a / earth::MU_KM3_S2);
    el.mean_motion = 86400.0 / T;
    el.catalog_id = 99999;
    el.intl_designator = "00000A";
    return el;
}

StateVector propagate(const OrbitElements& el, double t_utc, Propagator model) {
    if (std::fabs(t_utc - el.epoch) > 7.0 * 86400.0)
        throw PropagationWindowError("propagate: requested time is more than 7 days from epoch");

    const double a = el.semi_major_axis_km();
    const double e = el.eccentricity;
    const double n_rad = TWO_PI / el.period_s(); // rad/s
    const double dt = t_utc - el.epoch;

    double raan = el.raan;
    double argp = el.arg_perigee;
    double M = el.mean_anomaly + n_rad * dt;

    if (model == Propagator::TwoBodyJ2) {
        const double p = a * (1.0 - e * e);
        const double k = 1.5 * n_rad * earth::J2 * std::pow(earth::R_EQ_KM / p, 2);
        const double ci = std::cos(el.inclination);
        raan += -k * ci * dt;
        argp += 0.5 * k * (5.0 * ci * ci - 1.0) * dt;
        M += 0.5 * k * std::sqrt(1.0 - e * e) * (3.0 * ci * ci - 1.0) * dt;
    }
    M = wrap_2pi(M);

    // Kepler's equation by Newton iteration
    double E = e < 0.8 ? M : M_PI;
    for (int i = 0; i < 60; ++i) {
        double f = E - e * std::sin(E) - M;
        double dE = f / (1.0 - e * std::cos(E));
        E -= dE;
        if (std::fabs(dE) < 1e-14) break;
    }

    const double cE = std::cos(E), sE = std::sin(E);
    const double r = a * (1.0 - e * cE);
    const double se = std::sqrt(1.0 - e * e);
    // perifocal frame
    const double xp = a * (cE - e);
    const double yp = a * se * sE;
    const double vf = std::sqrt(earth::MU_KM3_S2 * a) / r;
    const double vxp = -vf * sE;
    const double vyp = vf * se * cE;

    const double cO = std::cos(raan), sO = std::sin(raan);
    const double ci = std::cos(el.inclination), si = std::sin(el.inclination);
    const double cw = std::cos(argp), sw = std::sin(argp);

    // perifocal -> ECI rotation, row by row
    const double r11 = cO * cw - sO * sw * ci, r12 = -cO * sw - sO * cw * ci;
    const double r21 = sO * cw + cO * sw * ci, r22 = -sO * sw + cO * cw * ci;
    const double r31 = sw * si, r32 = cw * si;

    StateVector sv;
    sv.t = t_utc;
    sv.position = {r11 * xp + r12 * yp, r21 * xp + r22 * yp, r31 * xp + r32 * yp};
    sv.velocity = {r11 * vxp + r12 * vyp, r21 * vxp + r22 * vyp, r31 * vxp + r32 * vyp};
    return sv;
}

Vec3 station_ecef_km(const GroundStation& st) {
    const double f = earth::FLATTENING;
    const double e2 = f * (2.0 - f);
    const double sphi = std::sin(st.latitude), cphi = std::cos(st.latitude);
    const double N = earth::R_EQ_KM / std::sqrt(1.0 - e2 * sphi * sphi);
    const double h = st.altitude_m / 1000.0;
    return {(N + h) * cphi * std::cos(st.longitude),
            (N + h) * cphi * std::sin(st.longitude),
            (N * (1.0 - e2) + h) * sphi};
}

TopoSample topocentric(const StateVector& state, const GroundStation& st) {
    const double theta = gmst_rad(state.t);
    const double ct = std::cos(theta), stheta = std::sin(theta);

    // ECI -> ECEF
    Vec3 r_ecef{ct * state.position.x + stheta * state.position.y,
                -stheta * state.position.x + ct * state.position.y,
                state.position.z};
    Vec3 v_rot{ct * state.velocity.x + stheta * state.velocity.y,
               -stheta * state.velocity.x + ct * state.velocity.y,
               state.velocity.z};
    // transport term: velocity seen in the rotating frame
    Vec3 omega{0.0, 0.0, earth::OMEGA_RAD_S};
    Vec3 v_ecef = v_rot - omega.cross(r_ecef);

    Vec3 sta = station_ecef_km(st);
    Vec3 rho = r_ecef - sta;

    const double sphi = std::sin(st.latitude), cphi = std::cos(st.latitude);
    const double slam = std::sin(st.longitude), clam = std::cos(st.longitude);
    Vec3 up{cphi * clam, cphi * slam, sphi};
    Vec3 east{-slam, clam, 0.0};
    Vec3 north{-sphi * clam, -sphi * slam, cphi};

    TopoSample s;
    s.t = state.t;
    const double range_km = rho.norm();
    s.range_m = range_km * 1000.0;
    Vec3 u = rho / range_km;
    s.elevation = std::asin(std::clamp(u.dot(up), -1.0, 1.0));
    s.azimuth = std::atan2(u.dot(east), u.dot(north));
    if (s.azimuth < 0) s.azimuth += TWO_PI;
    s.range_rate_mps = u.dot(v_ecef) * 1000.0;
    return s;
}

std::vector<AccessWindow> find_access_windows(const OrbitElements& el,
                                              const std::vector<GroundStation>& stations,
                                              double min_elevation_rad,
                                              const AccessSearch& search,
                                              Propagator model) {
    if (search.t1 <= search.t0)
        throw EmptySearchError("find_access_windows: search interval is empty");
    if (search.step_s <= 0.0 || search.step_s > 10.0)
        throw RangeError("find_access_windows: step must be in (0, 10] s");
    if (stations.empty() || stations.size() > 2)
        throw InvariantError("find_access_windows: one or two stations required");

    auto margin = [&](double t) {
        StateVector sv = propagate(el, t, model);
        double m = 1e9;
        for (const auto& st : stations)
            m = std::min(m, topocentric(sv, st).elevation - min_elevation_rad);
        return m;
    };

    auto bisect = [&](double lo, double hi) {
        // margin(lo) and margin(hi) bracket a sign change
        const double tol = search.step_s / 100.0;
        bool lo_in = margin(lo) >= 0.0;
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            if ((margin(mid) >= 0.0) == lo_in) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<AccessWindow> windows;
    double prev_t = search.t0;
    double prev_m = margin(prev_t);
    double win_start = prev_m >= 0.0 ? search.t0 : -1.0;

    for (double t = search.t0 + search.step_s;; t += search.step_s) {
        bool last = t >= search.t1;
        if (last) t = search.t1;
        double m = margin(t);
        if (prev_m < 0.0 && m >= 0.0) {
            win_start = bisect(t, prev_t);
        } else if (prev_m >= 0.0 && m < 0.0 && win_start >= 0.0) {
            AccessWindow w;
            w.start = win_start;
            w.end = bisect(prev_t, t);
            windows.push_back(w);
            win_start = -1.0;
        }
        prev_t = t;
        prev_m = m;
        if (last) break;
    }
    if (win_start >= 0.0) {
        AccessWindow w;
        w.start = win_start;
        w.end = search.t1;
        windows.push_back(w);
    }

    // fill per-window samples on the original grid
    for (auto& w : windows) {
        long k0 = static_cast<long>(std::ceil((w.start - search.t0) / search.step_s - 1e-9));
        for (long k = k0;; ++k) {
            double t = search.t0 + k * search.step_s;
            if (t > w.end + 1e-9) break;
            StateVector sv = propagate(el, t, model);
            std::vector<TopoSample> per_station;
            bool ok = true;
            for (const auto& st : stations) {
                TopoSample ts = topocentric(sv, st);
                if (ts.elevation < min_elevation_rad) ok = false;
                per_station.push_back(ts);
            }
            if (ok) w.samples.push_back(std::move(per_station));
        }
    }
    return windows;
}

} // namespace qkdsim
