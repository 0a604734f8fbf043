#ifndef QKDSIM_ORBIT_HPP
#define QKDSIM_ORBIT_HPP

#include "qkdsim/vec3.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qkdsim {

// Earth constants shared by the orbit geometry.
namespace earth {
constexpr double MU_KM3_S2 = 398600.4418;   // gravitational parameter, km^3/s^2
constexpr double R_EQ_KM = 6378.137;        // WGS-84 equatorial radius, km
constexpr double FLATTENING = 1.0 / 298.257223563;
constexpr double J2 = 1.08262668e-3;
constexpr double OMEGA_RAD_S = 7.2921150e-5; // rotation rate, rad/s
}

struct OrbitElements {
    double epoch = 0.0;        // UTC seconds since 1970
    double inclination = 0.0;  // rad
    double raan = 0.0;         // rad
    double eccentricity = 0.0;
    double arg_perigee = 0.0;  // rad
    double mean_anomaly = 0.0; // rad
    double mean_motion = 0.0;  // rev/day
    double drag_term = 0.0;    // B* from the TLE, unused by the Kepler propagator
    int catalog_id = 0;
    std::string intl_designator;
    int element_set = 0;
    int rev_at_epoch = 0;

    double semi_major_axis_km() const; // from mean_motion via Kepler's third law
    double period_s() const;
};

struct StateVector {
    double t = 0.0;  // UTC seconds
    Vec3 position;   // ECI, km
    Vec3 velocity;   // ECI, km/s
};

struct GroundStation {
    std::string name;
    double latitude = 0.0;   // geodetic, rad
    double longitude = 0.0;  // rad, (-pi, pi]
    double altitude_m = 0.0; // above WGS-84 ellipsoid
};

struct TopoSample {
    double t = 0.0;
    double elevation = 0.0;      // rad
    double azimuth = 0.0;        // rad, clockwise from north
    double range_m = 0.0;
    double range_rate_mps = 0.0; // positive = receding
};

struct AccessWindow {
    double start = 0.0;
    double end = 0.0;
    // one TopoSample per configured station, in station order, per time step
    std::vector<std::vector<TopoSample>> samples;
    double duration_s() const { return end - start; }
};

enum class Propagator { TwoBody, TwoBodyJ2 };

// ---- TLE handling ------------------------------------------------------

// Parses a standard two-line element set (optionally preceded by a title
// line). Both element lines must be 69 characters with valid mod-10
// checksums.
OrbitElements parse_tle(const std::string& text);

// Formats elements back into the two 69-character lines (no title line).
std::string format_tle(const OrbitElements& el);

int tle_checksum(const std::string& line68); // mod-10 over first 68 chars

// ---- Element construction ---------------------------------------------

// Circular orbit of the given altitude; mean motion from Kepler's third law.
OrbitElements circular_orbit(double altitude_km, double inclination_deg,
                             double raan_deg, double epoch_utc);

// ---- Propagation and geometry -----------------------------------------

// Kepler propagation, optionally with secular J2 drift of RAAN, argument of
// perigee and mean anomaly. Refuses |t - epoch| > 7 days.
StateVector propagate(const OrbitElements& el, double t_utc,
                      Propagator model = Propagator::TwoBody);

// ECEF position of a geodetic station, km.
Vec3 station_ecef_km(const GroundStation& st);

TopoSample topocentric(const StateVector& state, const GroundStation& st);

struct AccessSearch {
    double t0 = 0.0;
    double t1 = 0.0;
    double step_s = 1.0;
};

std::vector<AccessWindow> find_access_windows(const OrbitElements& el,
                                              const std::vector<GroundStation>& stations,
                                              double min_elevation_rad,
                                              const AccessSearch& search,
                                              Propagator model = Propagator::TwoBody);

} // namespace qkdsim

#endif
