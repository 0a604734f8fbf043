#ifndef QKDSIM_DOPPLER_HPP
#define QKDSIM_DOPPLER_HPP

#include "qkdsim/orbit.hpp"

#include <vector>

namespace qkdsim {

constexpr double SPEED_OF_LIGHT_MPS = 299792458.0;

struct DopplerSample {
    double t = 0.0;
    double shift_a_hz = 0.0;
    double shift_b_hz = 0.0;
    double offset_hz = 0.0; // shift_a - shift_b
    double wavelength_m = 0.0;
};

struct SyncSample {
    double t = 0.0;
    double delta_t_s = 0.0; // |L_A - L_B| / c
    double range_a_m = 0.0;
    double range_b_m = 0.0;
};

// First-order Doppler shift; positive for an approaching satellite
// (range_rate < 0).
double doppler_shift(double range_rate_mps, double wavelength_m);

std::vector<DopplerSample> doppler_series(const AccessWindow& window, double wavelength_m);

double sync_offset(double range_a_m, double range_b_m);

std::vector<SyncSample> sync_series(const AccessWindow& window);

struct ArrivalResidual {
    double send_time_s = 0.0;
    double residual_s = 0.0;   // arrival-time mismatch after compensation
    double mismatch_raw_s = 0.0; // mismatch without compensation
};

// Uniform send schedule across the window; per-pulse path delays L(t)/c with
// the sending-time compensation applied piecewise-constant per window sample.
std::vector<ArrivalResidual> compensated_arrivals(const AccessWindow& window,
                                                  double send_period_s);

} // namespace qkdsim

#endif
