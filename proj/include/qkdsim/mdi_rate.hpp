#ifndef QKDSIM_MDI_RATE_HPP
#define QKDSIM_MDI_RATE_HPP

#include "qkdsim/turbulence.hpp"

#include <cstdint>
#include <vector>

namespace qkdsim {

struct ProtocolParams {
    double e_d = 0.015;          // optical misalignment error probability
    double e_0 = 0.5;            // dark-count error probability
    double f_e = 1.16;           // error-correction efficiency
    double y_0 = 3e-6;           // background click probability per detector per gate
    double pulse_rate_hz = 1e14; // simulation convention mirroring the reference totals
    double n_sigma = 5.0;        // Gaussian multiplier for the finite-size bounds
};

struct IntensitySetting {
    double mu_a = 0.5, mu_b = 0.5; // signal intensities
    double nu_a = 0.1, nu_b = 0.1; // decoy intensities
    double omega = 0.0;            // vacuum
};

struct RatePoint {
    double t = 0.0;
    double eta_a = 0.0, eta_b = 0.0;
    double q_z = 0.0, e_z = 0.0;
    double q_x = 0.0, e_x = 0.0;
    double y_11 = 0.0, e_11 = 0.0;
    double p_11 = 0.0;
    double r_per_pulse = 0.0;
};

struct GainQber {
    double gain = 0.0;
    double qber = 0.0;
};

double binary_entropy(double x);

// Modified Bessel function of the first kind, order zero.
double bessel_i0(double z);

// Z-basis gain and QBER for phase-randomized WCPs on threshold detectors.
GainQber gains_qber_z(const IntensitySetting& s, double eta_a, double eta_b,
                      const ProtocolParams& p);

// X-basis analogue.
GainQber gains_qber_x(const IntensitySetting& s, double eta_a, double eta_b,
                      const ProtocolParams& p);

// True single-photon yield (Z) and error (X), i.e. the infinite-decoy limit.
GainQber single_photon_yield_error(double eta_a, double eta_b, const ProtocolParams& p);

double p11_z(const IntensitySetting& s); // mu_a * mu_b * exp(-mu_a - mu_b)

// Asymptotic secret fraction per pulse, clamped at zero.
double key_rate(const IntensitySetting& s, double eta_a, double eta_b,
                const ProtocolParams& p);

// Gaussian worst-case variant; converges to key_rate as n_pulses grows.
double finite_size_rate(const IntensitySetting& s, double eta_a, double eta_b,
                        const ProtocolParams& p, double n_pulses);

RatePoint rate_point(const IntensitySetting& s, double eta_a, double eta_b,
                     const ProtocolParams& p, double t = 0.0);

// Sum of r_per_pulse * pulse_rate * dt over a budget series. The schedule
// must provide one setting per sample.
double orbit_key_total(const std::vector<LinkBudgetSample>& budget,
                       const std::vector<IntensitySetting>& schedule,
                       const ProtocolParams& p, double step_s);

// ---- Monte-Carlo oracle ------------------------------------------------

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

struct McGains {
    McEstimate q_z, e_z, q_x, e_x;
};

// Simulates the physical detection model trial by trial: phase-randomized
// coherent amplitudes through the 50:50 beam splitter onto four threshold
// detectors with dark counts, success = one H and one V click, misalignment
// as an e_d error flip on success. Deterministic per seed.
McGains mc_oracle_gains(const IntensitySetting& s, double eta_a, double eta_b,
                        const ProtocolParams& p, std::uint64_t trials, std::uint64_t seed);

struct McSinglePhoton {
    McEstimate y_11, e_11;
};

// Same detection model restricted to exactly one photon per side.
McSinglePhoton mc_oracle_single_photon(double eta_a, double eta_b, const ProtocolParams& p,
                                       std::uint64_t trials, std::uint64_t seed);

} // namespace qkdsim

#endif
