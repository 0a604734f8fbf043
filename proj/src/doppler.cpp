#include "qkdsim/doppler.hpp"
#include "qkdsim/errors.hpp"

#include <cmath>

namespace qkdsim {

double doppler_shift(double range_rate_mps, double wavelength_m) {
    if (std::fabs(range_rate_mps) >= 2e4)
        throw DomainError("doppler_shift: range rate beyond LEO speeds");
    if (wavelength_m <= 0.0) throw DomainError("doppler_shift: wavelength must be positive");
    return -range_rate_mps / wavelength_m;
}

std::vector<DopplerSample> doppler_series(const AccessWindow& window, double wavelength_m) {
    std::vector<DopplerSample> out;
    out.reserve(window.samples.size());
    for (const auto& pair : window.samples) {
        if (pair.size() != 2)
            throw InvariantError("doppler_series: dual-station window required");
        DopplerSample d;
        d.t = pair[0].t;
        d.wavelength_m = wavelength_m;
        d.shift_a_hz = doppler_shift(pair[0].range_rate_mps, wavelength_m);
        d.shift_b_hz = doppler_shift(pair[1].range_rate_mps, wavelength_m);
        d.offset_hz = d.shift_a_hz - d.shift_b_hz;
        out.push_back(d);
    }
    return out;
}

double sync_offset(double range_a_m, double range_b_m) {
    if (range_a_m <= 0.0 || range_b_m <= 0.0)
        throw DomainError("sync_offset: ranges must be positive");
    return std::fabs(range_a_m - range_b_m) / SPEED_OF_LIGHT_MPS;
}

std::vector<SyncSample> sync_series(const AccessWindow& window) {
    std::vector<SyncSample> out;
    out.reserve(window.samples.size());
    for (const auto& pair : window.samples) {
        if (pair.size() != 2)
            throw InvariantError("sync_series: dual-station window required");
        SyncSample s;
        s.t = pair[0].t;
        s.range_a_m = pair[0].range_m;
        s.range_b_m = pair[1].range_m;
        s.delta_t_s = sync_offset(s.range_a_m, s.range_b_m);
        out.push_back(s);
    }
    return out;
}

std::vector<ArrivalResidual> compensated_arrivals(const AccessWindow& window,
                                                  double send_period_s) {
    if (send_period_s <= 0.0)
        throw DomainError("compensated_arrivals: send period must be positive");
    if (window.samples.size() < 2)
        throw EmptyWindowError("compensated_arrivals: need at least two window samples");

    const size_t n = window.samples.size();
    const double t0 = window.samples.front()[0].t;
    const double t1 = window.samples.back()[0].t;
    const double step = (t1 - t0) / static_cast<double>(n - 1);

    // signed path-delay difference at sample index i
    auto delta_at = [&](size_t i) {
        const auto& pair = window.samples[i];
        return (pair[0].range_m - pair[1].range_m) / SPEED_OF_LIGHT_MPS;
    };

    std::vector<ArrivalResidual> out;
    for (double ts = t0; ts <= t1 + 1e-9; ts += send_period_s) {
        const double f = (ts - t0) / step;
        size_t i = std::min(static_cast<size_t>(f), n - 2);
        const double frac = f - static_cast<double>(i);
        const double delta_interp = delta_at(i) * (1.0 - frac) + delta_at(i + 1) * frac;
        // compensation is held constant across each sample interval
        const double delta_held = delta_at(i);

        ArrivalResidual r;
        r.send_time_s = ts;
        r.mismatch_raw_s = std::fabs(delta_interp);
        r.residual_s = delta_interp - delta_held;
        out.push_back(r);
    }
    return out;
}

} // namespace qkdsim
