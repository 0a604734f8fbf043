#include "qkdsim/turbulence.hpp"
#include "qkdsim/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace qkdsim {

namespace {
// SI form of the Fried scaling constant; equals the published
// micrometer-convention value 1.1654e-8 * (1e6)^1.2.
constexpr double FRIED_CONST_SI = 0.1847;
} // namespace

bool fried_constant_selfcheck() {
    return std::fabs(1.1654e-8 * std::pow(10.0, 7.2) - FRIED_CONST_SI) < 1e-3;
}

double cn2_at(double h_m, const TurbulenceProfile& profile) {
    if (h_m < 0.0) throw DomainError("cn2_at: altitude below the site");
    const double w = profile.wind_rms_mps;
    const double h = h_m;
    const double wind_term =
        0.00594 * std::pow(w / 27.0, 2) * std::pow(1e-5 * h, 10) * std::exp(-h / 1000.0);
    const double mid_term = 2.7e-16 * std::exp(-h / 1500.0);
    const double ground_term = profile.c0 * std::exp(-h / 100.0);
    return wind_term + mid_term + ground_term;
}

namespace {

double simpson(const TurbulenceProfile& p, double a, double b, long n) {
    // n must be even
    const double h = (b - a) / static_cast<double>(n);
    double sum = cn2_at(a, p) + cn2_at(b, p);
    for (long i = 1; i < n; ++i)
        sum += cn2_at(a + i * h, p) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

} // namespace

double integrated_cn2(const TurbulenceProfile& profile) {
    if (profile.c0 <= 0.0 || profile.z_max_m <= 0.0)
        throw InvariantError("integrated_cn2: c0 and z_max must be positive");

    static std::mutex cache_mu;
    static std::map<std::tuple<double, double, double, double>, double> cache;
    const auto key = std::make_tuple(profile.c0, profile.wind_rms_mps, profile.z_max_m,
                                     profile.site_altitude_m);
    {
        std::lock_guard<std::mutex> lk(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    long n = 64;
    double prev = simpson(profile, 0.0, profile.z_max_m, n);
    for (int level = 0; level < 20; ++level) {
        n *= 2;
        double cur = simpson(profile, 0.0, profile.z_max_m, n);
        if (std::fabs(cur - prev) <= 1e-4 * std::fabs(cur)) {
            std::lock_guard<std::mutex> lk(cache_mu);
            cache[key] = cur;
            return cur;
        }
        prev = cur;
    }
    throw ConvergenceError("integrated_cn2: Simpson refinement did not converge");
}

double fried_parameter(double wavelength_m, double elevation_rad,
                       const TurbulenceProfile& profile, SlantMode mode) {
    if (elevation_rad <= 0.0 || elevation_rad > M_PI / 2.0 + 1e-12)
        throw DomainError("fried_parameter: elevation must be in (0, pi/2]");
    const double J = integrated_cn2(profile);
    const double s = mode == SlantMode::Literal ? std::pow(std::sin(elevation_rad), 0.6) : 1.0;
    return FRIED_CONST_SI * std::pow(wavelength_m, 1.2) * s / std::pow(J, 0.6);
}

double beam_width(double range_m, double elevation_rad, const ChannelParams& params,
                  double r0_m) {
    if (range_m <= 0.0 || r0_m <= 0.0 || elevation_rad <= 0.0)
        throw DomainError("beam_width: range, r0 and elevation must be positive");
    const double diffraction = range_m * params.wavelength_m / (0.632 * params.r_s_m * M_PI);
    const double broadening =
        1.0 + (0.83 / std::sin(elevation_rad)) * std::pow(2.0 * params.r_s_m / r0_m, 5.0 / 3.0);
    return diffraction * std::pow(broadening, 3.0 / 5.0);
}

double uplink_transmittance(double omega_r_m, double r_r_m, double eta0) {
    if (omega_r_m <= 0.0) throw DomainError("uplink_transmittance: beam width must be positive");
    if (eta0 <= 0.0 || eta0 > 1.0) throw DomainError("uplink_transmittance: eta0 must be in (0,1]");
    if (r_r_m < 0.0) throw DomainError("uplink_transmittance: receiver radius must be >= 0");
    const double ratio = 2.0 * r_r_m * r_r_m / (omega_r_m * omega_r_m);
    return eta0 * (1.0 - std::exp(-ratio));
}

LinkResult link_budget(const TopoSample& topo, const ChannelParams& params,
                       const TurbulenceProfile& profile) {
    const double floor_rad = 5.0 * M_PI / 180.0;
    if (topo.elevation < std::max(params.min_elevation_rad, floor_rad) - 1e-12)
        throw BelowHorizonError("link_budget: elevation below the configured minimum");

    LinkResult r;
    r.r0_m = fried_parameter(params.wavelength_m, topo.elevation, profile, params.slant_mode);
    r.omega_r_m = beam_width(topo.range_m, topo.elevation, params, r.r0_m);
    r.eta = uplink_transmittance(r.omega_r_m, params.r_r_m, params.eta0());
    r.loss_db = -10.0 * std::log10(r.eta);
    return r;
}

std::vector<LinkBudgetSample> dual_link_series(const AccessWindow& window,
                                               const ChannelParams& params_a,
                                               const ChannelParams& params_b,
                                               const TurbulenceProfile& profile) {
    if (window.samples.empty()) throw EmptyWindowError("dual_link_series: window has no samples");

    std::vector<LinkBudgetSample> out;
    out.reserve(window.samples.size());
    for (const auto& pair : window.samples) {
        if (pair.size() != 2)
            throw InvariantError("dual_link_series: window must carry two stations per sample");
        const TopoSample& ta = pair[0];
        const TopoSample& tb = pair[1];
        LinkResult ra = link_budget(ta, params_a, profile);
        LinkResult rb = link_budget(tb, params_b, profile);

        LinkBudgetSample s;
        s.t = ta.t;
        s.eta_a = ra.eta;
        s.eta_b = rb.eta;
        s.loss_a_db = ra.loss_db;
        s.loss_b_db = rb.loss_db;
        s.loss_total_db = ra.loss_db + rb.loss_db;
        s.omega_a_m = ra.omega_r_m;
        s.omega_b_m = rb.omega_r_m;
        s.r0_a_m = ra.r0_m;
        s.r0_b_m = rb.r0_m;
        s.elev_a_rad = ta.elevation;
        s.elev_b_rad = tb.elevation;
        s.range_a_m = ta.range_m;
        s.range_b_m = tb.range_m;
        out.push_back(s);
    }
    return out;
}

SlantMode calibrate_slant_mode(const ChannelParams& params, const TurbulenceProfile& profile,
                               double* max_err_literal_db, double* max_err_zenith_db) {
    struct Point { double range_m, elev_rad, loss_db; };
    const Point points[2] = {
        {501e3, 75.9 * M_PI / 180.0, 42.5},
        {1385e3, 15.0 * M_PI / 180.0, 52.3},
    };
    double worst[2] = {0.0, 0.0};
    const SlantMode modes[2] = {SlantMode::Literal, SlantMode::ZenithR0};
    for (int m = 0; m < 2; ++m) {
        for (const auto& pt : points) {
            double r0 = fried_parameter(params.wavelength_m, pt.elev_rad, profile, modes[m]);
            double omega = beam_width(pt.range_m, pt.elev_rad, params, r0);
            double eta = uplink_transmittance(omega, params.r_r_m, params.eta0());
            double loss = -10.0 * std::log10(eta);
            worst[m] = std::max(worst[m], std::fabs(loss - pt.loss_db));
        }
    }
    if (max_err_literal_db) *max_err_literal_db = worst[0];
    if (max_err_zenith_db) *max_err_zenith_db = worst[1];
    return worst[1] <= worst[0] ? SlantMode::ZenithR0 : SlantMode::Literal;
}

std::string to_string(SlantMode m) {
    return m == SlantMode::Literal ? "literal" : "zenith_r0";
}

} // namespace qkdsim
