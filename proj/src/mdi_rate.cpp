#include "qkdsim/mdi_rate.hpp"
#include "qkdsim/errors.hpp"

#include <cmath>
#include <random>

namespace qkdsim {

namespace {

void check_probability(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " must be in [0,1]");
}

void check_inputs(const IntensitySetting& s, double eta_a, double eta_b,
                  const ProtocolParams& p) {
    check_probability(eta_a, "eta_a");
    check_probability(eta_b, "eta_b");
    if (s.mu_a < 0.0 || s.mu_b < 0.0 || s.nu_a < 0.0 || s.nu_b < 0.0)
        throw DomainError("intensities must be nonnegative");
    if (p.y_0 < 0.0 || p.y_0 >= 1.0) throw DomainError("y_0 must be in [0,1)");
    if (p.e_d < 0.0 || p.e_d > 0.5) throw DomainError("e_d must be in [0,0.5]");
}

struct ZModel {
    double lam_a, lam_b, mu_p, x, d;
};

ZModel z_model(const IntensitySetting& s, double eta_a, double eta_b, const ProtocolParams& p) {
    ZModel m;
    m.lam_a = s.mu_a * eta_a;
    m.lam_b = s.mu_b * eta_b;
    m.mu_p = m.lam_a + m.lam_b;
    m.x = std::sqrt(m.lam_a * m.lam_b) / 2.0;
    m.d = 1.0 - p.y_0;
    return m;
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

} // namespace

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double bessel_i0(double z) {
    z = std::fabs(z);
    if (z < 20.0) {
        double term = 1.0, sum = 1.0;
        const double q = z * z / 4.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum;
    }
    // asymptotic expansion for large argument
    const double inv8z = 1.0 / (8.0 * z);
    double series = 1.0 + inv8z + 4.5 * inv8z * inv8z + 37.5 * inv8z * inv8z * inv8z;
    return std::exp(z) / std::sqrt(2.0 * M_PI * z) * series;
}

GainQber gains_qber_z(const IntensitySetting& s, double eta_a, double eta_b,
                      const ProtocolParams& p) {
    check_inputs(s, eta_a, eta_b, p);
    const ZModel m = z_model(s, eta_a, eta_b, p);
    const double q_c = 2.0 * m.d * m.d * std::exp(-m.mu_p / 2.0) *
                       (1.0 - m.d * std::exp(-m.lam_a / 2.0)) *
                       (1.0 - m.d * std::exp(-m.lam_b / 2.0));
    const double q_e = 2.0 * p.y_0 * m.d * m.d * std::exp(-m.mu_p / 2.0) *
                       (bessel_i0(2.0 * m.x) - m.d * std::exp(-m.mu_p / 2.0));
    GainQber g;
    g.gain = q_c + q_e;
    g.qber = g.gain > 0.0 ? (p.e_d * q_c + (1.0 - p.e_d) * q_e) / g.gain : 0.0;
    return g;
}

GainQber gains_qber_x(const IntensitySetting& s, double eta_a, double eta_b,
                      const ProtocolParams& p) {
    check_inputs(s, eta_a, eta_b, p);
    const ZModel m = z_model(s, eta_a, eta_b, p);
    const double y = m.d * std::exp(-m.mu_p / 4.0);
    const double i0x = bessel_i0(m.x);
    const double i02x = bessel_i0(2.0 * m.x);
    GainQber g;
    g.gain = 2.0 * y * y * (1.0 + 2.0 * y * y - 4.0 * y * i0x + i02x);
    const double err = p.e_0 * g.gain - (p.e_0 - p.e_d) * 2.0 * y * y * (i02x - 1.0);
    g.qber = g.gain > 0.0 ? err / g.gain : 0.0;
    return g;
}

GainQber single_photon_yield_error(double eta_a, double eta_b, const ProtocolParams& p) {
    check_probability(eta_a, "eta_a");
    check_probability(eta_b, "eta_b");
    const double d = 1.0 - p.y_0;
    const double y0 = p.y_0;
    GainQber g;
    g.gain = d * d * (eta_a * eta_b / 2.0 +
                      (2.0 * eta_a + 2.0 * eta_b - 3.0 * eta_a * eta_b) * y0 +
                      4.0 * (1.0 - eta_a) * (1.0 - eta_b) * y0 * y0);
    const double err = p.e_0 * g.gain - (p.e_0 - p.e_d) * d * d * eta_a * eta_b / 2.0;
    g.qber = g.gain > 0.0 ? err / g.gain : 0.0;
    return g;
}

double p11_z(const IntensitySetting& s) {
    return s.mu_a * s.mu_b * std::exp(-s.mu_a - s.mu_b);
}

double key_rate(const IntensitySetting& s, double eta_a, double eta_b,
                const ProtocolParams& p) {
    const GainQber z = gains_qber_z(s, eta_a, eta_b, p);
    const GainQber sp = single_photon_yield_error(eta_a, eta_b, p);
    const double r = p11_z(s) * sp.gain * (1.0 - binary_entropy(sp.qber)) -
                     z.gain * p.f_e * binary_entropy(z.qber);
    return std::max(r, 0.0);
}

double finite_size_rate(const IntensitySetting& s, double eta_a, double eta_b,
                        const ProtocolParams& p, double n_pulses) {
    if (n_pulses <= 0.0) throw DomainError("finite_size_rate: n_pulses must be positive");
    const GainQber z = gains_qber_z(s, eta_a, eta_b, p);
    const GainQber sp = single_photon_yield_error(eta_a, eta_b, p);
    const double p11 = p11_z(s);
    const double k = p.n_sigma;

    auto clamp01 = [](double v) { return std::min(std::max(v, 0.0), 1.0); };

    const double qz_up = clamp01(z.gain + k * std::sqrt(z.gain * (1.0 - z.gain) / n_pulses));
    double ez_up = z.qber;
    if (z.gain > 0.0)
        ez_up += k * std::sqrt(z.qber * (1.0 - z.qber) / (n_pulses * z.gain));
    ez_up = std::min(clamp01(ez_up), 0.5);

    const double n11 = n_pulses * p11; // effective single-photon-pair trials
    if (n11 <= 0.0) return 0.0;
    const double y11_low =
        std::max(0.0, sp.gain - k * std::sqrt(sp.gain * (1.0 - sp.gain) / n11));
    double e11_up = sp.qber;
    if (sp.gain > 0.0)
        e11_up += k * std::sqrt(sp.qber * (1.0 - sp.qber) / (n11 * sp.gain));
    e11_up = std::min(clamp01(e11_up), 0.5);

    const double r = p11 * y11_low * (1.0 - binary_entropy(e11_up)) -
                     qz_up * p.f_e * binary_entropy(ez_up);
    return std::max(r, 0.0);
}

RatePoint rate_point(const IntensitySetting& s, double eta_a, double eta_b,
                     const ProtocolParams& p, double t) {
    RatePoint r;
    r.t = t;
    r.eta_a = eta_a;
    r.eta_b = eta_b;
    const GainQber z = gains_qber_z(s, eta_a, eta_b, p);
    const GainQber x = gains_qber_x(s, eta_a, eta_b, p);
    const GainQber sp = single_photon_yield_error(eta_a, eta_b, p);
    r.q_z = z.gain;
    r.e_z = z.qber;
    r.q_x = x.gain;
    r.e_x = x.qber;
    r.y_11 = sp.gain;
    r.e_11 = sp.qber;
    r.p_11 = p11_z(s);
    r.r_per_pulse = key_rate(s, eta_a, eta_b, p);
    return r;
}

double orbit_key_total(const std::vector<LinkBudgetSample>& budget,
                       const std::vector<IntensitySetting>& schedule,
                       const ProtocolParams& p, double step_s) {
    if (schedule.size() != budget.size())
        throw ScheduleGapError("orbit_key_total: schedule does not cover every sample");
    double bits = 0.0;
    for (size_t i = 0; i < budget.size(); ++i)
        bits += key_rate(schedule[i], budget[i].eta_a, budget[i].eta_b, p) *
                p.pulse_rate_hz * step_s;
    return bits;
}

// ---- Monte-Carlo oracle ------------------------------------------------

namespace {

// click pattern over detectors [P1H, P1V, P2H, P2V]
struct Clicks {
    bool c[4] = {false, false, false, false};

    bool success() const {
        int h = (c[0] ? 1 : 0) + (c[2] ? 1 : 0);
        int v = (c[1] ? 1 : 0) + (c[3] ? 1 : 0);
        return h == 1 && v == 1;
    }
    // valid only when success(): true when both clicks share a port
    bool same_port() const { return (c[0] && c[1]) || (c[2] && c[3]); }
};

Clicks sample_clicks(const double n[4], double y0, std::mt19937_64& rng) {
    Clicks k;
    for (int i = 0; i < 4; ++i) {
        double p_click = 1.0 - (1.0 - y0) * std::exp(-n[i]);
        k.c[i] = uniform01(rng) < p_click;
    }
    return k;
}

} // namespace

McGains mc_oracle_gains(const IntensitySetting& s, double eta_a, double eta_b,
                        const ProtocolParams& p, std::uint64_t trials, std::uint64_t seed) {
    check_inputs(s, eta_a, eta_b, p);
    if (trials < 100000) throw DomainError("mc_oracle_gains: at least 1e5 trials required");

    const double lam_a = s.mu_a * eta_a;
    const double lam_b = s.mu_b * eta_b;
    const double mu_p = lam_a + lam_b;
    const double amp = std::sqrt(lam_a * lam_b); // 2x

    std::mt19937_64 rng(seed);
    std::uint64_t z_succ = 0, z_err = 0, x_succ = 0, x_err = 0;

    // Z basis
    for (std::uint64_t i = 0; i < trials; ++i) {
        const bool bit_a = uniform01(rng) < 0.5;
        const bool bit_b = uniform01(rng) < 0.5;
        const double theta = uniform01(rng) * 2.0 * M_PI;
        double n[4];
        if (bit_a != bit_b) {
            // orthogonal polarizations, no interference
            const double na = lam_a / 2.0, nb = lam_b / 2.0;
            // Alice's polarization index: bit 0 -> H, 1 -> V
            n[bit_a ? 1 : 0] = na;
            n[bit_a ? 3 : 2] = na;
            n[bit_b ? 1 : 0] = nb;
            n[bit_b ? 3 : 2] = nb;
        } else {
            const double beat = amp * std::cos(theta);
            const double n1 = mu_p / 2.0 + beat;
            const double n2 = mu_p / 2.0 - beat;
            n[bit_a ? 1 : 0] = n1;
            n[bit_a ? 3 : 2] = n2;
            n[bit_a ? 0 : 1] = 0.0;
            n[bit_a ? 2 : 3] = 0.0;
        }
        Clicks k = sample_clicks(n, p.y_0, rng);
        if (k.success()) {
            ++z_succ;
            bool raw_error = (bit_a == bit_b);
            if (uniform01(rng) < p.e_d) raw_error = !raw_error;
            if (raw_error) ++z_err;
        }
    }

    // X basis
    for (std::uint64_t i = 0; i < trials; ++i) {
        const double sa = uniform01(rng) < 0.5 ? 1.0 : -1.0;
        const double sb = uniform01(rng) < 0.5 ? 1.0 : -1.0;
        const double theta = uniform01(rng) * 2.0 * M_PI;
        const double beat = amp / 2.0 * std::cos(theta); // x * cos(theta)
        const double ss = sa * sb;
        double n[4];
        n[0] = mu_p / 4.0 + beat;
        n[1] = mu_p / 4.0 + ss * beat;
        n[2] = mu_p / 4.0 - beat;
        n[3] = mu_p / 4.0 - ss * beat;
        for (double& v : n) v = std::max(v, 0.0); // guard rounding
        Clicks k = sample_clicks(n, p.y_0, rng);
        if (k.success()) {
            ++x_succ;
            // matched signs should land in the same output port
            bool raw_error = (ss > 0.0) != k.same_port();
            if (uniform01(rng) < p.e_d) raw_error = !raw_error;
            if (raw_error) ++x_err;
        }
    }

    auto freq = [&](std::uint64_t num, std::uint64_t den) {
        McEstimate e;
        if (den == 0) return e;
        e.value = static_cast<double>(num) / static_cast<double>(den);
        e.stderr_ = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(den));
        return e;
    };

    McGains g;
    g.q_z = freq(z_succ, trials);
    g.e_z = freq(z_err, z_succ);
    g.q_x = freq(x_succ, trials);
    g.e_x = freq(x_err, x_succ);
    return g;
}

McSinglePhoton mc_oracle_single_photon(double eta_a, double eta_b, const ProtocolParams& p,
                                       std::uint64_t trials, std::uint64_t seed) {
    check_probability(eta_a, "eta_a");
    check_probability(eta_b, "eta_b");
    if (trials < 100000) throw DomainError("mc_oracle_single_photon: at least 1e5 trials required");

    std::mt19937_64 rng(seed);
    std::uint64_t z_succ = 0, x_succ = 0, x_err = 0;

    auto add_dark_and_judge = [&](int occ_a, int occ_b) {
        // occ_* are detector indices carrying a real photon, or -1
        Clicks k;
        if (occ_a >= 0) k.c[occ_a] = true;
        if (occ_b >= 0) k.c[occ_b] = true;
        for (int i = 0; i < 4; ++i)
            if (!k.c[i]) k.c[i] = uniform01(rng) < p.y_0;
        return k;
    };

    // Z basis: yield
    for (std::uint64_t i = 0; i < trials; ++i) {
        const bool bit_a = uniform01(rng) < 0.5;
        const bool bit_b = uniform01(rng) < 0.5;
        const bool live_a = uniform01(rng) < eta_a;
        const bool live_b = uniform01(rng) < eta_b;
        int occ_a = -1, occ_b = -1;
        if (live_a && live_b && bit_a == bit_b) {
            // identical photons bunch into one output port
            const int port = uniform01(rng) < 0.5 ? 0 : 2;
            occ_a = occ_b = port + (bit_a ? 1 : 0);
        } else {
            if (live_a) occ_a = (uniform01(rng) < 0.5 ? 0 : 2) + (bit_a ? 1 : 0);
            if (live_b) occ_b = (uniform01(rng) < 0.5 ? 0 : 2) + (bit_b ? 1 : 0);
        }
        Clicks k = add_dark_and_judge(occ_a, occ_b);
        if (k.success()) ++z_succ;
    }

    // X basis: error rate
    for (std::uint64_t i = 0; i < trials; ++i) {
        const double ss = uniform01(rng) < 0.5 ? 1.0 : -1.0; // sign product
        const bool live_a = uniform01(rng) < eta_a;
        const bool live_b = uniform01(rng) < eta_b;
        int occ_a = -1, occ_b = -1;
        if (live_a && live_b) {
            const double u = uniform01(rng);
            if (u < 0.5) {
                // two-photon bunching, single detector, uniform over the four
                occ_a = occ_b = static_cast<int>(uniform01(rng) * 4.0) & 3;
            } else if (ss > 0.0) {
                // matched signs: coincidence in one port
                const int port = u < 0.75 ? 0 : 2;
                occ_a = port;
                occ_b = port + 1;
            } else {
                // opposite signs: cross-port coincidence
                occ_a = u < 0.75 ? 0 : 1;
                occ_b = occ_a == 0 ? 3 : 2;
            }
        } else {
            if (live_a) occ_a = static_cast<int>(uniform01(rng) * 4.0) & 3;
            if (live_b) occ_b = static_cast<int>(uniform01(rng) * 4.0) & 3;
        }
        Clicks k = add_dark_and_judge(occ_a, occ_b);
        if (k.success()) {
            ++x_succ;
            bool raw_error = (ss > 0.0) != k.same_port();
            if (uniform01(rng) < p.e_d) raw_error = !raw_error;
            if (raw_error) ++x_err;
        }
    }

    McSinglePhoton r;
    r.y_11.value = static_cast<double>(z_succ) / static_cast<double>(trials);
    r.y_11.stderr_ = std::sqrt(r.y_11.value * (1.0 - r.y_11.value) / static_cast<double>(trials));
    if (x_succ > 0) {
        r.e_11.value = static_cast<double>(x_err) / static_cast<double>(x_succ);
        r.e_11.stderr_ =
            std::sqrt(r.e_11.value * (1.0 - r.e_11.value) / static_cast<double>(x_succ));
    }
    return r;
}

} // namespace qkdsim
