// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit status is the number of failing criteria.

#include "qkdsim/doppler.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/intensity_opt.hpp"
#include "qkdsim/mdi_rate.hpp"
#include "qkdsim/orbit.hpp"
#include "qkdsim/scenario.hpp"
#include "qkdsim/turbulence.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace qkdsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double DEG = M_PI / 180.0;

int failures = 0;

void report(int idx, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", idx, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
}

std::string data_dir() {
    const char* d = std::getenv("QKDSIM_DATA_DIR");
    if (!d) {
        std::fprintf(stderr, "QKDSIM_DATA_DIR not set\n");
        std::exit(99);
    }
    return d;
}

std::vector<AccessWindow> windows_of(const Scenario& sc) {
    return find_access_windows(sc.elements, sc.stations, sc.channel.min_elevation_rad, sc.search,
                               sc.propagator);
}

const AccessWindow& first_window(const std::vector<AccessWindow>& ws) {
    for (const auto& w : ws)
        if (!w.samples.empty()) return w;
    throw EmptyWindowError("no access window");
}

std::vector<LinkBudgetSample> budget_of(const Scenario& sc, const AccessWindow& w) {
    return dual_link_series(w, sc.channel_per_station[0], sc.channel_per_station[1],
                            sc.turbulence);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("qkdsim_acc_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// --- criterion 1: single-uplink losses at the two reference geometries ----
void criterion_1() {
    ChannelParams cp; // stock optics
    TurbulenceProfile tp;
    cp.slant_mode = calibrate_slant_mode(cp, tp);

    TopoSample hi;
    hi.elevation = 75.9 * DEG;
    hi.range_m = 501.3e3;
    TopoSample lo;
    lo.elevation = 15.0 * DEG;
    lo.range_m = 1385e3;
    const double loss_hi = link_budget(hi, cp, tp).loss_db;
    const double loss_lo = link_budget(lo, cp, tp).loss_db;
    const bool ok = std::fabs(loss_hi - 42.5) <= 4.0 && std::fabs(loss_lo - 52.3) <= 4.0;
    report(1, ok,
           "uplink loss " + fmt(loss_hi) + " dB at culmination (target 42.5±4), " + fmt(loss_lo) +
               " dB at 15 deg (target 52.3±4)");
}

// --- criterion 2: dual-station pass duration and total-loss band ----------
void criterion_2(const Scenario& dual, const AccessWindow& w,
                 const std::vector<LinkBudgetSample>& budget) {
    double lo = 1e30, hi = -1e30;
    for (const auto& s : budget) {
        lo = std::min(lo, s.loss_total_db);
        hi = std::max(hi, s.loss_total_db);
    }
    const double dur = w.duration_s();
    const bool ok = std::fabs(dur - 278.0) <= 90.0 && lo >= 89.0 && hi <= 105.2;
    (void)dual;
    report(2, ok,
           "joint pass " + fmt(dur) + " s (target 278±90), total loss " + fmt(lo) + ".." +
               fmt(hi) + " dB (band 89..105.2)");
}

// --- criterion 3: larger apertures pull the minimum total loss down -------
void criterion_3() {
    Scenario sc = load_scenario(data_dir() + "/improved_aperture.json");
    auto ws = windows_of(sc);
    auto budget = budget_of(sc, first_window(ws));
    double lo = 1e30;
    for (const auto& s : budget) lo = std::min(lo, s.loss_total_db);
    const bool ok = std::fabs(lo - 55.0) <= 4.0;
    report(3, ok, "improved-aperture minimum total loss " + fmt(lo) + " dB (target 55±4)");
}

// --- criterion 4: zero-rate cutoff of the fixed setting -------------------
void criterion_4() {
    ProtocolParams p;
    IntensitySetting s;
    auto rate_at = [&](double total_db) {
        const double e = std::pow(10.0, -total_db / 20.0);
        return key_rate(s, e, e, p);
    };
    double lo = 40.0, hi = 90.0;
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        (rate_at(mid) > 0.0 ? lo : hi) = mid;
    }
    const bool ok = rate_at(50.0) > 0.0 && rate_at(80.0) == 0.0 && lo >= 55.0 && lo <= 75.0;
    report(4, ok,
           "fixed-intensity zero-rate cutoff at " + fmt(lo) +
               " dB total (expected in 55..75; positive at 50, zero at 80)");
}

// --- criterion 5: Doppler magnitude and wavelength scaling ----------------
void criterion_5(const AccessWindow& w) {
    auto s780 = doppler_series(w, 780e-9);
    auto s1550 = doppler_series(w, 1550e-9);
    double peak = 0.0;
    bool scaling = true;
    for (size_t i = 0; i < s780.size(); ++i) {
        peak = std::max({peak, std::fabs(s780[i].shift_a_hz), std::fabs(s780[i].shift_b_hz)});
        const double expect = s780[i].shift_a_hz * 780.0 / 1550.0;
        if (std::fabs(s1550[i].shift_a_hz - expect) > 1e-6 * std::max(1.0, std::fabs(expect)))
            scaling = false;
    }
    const bool ok = peak >= 7e9 && peak <= 11e9 && scaling;
    report(5, ok,
           "peak uplink Doppler " + fmt(peak / 1e9) +
               " GHz at 780 nm (expected 7..11), 1550 nm scaling " +
               (scaling ? "exact" : "broken"));
}

// --- criterion 6: single-photon error minimized by a balanced split -------
void criterion_6() {
    ProtocolParams p;
    const double total_db = 50.0;
    double best = 1e30, best_split = -1.0;
    bool unimodal = true;
    double prev = -1.0;
    int direction_changes = 0;
    for (double split = 10.0; split <= 40.0; split += 1.0) {
        const double ea = std::pow(10.0, -split / 10.0);
        const double eb = std::pow(10.0, -(total_db - split) / 10.0);
        const double e11 = single_photon_yield_error(ea, eb, p).qber;
        if (prev >= 0.0 && ((e11 > prev) != (split > 25.0))) ++direction_changes;
        if (e11 < best) { best = e11; best_split = split; }
        prev = e11;
    }
    unimodal = direction_changes <= 1;
    const bool ok = best_split == 25.0 && unimodal;
    report(6, ok,
           "single-photon error at 50 dB total is minimized at the " + fmt(best_split) + "/" +
               fmt(total_db - best_split) + " dB split (e11 = " + fmt(best) + ")");
}

// --- criterion 7: slot-optimized pass totals ------------------------------
void criterion_7() {
    Scenario sc = load_scenario(data_dir() + "/optimize_pass.json");
    auto ws = windows_of(sc);
    auto budget = budget_of(sc, first_window(ws));
    OptimizerConfig cfg;
    cfg.finite_size = sc.finite_size;
    cfg.n_pulses = sc.protocol.pulse_rate_hz;

    SlotPlan plan = optimize_pass(budget, sc.slot_seconds, sc.search.step_s, sc.protocol, cfg);
    const double total = plan.total_bits;
    const double baseline = plan.baseline_bits;
    const double ratio = baseline > 0.0 ? total / baseline : 1e30;

    double slot_min = 1e300, slot_max = 0.0;
    for (double slot_s : {1.0, 5.0, 10.0, 15.0, 20.0, 25.0}) {
        const double bits =
            optimize_pass(budget, slot_s, sc.search.step_s, sc.protocol, cfg).total_bits;
        slot_min = std::min(slot_min, bits);
        slot_max = std::max(slot_max, bits);
    }

    const bool clause_gain = ratio >= 10.0;
    const bool clause_slots = slot_max <= 2.0 * slot_min;
    const bool clause_total = total >= 1.9508e8 / 3.0 && total <= 1.9508e8 * 3.0;
    const bool ok = clause_gain && clause_slots && clause_total;
    report(7, ok,
           "optimized pass total " + fmt(total) + " bits (target within 3x of 1.9508e8: " +
               (clause_total ? "yes" : "no") + "); slot-size spread x" +
               fmt(slot_max / slot_min) + " over 1..25 s (<=2: " +
               (clause_slots ? "yes" : "no") + "); gain over fixed intensities x" + fmt(ratio) +
               " (>=10: no — with infinite-decoy single-photon identification the fixed "
               "setting stays within a small factor of optimal wherever its rate is positive, "
               "so this clause cannot be met jointly with the total-bits clause)");
}

// --- criterion 8: Monte-Carlo detection model vs closed forms -------------
void criterion_8() {
    ProtocolParams p;
    std::mt19937_64 rng(2024);
    auto u = [&] { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
    int bad = 0;
    int stats = 0;
    const std::uint64_t trials = 2000000;
    for (int i = 0; i < 20; ++i) {
        IntensitySetting s;
        s.mu_a = 0.1 + 0.9 * u();
        s.mu_b = 0.1 + 0.9 * u();
        const double ea = std::pow(10.0, -(0.5 + 1.5 * u()));
        const double eb = std::pow(10.0, -(0.5 + 1.5 * u()));

        McGains g = mc_oracle_gains(s, ea, eb, p, trials, 7000 + i);
        GainQber z = gains_qber_z(s, ea, eb, p);
        GainQber x = gains_qber_x(s, ea, eb, p);
        // only compare where the Gaussian error bar is meaningful: at least
        // ~25 expected events behind the estimate
        auto tally = [&](const McEstimate& est, double ref, double expected_events) {
            if (est.stderr_ <= 0.0 || expected_events < 25.0) return;
            ++stats;
            if (std::fabs(est.value - ref) > 3.0 * est.stderr_) ++bad;
        };
        tally(g.q_z, z.gain, z.gain * trials);
        tally(g.e_z, z.qber, z.qber * z.gain * trials);
        tally(g.q_x, x.gain, x.gain * trials);
        tally(g.e_x, x.qber, x.qber * x.gain * trials);

        McSinglePhoton sp = mc_oracle_single_photon(ea, eb, p, trials, 9000 + i);
        GainQber r = single_photon_yield_error(ea, eb, p);
        tally(sp.y_11, r.gain, r.gain * trials);
        tally(sp.e_11, r.qber, r.qber * r.gain * trials);
    }
    // at 3 sigma a rare outlier is expected; demand near-uniform agreement
    const bool ok = stats >= 60 && bad <= 1;
    report(8, ok,
           "stochastic detection model vs closed forms: " + std::to_string(bad) + "/" +
               std::to_string(stats) + " well-resolved statistics outside 3 sigma at 2e6 trials");
}

// --- criterion 9: numerical hygiene ---------------------------------------
void criterion_9() {
    bool ok = true;
    std::string detail;

    // (a) propagation conserves orbital energy
    OrbitElements el = circular_orbit(486.0, 97.37, 280.0, 0.0);
    const double period = el.period_s();
    double e0 = 0.0, worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        StateVector s = propagate(el, 10.0 * period * i / 1000.0);
        const double v2 = s.velocity.dot(s.velocity);
        const double r = s.position.norm();
        const double e = 0.5 * v2 - earth::MU_KM3_S2 / r;
        if (i == 0) e0 = e;
        else worst = std::max(worst, std::fabs(e - e0) / std::fabs(e0));
    }
    if (worst > 1e-6) { ok = false; detail += "energy drift " + fmt(worst) + "; "; }

    // (b) adaptive quadrature agrees with a dense fixed-grid integral
    TurbulenceProfile tp;
    {
        const long n = 400000;
        const double h = tp.z_max_m / n;
        long double sum = 0.5L * (cn2_at(0.0, tp) + cn2_at(tp.z_max_m, tp));
        for (long i = 1; i < n; ++i) sum += cn2_at(i * h, tp);
        const double ref = static_cast<double>(sum * h);
        const double got = integrated_cn2(tp);
        if (std::fabs(got - ref) > 1e-3 * ref) {
            ok = false;
            detail += "column integral off by " + fmt(std::fabs(got - ref) / ref) + "; ";
        }
    }

    // (c) fuzzing: probabilities stay probabilities, rates stay finite
    ProtocolParams p;
    std::mt19937_64 rng(31);
    auto u = [&] { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        IntensitySetting s;
        s.mu_a = 0.01 + 0.99 * u();
        s.mu_b = 0.01 + 0.99 * u();
        const double ea = std::pow(10.0, -4.0 * u());
        const double eb = std::pow(10.0, -4.0 * u());
        GainQber z = gains_qber_z(s, ea, eb, p);
        GainQber x = gains_qber_x(s, ea, eb, p);
        GainQber sp = single_photon_yield_error(ea, eb, p);
        const double r = key_rate(s, ea, eb, p);
        const double fr = finite_size_rate(s, ea, eb, p, 1e14);
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!(in01(z.gain) && in01(z.qber) && in01(x.gain) && in01(x.qber) && in01(sp.gain) &&
              in01(sp.qber) && r >= 0.0 && std::isfinite(r) && fr >= 0.0 && fr <= r + 1e-15 &&
              binary_entropy(z.qber) >= 0.0 && binary_entropy(z.qber) <= 1.0))
            ++violations;
    }
    if (violations > 0) { ok = false; detail += std::to_string(violations) + " fuzz violations; "; }

    // (d) dB bookkeeping is self-consistent
    ChannelParams cp;
    cp.min_elevation_rad = 5.0 * DEG;
    for (int i = 0; i < 200; ++i) {
        TopoSample t;
        t.elevation = (5.0 + 85.0 * u()) * DEG;
        t.range_m = 450e3 + 1.5e6 * u();
        LinkResult r = link_budget(t, cp, tp);
        if (std::fabs(r.loss_db + 10.0 * std::log10(r.eta)) > 1e-9) { ok = false; detail += "dB mismatch; "; break; }
    }

    report(9, ok, ok ? "energy conservation, quadrature agreement, 1e4-case fuzzing, dB bookkeeping all clean"
                     : detail);
}

// --- criterion 10: reruns are byte-identical ------------------------------
void criterion_10() {
    bool ok = true;
    std::string detail = "byte-identical CSVs across reruns";
    Scenario dual = load_scenario(data_dir() + "/dual_pass.json");
    const fs::path a = fresh_dir("a"), b = fresh_dir("b");
    for (const std::string cmd : {"access", "linkbudget", "keyrate", "doppler"}) {
        if (run_command(cmd, dual, a.string()) != 0 || run_command(cmd, dual, b.string()) != 0) {
            ok = false;
            detail = cmd + " failed to run";
            break;
        }
        if (slurp(a / (cmd + ".csv")) != slurp(b / (cmd + ".csv"))) {
            ok = false;
            detail = cmd + ".csv differs between reruns";
            break;
        }
    }
    if (ok) {
        Scenario opt = load_scenario(data_dir() + "/optimize_pass.json");
        if (run_command("optimize", opt, a.string(), 25.0) != 0 ||
            run_command("optimize", opt, b.string(), 25.0) != 0 ||
            slurp(a / "optimize.csv") != slurp(b / "optimize.csv")) {
            ok = false;
            detail = "optimize.csv differs between reruns";
        }
    }
    if (ok) {
        json ma = json::parse(slurp(a / "run_meta.json"));
        json mb = json::parse(slurp(b / "run_meta.json"));
        ma.erase("wall_clock_utc");
        mb.erase("wall_clock_utc");
        if (ma != mb) {
            ok = false;
            detail = "run_meta.json differs beyond the wall-clock stamp";
        }
    }
    report(10, ok, detail);
}

} // namespace

int main() {
    try {
        Scenario dual = load_scenario(data_dir() + "/dual_pass.json");
        auto ws = windows_of(dual);
        const AccessWindow& w = first_window(ws);
        auto budget = budget_of(dual, w);

        criterion_1();
        criterion_2(dual, w, budget);
        criterion_3();
        criterion_4();
        criterion_5(w);
        criterion_6();
        criterion_7();
        criterion_8();
        criterion_9();
        criterion_10();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
        return 98;
    }
    std::printf("%d of 10 criteria failing\n", failures);
    return failures;
}
