#include "qkdsim/intensity_opt.hpp"
#include "qkdsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qkdsim {

std::vector<Slot> slot_partition(const std::vector<LinkBudgetSample>& budget,
                                 double slot_seconds, double step_s) {
    if (budget.empty()) throw EmptyWindowError("slot_partition: empty budget");
    if (slot_seconds < 1.0) throw DomainError("slot_partition: slot length must be >= 1 s");

    const size_t per_slot = std::max<size_t>(1, static_cast<size_t>(std::round(slot_seconds / step_s)));
    std::vector<Slot> slots;
    for (size_t i = 0; i < budget.size(); i += per_slot) {
        const size_t j = std::min(i + per_slot, budget.size());
        Slot s;
        s.start = budget[i].t;
        s.end = budget[j - 1].t + step_s;
        s.sample_count = static_cast<int>(j - i);
        double sa = 0.0, sb = 0.0;
        for (size_t k = i; k < j; ++k) {
            sa += budget[k].eta_a;
            sb += budget[k].eta_b;
        }
        s.mean_eta_a = sa / static_cast<double>(s.sample_count);
        s.mean_eta_b = sb / static_cast<double>(s.sample_count);
        slots.push_back(s);
    }
    return slots;
}

namespace {

// deterministic Nelder-Mead with clamping to box bounds
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, const std::vector<double>& lo,
                                const std::vector<double>& hi, int max_iter, double tol) {
    const size_t n = x0.size();
    auto clamp = [&](std::vector<double> x) {
        for (size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
        return x;
    };

    std::vector<std::vector<double>> v(n + 1);
    std::vector<double> fv(n + 1);
    v[0] = clamp(x0);
    for (size_t i = 0; i < n; ++i) {
        auto p = v[0];
        double h = 0.1 * (hi[i] - lo[i]);
        p[i] = p[i] + h <= hi[i] ? p[i] + h : p[i] - h;
        v[i + 1] = clamp(p);
    }
    for (size_t i = 0; i <= n; ++i) fv[i] = f(v[i]);

    for (int iter = 0; iter < max_iter; ++iter) {
        // order ascending (we minimize)
        std::vector<size_t> idx(n + 1);
        for (size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> v2(n + 1);
        std::vector<double> fv2(n + 1);
        for (size_t i = 0; i <= n; ++i) { v2[i] = v[idx[i]]; fv2[i] = fv[idx[i]]; }
        v.swap(v2);
        fv.swap(fv2);

        if (std::fabs(fv[n] - fv[0]) <= tol * (std::fabs(fv[0]) + 1e-30)) break;

        std::vector<double> centroid(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) centroid[j] += v[i][j] / static_cast<double>(n);

        auto mix = [&](double c) {
            std::vector<double> p(n);
            for (size_t j = 0; j < n; ++j) p[j] = centroid[j] + c * (centroid[j] - v[n][j]);
            return clamp(p);
        };

        auto xr = mix(1.0);
        double fr = f(xr);
        if (fr < fv[0]) {
            auto xe = mix(2.0);
            double fe = f(xe);
            if (fe < fr) { v[n] = xe; fv[n] = fe; }
            else { v[n] = xr; fv[n] = fr; }
        } else if (fr < fv[n - 1]) {
            v[n] = xr;
            fv[n] = fr;
        } else {
            auto xc = mix(fr < fv[n] ? 0.5 : -0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[n])) { v[n] = xc; fv[n] = fc; }
            else {
                for (size_t i = 1; i <= n; ++i) {
                    for (size_t j = 0; j < n; ++j) v[i][j] = v[0][j] + 0.5 * (v[i][j] - v[0][j]);
                    fv[i] = f(v[i]);
                }
            }
        }
    }
    size_t best = 0;
    for (size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return v[best];
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return g;
}

} // namespace

SlotOptimum optimize_slot(double mean_eta_a, double mean_eta_b, const ProtocolParams& p,
                          const OptimizerConfig& cfg) {
    if (mean_eta_a <= 0.0 && mean_eta_b <= 0.0)
        throw DegenerateChannelError("optimize_slot: both mean transmittances are zero");

    const OptBounds& b = cfg.bounds;

    auto make_setting = [&](const std::vector<double>& x) {
        IntensitySetting s;
        if (cfg.finite_size) {
            s.mu_a = x[0];
            s.nu_a = std::min(std::max(x[1], b.nu_min), x[0] / 2.0);
            s.mu_b = x[2];
            s.nu_b = std::min(std::max(x[3], b.nu_min), x[2] / 2.0);
        } else {
            s.mu_a = x[0];
            s.mu_b = x[1];
            s.nu_a = std::max(s.mu_a / 10.0, b.nu_min);
            s.nu_b = std::max(s.mu_b / 10.0, b.nu_min);
        }
        return s;
    };

    auto objective = [&](const std::vector<double>& x) {
        IntensitySetting s = make_setting(x);
        double r = cfg.finite_size ? finite_size_rate(s, mean_eta_a, mean_eta_b, p, cfg.n_pulses)
                                   : key_rate(s, mean_eta_a, mean_eta_b, p);
        return -r; // minimized
    };

    const auto mu_grid = log_grid(b.mu_min, b.mu_max, cfg.grid_points);

    std::vector<double> best;
    double fbest = 1e300;
    if (cfg.finite_size) {
        const auto nu_grid = log_grid(b.nu_min, b.mu_max / 2.0, cfg.grid_points);
        for (double ma : mu_grid)
            for (double na : nu_grid) {
                if (na >= ma / 2.0) continue;
                for (double mb : mu_grid)
                    for (double nb : nu_grid) {
                        if (nb >= mb / 2.0) continue;
                        std::vector<double> x{ma, na, mb, nb};
                        double fx = objective(x);
                        if (fx < fbest) { fbest = fx; best = x; }
                    }
            }
        if (best.empty()) best = {0.5, 0.1, 0.5, 0.1};
        best = nelder_mead(objective, best, {b.mu_min, b.nu_min, b.mu_min, b.nu_min},
                           {b.mu_max, b.mu_max / 2.0, b.mu_max, b.mu_max / 2.0},
                           cfg.max_iterations, cfg.tolerance);
    } else {
        for (double ma : mu_grid)
            for (double mb : mu_grid) {
                std::vector<double> x{ma, mb};
                double fx = objective(x);
                if (fx < fbest) { fbest = fx; best = x; }
            }
        best = nelder_mead(objective, best, {b.mu_min, b.mu_min}, {b.mu_max, b.mu_max},
                           cfg.max_iterations, cfg.tolerance);
    }

    SlotOptimum opt;
    opt.setting = make_setting(best);
    opt.r_star = -objective(best);
    return opt;
}

SlotPlan optimize_pass(const std::vector<LinkBudgetSample>& budget, double slot_seconds,
                       double step_s, const ProtocolParams& p, const OptimizerConfig& cfg) {
    SlotPlan plan;
    plan.slots = slot_partition(budget, slot_seconds, step_s);

    const IntensitySetting fixed{0.5, 0.5, 0.1, 0.1, 0.0};

    auto sample_rate = [&](const IntensitySetting& s, const LinkBudgetSample& lb) {
        return cfg.finite_size ? finite_size_rate(s, lb.eta_a, lb.eta_b, p, cfg.n_pulses)
                               : key_rate(s, lb.eta_a, lb.eta_b, p);
    };

    size_t sample_idx = 0;
    for (auto& slot : plan.slots) {
        SlotOptimum opt = optimize_slot(slot.mean_eta_a, slot.mean_eta_b, p, cfg);

        // keep the fixed comparator when it beats the slot optimum on the
        // actual per-sample transmittances
        double opt_bits = 0.0, fixed_bits = 0.0;
        for (size_t k = 0; k < static_cast<size_t>(slot.sample_count); ++k) {
            const auto& lb = budget[sample_idx + k];
            opt_bits += sample_rate(opt.setting, lb) * p.pulse_rate_hz * step_s;
            fixed_bits += sample_rate(fixed, lb) * p.pulse_rate_hz * step_s;
        }
        if (fixed_bits > opt_bits) {
            opt.setting = fixed;
            opt_bits = fixed_bits;
        }
        plan.settings.push_back(opt.setting);
        plan.total_bits += opt_bits;
        plan.baseline_bits += fixed_bits;
        sample_idx += static_cast<size_t>(slot.sample_count);
    }
    return plan;
}

} // namespace qkdsim
