#ifndef QKDSIM_INTENSITY_OPT_HPP
#define QKDSIM_INTENSITY_OPT_HPP

#include "qkdsim/mdi_rate.hpp"

#include <vector>

namespace qkdsim {

struct Slot {
    double start = 0.0;
    double end = 0.0;
    double mean_eta_a = 0.0; // linear-domain average over the slot's samples
    double mean_eta_b = 0.0;
    int sample_count = 0;
};

struct SlotPlan {
    std::vector<Slot> slots;
    std::vector<IntensitySetting> settings; // one per slot
    double total_bits = 0.0;
    double baseline_bits = 0.0; // fixed mu = 0.5, nu = 0.1 comparator
};

struct OptBounds {
    double mu_min = 0.01, mu_max = 1.0;
    double nu_min = 0.001; // nu_max is mu/2
};

struct OptimizerConfig {
    OptBounds bounds;
    bool finite_size = false;   // optimize nu against the finite-size objective
    double n_pulses = 1e14;     // per-second block size in finite-size mode
    int grid_points = 12;       // log-spaced coarse grid per axis
    int max_iterations = 200;   // Nelder-Mead cap
    double tolerance = 1e-6;    // relative objective spread at convergence
};

std::vector<Slot> slot_partition(const std::vector<LinkBudgetSample>& budget,
                                 double slot_seconds, double step_s);

struct SlotOptimum {
    IntensitySetting setting;
    double r_star = 0.0;
};

// Coarse log-spaced grid over the signal intensities followed by Nelder-Mead
// refinement. Deterministic. In asymptotic mode the decoy intensities do not
// enter the objective and are reported as mu/10 (floor-clamped).
SlotOptimum optimize_slot(double mean_eta_a, double mean_eta_b, const ProtocolParams& p,
                          const OptimizerConfig& cfg = {});

SlotPlan optimize_pass(const std::vector<LinkBudgetSample>& budget, double slot_seconds,
                       double step_s, const ProtocolParams& p,
                       const OptimizerConfig& cfg = {});

} // namespace qkdsim

#endif
