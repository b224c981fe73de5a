#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cqn/exact.hpp"
#include "cqn/fluid.hpp"
#include "cqn/model.hpp"

namespace cqn {

// xoshiro256** seeded through splitmix64; bit-reproducible across platforms.
// One independent stream per queue drives that queue's exponential clock and
// route selection.
struct Xoshiro256 {
    std::uint64_t s[4];

    explicit Xoshiro256(std::uint64_t seed);
    std::uint64_t next_u64();
    double next_unit();                 // uniform in (0, 1]
    double next_exponential(double rate);
};

struct SimEstimates {
    std::vector<double> throughput;         // per route, completions at the first hop
    std::vector<double> throughput_hw;      // 95% half-widths from 20 batch means
    std::vector<double> throughput_alt;     // measured at the second hop (k_i > 1), else NaN
    std::vector<double> throughput_alt_hw;
    std::vector<std::vector<double>> mean_m;  // time-average counts, [i][k] layout
    StateDistribution empirical;              // time-weighted full-state occupancy
    double horizon = 0, warmup = 0;
    std::uint64_t seed = 0, events = 0;
    std::vector<int> initial_state_flat;      // recorded metadata, (i,k)-major
};

struct SimOptions {
    double warmup_fraction = 0.2;   // used when warmup < 0
    std::uint64_t distribution_state_cap = 100000;
    int batches = 20;
};

// Continuous-time Markov chain of the PS network: queue j completes route-i
// work at rate mu_ji m_ji/m_j. Deterministic given the seed.
SimEstimates simulate(const NetworkModel& model, const std::vector<int>& n, double horizon,
                      double warmup, std::uint64_t seed, const SimOptions& opts = {});

// Marginal of the empirical distribution on a queue subset.
StateDistribution project_distribution(const NetworkModel& model, const StateDistribution& full,
                                       const std::vector<int>& subset);

struct ScaledTrajectory {
    std::vector<double> t;            // fluid time
    std::vector<FluidState> states;   // M^c(ct)/c
    std::vector<double> beta;
    std::vector<int> initial_counts_flat;
};

// Fluid-scaling harness: initial counts round(c * n_direction * shares) fixed up
// to exact route totals round(c * n_direction); samples M^c(ct)/c on a uniform grid.
ScaledTrajectory fluid_scaled_trajectory(const NetworkModel& model,
                                         const std::vector<double>& n_direction,
                                         const FluidState& initial_shares, double c,
                                         double horizon, double grid_dt, std::uint64_t seed);

// (1/2) sum |p - q| over the union of supports.
double tv_distance(const StateDistribution& p, const StateDistribution& q);

}  // namespace cqn
