#pragma once

#include <string>
#include <vector>

#include "cqn/model.hpp"
#include "cqn/pfopt.hpp"

namespace cqn {

// Per-(route,hop) fluid masses, m[i][k] aligned with model.routes[i].
struct FluidState {
    std::vector<std::vector<double>> m;

    static FluidState zeros(const NetworkModel& model);
    std::vector<double> route_totals() const;
    std::vector<double> queue_totals(const NetworkModel& model) const;
};

// Instantaneous throughputs lambda[i][k], same layout.
struct RateVector {
    std::vector<std::vector<double>> lambda;
};

// Processor-sharing rates: lambda_ji = mu_ji m_ji/m_j where m_j > 0; empty
// queues pass inflow through, scaled down to capacity when oversubscribed,
// resolved by a fixed-point sweep over the empty-queue subgraph.
RateVector ps_rates(const NetworkModel& model, const FluidState& state);

// beta(m) = sum_{m_ji > 0} m_ji log(m_ji mu_ji / m_j); zero-mass terms contribute 0.
double entropy(const NetworkModel& model, const FluidState& state);

// dbeta/dt = -sum_i sum_{j in i} lambda_ji log(lambda_ji/lambda_{next}); requires
// all rates strictly positive (throws std::domain_error otherwise).
double entropy_derivative(const NetworkModel& model, const FluidState& state);

struct FluidTrajectory {
    std::vector<double> t;
    std::vector<FluidState> states;
    std::vector<double> beta;
};

struct IntegrateOptions {
    int output_points = 2001;     // grid samples kept in the trajectory
    int max_substeps = 64;        // event refinement cap per nominal step
};

// Explicit Euler with event refinement at emptying queues, post-step clamping
// and per-route mass renormalization.
FluidTrajectory integrate(const NetworkModel& model, const FluidState& m0, double horizon,
                          double step, const IntegrateOptions& opts = {});

struct MembershipReport {
    bool member = false;
    double beta_gap = 0.0;
    std::vector<std::string> violations;
};

// Tests m against the optimal fluid set M(n): no mass at non-bottlenecks,
// occupied-queue shares reproduce Lambda*, route totals equal n.
MembershipReport optimal_set_membership(const NetworkModel& model, const std::vector<double>& n,
                                        const BottleneckReport& pf, const FluidState& state,
                                        double tol = 1e-2);

}  // namespace cqn
