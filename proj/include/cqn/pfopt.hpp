#pragma once

#include <vector>

#include "cqn/exact.hpp"
#include "cqn/model.hpp"

namespace cqn {

struct KktResiduals {
    double stationarity = 0.0;    // inf-norm of sum_j lambda_j/mu_ji - n_i/Lambda_i
    double primal_violation = 0.0;  // max(0, max_j U_j - 1)
    double complementarity = 0.0;   // max_j multiplier_j * slack_j
    double max() const;
};

struct BottleneckReport {
    std::vector<double> allocation;    // Lambda*_i, 0 for routes with n_i = 0
    std::vector<double> utilization;   // U*_j
    std::vector<double> slack;         // 1 - U*_j
    std::vector<double> multipliers;   // dual variables per queue
    std::vector<int> bottlenecks;      // slack < eps_b
    std::vector<int> non_bottlenecks;
    std::vector<int> dropped_routes;   // routes with n_i = 0, excluded from the objective
    double beta_star = 0.0;            // sum_{n_i > 0} n_i log Lambda*_i
    KktResiduals kkt;
    int iterations = 0;
    bool converged = false;
};

struct SolveOptions {
    double kkt_tol = 1e-10;
    double eps_bottleneck = 1e-6;
    int max_iterations = 100000;
};

// Maximizes sum_i n_i log Lambda_i subject to sum_{i: j in i} Lambda_i/mu_ji <= 1.
BottleneckReport solve_pf(const NetworkModel& model, const std::vector<double>& n,
                          const SolveOptions& opts = {});

// Splits queues into (bottlenecks, non-bottlenecks) by slack threshold.
std::pair<std::vector<int>, std::vector<int>> classify_bottlenecks(
    const std::vector<double>& utilization, double eps_b = 1e-6);

// Verifies Lambda against the KKT conditions of the PF program; the multiplier
// fit is a nonnegative least squares over the near-tight constraints.
KktResiduals kkt_residuals(const NetworkModel& model, const std::vector<double>& n,
                           const std::vector<double>& lambda, double active_slack = 1e-6);

// Open-network marginal of queue j under Poisson route inputs Lambda: total
// queue length geometric with ratio U_j, multinomial route split. Support is
// truncated where the residual tail mass drops below tail_eps.
StateDistribution open_marginal(const std::vector<double>& lambda, const NetworkModel& model,
                                int j, double tail_eps = 1e-12);

// E M_ji = (Lambda_i/mu_ji)/(1 - U_j) for each queue in js; mean[i][k] layout.
std::vector<std::vector<double>> open_means(const std::vector<double>& lambda,
                                            const NetworkModel& model,
                                            const std::vector<int>& js);

}  // namespace cqn
