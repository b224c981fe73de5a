#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cqn/lattice.hpp"
#include "cqn/log_weight.hpp"
#include "cqn/model.hpp"

namespace cqn {

// log B(v) for every population vector 0 <= v <= cap, computed by queue-by-queue
// convolution of the per-queue generating functions (1 - sum_{i: j in i} z_i/mu_ji)^{-1}.
struct NormConstTable {
    Lattice lattice;
    std::vector<double> logb;

    double log_b(const std::vector<int>& v) const { return logb[lattice.index(v)]; }
};

inline constexpr std::size_t kDefaultMemBudget = std::size_t{2} << 30;  // 2 GiB

struct MemoryBudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

NormConstTable normalizing_table(const NetworkModel& model, const std::vector<int>& n,
                                 std::size_t mem_budget = kDefaultMemBudget);

// Lambda_i(n) = B(n - e_i)/B(n); 0 where n_i = 0.
std::vector<double> throughput(const NormConstTable& table, const std::vector<int>& n);

// U_j(n) = sum_{i: j in i} Lambda_i(n)/mu_ji.
std::vector<double> utilization(const NetworkModel& model, const NormConstTable& table,
                                const std::vector<int>& n);

// Probability distribution over per-(queue,route) counts.
struct StateDistribution {
    std::vector<std::pair<int, int>> coords;  // (queue j, route i) of each component
    std::vector<std::vector<int>> states;
    std::vector<double> probs;
};

// Stationary marginal over the counts of the queues in `subset`.
StateDistribution marginal_distribution(const NetworkModel& model, const std::vector<int>& n,
                                        const std::vector<int>& subset,
                                        std::size_t mem_budget = kDefaultMemBudget);

// E M_ji(n) = mu_ji^{-1} B^{+j}(n - e_i)/B(n), via replica-queue tables.
// Returned as mean[i][k] aligned with model.routes[i].
std::vector<std::vector<double>> mean_queue_lengths(const NetworkModel& model,
                                                    const std::vector<int>& n,
                                                    std::size_t mem_budget = kDefaultMemBudget);

// P(all queues in subset empty) = Bbar(n)/B(n) with Bbar over the complement network.
double empty_probability(const NetworkModel& model, const std::vector<int>& n,
                         const std::vector<int>& subset,
                         std::size_t mem_budget = kDefaultMemBudget);

// Full enumeration of S(n); the test oracle for the product-form distribution.
StateDistribution brute_force_distribution(const NetworkModel& model, const std::vector<int>& n,
                                           std::uint64_t state_cap = 1000000);

// log of the enumerated normalizing constant (shares the enumeration path of
// brute_force_distribution, independent of the convolution recursion).
double brute_force_log_b(const NetworkModel& model, const std::vector<int>& n,
                         std::uint64_t state_cap = 1000000);

// Exact-rational B(n) rendered as a decimal string "p/q"; anchors the floating
// tolerances on small instances (lattice size <= 1e4).
std::string rational_normalizing_constant(const NetworkModel& model, const std::vector<int>& n);

}  // namespace cqn
