#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cqn {

// A closed multi-class network: J queues, I cyclic routes, per-(queue,route)
// exponential service rates. Immutable after finalize(); safe to share across
// threads read-only.
struct NetworkModel {
    std::vector<std::string> queue_ids;          // index j
    std::vector<std::string> route_ids;          // index i
    std::vector<std::vector<int>> routes;        // routes[i][k] = queue index of k-th hop
    std::vector<std::vector<double>> rates;      // rates[i][k] = mu_{routes[i][k], i}

    // Derived (filled by finalize): for each queue, the (route, hop) pairs visiting it.
    std::vector<std::vector<std::pair<int, int>>> incidence;

    int num_queues() const { return static_cast<int>(queue_ids.size()); }
    int num_routes() const { return static_cast<int>(route_ids.size()); }
    int route_length(int i) const { return static_cast<int>(routes[i].size()); }

    // Hop index of queue j on route i, or -1.
    int hop_of(int i, int j) const {
        for (int k = 0; k < route_length(i); ++k)
            if (routes[i][k] == j) return k;
        return -1;
    }
    double mu(int i, int k) const { return rates[i][k]; }

    int next_hop(int i, int k) const { return (k + 1) % route_length(i); }
    int prev_hop(int i, int k) const { return (k + route_length(i) - 1) % route_length(i); }

    int queue_index(const std::string& id) const {
        for (int j = 0; j < num_queues(); ++j)
            if (queue_ids[j] == id) return j;
        return -1;
    }
    int route_index(const std::string& id) const {
        for (int i = 0; i < num_routes(); ++i)
            if (route_ids[i] == id) return i;
        return -1;
    }

    void finalize();
};

// Per-route customer counts (integers) or proportions (reals).
struct PopulationVector {
    std::vector<double> counts;  // per route

    bool is_integral() const;
    std::vector<int> as_ints() const;  // throws if not integral
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate(const NetworkModel& model);

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model-file format: JSON with keys `queues`, `routes`, `rates` ("queue:route"),
// `population`. parse also returns the population block.
std::pair<NetworkModel, PopulationVector> parse_model(const std::string& text);
std::string serialize_model(const NetworkModel& model, const PopulationVector& population);
std::pair<NetworkModel, PopulationVector> load_model_file(const std::string& path);

// Network with queues outside `keep` removed; routes keep their relative order.
// Throws std::invalid_argument if a route has empty intersection with `keep`.
NetworkModel reduced_model(const NetworkModel& model, const std::vector<int>& keep);

// Inserts a replica of queue j immediately after j on every route containing it,
// with identical service rates.
NetworkModel replicate_queue(const NetworkModel& model, int j);

}  // namespace cqn
