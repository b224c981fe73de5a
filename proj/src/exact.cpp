#include "cqn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace cqn {

namespace {

std::vector<double> log_factorials(int up_to) {
    std::vector<double> lf(static_cast<std::size_t>(up_to) + 1, 0.0);
    for (int k = 2; k <= up_to; ++k) lf[k] = lf[k - 1] + std::log(static_cast<double>(k));
    return lf;
}

// Compositions of total into `parts` nonnegative summands.
void compositions(int total, int parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = 0; v <= total; ++v) {
        cur.push_back(v);
        compositions(total - v, parts - 1, cur, out);
        cur.pop_back();
    }
}

std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t d = 1; d <= k; ++d) r = r * (n - k + d) / d;
    return r;
}

}  // namespace

NormConstTable normalizing_table(const NetworkModel& model, const std::vector<int>& n,
                                 std::size_t mem_budget) {
    if (static_cast<int>(n.size()) != model.num_routes())
        throw std::invalid_argument("population dimension mismatch");
    Lattice lat(n);
    if (lat.total * sizeof(double) > mem_budget)
        throw MemoryBudgetError("normalizing table exceeds memory budget (" +
                                std::to_string(lat.total) + " lattice points)");

    NormConstTable table;
    table.lattice = lat;
    table.logb.assign(lat.total, -std::numeric_limits<double>::infinity());
    table.logb[0] = 0.0;  // B(0) = 1, the empty state

    // One pass per queue: h(v) <- h(v) + sum_{i: j in i} h(v - e_i)/mu_ji, in
    // lexicographically increasing order so that h(v - e_i) is already updated.
    std::vector<double> terms;
    for (int j = 0; j < model.num_queues(); ++j) {
        std::vector<std::pair<int, double>> arcs;  // (route, log mu)
        for (auto [i, k] : model.incidence[j]) arcs.emplace_back(i, std::log(model.mu(i, k)));
        std::vector<int> v(n.size(), 0);
        std::size_t idx = 0;
        do {
            terms.clear();
            terms.push_back(table.logb[idx]);
            for (auto& [i, logmu] : arcs)
                if (v[i] > 0) terms.push_back(table.logb[idx - lat.stride[i]] - logmu);
            if (terms.size() > 1) table.logb[idx] = log_sum_exp(terms);
            ++idx;
        } while (lat.next(v));
    }
    return table;
}

std::vector<double> throughput(const NormConstTable& table, const std::vector<int>& n) {
    if (!table.lattice.contains(n)) throw std::out_of_range("population outside table range");
    std::vector<double> lam(n.size(), 0.0);
    double logbn = table.log_b(n);
    std::vector<int> v = n;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == 0) continue;
        v[i] -= 1;
        lam[i] = std::exp(table.log_b(v) - logbn);
        v[i] += 1;
    }
    return lam;
}

std::vector<double> utilization(const NetworkModel& model, const NormConstTable& table,
                                const std::vector<int>& n) {
    auto lam = throughput(table, n);
    std::vector<double> u(model.num_queues(), 0.0);
    for (int j = 0; j < model.num_queues(); ++j)
        for (auto [i, k] : model.incidence[j]) u[j] += lam[i] / model.mu(i, k);
    return u;
}

namespace {

// Shared enumeration over S(n): calls visit(state, log_weight) for every state,
// where state is laid out route-major as (i,k) counts.
template <typename Visit>
void enumerate_states(const NetworkModel& model, const std::vector<int>& n,
                      std::uint64_t state_cap, Visit&& visit) {
    const int I = model.num_routes();
    std::uint64_t count = 1;
    for (int i = 0; i < I; ++i) {
        count *= binom(static_cast<std::uint64_t>(n[i]) + model.route_length(i) - 1,
                       model.route_length(i) - 1);
        if (count > state_cap) throw std::runtime_error("state-space cap exceeded");
    }

    std::vector<std::vector<std::vector<int>>> splits(I);
    std::vector<int> scratch;
    for (int i = 0; i < I; ++i) compositions(n[i], model.route_length(i), scratch, splits[i]);

    int total = std::accumulate(n.begin(), n.end(), 0);
    auto lf = log_factorials(total);

    std::vector<std::size_t> pick(I, 0);
    std::vector<int> state;
    std::vector<int> mj(model.num_queues());
    for (;;) {
        state.clear();
        std::fill(mj.begin(), mj.end(), 0);
        double logw = 0.0;
        for (int i = 0; i < I; ++i) {
            const auto& split = splits[i][pick[i]];
            for (int k = 0; k < model.route_length(i); ++k) {
                int m = split[k];
                state.push_back(m);
                mj[model.routes[i][k]] += m;
                logw += -m * std::log(model.mu(i, k)) - lf[m];
            }
        }
        for (int j = 0; j < model.num_queues(); ++j) logw += lf[mj[j]];
        visit(state, logw);

        int d = I - 1;
        while (d >= 0 && ++pick[d] == splits[d].size()) pick[d--] = 0;
        if (d < 0) break;
    }
}

}  // namespace

StateDistribution brute_force_distribution(const NetworkModel& model, const std::vector<int>& n,
                                           std::uint64_t state_cap) {
    StateDistribution dist;
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k) dist.coords.emplace_back(model.routes[i][k], i);

    std::vector<double> logw;
    enumerate_states(model, n, state_cap, [&](const std::vector<int>& state, double w) {
        dist.states.push_back(state);
        logw.push_back(w);
    });
    double logz = log_sum_exp(logw);
    dist.probs.resize(logw.size());
    for (std::size_t s = 0; s < logw.size(); ++s) dist.probs[s] = std::exp(logw[s] - logz);
    return dist;
}

double brute_force_log_b(const NetworkModel& model, const std::vector<int>& n,
                         std::uint64_t state_cap) {
    std::vector<double> logw;
    enumerate_states(model, n, state_cap,
                     [&](const std::vector<int>&, double w) { logw.push_back(w); });
    return log_sum_exp(logw);
}

StateDistribution marginal_distribution(const NetworkModel& model, const std::vector<int>& n,
                                        const std::vector<int>& subset, std::size_t mem_budget) {
    if (subset.empty()) throw std::invalid_argument("empty queue subset");
    std::vector<bool> in_subset(model.num_queues(), false);
    for (int j : subset) in_subset[j] = true;

    StateDistribution dist;
    std::vector<double> mus;  // per coordinate
    for (int j : subset)
        for (auto [i, k] : model.incidence[j]) {
            dist.coords.emplace_back(j, i);
            mus.push_back(model.mu(i, k));
        }

    std::vector<int> complement;
    for (int j = 0; j < model.num_queues(); ++j)
        if (!in_subset[j]) complement.push_back(j);

    bool reducible = !complement.empty();
    if (reducible) {
        for (int i = 0; i < model.num_routes() && reducible; ++i) {
            bool hit = false;
            for (int k = 0; k < model.route_length(i); ++k)
                if (!in_subset[model.routes[i][k]]) hit = true;
            if (!hit) reducible = false;
        }
    }

    if (!reducible) {
        // Some route lies entirely inside the subset: project the full distribution.
        auto full = brute_force_distribution(model, n);
        std::map<std::vector<int>, double> acc;
        for (std::size_t s = 0; s < full.states.size(); ++s) {
            std::vector<int> proj(dist.coords.size());
            for (std::size_t c = 0; c < dist.coords.size(); ++c) {
                auto [j, i] = dist.coords[c];
                int k = model.hop_of(i, j);
                std::size_t flat = 0;
                for (int ii = 0; ii < i; ++ii) flat += model.route_length(ii);
                proj[c] = full.states[s][flat + k];
            }
            acc[proj] += full.probs[s];
        }
        for (auto& [st, p] : acc) {
            dist.states.push_back(st);
            dist.probs.push_back(p);
        }
        return dist;
    }

    auto full_table = normalizing_table(model, n, mem_budget);
    auto rest = reduced_model(model, complement);
    auto rest_table = normalizing_table(rest, n, mem_budget);
    double logbn = full_table.log_b(n);

    int total = std::accumulate(n.begin(), n.end(), 0);
    auto lf = log_factorials(total);

    const std::size_t C = dist.coords.size();
    std::vector<int> m(C, 0);
    std::vector<int> nsub(n.size());  // n - n_circ
    std::vector<int> mqueue(model.num_queues());
    for (;;) {
        bool feasible = true;
        for (std::size_t i = 0; i < n.size(); ++i) nsub[i] = n[i];
        for (std::size_t c = 0; c < C; ++c) nsub[dist.coords[c].second] -= m[c];
        for (int v : nsub)
            if (v < 0) feasible = false;
        if (feasible) {
            std::fill(mqueue.begin(), mqueue.end(), 0);
            double logw = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                mqueue[dist.coords[c].first] += m[c];
                logw += -m[c] * std::log(mus[c]) - lf[m[c]];
            }
            for (int j : subset) logw += lf[mqueue[j]];
            logw += rest_table.log_b(nsub) - logbn;
            dist.states.push_back(m);
            dist.probs.push_back(std::exp(logw));
        }
        // Odometer bounded per coordinate by its route population.
        std::size_t c = C;
        while (c > 0) {
            --c;
            if (m[c] < n[dist.coords[c].second]) {
                ++m[c];
                break;
            }
            m[c] = 0;
            if (c == 0) return dist;
        }
        if (C == 0) return dist;
    }
}

std::vector<std::vector<double>> mean_queue_lengths(const NetworkModel& model,
                                                    const std::vector<int>& n,
                                                    std::size_t mem_budget) {
    auto table = normalizing_table(model, n, mem_budget);
    double logbn = table.log_b(n);
    std::vector<std::vector<double>> means(model.num_routes());
    for (int i = 0; i < model.num_routes(); ++i) means[i].assign(model.route_length(i), 0.0);

    std::vector<int> v;
    for (int j = 0; j < model.num_queues(); ++j) {
        if (model.incidence[j].empty()) continue;
        auto plus = replicate_queue(model, j);
        auto plus_table = normalizing_table(plus, n, mem_budget);
        for (auto [i, k] : model.incidence[j]) {
            if (n[i] == 0) continue;
            v = n;
            v[i] -= 1;
            means[i][k] = std::exp(plus_table.log_b(v) - logbn) / model.mu(i, k);
        }
    }
    return means;
}

double empty_probability(const NetworkModel& model, const std::vector<int>& n,
                         const std::vector<int>& subset, std::size_t mem_budget) {
    if (subset.empty()) return 1.0;
    std::vector<bool> in_subset(model.num_queues(), false);
    for (int j : subset) in_subset[j] = true;
    std::vector<int> complement;
    for (int j = 0; j < model.num_queues(); ++j)
        if (!in_subset[j]) complement.push_back(j);
    auto reduced = reduced_model(model, complement);  // throws if a route loses all queues
    auto table = normalizing_table(model, n, mem_budget);
    auto reduced_table = normalizing_table(reduced, n, mem_budget);
    return std::exp(reduced_table.log_b(n) - table.log_b(n));
}

std::string rational_normalizing_constant(const NetworkModel& model, const std::vector<int>& n) {
    using boost::multiprecision::cpp_rational;
    Lattice lat(n);
    if (lat.total > 10000) throw std::invalid_argument("rational mode limited to small lattices");

    auto exact_of_double = [](double x) {
        int e = 0;
        double mant = std::frexp(x, &e);
        // 53 bits of mantissa make mant * 2^53 integral.
        long long mi = static_cast<long long>(std::ldexp(mant, 53));
        cpp_rational r(mi);
        int shift = e - 53;
        if (shift >= 0)
            r *= cpp_rational(boost::multiprecision::cpp_int(1) << shift);
        else
            r /= cpp_rational(boost::multiprecision::cpp_int(1) << -shift);
        return r;
    };

    // Same in-place convolution recursion as normalizing_table, exact arithmetic.
    std::vector<cpp_rational> b(lat.total, cpp_rational(0));
    b[0] = 1;
    for (int j = 0; j < model.num_queues(); ++j) {
        std::vector<std::pair<int, cpp_rational>> arcs;
        for (auto [i, k] : model.incidence[j]) arcs.emplace_back(i, 1 / exact_of_double(model.mu(i, k)));
        std::vector<int> v(n.size(), 0);
        std::size_t idx = 0;
        do {
            for (auto& [i, inv_mu] : arcs)
                if (v[i] > 0) b[idx] += b[idx - lat.stride[i]] * inv_mu;
            ++idx;
        } while (lat.next(v));
    }
    return b[lat.index(n)].str();
}

}  // namespace cqn
