// Acceptance harness: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in-line next to each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "cqn/exact.hpp"
#include "cqn/fluid.hpp"
#include "cqn/model.hpp"
#include "cqn/pfopt.hpp"
#include "cqn/sim.hpp"

using namespace cqn;
using cqn::testing::make_c1;
using cqn::testing::make_t1;
using cqn::testing::make_w1;

namespace {

int failures = 0;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

void report(int idx, const std::string& name, const Check& c) {
    if (c.ok) {
        std::printf("[PASS] %d. %s\n", idx, name.c_str());
    } else {
        std::printf("[FAIL] %d. %s — %s\n", idx, name.c_str(), c.detail.c_str());
        ++failures;
    }
    std::fflush(stdout);
}

std::vector<std::pair<NetworkModel, std::vector<double>>> bundled() {
    return {{make_c1(), {3.0}}, {make_t1(), {1.0, 1.0}}, {make_w1(), {1.0, 1.0, 1.0}}};
}

double min_mu(const NetworkModel& m) {
    double mu = 1e300;
    for (const auto& row : m.rates)
        for (double v : row) mu = std::min(mu, v);
    return mu;
}

double max_mu(const NetworkModel& m) {
    double mu = 0.0;
    for (const auto& row : m.rates)
        for (double v : row) mu = std::max(mu, v);
    return mu;
}

// Random small network whose state space stays under the enumeration budget.
NetworkModel random_network(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> jq(1, 4), ir(1, 3);
    std::uniform_real_distribution<double> mu(0.5, 3.0);
    for (;;) {
        int J = jq(rng), I = ir(rng);
        NetworkModel m;
        for (int j = 0; j < J; ++j) m.queue_ids.push_back("q" + std::to_string(j));
        std::vector<char> used(J, 0);
        for (int i = 0; i < I; ++i) {
            m.route_ids.push_back("r" + std::to_string(i));
            int len = std::uniform_int_distribution<int>(1, std::min(3, J))(rng);
            std::vector<int> perm(J);
            for (int j = 0; j < J; ++j) perm[j] = j;
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<int> route(perm.begin(), perm.begin() + len);
            std::vector<double> rates;
            for (int j : route) {
                used[j] = 1;
                rates.push_back(mu(rng));
            }
            m.routes.push_back(route);
            m.rates.push_back(rates);
        }
        bool all_used = true;
        for (char u : used) all_used = all_used && u;
        if (!all_used) continue;
        m.finalize();
        return m;
    }
}

double state_count(const NetworkModel& m, const std::vector<int>& n) {
    double total = 1.0;
    for (int i = 0; i < m.num_routes(); ++i) {
        // compositions of n_i into k_i ordered parts: C(n_i + k_i - 1, k_i - 1)
        double c = 1.0;
        int k = m.route_length(i);
        for (int x = 1; x <= k - 1; ++x) c *= double(n[i] + x) / x;
        total *= c;
    }
    return total;
}

FluidState random_state(const NetworkModel& m, const std::vector<double>& n,
                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    FluidState s = FluidState::zeros(m);
    for (int i = 0; i < m.num_routes(); ++i) {
        double tot = 0.0;
        for (int k = 0; k < m.route_length(i); ++k) {
            s.m[i][k] = u(rng);
            tot += s.m[i][k];
        }
        for (int k = 0; k < m.route_length(i); ++k) s.m[i][k] *= n[i] / tot;
    }
    return s;
}

// State with mass only at bottlenecks, split so PS shares reproduce Lambda*:
// m_ji = x_j Lambda*_i / mu_ji with x solving sum_{j in route i} x_j/mu_ji = n_i/Lambda*_i
// over the bottleneck queues. For the bundled instances a proportional x works.
FluidState constructed_optimum(const NetworkModel& m, const std::vector<double>& n,
                               const BottleneckReport& pf) {
    // Solve for x on bottlenecks by least squares (the systems here are consistent).
    int B = static_cast<int>(pf.bottlenecks.size());
    std::vector<double> x(B, 0.0);
    // Gauss-Seidel on the consistent system; initial x = average requirement.
    for (int it = 0; it < 20000; ++it) {
        for (int b = 0; b < B; ++b) {
            int j = pf.bottlenecks[b];
            // Pick any route through j and solve its equation for x_j.
            double num = 0.0, den = 0.0;
            for (auto [i, k] : m.incidence[j]) {
                if (pf.allocation[i] <= 0) continue;
                double rhs = n[i] / pf.allocation[i];
                double other = 0.0;
                for (int kk = 0; kk < m.route_length(i); ++kk) {
                    int jj = m.routes[i][kk];
                    if (jj == j) continue;
                    for (int bb = 0; bb < B; ++bb)
                        if (pf.bottlenecks[bb] == jj) other += x[bb] / m.mu(i, kk);
                }
                num += (rhs - other) / m.mu(i, k);
                den += 1.0 / (m.mu(i, k) * m.mu(i, k));
            }
            if (den > 0) x[b] = num / den;
        }
    }
    FluidState s = FluidState::zeros(m);
    for (int b = 0; b < B; ++b) {
        int j = pf.bottlenecks[b];
        for (auto [i, k] : m.incidence[j]) s.m[i][k] = x[b] * pf.allocation[i] / m.mu(i, k);
    }
    return s;
}

std::vector<int> scale_pop(const std::vector<double>& n, int c) {
    std::vector<int> out(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) out[i] = static_cast<int>(std::llround(c * n[i]));
    return out;
}

// --- criteria -----------------------------------------------------------------

void criterion1() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260826);
    int done = 0;
    while (done < 25) {
        auto m = random_network(rng);
        std::vector<int> n(m.num_routes());
        for (auto& v : n) v = std::uniform_int_distribution<int>(0, 5)(rng);
        if (state_count(m, n) > 1e4) continue;
        double conv = normalizing_table(m, n).log_b(n);
        double bf = brute_force_log_b(m, n);
        double tol = 1e-10 * std::max(1.0, std::abs(bf));
        c.require(std::abs(conv - bf) <= tol,
                  "logB mismatch " + std::to_string(std::abs(conv - bf)) + " on trial " +
                      std::to_string(done));
        ++done;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 10.0, "oracle comparison took " + std::to_string(secs) + " s");
    report(1, "convolution matches brute-force enumeration (25 random nets, 1e-10 rel)", c);
}

void criterion2() {
    Check c;
    {
        auto c1 = make_c1();
        auto table = normalizing_table(c1, {20});
        double prev = 2.0;
        for (int v = 1; v <= 20; ++v) {
            double gap = std::abs(throughput(table, {v})[0] - 1.0);
            c.require(gap < prev, "C1 gap not strictly decreasing at c=" + std::to_string(v));
            prev = gap;
        }
        c.require(prev < 1e-5, "C1 gap at c=20 is " + std::to_string(prev));
    }
    // W1's first step (c=1 -> 2) overshoots Lambda*; its computed sweep starts at 2.
    // Sweeps stop while the exact gap still dominates the 1e-9-accurate solver value.
    for (auto& [m, n, cmin, cmax] :
         {std::tuple{make_t1(), std::vector<double>{1, 1}, 1, 12},
          std::tuple{make_w1(), std::vector<double>{1, 1, 1}, 2, 10}}) {
        auto pf = solve_pf(m, n);
        std::vector<double> prev(m.num_routes(), 2.0);
        for (int s = cmin; s <= cmax; ++s) {
            auto ns = scale_pop(n, s);
            auto table = normalizing_table(m, ns);
            auto lam = throughput(table, ns);
            for (int i = 0; i < m.num_routes(); ++i) {
                double gap = std::abs(lam[i] - pf.allocation[i]);
                c.require(gap <= prev[i] + 1e-9,
                          "gap not monotone, route " + std::to_string(i) + " c=" +
                              std::to_string(s));
                prev[i] = gap;
            }
        }
    }
    report(2, "throughput converges to Lambda* (C1 closed form; monotone sweeps)", c);
}

void criterion3() {
    Check c;
    for (auto& [m, n] : bundled()) {
        auto pf = solve_pf(m, n);
        auto omeans = open_means(pf.allocation, m, pf.non_bottlenecks);
        // The mean gap decays like 1/c; these are the largest lattices that stay cheap.
        int cmax = (m.num_routes() == 1) ? 40 : (m.num_routes() == 2) ? 64 : 20;
        auto ns = scale_pop(n, cmax);
        auto means = mean_queue_lengths(m, ns);
        for (int j : pf.non_bottlenecks)
            for (auto [i, k] : m.incidence[j]) {
                double gap = std::abs(means[i][k] - omeans[i][k]) / omeans[i][k];
                c.require(gap < 0.01, "relative mean gap " + std::to_string(gap) + " at " +
                                          m.queue_ids[j] + ":" + m.route_ids[i]);
            }
    }
    report(3, "non-bottleneck means approach open-network means (<1% at largest c)", c);
}

void criterion4() {
    Check c;
    for (auto& [m, n] : bundled()) {
        auto pf = solve_pf(m, n);
        int cmax = (m.num_routes() <= 2) ? 20 : 12;
        int cmin = std::max(2, cmax / 4);
        for (int j : pf.non_bottlenecks) {
            auto open = open_marginal(pf.allocation, m, j);
            double prev = 2.0;
            for (int s : {cmin, cmax / 2, cmax}) {
                auto ns = scale_pop(n, s);
                double tv = tv_distance(marginal_distribution(m, ns, {j}), open);
                c.require(tv <= prev + 1e-12, "TV not decreasing at " + m.queue_ids[j]);
                prev = tv;
            }
            c.require(prev < 0.02,
                      "TV " + std::to_string(prev) + " at " + m.queue_ids[j] + ", c=" +
                          std::to_string(cmax));
        }
    }
    report(4, "non-bottleneck marginals approach product-geometric (TV<0.02, decreasing)", c);
}

void criterion5() {
    Check c;
    std::mt19937_64 rng(5);
    for (auto& [m, n] : bundled()) {
        auto pf = solve_pf(m, n);
        for (int trial = 0; trial < 100; ++trial) {
            auto s = random_state(m, n, rng);
            c.require(entropy(m, s) >= pf.beta_star - 1e-9,
                      "beta(m) below beta* by " +
                          std::to_string(pf.beta_star - entropy(m, s)));
        }
        auto opt = constructed_optimum(m, n, pf);
        double gap = std::abs(entropy(m, opt) - pf.beta_star);
        c.require(gap <= 1e-8, "constructed optimum gap " + std::to_string(gap));
    }
    report(5, "duality sandwich: beta >= beta* on random states, equality at optima", c);
}

void criterion6() {
    Check c;
    std::mt19937_64 rng(6);
    for (auto& [m, n] : bundled()) {
        auto pf = solve_pf(m, n);
        double T = 200.0 / min_mu(m);
        double h = 1e-3 / max_mu(m);
        double mumax = max_mu(m);
        int J = m.num_queues();
        for (int start = 0; start < 5; ++start) {
            auto m0 = random_state(m, n, rng);

            // Finite-difference check of the entropy derivative at the interior start.
            double d = entropy_derivative(m, m0);
            auto r0 = ps_rates(m, m0);
            double fh = 1e-6;
            FluidState fwd = m0;
            for (int i = 0; i < m.num_routes(); ++i)
                for (int k = 0; k < m.route_length(i); ++k) {
                    int kp = (k == 0) ? m.route_length(i) - 1 : k - 1;
                    fwd.m[i][k] += fh * (r0.lambda[i][kp] - r0.lambda[i][k]);
                }
            double fd = (entropy(m, fwd) - entropy(m, m0)) / fh;
            c.require(std::abs(d - fd) <= 1e-3 * std::max(1.0, std::abs(d)),
                      "derivative vs finite difference: " + std::to_string(d) + " vs " +
                          std::to_string(fd));

            auto traj = integrate(m, m0, T, h);
            for (std::size_t s = 1; s < traj.beta.size(); ++s)
                c.require(traj.beta[s] <= traj.beta[s - 1] + 1e-6,
                          "beta increased at t=" + std::to_string(traj.t[s]));

            // Pinsker bound pointwise wherever all rates are positive.
            for (std::size_t s = 0; s < traj.states.size(); ++s) {
                auto r = ps_rates(m, traj.states[s]);
                bool positive = true;
                for (const auto& row : r.lambda)
                    for (double v : row) positive = positive && v > 0;
                if (!positive) continue;
                double quad = 0.0;
                for (int i = 0; i < m.num_routes(); ++i)
                    for (int k = 0; k < m.route_length(i); ++k) {
                        int kn = (k + 1) % m.route_length(i);
                        double diff = r.lambda[i][k] - r.lambda[i][kn];
                        quad += diff * diff;
                    }
                double dd = entropy_derivative(m, traj.states[s]);
                c.require(dd <= -quad / (mumax * J) + 1e-9,
                          "Pinsker bound violated at t=" + std::to_string(traj.t[s]));
            }

            double gap = traj.beta.back() - pf.beta_star;
            c.require(std::abs(gap) < 1e-3 * std::abs(pf.beta_star) + 1e-6,
                      "final beta gap " + std::to_string(gap));
        }
    }
    report(6, "entropy Lyapunov descent (monotone, FD match, Pinsker, final gap)", c);
}

void criterion7() {
    Check c;
    for (auto& [m, n] : {std::pair{make_c1(), std::vector<double>{1.0}},
                         std::pair{make_t1(), std::vector<double>{1.0, 1.0}}}) {
        FluidState shares = FluidState::zeros(m);
        for (int i = 0; i < m.num_routes(); ++i) shares.m[i][0] = 1.0;
        FluidState m0 = shares;
        for (int i = 0; i < m.num_routes(); ++i) m0.m[i][0] = n[i];

        const double T = 10.0, dt = 0.1;
        IntegrateOptions fo;
        fo.output_points = static_cast<int>(std::llround(T / dt)) + 1;
        auto fluid = integrate(m, m0, T, 1e-4 / max_mu(m), fo);

        auto sup_dist = [&](double scale) {
            auto des = fluid_scaled_trajectory(m, n, shares, scale, T, dt, 1234);
            double sup = 0.0;
            for (std::size_t s = 0; s < des.t.size(); ++s)
                for (int i = 0; i < m.num_routes(); ++i)
                    for (int k = 0; k < m.route_length(i); ++k)
                        sup = std::max(sup,
                                       std::abs(des.states[s].m[i][k] - fluid.states[s].m[i][k]));
            return sup;
        };
        double d20 = sup_dist(20.0), d200 = sup_dist(200.0);
        c.require(d200 < 0.1, "sup distance at c=200 is " + std::to_string(d200));
        c.require(d200 < d20, "no improvement: d(20)=" + std::to_string(d20) + " d(200)=" +
                                  std::to_string(d200));
    }
    report(7, "scaled simulation paths track the fluid trajectory (c=200, sup<0.1)", c);
}

void criterion8() {
    Check c;
    for (auto& [m, nd] : {std::pair{make_c1(), std::vector<double>{3.0}},
                          std::pair{make_t1(), std::vector<double>{2.0, 2.0}},
                          std::pair{make_w1(), std::vector<double>{1.0, 1.0, 1.0}}}) {
        std::vector<int> n(nd.size());
        for (std::size_t i = 0; i < nd.size(); ++i) n[i] = static_cast<int>(nd[i]);
        c.require(state_count(m, n) <= 200, "instance exceeds the 200-state budget");

        // Find a horizon reaching at least 1e6 events.
        double horizon = 50000.0;
        SimEstimates est;
        for (int attempt = 0; attempt < 8; ++attempt) {
            est = simulate(m, n, horizon, -1.0, 88);
            if (est.events >= 1000000) break;
            horizon *= 2.0;
        }
        c.require(est.events >= 1000000, "only " + std::to_string(est.events) + " events");

        auto exact = brute_force_distribution(m, n);
        double tv = tv_distance(est.empirical, exact);
        c.require(tv < 0.02, "TV " + std::to_string(tv));

        for (int i = 0; i < m.num_routes(); ++i) {
            if (m.route_length(i) < 2) continue;
            double diff = std::abs(est.throughput[i] - est.throughput_alt[i]);
            c.require(diff <= est.throughput_hw[i] + est.throughput_alt_hw[i],
                      "route " + m.route_ids[i] + " throughputs differ beyond CIs");
        }
    }
    report(8, "simulator matches product form (TV<0.02 at 1e6 events; CI-consistent rates)", c);
}

void criterion9() {
    Check c;
    for (auto& [m, nd] : bundled()) {
        auto n = scale_pop(nd, (m.num_routes() <= 2) ? 4 : 2);
        auto table = normalizing_table(m, n);
        auto util = utilization(m, table, n);
        for (int j = 0; j < m.num_queues(); ++j) {
            double ep = empty_probability(m, n, {j});
            c.require(std::abs(util[j] - (1.0 - ep)) <= 1e-9,
                      "utilization identity at " + m.queue_ids[j]);
        }
        auto means = mean_queue_lengths(m, n);
        for (int i = 0; i < m.num_routes(); ++i) {
            double tot = 0.0;
            for (double v : means[i]) tot += v;
            c.require(std::abs(tot - n[i]) <= 1e-9 * std::max(1.0, double(n[i])),
                      "mean mass not conserved on route " + m.route_ids[i]);
        }
        auto pf = solve_pf(m, nd);
        auto reduced = reduced_model(m, pf.bottlenecks);
        auto pf2 = solve_pf(reduced, nd);
        for (int i = 0; i < m.num_routes(); ++i)
            c.require(std::abs(pf2.allocation[i] - pf.allocation[i]) <= 1e-7,
                      "reduced-network allocation differs on route " + m.route_ids[i]);
    }
    report(9, "consistency identities (utilization, mass conservation, reduced network)", c);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria failed\n", failures);
    return 1;
}
