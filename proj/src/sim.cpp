#include "cqn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cqn {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s) w = splitmix64(sm);
}

std::uint64_t Xoshiro256::next_u64() {
    std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Xoshiro256::next_unit() {
    // 53-bit mantissa in (0, 1].
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Xoshiro256::next_exponential(double rate) { return -std::log(next_unit()) / rate; }

namespace {

// Event engine for the counts CTMC; one RNG stream per queue.
struct Engine {
    const NetworkModel& model;
    std::vector<std::vector<int>> m;  // m[i][k]
    std::vector<int> mq;              // per-queue totals
    std::vector<Xoshiro256> streams;
    double clock = 0.0;

    Engine(const NetworkModel& mod, std::vector<std::vector<int>> init, std::uint64_t seed)
        : model(mod), m(std::move(init)) {
        mq.assign(model.num_queues(), 0);
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k) mq[model.routes[i][k]] += m[i][k];
        for (int j = 0; j < model.num_queues(); ++j)
            streams.emplace_back(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(j) + 1);
    }

    double queue_rate(int j) const {
        if (mq[j] == 0) return 0.0;
        double r = 0.0;
        for (auto [i, k] : model.incidence[j])
            r += model.mu(i, k) * m[i][k] / static_cast<double>(mq[j]);
        return r;
    }

    // Advances to the next completion; returns (route, hop) or (-1,-1) if frozen.
    std::pair<int, int> step() {
        int winner = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < model.num_queues(); ++j) {
            double r = queue_rate(j);
            if (r <= 0.0) continue;
            double t = streams[j].next_exponential(r);
            if (t < best) {
                best = t;
                winner = j;
            }
        }
        if (winner < 0) return {-1, -1};
        clock += best;

        // Categorical pick of the completing route, proportional to mu m/mq.
        double total = queue_rate(winner);
        double u = streams[winner].next_unit() * total;
        int ri = -1, rk = -1;
        for (auto [i, k] : model.incidence[winner]) {
            u -= model.mu(i, k) * m[i][k] / static_cast<double>(mq[winner]);
            ri = i;
            rk = k;
            if (u <= 0.0) break;
        }
        int knext = model.next_hop(ri, rk);
        int jnext = model.routes[ri][knext];
        --m[ri][rk];
        --mq[winner];
        ++m[ri][knext];
        ++mq[jnext];
        return {ri, rk};
    }
};

std::vector<int> flatten(const std::vector<std::vector<int>>& m) {
    std::vector<int> flat;
    for (const auto& row : m) flat.insert(flat.end(), row.begin(), row.end());
    return flat;
}

}  // namespace

SimEstimates simulate(const NetworkModel& model, const std::vector<int>& n, double horizon,
                      double warmup, std::uint64_t seed, const SimOptions& opts) {
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
    if (warmup < 0) warmup = opts.warmup_fraction * horizon;
    if (warmup >= horizon) throw std::invalid_argument("warmup must be below horizon");
    if (std::accumulate(n.begin(), n.end(), 0) == 0)
        throw std::invalid_argument("no customers on any route");

    // Stationary runs start with every customer at the first queue of its route.
    std::vector<std::vector<int>> init(model.num_routes());
    for (int i = 0; i < model.num_routes(); ++i) {
        init[i].assign(model.route_length(i), 0);
        init[i][0] = n[i];
    }
    Engine eng(model, init, seed);

    SimEstimates est;
    est.horizon = horizon;
    est.warmup = warmup;
    est.seed = seed;
    est.initial_state_flat = flatten(eng.m);

    const int I = model.num_routes();
    const int B = opts.batches;
    const double window = horizon - warmup;
    const double batch_len = window / B;
    std::vector<std::vector<std::uint64_t>> done0(I, std::vector<std::uint64_t>(B, 0));
    std::vector<std::vector<std::uint64_t>> done1(I, std::vector<std::uint64_t>(B, 0));

    std::vector<std::vector<double>> msum(I);
    for (int i = 0; i < I; ++i) msum[i].assign(model.route_length(i), 0.0);

    std::map<std::vector<int>, double> occupancy;
    bool track_dist = true;

    double prev = 0.0;
    while (eng.clock < horizon) {
        std::vector<int> state_before = flatten(eng.m);
        auto [ri, rk] = eng.step();
        if (ri < 0) break;  // frozen network (cannot happen with customers present)
        double now = std::min(eng.clock, horizon);
        double dt = std::max(0.0, std::min(now, horizon) - std::max(prev, warmup));
        if (dt > 0.0) {
            for (int i = 0; i < I; ++i)
                for (int k = 0; k < model.route_length(i); ++k) {
                    // state_before is the pre-event state occupied during [prev, now).
                    std::size_t flat = 0;
                    for (int ii = 0; ii < i; ++ii) flat += model.route_length(ii);
                    msum[i][k] += dt * state_before[flat + k];
                }
            if (track_dist) {
                occupancy[state_before] += dt;
                if (occupancy.size() > opts.distribution_state_cap) {
                    occupancy.clear();
                    track_dist = false;
                }
            }
        }
        if (eng.clock >= warmup && eng.clock < horizon) {
            int b = std::min(B - 1, static_cast<int>((eng.clock - warmup) / batch_len));
            if (rk == 0) ++done0[ri][b];
            if (rk == 1) ++done1[ri][b];
        }
        prev = eng.clock;
        ++est.events;
    }

    est.mean_m.resize(I);
    for (int i = 0; i < I; ++i) {
        est.mean_m[i].resize(model.route_length(i));
        for (int k = 0; k < model.route_length(i); ++k) est.mean_m[i][k] = msum[i][k] / window;
    }

    const double t975_19 = 2.0930240544;  // Student t, 19 dof
    auto batch_ci = [&](const std::vector<std::uint64_t>& counts, double& mean, double& hw) {
        double sum = 0.0;
        std::vector<double> rates(B);
        for (int b = 0; b < B; ++b) {
            rates[b] = counts[b] / batch_len;
            sum += rates[b];
        }
        mean = sum / B;
        double var = 0.0;
        for (int b = 0; b < B; ++b) var += (rates[b] - mean) * (rates[b] - mean);
        var /= (B - 1);
        hw = t975_19 * std::sqrt(var / B);
    };

    est.throughput.resize(I);
    est.throughput_hw.resize(I);
    est.throughput_alt.assign(I, std::numeric_limits<double>::quiet_NaN());
    est.throughput_alt_hw.assign(I, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < I; ++i) {
        batch_ci(done0[i], est.throughput[i], est.throughput_hw[i]);
        if (model.route_length(i) > 1)
            batch_ci(done1[i], est.throughput_alt[i], est.throughput_alt_hw[i]);
    }

    if (track_dist) {
        for (int i = 0; i < I; ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                est.empirical.coords.emplace_back(model.routes[i][k], i);
        for (auto& [state, time] : occupancy) {
            est.empirical.states.push_back(state);
            est.empirical.probs.push_back(time / window);
        }
    }
    return est;
}

StateDistribution project_distribution(const NetworkModel& model, const StateDistribution& full,
                                       const std::vector<int>& subset) {
    StateDistribution out;
    std::vector<std::size_t> pick;
    std::vector<bool> in_subset(model.num_queues(), false);
    for (int j : subset) in_subset[j] = true;
    for (std::size_t c = 0; c < full.coords.size(); ++c)
        if (in_subset[full.coords[c].first]) {
            out.coords.push_back(full.coords[c]);
            pick.push_back(c);
        }
    std::map<std::vector<int>, double> acc;
    for (std::size_t s = 0; s < full.states.size(); ++s) {
        std::vector<int> proj(pick.size());
        for (std::size_t c = 0; c < pick.size(); ++c) proj[c] = full.states[s][pick[c]];
        acc[proj] += full.probs[s];
    }
    for (auto& [st, p] : acc) {
        out.states.push_back(st);
        out.probs.push_back(p);
    }
    return out;
}

ScaledTrajectory fluid_scaled_trajectory(const NetworkModel& model,
                                         const std::vector<double>& n_direction,
                                         const FluidState& initial_shares, double c,
                                         double horizon, double grid_dt, std::uint64_t seed) {
    if (c < 1.0) throw std::invalid_argument("scale must be >= 1");
    const int I = model.num_routes();

    std::vector<std::vector<int>> init(I);
    for (int i = 0; i < I; ++i) {
        int target = static_cast<int>(std::llround(c * n_direction[i]));
        const auto& shares = initial_shares.m[i];
        double total_share = std::accumulate(shares.begin(), shares.end(), 0.0);
        init[i].assign(model.route_length(i), 0);
        if (target == 0) continue;
        std::vector<double> frac(model.route_length(i), 0.0);
        int placed = 0;
        for (int k = 0; k < model.route_length(i); ++k) {
            double raw = total_share > 0 ? target * shares[k] / total_share
                                         : (k == 0 ? static_cast<double>(target) : 0.0);
            init[i][k] = static_cast<int>(std::floor(raw));
            frac[k] = raw - init[i][k];
            placed += init[i][k];
        }
        while (placed < target) {
            int best = 0;
            for (int k = 1; k < model.route_length(i); ++k)
                if (frac[k] > frac[best]) best = k;
            ++init[i][best];
            frac[best] = -1.0;
            ++placed;
        }
    }

    Engine eng(model, init, seed);
    ScaledTrajectory traj;
    traj.initial_counts_flat = flatten(eng.m);

    auto scaled_state = [&]() {
        FluidState s = FluidState::zeros(model);
        for (int i = 0; i < I; ++i)
            for (int k = 0; k < model.route_length(i); ++k) s.m[i][k] = eng.m[i][k] / c;
        return s;
    };
    auto record = [&](double t) {
        traj.t.push_back(t);
        traj.states.push_back(scaled_state());
        traj.beta.push_back(entropy(model, traj.states.back()));
    };

    double next_sample = 0.0;
    const double raw_horizon = c * horizon;
    record(0.0);
    next_sample = grid_dt;
    while (eng.clock < raw_horizon) {
        auto ev = eng.step();
        if (ev.first < 0) break;
        while (next_sample <= horizon && c * next_sample <= eng.clock) {
            // Sample the pre-event state? The chain is right-continuous; the state
            // at c*next_sample is the post-event state of the last event before it,
            // which is eng.m minus the event just applied only if the event is
            // strictly after the sample point. Roll the single event back.
            if (eng.clock > c * next_sample) {
                auto [ri, rk] = ev;
                int knext = model.next_hop(ri, rk);
                ++eng.m[ri][rk];
                --eng.m[ri][knext];
                record(next_sample);
                --eng.m[ri][rk];
                ++eng.m[ri][knext];
            } else {
                record(next_sample);
            }
            next_sample += grid_dt;
        }
    }
    while (next_sample <= horizon + 1e-12) {
        record(next_sample);
        next_sample += grid_dt;
    }
    return traj;
}

double tv_distance(const StateDistribution& p, const StateDistribution& q) {
    std::map<std::vector<int>, double> diff;
    for (std::size_t s = 0; s < p.states.size(); ++s) diff[p.states[s]] += p.probs[s];
    for (std::size_t s = 0; s < q.states.size(); ++s) diff[q.states[s]] -= q.probs[s];
    double tv = 0.0;
    for (auto& [st, d] : diff) tv += std::abs(d);
    return 0.5 * tv;
}

}  // namespace cqn
