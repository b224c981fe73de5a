#include "cqn/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cqn {

FluidState FluidState::zeros(const NetworkModel& model) {
    FluidState s;
    s.m.resize(model.num_routes());
    for (int i = 0; i < model.num_routes(); ++i) s.m[i].assign(model.route_length(i), 0.0);
    return s;
}

std::vector<double> FluidState::route_totals() const {
    std::vector<double> totals(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        totals[i] = std::accumulate(m[i].begin(), m[i].end(), 0.0);
    return totals;
}

std::vector<double> FluidState::queue_totals(const NetworkModel& model) const {
    std::vector<double> mj(model.num_queues(), 0.0);
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k) mj[model.routes[i][k]] += m[i][k];
    return mj;
}

RateVector ps_rates(const NetworkModel& model, const FluidState& state) {
    const int I = model.num_routes();
    auto mj = state.queue_totals(model);

    RateVector rates;
    rates.lambda.resize(I);
    std::vector<int> empty_queues;
    for (int j = 0; j < model.num_queues(); ++j)
        if (mj[j] <= 0.0) empty_queues.push_back(j);

    for (int i = 0; i < I; ++i) {
        rates.lambda[i].assign(model.route_length(i), 0.0);
        for (int k = 0; k < model.route_length(i); ++k) {
            int j = model.routes[i][k];
            if (mj[j] > 0.0) rates.lambda[i][k] = model.mu(i, k) * state.m[i][k] / mj[j];
        }
    }
    if (empty_queues.empty()) return rates;

    // Pass-through fixed point on the empty-queue subgraph: outflow equals
    // inflow scaled by theta_j = min(1, 1/sum inflow_i/mu_ji). Starting from
    // zero, the sweep propagates flow along chains; cycles of empty queues with
    // no external inflow stay at zero flow.
    const int max_sweeps = model.num_queues() * std::max(1, I) + 2;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (int j : empty_queues) {
            double load = 0.0;
            for (auto [i, k] : model.incidence[j])
                load += rates.lambda[i][model.prev_hop(i, k)] / model.mu(i, k);
            double theta = load > 1.0 ? 1.0 / load : 1.0;
            for (auto [i, k] : model.incidence[j]) {
                double out = theta * rates.lambda[i][model.prev_hop(i, k)];
                if (std::abs(out - rates.lambda[i][k]) > 1e-13) converged = false;
                rates.lambda[i][k] = out;
            }
        }
    }
    if (!converged) {
        std::string ids;
        for (int j : empty_queues) ids += " '" + model.queue_ids[j] + "'";
        throw std::runtime_error("empty-queue rate fixed point did not converge; queues:" + ids);
    }
    return rates;
}

double entropy(const NetworkModel& model, const FluidState& state) {
    auto mj = state.queue_totals(model);
    double beta = 0.0;
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k) {
            double m = state.m[i][k];
            if (m > 0.0) beta += m * std::log(m * model.mu(i, k) / mj[model.routes[i][k]]);
        }
    return beta;
}

double entropy_derivative(const NetworkModel& model, const FluidState& state) {
    auto rates = ps_rates(model, state);
    double d = 0.0;
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k) {
            double lam = rates.lambda[i][k];
            double lam_next = rates.lambda[i][model.next_hop(i, k)];
            if (!(lam > 0.0) || !(lam_next > 0.0))
                throw std::domain_error("zero throughput component; derivative undefined here");
            d -= lam * std::log(lam / lam_next);
        }
    return d;
}

FluidTrajectory integrate(const NetworkModel& model, const FluidState& m0, double horizon,
                          double step, const IntegrateOptions& opts) {
    if (!(horizon > 0) || !(step > 0)) throw std::invalid_argument("horizon and step must be positive");
    const int I = model.num_routes();
    auto initial_totals = m0.route_totals();

    FluidTrajectory traj;
    FluidState state = m0;
    const long long nsteps = static_cast<long long>(std::ceil(horizon / step));
    const long long stride = std::max(1LL, nsteps / std::max(1, opts.output_points - 1));

    auto record = [&](double t) {
        traj.t.push_back(t);
        traj.states.push_back(state);
        traj.beta.push_back(entropy(model, state));
    };
    record(0.0);

    double t = 0.0;
    for (long long stepno = 1; stepno <= nsteps; ++stepno) {
        double remaining = std::min(step, horizon - t);
        for (int sub = 0; sub < opts.max_substeps && remaining > 0.0; ++sub) {
            auto rates = ps_rates(model, state);
            // Largest substep that keeps every draining component nonnegative;
            // the final allowed substep consumes the rest (the clamp below
            // keeps masses nonnegative on any overshoot).
            double h = remaining;
            // Negligible masses are left to the clamp: refining around them
            // would force max_substeps sub-iterations on every step near the
            // equilibrium, for an error the renormalization already absorbs.
            constexpr double kRefineFloor = 1e-9;
            if (sub + 1 < opts.max_substeps)
                for (int i = 0; i < I; ++i)
                    for (int k = 0; k < model.route_length(i); ++k) {
                        double flow = rates.lambda[i][model.prev_hop(i, k)] - rates.lambda[i][k];
                        if (flow < 0.0 && state.m[i][k] > kRefineFloor &&
                            state.m[i][k] < h * -flow)
                            h = std::min(h, std::max(state.m[i][k] / -flow,
                                                     remaining / opts.max_substeps));
                    }
            for (int i = 0; i < I; ++i)
                for (int k = 0; k < model.route_length(i); ++k) {
                    double flow = rates.lambda[i][model.prev_hop(i, k)] - rates.lambda[i][k];
                    state.m[i][k] = std::max(0.0, state.m[i][k] + h * flow);
                }
            // Renormalize route masses to their conserved totals.
            auto totals = state.route_totals();
            for (int i = 0; i < I; ++i)
                if (totals[i] > 0.0 && initial_totals[i] > 0.0) {
                    double f = initial_totals[i] / totals[i];
                    for (double& v : state.m[i]) v *= f;
                }
            remaining -= h;
            t += h;
        }
        if (stepno % stride == 0 || stepno == nsteps) record(t);
    }
    return traj;
}

MembershipReport optimal_set_membership(const NetworkModel& model, const std::vector<double>& n,
                                        const BottleneckReport& pf, const FluidState& state,
                                        double tol) {
    MembershipReport rep;
    auto mj = state.queue_totals(model);

    std::vector<bool> is_bottleneck(model.num_queues(), false);
    for (int j : pf.bottlenecks) is_bottleneck[j] = true;

    for (int j : pf.non_bottlenecks)
        for (auto [i, k] : model.incidence[j])
            if (state.m[i][k] > tol)
                rep.violations.push_back("mass " + std::to_string(state.m[i][k]) +
                                         " at non-bottleneck queue '" + model.queue_ids[j] + "'");

    for (int j = 0; j < model.num_queues(); ++j) {
        if (mj[j] <= tol) continue;
        for (auto [i, k] : model.incidence[j]) {
            double rate = model.mu(i, k) * state.m[i][k] / mj[j];
            if (std::abs(rate - pf.allocation[i]) > tol)
                rep.violations.push_back("share at queue '" + model.queue_ids[j] + "' route '" +
                                         model.route_ids[i] + "' yields rate " +
                                         std::to_string(rate) + " != Lambda* " +
                                         std::to_string(pf.allocation[i]));
        }
    }

    auto totals = state.route_totals();
    for (int i = 0; i < model.num_routes(); ++i)
        if (std::abs(totals[i] - n[i]) > tol)
            rep.violations.push_back("route '" + model.route_ids[i] + "' total " +
                                     std::to_string(totals[i]) + " != n_i " + std::to_string(n[i]));

    rep.beta_gap = entropy(model, state) - pf.beta_star;
    rep.member = rep.violations.empty();
    return rep;
}

}  // namespace cqn
