// cqn: analyses of closed multi-class product-form queueing networks.
//
// Subcommands: exact, asymptotic, sweep, fluid, simulate, scaled, compare.
// Exit codes: 0 success, 1 computation error, 2 usage/input error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqn/exact.hpp"
#include "cqn/fluid.hpp"
#include "cqn/model.hpp"
#include "cqn/pfopt.hpp"
#include "cqn/sim.hpp"

namespace {

using namespace cqn;

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

// "--population r1=3,r2=2"; empty string keeps the model file's population.
PopulationVector resolve_population(const NetworkModel& model, const PopulationVector& file_pop,
                                    const std::string& override_spec) {
    if (override_spec.empty()) return file_pop;
    PopulationVector pop;
    pop.counts.assign(model.num_routes(), 0.0);
    for (const auto& kv : split(override_spec, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("bad population entry '" + kv + "'");
        int i = model.route_index(kv.substr(0, eq));
        if (i < 0) throw UsageError("unknown route '" + kv.substr(0, eq) + "'");
        pop.counts[i] = std::stod(kv.substr(eq + 1));
    }
    return pop;
}

// "uniform" | "first" | "q1:r1=2,q2:r1=1". Totals for uniform/first come from n.
FluidState resolve_m0(const NetworkModel& model, const std::vector<double>& n,
                      const std::string& spec) {
    FluidState s = FluidState::zeros(model);
    if (spec == "uniform") {
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                s.m[i][k] = n[i] / model.route_length(i);
        return s;
    }
    if (spec == "first") {
        for (int i = 0; i < model.num_routes(); ++i) s.m[i][0] = n[i];
        return s;
    }
    for (const auto& kv : split(spec, ',')) {
        auto eq = kv.find('=');
        auto colon = kv.find(':');
        if (eq == std::string::npos || colon == std::string::npos || colon > eq)
            throw UsageError("bad m0 entry '" + kv + "' (want queue:route=value)");
        int j = model.queue_index(kv.substr(0, colon));
        int i = model.route_index(kv.substr(colon + 1, eq - colon - 1));
        if (j < 0 || i < 0) throw UsageError("unknown ids in m0 entry '" + kv + "'");
        int k = model.hop_of(i, j);
        if (k < 0) throw UsageError("queue not on route in m0 entry '" + kv + "'");
        s.m[i][k] = std::stod(kv.substr(eq + 1));
    }
    return s;
}

std::vector<double> parse_scales(const std::string& spec) {
    std::vector<double> scales;
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        double a = std::stod(spec.substr(0, colon));
        double b = std::stod(spec.substr(colon + 1));
        for (double c = a; c <= b + 1e-9; c += 1.0) scales.push_back(c);
    } else {
        for (const auto& tok : split(spec, ',')) scales.push_back(std::stod(tok));
    }
    if (scales.empty() || scales[0] <= 0) throw UsageError("bad --scales");
    for (std::size_t k = 1; k < scales.size(); ++k)
        if (scales[k] <= scales[k - 1]) throw UsageError("scales must be strictly increasing");
    return scales;
}

std::vector<int> round_population(const std::vector<double>& n, double c) {
    std::vector<int> out(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        out[i] = static_cast<int>(std::llround(c * n[i]));
        if (n[i] > 0 && out[i] == 0) out[i] = 1;
    }
    return out;
}

std::ostream& open_sink(std::ofstream& file, const std::string& out_path) {
    if (out_path.empty()) return std::cout;
    file.open(out_path);
    if (!file) throw UsageError("cannot open output file '" + out_path + "'");
    return file;
}

double max_mu(const NetworkModel& model) {
    double mu = 0.0;
    for (const auto& row : model.rates)
        for (double v : row) mu = std::max(mu, v);
    return mu;
}

std::string coord_name(const NetworkModel& model, int j, int i) {
    return model.queue_ids[j] + ":" + model.route_ids[i];
}

void print_pf_report(std::ostream& os, const NetworkModel& model, const BottleneckReport& pf) {
    os << "allocation:\n";
    for (int i = 0; i < model.num_routes(); ++i)
        os << "  " << model.route_ids[i] << " = " << fmt17(pf.allocation[i]) << "\n";
    os << "utilization:\n";
    for (int j = 0; j < model.num_queues(); ++j)
        os << "  " << model.queue_ids[j] << " = " << fmt17(pf.utilization[j])
           << " (slack " << fmt17(pf.slack[j]) << ")\n";
    os << "bottlenecks:";
    for (int j : pf.bottlenecks) os << " " << model.queue_ids[j];
    os << "\nnon_bottlenecks:";
    for (int j : pf.non_bottlenecks) os << " " << model.queue_ids[j];
    os << "\nbeta_star = " << fmt17(pf.beta_star) << "\n";
    os << "kkt: stationarity=" << fmt17(pf.kkt.stationarity)
       << " primal=" << fmt17(pf.kkt.primal_violation)
       << " complementarity=" << fmt17(pf.kkt.complementarity) << "\n";
    os << "iterations=" << pf.iterations << " converged=" << (pf.converged ? "yes" : "no") << "\n";
    if (!pf.dropped_routes.empty()) {
        os << "dropped_routes (n_i = 0):";
        for (int i : pf.dropped_routes) os << " " << model.route_ids[i];
        os << "\n";
    }
}

// ---- subcommand bodies -----------------------------------------------------

int cmd_exact(const std::string& model_path, const std::string& pop_spec,
              const std::string& marginal_spec, const std::string& table_out,
              const std::string& out_path, const std::string& format, std::size_t mem_budget) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto n = pop.as_ints();

    auto table = normalizing_table(model, n, mem_budget);
    auto lam = throughput(table, n);
    auto util = utilization(model, table, n);
    auto means = mean_queue_lengths(model, n, mem_budget);

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    if (format == "csv") {
        os << "kind,queue,route,value\n";
        os << "logB,,," << fmt17(table.log_b(n)) << "\n";
        for (int i = 0; i < model.num_routes(); ++i)
            os << "throughput,," << model.route_ids[i] << "," << fmt17(lam[i]) << "\n";
        for (int j = 0; j < model.num_queues(); ++j)
            os << "utilization," << model.queue_ids[j] << ",," << fmt17(util[j]) << "\n";
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                os << "mean_queue_length," << model.queue_ids[model.routes[i][k]] << ","
                   << model.route_ids[i] << "," << fmt17(means[i][k]) << "\n";
    } else {
        os << "log B(n) = " << fmt17(table.log_b(n)) << "  (B = " << fmt17(std::exp(table.log_b(n)))
           << ")\n";
        os << "throughput:\n";
        for (int i = 0; i < model.num_routes(); ++i)
            os << "  " << model.route_ids[i] << " = " << fmt17(lam[i]) << "\n";
        os << "utilization:\n";
        for (int j = 0; j < model.num_queues(); ++j)
            os << "  " << model.queue_ids[j] << " = " << fmt17(util[j]) << "\n";
        os << "mean queue lengths:\n";
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                os << "  " << coord_name(model, model.routes[i][k], i) << " = "
                   << fmt17(means[i][k]) << "\n";
    }

    if (!marginal_spec.empty()) {
        std::vector<int> subset;
        for (const auto& id : split(marginal_spec, ',')) {
            int j = model.queue_index(id);
            if (j < 0) throw UsageError("unknown queue '" + id + "' in --marginal");
            subset.push_back(j);
        }
        auto dist = marginal_distribution(model, n, subset, mem_budget);
        os << "marginal over {" << marginal_spec << "}:\n";
        for (std::size_t c = 0; c < dist.coords.size(); ++c)
            os << (c ? "," : "state ") << coord_name(model, dist.coords[c].first, dist.coords[c].second);
        os << ",probability\n";
        for (std::size_t s = 0; s < dist.states.size(); ++s) {
            for (std::size_t c = 0; c < dist.states[s].size(); ++c)
                os << (c ? "," : "") << dist.states[s][c];
            os << "," << fmt17(dist.probs[s]) << "\n";
        }
    }

    if (!table_out.empty()) {
        std::ofstream tf(table_out);
        if (!tf) throw UsageError("cannot open '" + table_out + "'");
        for (int i = 0; i < model.num_routes(); ++i) tf << "n_" << model.route_ids[i] << ",";
        tf << "logB\n";
        std::vector<int> v(n.size(), 0);
        do {
            for (int x : v) tf << x << ",";
            tf << fmt17(table.log_b(v)) << "\n";
        } while (table.lattice.next(v));
    }
    return 0;
}

int cmd_asymptotic(const std::string& model_path, const std::string& pop_spec, double eps_b,
                   const std::string& out_path, const std::string& format) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    SolveOptions opts;
    opts.eps_bottleneck = eps_b;
    auto pf = solve_pf(model, pop.counts, opts);
    if (!pf.converged) {
        std::cerr << "error: PF solver did not converge (kkt max " << fmt17(pf.kkt.max()) << ")\n";
        return 1;
    }
    auto means = open_means(pf.allocation, model, pf.non_bottlenecks);

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    if (format == "csv") {
        os << "kind,queue,route,value\n";
        for (int i = 0; i < model.num_routes(); ++i)
            os << "allocation,," << model.route_ids[i] << "," << fmt17(pf.allocation[i]) << "\n";
        for (int j = 0; j < model.num_queues(); ++j)
            os << "utilization," << model.queue_ids[j] << ",," << fmt17(pf.utilization[j]) << "\n";
        os << "beta_star,,," << fmt17(pf.beta_star) << "\n";
        for (int j : pf.non_bottlenecks)
            for (auto [i, k] : model.incidence[j])
                os << "open_mean," << model.queue_ids[j] << "," << model.route_ids[i] << ","
                   << fmt17(means[i][k]) << "\n";
    } else {
        os << "eps_bottleneck = " << fmt17(eps_b) << "\n";
        print_pf_report(os, model, pf);
        os << "open-network means at non-bottlenecks:\n";
        for (int j : pf.non_bottlenecks)
            for (auto [i, k] : model.incidence[j])
                os << "  " << coord_name(model, j, i) << " = " << fmt17(means[i][k]) << "\n";
    }
    return 0;
}

struct SweepRow {
    double c = 0;
    std::vector<int> n;
    std::vector<double> lambda, lambda_gap;
    std::vector<double> em, em_gap;  // aligned with nb coords
    std::vector<double> tv;          // aligned with nb queues
    std::string error;
};

int cmd_sweep(const std::string& model_path, const std::string& pop_spec,
              const std::string& scales_spec, double eps_b, const std::string& out_path,
              std::size_t mem_budget) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto scales = parse_scales(scales_spec);

    SolveOptions sopts;
    sopts.eps_bottleneck = eps_b;
    auto pf = solve_pf(model, pop.counts, sopts);
    auto omeans = open_means(pf.allocation, model, pf.non_bottlenecks);

    std::vector<std::pair<int, int>> nb_coords;  // (queue, route)
    for (int j : pf.non_bottlenecks)
        for (auto [i, k] : model.incidence[j]) nb_coords.emplace_back(j, i);

    auto compute_row = [&](double c) {
        SweepRow row;
        row.c = c;
        row.n = round_population(pop.counts, c);
        try {
            auto table = normalizing_table(model, row.n, mem_budget);
            row.lambda = throughput(table, row.n);
            row.lambda_gap.resize(row.lambda.size());
            for (std::size_t i = 0; i < row.lambda.size(); ++i)
                row.lambda_gap[i] = std::abs(row.lambda[i] - pf.allocation[i]);
            auto means = mean_queue_lengths(model, row.n, mem_budget);
            for (auto [j, i] : nb_coords) {
                int k = model.hop_of(i, j);
                row.em.push_back(means[i][k]);
                row.em_gap.push_back(std::abs(means[i][k] - omeans[i][k]));
            }
            for (int j : pf.non_bottlenecks) {
                auto exact_marg = marginal_distribution(model, row.n, {j}, mem_budget);
                auto open_marg = open_marginal(pf.allocation, model, j);
                row.tv.push_back(tv_distance(exact_marg, open_marg));
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    };

    // Rows are independent; compute them in parallel, emit in scale order.
    std::vector<std::future<SweepRow>> futures;
    for (double c : scales)
        futures.push_back(std::async(std::launch::async, compute_row, c));

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    os << "# columns: c, per-route exact Lambda(c) and |Lambda(c)-Lambda*|, per non-bottleneck "
          "(queue,route) exact mean and |gap to open mean|, per non-bottleneck queue TV(exact "
          "marginal, open marginal); eps_bottleneck=" << fmt17(eps_b) << "\n";
    os << "c";
    for (int i = 0; i < model.num_routes(); ++i)
        os << ",lambda_" << model.route_ids[i] << ",gap_lambda_" << model.route_ids[i];
    for (auto [j, i] : nb_coords)
        os << ",em_" << coord_name(model, j, i) << ",gap_em_" << coord_name(model, j, i);
    for (int j : pf.non_bottlenecks) os << ",tv_" << model.queue_ids[j];
    os << ",error\n";
    for (auto& fut : futures) {
        auto row = fut.get();
        os << fmt17(row.c);
        if (row.error.empty()) {
            for (std::size_t i = 0; i < row.lambda.size(); ++i)
                os << "," << fmt17(row.lambda[i]) << "," << fmt17(row.lambda_gap[i]);
            for (std::size_t x = 0; x < row.em.size(); ++x)
                os << "," << fmt17(row.em[x]) << "," << fmt17(row.em_gap[x]);
            for (double tv : row.tv) os << "," << fmt17(tv);
            os << ",\n";
        } else {
            int cols = model.num_routes() * 2 + static_cast<int>(nb_coords.size()) * 2 +
                       static_cast<int>(pf.non_bottlenecks.size());
            for (int x = 0; x < cols; ++x) os << ",";
            os << "," << row.error << "\n";
        }
    }
    return 0;
}

int cmd_fluid(const std::string& model_path, const std::string& pop_spec, const std::string& m0_spec,
              double horizon, double step, double eps_b, const std::string& out_path,
              const std::string& traj_out) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto m0 = resolve_m0(model, pop.counts, m0_spec);
    auto n = m0.route_totals();
    if (step <= 0) step = 1e-3 / max_mu(model);
    if (horizon <= 0) throw UsageError("--horizon must be positive");

    SolveOptions sopts;
    sopts.eps_bottleneck = eps_b;
    auto pf = solve_pf(model, n, sopts);
    auto traj = integrate(model, m0, horizon, step);

    if (!traj_out.empty()) {
        std::ofstream tf(traj_out);
        if (!tf) throw UsageError("cannot open '" + traj_out + "'");
        tf << "t,beta,beta_gap";
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                tf << ",m_" << coord_name(model, model.routes[i][k], i);
        tf << "\n";
        for (std::size_t s = 0; s < traj.t.size(); ++s) {
            tf << fmt17(traj.t[s]) << "," << fmt17(traj.beta[s]) << ","
               << fmt17(traj.beta[s] - pf.beta_star);
            for (const auto& row : traj.states[s].m)
                for (double v : row) tf << "," << fmt17(v);
            tf << "\n";
        }
    }

    auto verdict = optimal_set_membership(model, n, pf, traj.states.back());
    std::ofstream file;
    auto& os = open_sink(file, out_path);
    os << "horizon=" << fmt17(horizon) << " step=" << fmt17(step) << "\n";
    os << "beta(final) = " << fmt17(traj.beta.back()) << "\n";
    os << "beta_star   = " << fmt17(pf.beta_star) << "\n";
    os << "beta_gap    = " << fmt17(verdict.beta_gap) << "\n";
    os << "optimal_set_member = " << (verdict.member ? "yes" : "no") << "\n";
    for (const auto& v : verdict.violations) os << "  violation: " << v << "\n";
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& pop_spec, double horizon,
                 double warmup, std::uint64_t seed, const std::string& out_path,
                 const std::string& format) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto est = simulate(model, pop.as_ints(), horizon, warmup, seed);

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    if (format == "csv") {
        os << "kind,queue,route,value,half_width\n";
        for (int i = 0; i < model.num_routes(); ++i) {
            os << "throughput,," << model.route_ids[i] << "," << fmt17(est.throughput[i]) << ","
               << fmt17(est.throughput_hw[i]) << "\n";
            if (model.route_length(i) > 1)
                os << "throughput_alt,," << model.route_ids[i] << "," << fmt17(est.throughput_alt[i])
                   << "," << fmt17(est.throughput_alt_hw[i]) << "\n";
        }
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                os << "mean_queue_length," << model.queue_ids[model.routes[i][k]] << ","
                   << model.route_ids[i] << "," << fmt17(est.mean_m[i][k]) << ",\n";
    } else {
        os << "events=" << est.events << " horizon=" << fmt17(est.horizon)
           << " warmup=" << fmt17(est.warmup) << " seed=" << est.seed << "\n";
        os << "initial state: all customers at the first queue of their route\n";
        os << "throughput (95% CI half-width, 20 batch means):\n";
        for (int i = 0; i < model.num_routes(); ++i) {
            os << "  " << model.route_ids[i] << " = " << fmt17(est.throughput[i]) << " +- "
               << fmt17(est.throughput_hw[i]);
            if (model.route_length(i) > 1)
                os << "   (at 2nd queue: " << fmt17(est.throughput_alt[i]) << " +- "
                   << fmt17(est.throughput_alt_hw[i]) << ")";
            os << "\n";
        }
        os << "mean queue lengths:\n";
        for (int i = 0; i < model.num_routes(); ++i)
            for (int k = 0; k < model.route_length(i); ++k)
                os << "  " << coord_name(model, model.routes[i][k], i) << " = "
                   << fmt17(est.mean_m[i][k]) << "\n";
    }
    return 0;
}

int cmd_scaled(const std::string& model_path, const std::string& pop_spec,
               const std::string& m0_spec, double scale, double horizon, double grid_dt,
               std::uint64_t seed, double eps_b, const std::string& out_path) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto shares = resolve_m0(model, pop.counts, m0_spec);
    auto traj = fluid_scaled_trajectory(model, pop.counts, shares, scale, horizon, grid_dt, seed);

    SolveOptions sopts;
    sopts.eps_bottleneck = eps_b;
    auto pf = solve_pf(model, pop.counts, sopts);

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    os << "t,beta,beta_gap";
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k)
            os << ",m_" << coord_name(model, model.routes[i][k], i);
    os << "\n";
    for (std::size_t s = 0; s < traj.t.size(); ++s) {
        os << fmt17(traj.t[s]) << "," << fmt17(traj.beta[s]) << ","
           << fmt17(traj.beta[s] - pf.beta_star);
        for (const auto& row : traj.states[s].m)
            for (double v : row) os << "," << fmt17(v);
        os << "\n";
    }
    return 0;
}

int cmd_compare(const std::string& model_path, const std::string& pop_spec, double horizon,
                std::uint64_t seed, double eps_b, const std::string& out_path,
                std::size_t mem_budget) {
    auto [model, file_pop] = load_model_file(model_path);
    auto pop = resolve_population(model, file_pop, pop_spec);
    auto n = pop.as_ints();

    auto table = normalizing_table(model, n, mem_budget);
    auto lam_exact = throughput(table, n);
    auto util_exact = utilization(model, table, n);

    SolveOptions sopts;
    sopts.eps_bottleneck = eps_b;
    auto pf = solve_pf(model, pop.counts, sopts);

    auto m0 = resolve_m0(model, pop.counts, "uniform");
    double mu = max_mu(model);
    auto traj = integrate(model, m0, 200.0, 1e-3 / mu);
    auto rates = ps_rates(model, traj.states.back());
    std::vector<double> lam_fluid(model.num_routes(), 0.0);
    for (int i = 0; i < model.num_routes(); ++i) {
        // Long-run fluid throughput read off any hop (they agree at the optimum).
        lam_fluid[i] = *std::max_element(rates.lambda[i].begin(), rates.lambda[i].end());
    }

    auto est = simulate(model, n, horizon, -1.0, seed);

    std::ofstream file;
    auto& os = open_sink(file, out_path);
    os << "per-route throughput (exact | PF Lambda* | fluid long-run | simulated +- hw):\n";
    for (int i = 0; i < model.num_routes(); ++i)
        os << "  " << model.route_ids[i] << ": " << fmt17(lam_exact[i]) << " | "
           << fmt17(pf.allocation[i]) << " | " << fmt17(lam_fluid[i]) << " | "
           << fmt17(est.throughput[i]) << " +- " << fmt17(est.throughput_hw[i]) << "\n";
    os << "exact utilizations:";
    for (int j = 0; j < model.num_queues(); ++j) os << " " << fmt17(util_exact[j]);
    os << "\nPF bottlenecks:";
    for (int j : pf.bottlenecks) os << " " << model.queue_ids[j];
    os << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed multi-class queueing network analyses"};
    app.require_subcommand(1);

    std::string model_path, pop_spec, out_path, format = "text";
    std::string marginal_spec, table_out, traj_out, m0_spec = "uniform", scales_spec = "1:10";
    double horizon = 0, step = 0, warmup = -1, eps_b = 1e-6, scale = 1, grid_dt = 0.1;
    std::uint64_t seed = 1;
    std::size_t mem_budget = kDefaultMemBudget;

    auto add_common = [&](CLI::App* sub, bool needs_model = true) {
        if (needs_model) sub->add_option("--model", model_path, "model file path")->required();
        sub->add_option("--population", pop_spec, "route populations k=v,... (overrides file)");
        sub->add_option("--out", out_path, "output path (default stdout)");
        sub->add_option("--eps-bottleneck", eps_b, "bottleneck slack threshold");
        sub->add_option("--mem-budget", mem_budget, "table memory budget in bytes");
    };

    auto* s_exact = app.add_subcommand("exact", "exact product-form solve");
    add_common(s_exact);
    s_exact->add_option("--marginal", marginal_spec, "queue ids for a marginal table");
    s_exact->add_option("--dump-table", table_out, "write the full logB lattice CSV here");
    s_exact->add_option("--format", format)->check(CLI::IsMember({"csv", "text"}));

    auto* s_asym = app.add_subcommand("asymptotic", "PF optimization and open approximation");
    add_common(s_asym);
    s_asym->add_option("--format", format)->check(CLI::IsMember({"csv", "text"}));

    auto* s_sweep = app.add_subcommand("sweep", "population-scaling convergence sweep");
    add_common(s_sweep);
    s_sweep->add_option("--scales", scales_spec, "a:b or comma list");

    auto* s_fluid = app.add_subcommand("fluid", "fluid-model integration");
    add_common(s_fluid);
    s_fluid->add_option("--m0", m0_spec, "uniform | first | queue:route=mass,...");
    s_fluid->add_option("--horizon", horizon)->required();
    s_fluid->add_option("--step", step, "integrator step (default 1e-3/mu_max)");
    s_fluid->add_option("--traj-out", traj_out, "trajectory CSV path");

    auto* s_sim = app.add_subcommand("simulate", "discrete-event simulation");
    add_common(s_sim);
    s_sim->add_option("--horizon", horizon)->required();
    s_sim->add_option("--warmup", warmup, "default 20% of horizon");
    s_sim->add_option("--seed", seed);
    s_sim->add_option("--format", format)->check(CLI::IsMember({"csv", "text"}));

    auto* s_scaled = app.add_subcommand("scaled", "fluid-scaled simulation path M^c(ct)/c");
    add_common(s_scaled);
    s_scaled->add_option("--m0", m0_spec, "initial mass shares");
    s_scaled->add_option("--scale", scale)->required();
    s_scaled->add_option("--horizon", horizon)->required();
    s_scaled->add_option("--grid-dt", grid_dt);
    s_scaled->add_option("--seed", seed);

    auto* s_cmp = app.add_subcommand("compare", "cross-method throughput comparison");
    add_common(s_cmp);
    s_cmp->add_option("--horizon", horizon, "simulation horizon")->required();
    s_cmp->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
        if (s_exact->parsed())
            return cmd_exact(model_path, pop_spec, marginal_spec, table_out, out_path, format,
                             mem_budget);
        if (s_asym->parsed()) return cmd_asymptotic(model_path, pop_spec, eps_b, out_path, format);
        if (s_sweep->parsed())
            return cmd_sweep(model_path, pop_spec, scales_spec, eps_b, out_path, mem_budget);
        if (s_fluid->parsed())
            return cmd_fluid(model_path, pop_spec, m0_spec, horizon, step, eps_b, out_path, traj_out);
        if (s_sim->parsed())
            return cmd_simulate(model_path, pop_spec, horizon, warmup, seed, out_path, format);
        if (s_scaled->parsed())
            return cmd_scaled(model_path, pop_spec, m0_spec, scale, horizon, grid_dt, seed, eps_b,
                              out_path);
        if (s_cmp->parsed())
            return cmd_compare(model_path, pop_spec, horizon, seed, eps_b, out_path, mem_budget);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cqn::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return 1;
    }
}
