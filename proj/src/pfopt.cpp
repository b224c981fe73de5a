#include "cqn/pfopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cqn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gaussian elimination with partial pivoting; returns false on (near) singularity.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

// Lawson-Hanson NNLS: minimize ||A x - b||_2 over x >= 0 (A is rows x cols).
std::vector<double> nnls(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
    const int rows = static_cast<int>(b.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(a[0].size());
    std::vector<double> x(cols, 0.0);
    if (cols == 0) return x;
    std::vector<bool> passive(cols, false);

    auto residual = [&](const std::vector<double>& xx) {
        std::vector<double> r(rows);
        for (int i = 0; i < rows; ++i) {
            double s = b[i];
            for (int c = 0; c < cols; ++c) s -= a[i][c] * xx[c];
            r[i] = s;
        }
        return r;
    };

    for (int outer = 0; outer < 3 * cols + 10; ++outer) {
        auto r = residual(x);
        // w = A^T r, the negative gradient.
        int best = -1;
        double best_w = 1e-12;
        for (int c = 0; c < cols; ++c) {
            if (passive[c]) continue;
            double w = 0.0;
            for (int i = 0; i < rows; ++i) w += a[i][c] * r[i];
            if (w > best_w) {
                best_w = w;
                best = c;
            }
        }
        if (best < 0) break;
        passive[best] = true;

        for (int inner = 0; inner < 3 * cols + 10; ++inner) {
            std::vector<int> p;
            for (int c = 0; c < cols; ++c)
                if (passive[c]) p.push_back(c);
            const int np = static_cast<int>(p.size());
            // Normal equations on the passive set.
            std::vector<std::vector<double>> ata(np, std::vector<double>(np, 0.0));
            std::vector<double> atb(np, 0.0);
            for (int u = 0; u < np; ++u) {
                for (int v = 0; v < np; ++v)
                    for (int i = 0; i < rows; ++i) ata[u][v] += a[i][p[u]] * a[i][p[v]];
                ata[u][u] += 1e-12;
                for (int i = 0; i < rows; ++i) atb[u] += a[i][p[u]] * b[i];
            }
            std::vector<double> z;
            if (!solve_linear(ata, atb, z)) {
                passive[best] = false;
                return x;
            }
            bool all_pos = true;
            for (double zz : z)
                if (zz <= 0) all_pos = false;
            if (all_pos) {
                std::fill(x.begin(), x.end(), 0.0);
                for (int u = 0; u < np; ++u) x[p[u]] = z[u];
                break;
            }
            double alpha = 1.0;
            for (int u = 0; u < np; ++u)
                if (z[u] <= 0) alpha = std::min(alpha, x[p[u]] / (x[p[u]] - z[u]));
            for (int u = 0; u < np; ++u) {
                x[p[u]] += alpha * (z[u] - x[p[u]]);
                if (x[p[u]] <= 1e-14) {
                    x[p[u]] = 0.0;
                    passive[p[u]] = false;
                }
            }
        }
    }
    return x;
}

}  // namespace

double KktResiduals::max() const {
    return std::max({stationarity, primal_violation, complementarity});
}

std::pair<std::vector<int>, std::vector<int>> classify_bottlenecks(
    const std::vector<double>& utilization, double eps_b) {
    std::vector<int> bn, nb;
    for (int j = 0; j < static_cast<int>(utilization.size()); ++j) {
        if (1.0 - utilization[j] < eps_b)
            bn.push_back(j);
        else
            nb.push_back(j);
    }
    return {bn, nb};
}

KktResiduals kkt_residuals(const NetworkModel& model, const std::vector<double>& n,
                           const std::vector<double>& lambda, double active_slack) {
    const int J = model.num_queues();
    std::vector<double> util(J, 0.0);
    for (int j = 0; j < J; ++j)
        for (auto [i, k] : model.incidence[j])
            util[j] += lambda[i] / model.mu(i, k);

    KktResiduals res;
    for (int j = 0; j < J; ++j) res.primal_violation = std::max(res.primal_violation, util[j] - 1.0);

    std::vector<int> supported;  // routes with n_i > 0
    for (int i = 0; i < model.num_routes(); ++i)
        if (n[i] > 0) supported.push_back(i);
    std::vector<int> tight;  // queues allowed to carry a multiplier
    for (int j = 0; j < J; ++j)
        if (1.0 - util[j] < active_slack) tight.push_back(j);

    // Fit nonnegative multipliers on the tight set to n_i/Lambda_i = sum_j mult_j/mu_ji.
    std::vector<std::vector<double>> a(supported.size(), std::vector<double>(tight.size(), 0.0));
    std::vector<double> g(supported.size());
    for (std::size_t r = 0; r < supported.size(); ++r) {
        int i = supported[r];
        if (!(lambda[i] > 0)) throw std::invalid_argument("Lambda must be positive on supported routes");
        g[r] = n[i] / lambda[i];
        for (std::size_t c = 0; c < tight.size(); ++c) {
            int k = model.hop_of(i, tight[c]);
            if (k >= 0) a[r][c] = 1.0 / model.mu(i, k);
        }
    }
    auto mult = nnls(a, g);
    for (std::size_t r = 0; r < supported.size(); ++r) {
        double s = -g[r];
        for (std::size_t c = 0; c < tight.size(); ++c) s += a[r][c] * mult[c];
        res.stationarity = std::max(res.stationarity, std::abs(s));
    }
    for (std::size_t c = 0; c < tight.size(); ++c)
        res.complementarity =
            std::max(res.complementarity, std::abs(mult[c] * (1.0 - util[tight[c]])));
    return res;
}

BottleneckReport solve_pf(const NetworkModel& model, const std::vector<double>& n,
                          const SolveOptions& opts) {
    const int J = model.num_queues();
    const int I = model.num_routes();
    if (static_cast<int>(n.size()) != I) throw std::invalid_argument("population dimension mismatch");

    BottleneckReport rep;
    double n_total = 0.0;
    for (int i = 0; i < I; ++i) {
        if (n[i] < 0) throw std::invalid_argument("negative population");
        if (n[i] == 0) rep.dropped_routes.push_back(i);
        n_total += n[i];
    }
    if (n_total == 0) throw std::invalid_argument("all route populations are zero");

    // Internally the objective weights are normalized to sum 1: the argmax is
    // scale covariant, and it keeps the dual tolerances population independent.
    std::vector<double> w(I, 0.0);
    for (int i = 0; i < I; ++i) w[i] = n[i] / n_total;

    // Dual of the PF program over queue multipliers y >= 0:
    //   D(y) = sum_j y_j - sum_{w_i>0} w_i log s_i(y),  s_i = sum_{j in i} y_j/mu_ji,
    // with primal recovery Lambda_i = w_i/s_i. Solved by projected Newton with a
    // gradient fallback; grad_j = 1 - U_j(Lambda(y)).
    std::vector<double> y(J, 1.0);

    auto route_loads = [&](const std::vector<double>& yy, std::vector<double>& s) {
        for (int i = 0; i < I; ++i) {
            if (w[i] == 0) {
                s[i] = kInf;
                continue;
            }
            double acc = 0.0;
            for (int k = 0; k < model.route_length(i); ++k)
                acc += yy[model.routes[i][k]] / model.mu(i, k);
            s[i] = acc;
        }
    };
    auto dual_value = [&](const std::vector<double>& yy, const std::vector<double>& s) {
        double d = 0.0;
        for (int j = 0; j < J; ++j) d += yy[j];
        for (int i = 0; i < I; ++i) {
            if (w[i] == 0) continue;
            if (!(s[i] > 0)) return kInf;
            d -= w[i] * std::log(s[i]);
        }
        return d;
    };

    std::vector<double> s(I), lam(I), util(J), grad(J);
    route_loads(y, s);
    double dval = dual_value(y, s);

    auto refresh = [&]() {
        for (int i = 0; i < I; ++i) lam[i] = w[i] == 0 ? 0.0 : w[i] / s[i];
        std::fill(util.begin(), util.end(), 0.0);
        for (int j = 0; j < J; ++j)
            for (auto [i, k] : model.incidence[j]) util[j] += lam[i] / model.mu(i, k);
        for (int j = 0; j < J; ++j) grad[j] = 1.0 - util[j];
    };
    refresh();

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        double pv = 0.0, cs = 0.0;
        for (int j = 0; j < J; ++j) {
            pv = std::max(pv, util[j] - 1.0);
            cs = std::max(cs, std::abs(y[j] * grad[j]));
        }
        if (std::max(pv, cs) < opts.kkt_tol) {
            rep.converged = true;
            break;
        }

        // Free set: coordinates not pinned at the y >= 0 boundary.
        std::vector<int> free;
        for (int j = 0; j < J; ++j)
            if (y[j] > 1e-14 || grad[j] < 0) free.push_back(j);
        const int nf = static_cast<int>(free.size());

        std::vector<std::vector<double>> h(nf, std::vector<double>(nf, 0.0));
        for (int i = 0; i < I; ++i) {
            if (w[i] == 0) continue;
            double c = w[i] / (s[i] * s[i]);
            for (int u = 0; u < nf; ++u) {
                int ku = model.hop_of(i, free[u]);
                if (ku < 0) continue;
                for (int v = 0; v < nf; ++v) {
                    int kv = model.hop_of(i, free[v]);
                    if (kv < 0) continue;
                    h[u][v] += c / (model.mu(i, ku) * model.mu(i, kv));
                }
            }
        }
        double diag_max = 0.0;
        for (int u = 0; u < nf; ++u) diag_max = std::max(diag_max, h[u][u]);
        for (int u = 0; u < nf; ++u) h[u][u] += 1e-12 * std::max(diag_max, 1.0);

        std::vector<double> gf(nf), d;
        for (int u = 0; u < nf; ++u) gf[u] = grad[free[u]];
        bool have_newton = solve_linear(h, gf, d);

        auto try_direction = [&](const std::vector<double>& dir) {
            double alpha = 1.0;
            std::vector<double> cand(J), cs_loads(I);
            for (int bt = 0; bt < 60; ++bt) {
                cand = y;
                for (int u = 0; u < nf; ++u) cand[free[u]] = std::max(0.0, y[free[u]] - alpha * dir[u]);
                route_loads(cand, cs_loads);
                double dv = dual_value(cand, cs_loads);
                if (dv < dval) {
                    y = cand;
                    s = cs_loads;
                    dval = dv;
                    return true;
                }
                alpha *= 0.5;
            }
            return false;
        };

        bool moved = have_newton && try_direction(d);
        if (!moved) moved = try_direction(gf);  // steepest descent fallback
        if (!moved) break;                      // no further progress representable
        refresh();
    }
    rep.iterations = iter;

    rep.allocation = lam;
    rep.utilization = util;
    rep.slack.resize(J);
    for (int j = 0; j < J; ++j) rep.slack[j] = 1.0 - util[j];
    rep.multipliers.resize(J);
    for (int j = 0; j < J; ++j) rep.multipliers[j] = y[j] * n_total;
    std::tie(rep.bottlenecks, rep.non_bottlenecks) =
        classify_bottlenecks(util, opts.eps_bottleneck);
    rep.beta_star = 0.0;
    for (int i = 0; i < I; ++i)
        if (n[i] > 0) rep.beta_star += n[i] * std::log(lam[i]);
    rep.kkt = kkt_residuals(model, w, lam);
    if (!rep.converged && rep.kkt.max() < 1e-8) rep.converged = true;
    return rep;
}

StateDistribution open_marginal(const std::vector<double>& lambda, const NetworkModel& model,
                                int j, double tail_eps) {
    StateDistribution dist;
    std::vector<double> rho;
    for (auto [i, k] : model.incidence[j]) {
        dist.coords.emplace_back(j, i);
        rho.push_back(lambda[i] / model.mu(i, k));
    }
    double u = std::accumulate(rho.begin(), rho.end(), 0.0);
    if (u >= 1.0)
        throw std::domain_error("queue '" + model.queue_ids[j] +
                                "' is saturated; open marginal does not exist");
    const std::size_t C = rho.size();
    if (u == 0.0) {
        dist.states.push_back(std::vector<int>(C, 0));
        dist.probs.push_back(1.0);
        return dist;
    }
    int cap = static_cast<int>(std::ceil(std::log(tail_eps) / std::log(u)));

    std::vector<double> lf(cap + 1, 0.0);
    for (int k = 2; k <= cap; ++k) lf[k] = lf[k - 1] + std::log(static_cast<double>(k));

    std::vector<int> m(C, 0);
    for (;;) {
        int total = std::accumulate(m.begin(), m.end(), 0);
        if (total <= cap) {
            double logp = std::log1p(-u) + lf[total];
            bool possible = true;
            for (std::size_t c = 0; c < C; ++c) {
                if (m[c] > 0 && rho[c] == 0.0) possible = false;
                if (m[c] > 0) logp += m[c] * std::log(rho[c]) - lf[m[c]];
            }
            if (possible) {
                dist.states.push_back(m);
                dist.probs.push_back(std::exp(logp));
            }
        }
        std::size_t c = C;
        bool done = true;
        while (c > 0) {
            --c;
            if (m[c] < cap) {
                ++m[c];
                done = false;
                break;
            }
            m[c] = 0;
        }
        if (done) break;
    }
    return dist;
}

std::vector<std::vector<double>> open_means(const std::vector<double>& lambda,
                                            const NetworkModel& model,
                                            const std::vector<int>& js) {
    std::vector<std::vector<double>> means(model.num_routes());
    for (int i = 0; i < model.num_routes(); ++i) means[i].assign(model.route_length(i), 0.0);
    for (int j : js) {
        double u = 0.0;
        for (auto [i, k] : model.incidence[j]) u += lambda[i] / model.mu(i, k);
        if (u >= 1.0)
            throw std::domain_error("queue '" + model.queue_ids[j] + "' is saturated");
        for (auto [i, k] : model.incidence[j])
            means[i][k] = (lambda[i] / model.mu(i, k)) / (1.0 - u);
    }
    return means;
}

}  // namespace cqn
