#pragma once

#include <string>
#include <vector>

#include "cqn/model.hpp"

namespace cqn::testing {

inline std::string models_dir() { return CQN_MODELS_DIR; }

inline NetworkModel make_single(double mu = 1.0) {
    NetworkModel m;
    m.queue_ids = {"q1"};
    m.route_ids = {"r1"};
    m.routes = {{0}};
    m.rates = {{mu}};
    m.finalize();
    return m;
}

// Two-queue cycle, mu = (1, 2); bottleneck is q1, Lambda* = 1.
inline NetworkModel make_c1() {
    NetworkModel m;
    m.queue_ids = {"q1", "q2"};
    m.route_ids = {"r1"};
    m.routes = {{0, 1}};
    m.rates = {{1.0, 2.0}};
    m.finalize();
    return m;
}

// Two routes sharing queue q3: a=(q1,q3), b=(q2,q3); mu_1a=mu_2b=2, mu_3*=1.
inline NetworkModel make_t1() {
    NetworkModel m;
    m.queue_ids = {"q1", "q2", "q3"};
    m.route_ids = {"ra", "rb"};
    m.routes = {{0, 2}, {1, 2}};
    m.rates = {{2.0, 1.0}, {2.0, 1.0}};
    m.finalize();
    return m;
}

// Six queues, three routes, two bottlenecks (q3 and q6) at n = (1,1,1):
// Lambda* = (2/3, 1/3, 2/3).
inline NetworkModel make_w1() {
    NetworkModel m;
    m.queue_ids = {"q1", "q2", "q3", "q4", "q5", "q6"};
    m.route_ids = {"ra", "rb", "rc"};
    m.routes = {{0, 2, 4}, {1, 2, 5}, {1, 3, 5}};
    m.rates = {{10.0, 1.0, 10.0}, {10.0, 1.0, 1.0}, {10.0, 10.0, 1.0}};
    m.finalize();
    return m;
}

}  // namespace cqn::testing
