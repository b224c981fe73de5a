#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "common.hpp"
#include "cqn/model.hpp"

using namespace cqn;
using cqn::testing::make_c1;
using cqn::testing::make_t1;

TEST_CASE("validate accepts a minimal network") {
    auto m = cqn::testing::make_single();
    CHECK(validate(m).ok());
}

TEST_CASE("validate flags duplicate queue on a route") {
    NetworkModel m;
    m.queue_ids = {"q1"};
    m.route_ids = {"r1"};
    m.routes = {{0, 0}};
    m.rates = {{1.0, 1.0}};
    m.finalize();
    auto rep = validate(m);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].find("duplicate") != std::string::npos);
}

TEST_CASE("validate flags nonpositive rates and isolated queues") {
    NetworkModel m;
    m.queue_ids = {"q1", "q2"};
    m.route_ids = {"r1"};
    m.routes = {{0}};
    m.rates = {{0.0}};
    m.finalize();
    auto rep = validate(m);
    bool saw_rate = false, saw_isolated = false;
    for (const auto& v : rep.violations) {
        if (v.find("nonpositive rate") != std::string::npos) saw_rate = true;
        if (v.find("no route") != std::string::npos) saw_isolated = true;
    }
    CHECK(saw_rate);
    CHECK(saw_isolated);
}

TEST_CASE("validate rejects empty routes") {
    NetworkModel m;
    m.queue_ids = {"q1"};
    m.route_ids = {"r1", "r2"};
    m.routes = {{0}, {}};
    m.rates = {{1.0}, {}};
    m.finalize();
    CHECK_FALSE(validate(m).ok());
}

TEST_CASE("parse round-trips the bundled files through canonical form") {
    for (const char* name : {"c1.json", "t1.json", "w1.json"}) {
        std::ifstream in(cqn::testing::models_dir() + "/" + name);
        REQUIRE(in.good());
        std::stringstream buf;
        buf << in.rdbuf();
        auto [model, pop] = parse_model(buf.str());
        auto canon = serialize_model(model, pop);
        auto [model2, pop2] = parse_model(canon);
        CHECK(serialize_model(model2, pop2) == canon);
        CHECK(model2.queue_ids == model.queue_ids);
        CHECK(model2.routes == model.routes);
        CHECK(model2.rates == model.rates);
    }
}

TEST_CASE("parse rejects unknown queue ids and bad rate keys") {
    CHECK_THROWS_AS(parse_model(R"({"queues":["a"],"routes":{"r":["b"]},"rates":{}})"), ParseError);
    CHECK_THROWS_AS(parse_model(R"({"queues":["a"],"routes":{"r":["a"]},"rates":{"a;r":1}})"),
                    ParseError);
    CHECK_THROWS_AS(parse_model("{nonsense"), ParseError);
}

TEST_CASE("parse loads c1 with expected shape") {
    auto [model, pop] = load_model_file(cqn::testing::models_dir() + "/c1.json");
    CHECK(model.num_queues() == 2);
    CHECK(model.num_routes() == 1);
    CHECK(model.mu(0, 0) == 1.0);
    CHECK(model.mu(0, 1) == 2.0);
    CHECK(pop.counts == std::vector<double>{3.0});
}

TEST_CASE("reduced_model keeps relative order and drops rates") {
    auto c1 = make_c1();
    auto red = reduced_model(c1, {0});
    CHECK(red.num_queues() == 1);
    CHECK(red.routes[0] == std::vector<int>{0});
    CHECK(red.rates[0] == std::vector<double>{1.0});

    auto same = reduced_model(c1, {0, 1});
    CHECK(same.routes == c1.routes);
    CHECK(same.rates == c1.rates);

    auto t1 = make_t1();
    auto only3 = reduced_model(t1, {2});
    CHECK(only3.num_queues() == 1);
    CHECK(only3.routes[0] == std::vector<int>{0});
    CHECK(only3.routes[1] == std::vector<int>{0});

    CHECK_THROWS_AS(reduced_model(t1, {0}), std::invalid_argument);  // rb loses every queue
}

TEST_CASE("replicate_queue inserts the replica after the original") {
    auto single = cqn::testing::make_single(3.0);
    auto rep = replicate_queue(single, 0);
    CHECK(rep.num_queues() == 2);
    CHECK(rep.routes[0] == std::vector<int>{0, 1});
    CHECK(rep.rates[0] == std::vector<double>{3.0, 3.0});

    auto c1 = make_c1();
    auto rep2 = replicate_queue(c1, 1);
    CHECK(rep2.routes[0] == std::vector<int>{0, 1, 2});
    CHECK(rep2.rates[0] == std::vector<double>{1.0, 2.0, 2.0});
    CHECK(validate(rep2).ok());

    auto twice = replicate_queue(rep2, 1);
    CHECK(twice.num_queues() == 4);
    CHECK(validate(twice).ok());
    CHECK(twice.queue_ids[2] != twice.queue_ids[3]);

    CHECK_THROWS_AS(replicate_queue(c1, 7), std::invalid_argument);
}

TEST_CASE("route neighbor maps are cyclically consistent") {
    auto w1 = cqn::testing::make_w1();
    for (int i = 0; i < w1.num_routes(); ++i)
        for (int k = 0; k < w1.route_length(i); ++k) {
            CHECK(w1.next_hop(i, w1.prev_hop(i, k)) == k);
            CHECK(w1.prev_hop(i, w1.next_hop(i, k)) == k);
        }
}
