#include "cqn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cqn {

void NetworkModel::finalize() {
    incidence.assign(queue_ids.size(), {});
    for (int i = 0; i < num_routes(); ++i)
        for (int k = 0; k < route_length(i); ++k) incidence[routes[i][k]].emplace_back(i, k);
}

bool PopulationVector::is_integral() const {
    for (double c : counts)
        if (c != std::floor(c)) return false;
    return true;
}

std::vector<int> PopulationVector::as_ints() const {
    if (!is_integral()) throw std::invalid_argument("population is not integral");
    std::vector<int> out;
    out.reserve(counts.size());
    for (double c : counts) out.push_back(static_cast<int>(c));
    return out;
}

ValidationReport validate(const NetworkModel& model) {
    ValidationReport rep;
    const int J = model.num_queues();
    std::vector<bool> visited(J, false);
    for (int i = 0; i < model.num_routes(); ++i) {
        const auto& route = model.routes[i];
        if (route.empty()) {
            rep.violations.push_back("route '" + model.route_ids[i] + "' is empty");
            continue;
        }
        std::set<int> seen;
        for (int k = 0; k < model.route_length(i); ++k) {
            int j = route[k];
            if (j < 0 || j >= J) {
                rep.violations.push_back("route '" + model.route_ids[i] + "' references unknown queue");
                continue;
            }
            visited[j] = true;
            if (!seen.insert(j).second)
                rep.violations.push_back("duplicate queue '" + model.queue_ids[j] + "' on route '" +
                                         model.route_ids[i] + "'");
            double mu = model.rates[i][k];
            if (!(mu > 0.0))
                rep.violations.push_back("nonpositive rate for queue '" + model.queue_ids[j] +
                                         "' on route '" + model.route_ids[i] + "'");
        }
    }
    for (int j = 0; j < J; ++j)
        if (!visited[j])
            rep.violations.push_back("queue '" + model.queue_ids[j] + "' appears on no route");
    return rep;
}

std::pair<NetworkModel, PopulationVector> parse_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model file syntax error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("queues") || !doc.contains("routes") ||
        !doc.contains("rates"))
        throw ParseError("model file must contain 'queues', 'routes' and 'rates'");

    NetworkModel model;
    for (const auto& q : doc["queues"]) {
        std::string id = q.get<std::string>();
        if (model.queue_index(id) >= 0) throw ParseError("duplicate queue id '" + id + "'");
        model.queue_ids.push_back(id);
    }

    // Route order is the lexicographic key order of the `routes` map (nlohmann
    // objects iterate sorted), which makes indices stable across round trips.
    const auto& routes = doc["routes"];
    if (!routes.is_object()) throw ParseError("'routes' must be a map route-id -> queue list");
    for (auto it = routes.begin(); it != routes.end(); ++it) {
        model.route_ids.push_back(it.key());
        std::vector<int> hops;
        for (const auto& q : it.value()) {
            int j = model.queue_index(q.get<std::string>());
            if (j < 0)
                throw ParseError("route '" + it.key() + "' references unknown queue '" +
                                 q.get<std::string>() + "'");
            hops.push_back(j);
        }
        model.routes.push_back(std::move(hops));
    }

    model.rates.resize(model.num_routes());
    for (int i = 0; i < model.num_routes(); ++i)
        model.rates[i].assign(model.route_length(i), 0.0);
    for (auto it = doc["rates"].begin(); it != doc["rates"].end(); ++it) {
        const std::string key = it.key();
        auto colon = key.find(':');
        if (colon == std::string::npos)
            throw ParseError("rate key '" + key + "' is not of the form 'queue:route'");
        int j = model.queue_index(key.substr(0, colon));
        int i = model.route_index(key.substr(colon + 1));
        if (j < 0 || i < 0) throw ParseError("rate key '" + key + "' references unknown ids");
        int k = model.hop_of(i, j);
        if (k < 0) throw ParseError("rate key '" + key + "': queue is not on the route");
        model.rates[i][k] = it.value().get<double>();
    }
    for (int i = 0; i < model.num_routes(); ++i)
        for (int k = 0; k < model.route_length(i); ++k)
            if (model.rates[i][k] == 0.0)
                throw ParseError("missing rate for queue '" + model.queue_ids[model.routes[i][k]] +
                                 "' on route '" + model.route_ids[i] + "'");

    PopulationVector pop;
    pop.counts.assign(model.num_routes(), 0.0);
    if (doc.contains("population")) {
        for (auto it = doc["population"].begin(); it != doc["population"].end(); ++it) {
            int i = model.route_index(it.key());
            if (i < 0) throw ParseError("population references unknown route '" + it.key() + "'");
            pop.counts[i] = it.value().get<double>();
        }
    }

    model.finalize();
    auto rep = validate(model);
    if (!rep.ok()) {
        std::string msg = "invalid model:";
        for (const auto& v : rep.violations) msg += "\n  " + v;
        throw ParseError(msg);
    }
    return {std::move(model), std::move(pop)};
}

std::string serialize_model(const NetworkModel& model, const PopulationVector& population) {
    nlohmann::json doc;
    doc["queues"] = model.queue_ids;
    nlohmann::json routes = nlohmann::json::object();
    nlohmann::json rates = nlohmann::json::object();
    for (int i = 0; i < model.num_routes(); ++i) {
        std::vector<std::string> hops;
        for (int k = 0; k < model.route_length(i); ++k)
            hops.push_back(model.queue_ids[model.routes[i][k]]);
        routes[model.route_ids[i]] = hops;
        for (int k = 0; k < model.route_length(i); ++k)
            rates[model.queue_ids[model.routes[i][k]] + ":" + model.route_ids[i]] = model.rates[i][k];
    }
    doc["routes"] = routes;
    doc["rates"] = rates;
    nlohmann::json pop = nlohmann::json::object();
    for (int i = 0; i < model.num_routes(); ++i) pop[model.route_ids[i]] = population.counts[i];
    doc["population"] = pop;
    return doc.dump(2) + "\n";
}

std::pair<NetworkModel, PopulationVector> load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

NetworkModel reduced_model(const NetworkModel& model, const std::vector<int>& keep) {
    std::vector<bool> kept(model.num_queues(), false);
    for (int j : keep) {
        if (j < 0 || j >= model.num_queues()) throw std::invalid_argument("unknown queue in keep set");
        kept[j] = true;
    }
    NetworkModel out;
    std::vector<int> remap(model.num_queues(), -1);
    for (int j = 0; j < model.num_queues(); ++j) {
        if (kept[j]) {
            remap[j] = static_cast<int>(out.queue_ids.size());
            out.queue_ids.push_back(model.queue_ids[j]);
        }
    }
    out.route_ids = model.route_ids;
    for (int i = 0; i < model.num_routes(); ++i) {
        std::vector<int> hops;
        std::vector<double> mus;
        for (int k = 0; k < model.route_length(i); ++k) {
            if (kept[model.routes[i][k]]) {
                hops.push_back(remap[model.routes[i][k]]);
                mus.push_back(model.rates[i][k]);
            }
        }
        if (hops.empty())
            throw std::invalid_argument("route '" + model.route_ids[i] +
                                        "' has empty intersection with the kept queues");
        out.routes.push_back(std::move(hops));
        out.rates.push_back(std::move(mus));
    }
    out.finalize();
    return out;
}

NetworkModel replicate_queue(const NetworkModel& model, int j) {
    if (j < 0 || j >= model.num_queues()) throw std::invalid_argument("unknown queue to replicate");
    NetworkModel out = model;
    std::string replica_id = model.queue_ids[j] + "'";
    while (out.queue_index(replica_id) >= 0) replica_id += "'";
    int jr = out.num_queues();
    out.queue_ids.push_back(replica_id);
    for (int i = 0; i < out.num_routes(); ++i) {
        int k = out.hop_of(i, j);
        if (k < 0) continue;
        out.routes[i].insert(out.routes[i].begin() + k + 1, jr);
        out.rates[i].insert(out.rates[i].begin() + k + 1, out.rates[i][k]);
    }
    out.finalize();
    return out;
}

}  // namespace cqn
