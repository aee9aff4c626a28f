// Experiment configuration: JSON in, JSON out, hashed for run manifests.
// Physical parameters (p, beta, h, n) are always explicit; a missing field
// is a config error, never a silent default.
#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "metaspin/spin.hpp"
#include "metaspin/stats.hpp"

namespace metaspin {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string subcommand;
    double p = 0, beta = 0, h = 0;
    std::vector<int> n_values;
    std::uint64_t seed = 0;
    int replicas = 100;
    int graphs = 1;           // graph realizations per n (ER sweeps)
    std::uint64_t step_cap = 1000000000ULL;
    double horizon = -1.0;    // short-coupling horizon; -1 means 2n
    int budget = 10;          // long-coupling attempt budget
    double eps = 0.01;        // perturbed-field slack
    int start_volume = -1;    // simulate: -1 means A_M
    std::vector<int> targets; // simulate: empty means {A_S}
    std::vector<int> alternatives;  // simulate: competing levels, may be empty
    int threads = 0;          // 0: use --threads / METASPIN_THREADS / 1

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        auto need = [&](const char* key) {
            if (!j.contains(key)) throw config_error(std::string("config: missing required field '") + key + "'");
            return j.at(key);
        };
        c.subcommand = need("subcommand").get<std::string>();
        c.p = need("p").get<double>();
        c.beta = need("beta").get<double>();
        c.h = need("h").get<double>();
        const auto& jn = need("n");
        if (jn.is_array())
            c.n_values = jn.get<std::vector<int>>();
        else
            c.n_values = {jn.get<int>()};
        if (c.n_values.empty()) throw config_error("config: n list is empty");
        c.seed = need("seed").get<std::uint64_t>();
        if (j.contains("replicas")) c.replicas = j.at("replicas").get<int>();
        if (j.contains("graphs")) c.graphs = j.at("graphs").get<int>();
        if (j.contains("step_cap")) c.step_cap = j.at("step_cap").get<std::uint64_t>();
        if (j.contains("horizon")) c.horizon = j.at("horizon").get<double>();
        if (j.contains("budget")) c.budget = j.at("budget").get<int>();
        if (j.contains("eps")) c.eps = j.at("eps").get<double>();
        if (j.contains("start_volume")) c.start_volume = j.at("start_volume").get<int>();
        if (j.contains("targets")) c.targets = j.at("targets").get<std::vector<int>>();
        if (j.contains("alternatives"))
            c.alternatives = j.at("alternatives").get<std::vector<int>>();
        if (j.contains("threads")) c.threads = j.at("threads").get<int>();
        if (c.replicas < 1) throw config_error("config: replicas must be >= 1");
        if (c.graphs < 1) throw config_error("config: graphs must be >= 1");
        return c;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["p"] = p;
        j["beta"] = beta;
        j["h"] = h;
        if (n_values.size() == 1)
            j["n"] = n_values[0];
        else
            j["n"] = n_values;
        j["seed"] = seed;
        j["replicas"] = replicas;
        j["graphs"] = graphs;
        j["step_cap"] = step_cap;
        j["horizon"] = horizon;
        j["budget"] = budget;
        j["eps"] = eps;
        j["start_volume"] = start_volume;
        j["targets"] = targets;
        j["alternatives"] = alternatives;
        j["threads"] = threads;
        return j;
    }

    ModelParams params_for(int n) const {
        ModelParams pr;
        pr.p = p;
        pr.beta = beta;
        pr.h = h;
        pr.n = n;
        return pr;
    }

    std::string content_hash() const {
        std::string dump = to_json().dump();
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a(dump.data(), dump.size())));
        return std::string(buf);
    }

    bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace metaspin
