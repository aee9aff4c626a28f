// metaspin: experiment driver for the spin-flip metastability toolkit.
//
//   metaspin <landscape|cwexact|simulate|crossover|capacity|couple>
//            --config <file.json> [--out <dir>] [--threads N]
//
// Every run writes a manifest (config echo, content hash, timings) next to
// its outputs. Identical configs produce byte-identical data files; only the
// manifest timing fields vary. Exit codes: 0 ok, 2 config error, 3 regime
// error, 4 budget exhausted.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaspin/capacity.hpp"
#include "metaspin/config.hpp"
#include "metaspin/coupling.hpp"
#include "metaspin/cw_chain.hpp"
#include "metaspin/dynamics.hpp"
#include "metaspin/fit.hpp"
#include "metaspin/landscape.hpp"

using nlohmann::json;
using namespace metaspin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRegime = 3;
constexpr int kExitBudget = 4;

struct RunContext {
    ExperimentConfig cfg;
    std::filesystem::path out;
    int threads = 1;
    bool budget_exhausted = false;
};

std::ofstream open_out(const RunContext& ctx, const std::string& name) {
    std::ofstream f(ctx.out / name);
    if (!f) throw std::runtime_error("cannot open output file: " + name);
    return f;
}

json replica_record(const ExperimentConfig& cfg, int n, const ReplicaResult& r) {
    json j;
    j["seed"] = r.seed;
    j["n"] = n;
    j["p"] = cfg.p;
    j["beta"] = cfg.beta;
    j["h"] = cfg.h;
    j["outcome"] = r.record.outcome == HitOutcome::hit_target        ? "hit_target"
                   : r.record.outcome == HitOutcome::hit_alternative ? "hit_alternative"
                                                                     : "step_cap";
    j["time"] = r.record.elapsed_time;
    j["jumps"] = r.record.jump_count;
    j["returns"] = r.record.returns_to_start_level;
    return j;
}

void run_landscape(RunContext& ctx) {
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        LandscapeTables t = build_landscape_tables(pr, n);
        json head;
        head["n"] = n;
        head["regime"] = regime_name(t.regime);
        head["barrier"] = t.barrier;
        if (t.regime == Regime::metastable) {
            head["roots"] = {{"m", t.roots.m},   {"t", t.roots.t},   {"s", t.roots.s},
                             {"m_n", t.roots.m_n}, {"t_n", t.roots.t_n}, {"s_n", t.roots.s_n},
                             {"M", t.roots.M},   {"T", t.roots.T},   {"S", t.roots.S}};
        }
        auto f = open_out(ctx, "landscape_n" + std::to_string(n) + ".csv");
        f << "# " << head.dump() << "\n";
        f << "a,I,J,R\n";
        f.precision(17);
        for (int k = 0; k <= n; ++k)
            f << t.grid[k] << ',' << t.I_n[k] << ',' << t.J_n[k] << ',' << t.R_n[k] << '\n';
    }
}

void run_cwexact(RunContext& ctx) {
    json arr = json::array();
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        pr.kind = ModelKind::mean_field;
        Roots r = find_roots(pr, n);
        BirthDeathChain c = build_cw_chain(pr);
        double exact = mean_hitting_time_ct(c, r.M, r.S);
        double kram = kramers_time(pr);
        json j;
        j["params"] = {{"p", pr.p}, {"beta", pr.beta}, {"h", pr.h}, {"n", n}};
        j["m"] = r.m;
        j["t"] = r.t;
        j["s"] = r.s;
        j["barrier"] = free_energy_R(r.t, pr) - free_energy_R(r.m, pr);
        j["kramers"] = kram;
        j["exact_mean"] = exact;
        j["ratio"] = kram / exact;
        arr.push_back(j);
    }
    auto f = open_out(ctx, "cwexact.json");
    f << arr.dump(2) << "\n";
}

void run_simulate(RunContext& ctx) {
    auto records = open_out(ctx, "records.jsonl");
    auto summary = open_out(ctx, "summary.csv");
    summary << "n,start,completed,replicas,mean,stderr\n";
    summary.precision(17);
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        ErGraph g = generate_er(n, pr.p, derive_stream(ctx.cfg.seed, 0xE2ULL * n));
        int start = ctx.cfg.start_volume;
        std::vector<int> targets = ctx.cfg.targets;
        if (start < 0 || targets.empty()) {
            Roots r = find_roots(pr, n);
            if (start < 0) start = r.M;
            if (targets.empty()) targets = {r.S};
        }
        std::vector<ReplicaResult> rows(ctx.cfg.replicas);
        std::vector<std::string> start_hex(ctx.cfg.replicas);
        detail::parallel_for(ctx.cfg.replicas, ctx.threads, [&](int i) {
            Rng rng(derive_stream(ctx.cfg.seed, static_cast<std::uint64_t>(i)));
            SpinConfig s0 = SpinConfig::uniform_with_volume(n, start, rng);
            start_hex[i] = s0.to_hex();
            SimState st(g, pr, std::move(s0), rng);
            rows[i].seed = derive_stream(ctx.cfg.seed, static_cast<std::uint64_t>(i));
            rows[i].record = hit_volume_set(st, targets, ctx.cfg.step_cap, ctx.cfg.alternatives);
        });
        RunningStat stat;
        for (int i = 0; i < ctx.cfg.replicas; ++i) {
            const auto& r = rows[i];
            json rec = replica_record(ctx.cfg, n, r);
            rec["start"] = start_hex[i];
            records << rec.dump() << "\n";
            if (r.record.outcome == HitOutcome::hit_target) stat.add(r.record.elapsed_time);
            if (r.record.outcome == HitOutcome::step_cap) ctx.budget_exhausted = true;
        }
        summary << n << ',' << start << ',' << stat.n << ',' << ctx.cfg.replicas << ','
                << stat.mean() << ',' << stat.stderr_mean() << '\n';
    }
}

void run_crossover(RunContext& ctx) {
    auto records = open_out(ctx, "records.jsonl");
    auto summary = open_out(ctx, "summary.csv");
    // cv is the coefficient of variation of the replica times: near 1 when
    // the crossover time is close to exponential (diagnostic only)
    summary << "n,graphs,completed,replicas,mean,stderr,cv\n";
    summary.precision(17);
    std::vector<SweepPoint> pts;
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        bool strong = classify_regime(pr) == Regime::non_metastable_strong_field;
        if (classify_regime(pr) == Regime::non_metastable_subcritical)
            throw regime_error("crossover: subcritical parameters");
        RunningStat stat;
        int total_replicas = 0;
        for (int gi = 0; gi < ctx.cfg.graphs; ++gi) {
            std::uint64_t gseed = derive_stream(ctx.cfg.seed, 0xC0FFEEULL + 31ULL * n + gi);
            ErGraph g = generate_er(n, pr.p, gseed);
            std::uint64_t rseed = derive_stream(ctx.cfg.seed, 0xABCDULL + 17ULL * n + gi);
            CrossoverEstimate est =
                strong ? estimate_strong_field_passage(g, pr, ctx.cfg.replicas, rseed,
                                                       ctx.cfg.step_cap, ctx.threads)
                       : estimate_crossover(g, pr, ctx.cfg.replicas, rseed, ctx.cfg.step_cap,
                                            ctx.threads);
            total_replicas += static_cast<int>(est.replicas.size());
            for (const auto& r : est.replicas) {
                records << replica_record(ctx.cfg, n, r).dump() << "\n";
                if (r.record.outcome == HitOutcome::hit_target) stat.add(r.record.elapsed_time);
                if (r.record.outcome == HitOutcome::step_cap) ctx.budget_exhausted = true;
            }
        }
        double cv = stat.mean() > 0 ? std::sqrt(stat.variance()) / stat.mean() : 0.0;
        summary << n << ',' << ctx.cfg.graphs << ',' << stat.n << ',' << total_replicas << ','
                << stat.mean() << ',' << stat.stderr_mean() << ',' << cv << '\n';
        if (static_cast<int>(stat.n) < total_replicas)
            std::cerr << json{{"warning", "capped replicas excluded from mean; result is biased low"},
                              {"n", n},
                              {"completed", stat.n},
                              {"replicas", total_replicas}}
                             .dump()
                      << "\n";
        pts.push_back({n, stat.mean(), static_cast<int>(stat.n)});
    }
    if (pts.size() >= 3 && classify_regime(ctx.cfg.params_for(ctx.cfg.n_values.front())) ==
                               Regime::metastable) {
        ExponentFit fit = fit_exponent(pts, ctx.cfg.params_for(ctx.cfg.n_values.front()));
        json j;
        j["slope"] = fit.line.slope;
        j["intercept"] = fit.line.intercept;
        j["r2"] = fit.line.r2;
        j["beta_gamma"] = fit.beta_gamma;
        j["e_n_band"] = fit.band;
        j["e_n"] = fit.e_n;
        auto f = open_out(ctx, "exponent_fit.json");
        f << j.dump(2) << "\n";
    }
}

void run_capacity(RunContext& ctx) {
    auto out = open_out(ctx, "capacity.jsonl");
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        Roots roots = find_roots(pr, n);
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < ctx.cfg.graphs; ++i)
            seeds.push_back(derive_stream(ctx.cfg.seed, 0x11ULL * n + i));
        SandwichReport rep = sandwich_check(n, pr, seeds, ctx.cfg.eps);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            ErGraph g = generate_er(n, pr.p, seeds[i]);
            FullChain chain(g, pr);
            CapacityResult cap = capacity_between_levels(chain, roots.M, roots.S);
            CapacityEnvelope env = capacity_envelope(chain, g, roots.M, roots.S);
            json j;
            j["n"] = n;
            j["p"] = pr.p;
            j["seed"] = seeds[i];
            j["cap"] = cap.dirichlet;
            j["cap_flux"] = cap.flux;
            j["indicator_bound"] = cap.indicator_bound;
            j["lower_env"] = env.lower;
            j["upper_env"] = env.upper;
            j["P"] = rep.seeds[i].P;
            j["Pl"] = rep.seeds[i].P_lower;
            j["Pu"] = rep.seeds[i].P_upper;
            out << j.dump() << "\n";
        }
    }
}

void run_couple(RunContext& ctx) {
    auto out = open_out(ctx, "couple.jsonl");
    for (int n : ctx.cfg.n_values) {
        ModelParams pr = ctx.cfg.params_for(n);
        Roots r = find_roots(pr, n);
        ErGraph g = generate_er(n, pr.p, derive_stream(ctx.cfg.seed, 0x60ULL + n));
        for (int i = 0; i < ctx.cfg.replicas; ++i) {
            std::uint64_t s = derive_stream(ctx.cfg.seed, 0x77ULL + i);
            Rng rng(s);
            SpinConfig a = SpinConfig::uniform_with_volume(n, r.M, rng);
            SpinConfig b = SpinConfig::uniform_with_volume(n, r.M, rng);
            json j;
            j["seed"] = s;
            j["n"] = n;
            if (ctx.cfg.budget <= 1) {
                ShortCouplingResult res =
                    run_short_coupling(g, pr, a, b, rng, ctx.cfg.horizon);
                j["merged"] = res.merged;
                j["merge_time"] = res.merge_time;
                j["max_W1"] = res.max_w1;
                j["attempts"] = 1;
                if (!res.merged) ctx.budget_exhausted = true;
            } else {
                LongCouplingResult res =
                    run_long_coupling(g, pr, a, b, rng, ctx.cfg.budget, ctx.cfg.step_cap);
                j["merged"] = res.merged;
                j["merge_time"] = res.merged ? res.time_first : -1.0;
                j["max_W1"] = res.max_w1;
                j["attempts"] = res.attempts;
                if (!res.merged) ctx.budget_exhausted = true;
            }
            out << j.dump() << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-flip metastability experiments"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    int threads_flag = 0;
    for (const char* name :
         {"landscape", "cwexact", "simulate", "crossover", "capacity", "couple"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads_flag, "worker threads");
    }
    CLI11_PARSE(app, argc, argv);
    std::string sub = app.get_subcommands().front()->get_name();

    auto t0 = std::chrono::steady_clock::now();
    RunContext ctx;
    try {
        std::ifstream f(config_path);
        if (!f) throw config_error("cannot read config file: " + config_path);
        json j = json::parse(f, nullptr, true);
        ctx.cfg = ExperimentConfig::from_json(j);
        if (ctx.cfg.subcommand != sub)
            throw config_error("config subcommand '" + ctx.cfg.subcommand +
                               "' does not match CLI subcommand '" + sub + "'");
        ctx.out = out_dir;
        std::filesystem::create_directories(ctx.out);
        ctx.threads = threads_flag > 0 ? threads_flag : ctx.cfg.threads;
        if (ctx.threads <= 0) {
            if (const char* env = std::getenv("METASPIN_THREADS")) ctx.threads = std::atoi(env);
            if (ctx.threads <= 0) ctx.threads = 1;
        }
    } catch (const json::exception& e) {
        std::cerr << json{{"error", "config"}, {"detail", e.what()}}.dump() << "\n";
        return kExitConfig;
    } catch (const config_error& e) {
        std::cerr << json{{"error", "config"}, {"detail", e.what()}}.dump() << "\n";
        return kExitConfig;
    }

    try {
        if (sub == "landscape")
            run_landscape(ctx);
        else if (sub == "cwexact")
            run_cwexact(ctx);
        else if (sub == "simulate")
            run_simulate(ctx);
        else if (sub == "crossover")
            run_crossover(ctx);
        else if (sub == "capacity")
            run_capacity(ctx);
        else
            run_couple(ctx);
    } catch (const regime_error& e) {
        std::cerr << json{{"error", "regime"}, {"detail", e.what()}}.dump() << "\n";
        return kExitRegime;
    } catch (const config_error& e) {
        std::cerr << json{{"error", "config"}, {"detail", e.what()}}.dump() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", "config"}, {"detail", e.what()}}.dump() << "\n";
        return kExitConfig;
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["config"] = ctx.cfg.to_json();
    manifest["config_hash"] = ctx.cfg.content_hash();
    manifest["timings"] = {{"wall_seconds", wall}};
    std::ofstream mf(ctx.out / "manifest.json");
    mf << manifest.dump(2) << "\n";

    return ctx.budget_exhausted ? kExitBudget : kExitOk;
}
