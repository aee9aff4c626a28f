// Continuous-time Metropolis spin-flip dynamics on a graph.
//
// Per-vertex flip rates r(sigma, sigma^v) = exp(-beta [dH(v)]_+) live in a
// rate tree; a step draws the waiting time Exp(total rate) first and the
// flipped vertex second (this draw order is part of the reproducibility
// contract). A flip touches v and adj(v) only: the per-vertex support counts
// |E(v, sigma)| are maintained incrementally and each touched rate is a
// popcount away.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "metaspin/graph.hpp"
#include "metaspin/landscape.hpp"
#include "metaspin/rate_tree.hpp"
#include "metaspin/spin.hpp"

namespace metaspin {

class SimState {
  public:
    SimState(const ErGraph& g, const ModelParams& params, SpinConfig sigma0, Rng rng)
        : g_(&g), params_(params), sigma_(std::move(sigma0)), rng_(rng) {
        params_.validate();
        if (sigma_.n() != g.n) throw std::invalid_argument("SimState: config/graph size mismatch");
        support_.resize(g.n);
        rates_.reset(g.n);
        std::vector<double> r(g.n);
        for (int v = 0; v < g.n; ++v) {
            support_[v] = edges_to_support(*g_, v, sigma_);
            r[v] = rate_from_count(v, support_[v]);
        }
        rates_.rebuild(r);
    }

    const SpinConfig& sigma() const { return sigma_; }
    const ModelParams& params() const { return params_; }
    double time() const { return time_; }
    std::uint64_t jumps() const { return jumps_; }
    double total_rate() const { return rates_.total(); }
    double rate(int v) const { return rates_.rate(v); }
    int volume() const { return sigma_.volume(); }
    Rng& rng() { return rng_; }

    // One event: waiting time, vertex choice, flip, incremental rate updates.
    int step() {
        double wait = rng_.exponential(rates_.total());
        int v = rates_.sample(rng_.uniform01());
        time_ += wait;
        ++jumps_;
        apply_flip(v);
        return v;
    }

    double aggregate_up_rate() const {
        double s = 0.0;
        for (int v = 0; v < g_->n; ++v)
            if (!sigma_.plus(v)) s += rates_.rate(v);
        return s;
    }

    double aggregate_down_rate() const {
        double s = 0.0;
        for (int v = 0; v < g_->n; ++v)
            if (sigma_.plus(v)) s += rates_.rate(v);
        return s;
    }

    // #{v in sigma: flip rate < 1}
    int slow_down_flips() const {
        int c = 0;
        for (int v = 0; v < g_->n; ++v)
            if (sigma_.plus(v) && rates_.rate(v) < 1.0) ++c;
        return c;
    }

    // Exact recount of support counts and rates; true iff the incremental
    // state matches.
    bool consistent() const {
        for (int v = 0; v < g_->n; ++v) {
            int e = edges_to_support(*g_, v, sigma_);
            if (e != support_[v]) return false;
            if (rates_.rate(v) != rate_from_count(v, e)) return false;
        }
        return sigma_.volume() == sigma_.recount();
    }

  private:
    double rate_from_count(int v, int e) const {
        double dh;
        if (sigma_.plus(v))
            dh = (2.0 / g_->n) * (2 * e - g_->degree(v)) + 2.0 * params_.h;
        else
            dh = (2.0 / g_->n) * (g_->degree(v) - 2 * e) - 2.0 * params_.h;
        return metropolis_rate(params_.beta, dh);
    }

    void apply_flip(int v) {
        bool was_plus = sigma_.plus(v);
        sigma_.flip(v);
        int dv = was_plus ? -1 : 1;
        const std::uint64_t* r = g_->row(v);
        for (int i = 0; i < g_->words(); ++i) {
            std::uint64_t bits = r[i];
            while (bits) {
                int w = i * 64 + std::countr_zero(bits);
                bits &= bits - 1;
                support_[w] += dv;
                rates_.set(w, rate_from_count(w, support_[w]));
            }
        }
        rates_.set(v, rate_from_count(v, support_[v]));
    }

    const ErGraph* g_;
    ModelParams params_;
    SpinConfig sigma_;
    std::vector<int> support_;
    RateTree rates_;
    double time_ = 0.0;
    std::uint64_t jumps_ = 0;
    Rng rng_;
};

enum class HitOutcome { hit_target, hit_alternative, step_cap };

struct HittingRecord {
    std::uint64_t start_hash = 0;
    int start_volume = 0;
    int hit_level = -1;
    double elapsed_time = 0.0;
    std::uint64_t jump_count = 0;
    std::uint64_t returns_to_start_level = 0;  // re-entries after time 0
    HitOutcome outcome = HitOutcome::step_cap;
};

// Run until the volume process enters a level in `targets` (or in
// `alternatives`), with the return-time convention: the start level only
// triggers after it has been left. A cap outcome is a value, not an error.
inline HittingRecord hit_volume_set(SimState& state, const std::vector<int>& targets,
                                    std::uint64_t step_cap,
                                    const std::vector<int>& alternatives = {}) {
    if (step_cap < 1) throw std::invalid_argument("hit_volume_set: step_cap must be >= 1");
    HittingRecord rec;
    rec.start_hash = state.sigma().hash();
    rec.start_volume = state.volume();
    auto in = [](const std::vector<int>& set, int k) {
        return std::find(set.begin(), set.end(), k) != set.end();
    };
    for (std::uint64_t s = 0; s < step_cap; ++s) {
        state.step();
        int k = state.volume();
        if (k == rec.start_volume) ++rec.returns_to_start_level;
        if (in(targets, k)) {
            rec.outcome = HitOutcome::hit_target;
            rec.hit_level = k;
            break;
        }
        if (in(alternatives, k)) {
            rec.outcome = HitOutcome::hit_alternative;
            rec.hit_level = k;
            break;
        }
    }
    rec.elapsed_time = state.time();
    rec.jump_count = state.jumps();
    return rec;
}

struct ReplicaResult {
    std::uint64_t seed = 0;
    HittingRecord record;
};

struct CrossoverEstimate {
    std::vector<ReplicaResult> replicas;
    double mean = 0.0;
    double stderr_ = 0.0;
    int completed = 0;
    std::uint64_t step_cap = 0;
    Roots roots;
};

namespace detail {
template <typename Fn>
inline void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    int nw = std::min(threads, count);
    pool.reserve(nw);
    for (int t = 0; t < nw; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

// unique positive zero of J in the strong-field regime, as a volume
inline int strong_field_target(const ModelParams& params) {
    double lo = 0.0, hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (drift_J(mid, params) > 0 ? lo : hi) = mid;
    }
    return static_cast<int>(std::lround(0.5 * (lo + 1.0) * params.n));
}

inline void summarize(CrossoverEstimate& est) {
    double sum = 0.0, sq = 0.0;
    int c = 0;
    for (const auto& r : est.replicas)
        if (r.record.outcome == HitOutcome::hit_target) {
            sum += r.record.elapsed_time;
            sq += r.record.elapsed_time * r.record.elapsed_time;
            ++c;
        }
    est.completed = c;
    if (c > 0) est.mean = sum / c;
    if (c > 1) est.stderr_ = std::sqrt((sq - c * est.mean * est.mean) / (c - 1) / c);
}
}  // namespace detail

// Mean crossover time A_M -> A_S over independent replicas, each seeded by
// derive_stream(seed, replica) and started uniformly on A_M. Replicas that
// exhaust the cap are excluded from the mean (count them before trusting it).
inline CrossoverEstimate estimate_crossover(const ErGraph& g, const ModelParams& params,
                                            int replicas, std::uint64_t seed,
                                            std::uint64_t step_cap, int threads = 1) {
    if (classify_regime(params) != Regime::metastable)
        throw regime_error("estimate_crossover: parameters are not metastable");
    CrossoverEstimate est;
    est.step_cap = step_cap;
    est.roots = find_roots(params, params.n);
    est.replicas.resize(replicas);
    detail::parallel_for(replicas, threads, [&](int i) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
        SpinConfig s0 = SpinConfig::uniform_with_volume(g.n, est.roots.M, rng);
        SimState st(g, params, std::move(s0), rng);
        est.replicas[i].seed = derive_stream(seed, static_cast<std::uint64_t>(i));
        est.replicas[i].record = hit_volume_set(st, {est.roots.S}, step_cap);
    });
    detail::summarize(est);
    return est;
}

// Strong-field variant (h >= p chi(beta p)): J has a unique positive root a';
// the passage is measured from the all-minus level to S = (n/2)(a'+1).
inline CrossoverEstimate estimate_strong_field_passage(const ErGraph& g, const ModelParams& params,
                                                       int replicas, std::uint64_t seed,
                                                       std::uint64_t step_cap, int threads = 1) {
    if (classify_regime(params) != Regime::non_metastable_strong_field)
        throw regime_error("estimate_strong_field_passage: not in the strong-field regime");
    int S = detail::strong_field_target(params);
    CrossoverEstimate est;
    est.step_cap = step_cap;
    est.roots.S = S;
    est.replicas.resize(replicas);
    detail::parallel_for(replicas, threads, [&](int i) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
        SimState st(g, params, SpinConfig::all_minus(g.n), rng);
        est.replicas[i].seed = derive_stream(seed, static_cast<std::uint64_t>(i));
        est.replicas[i].record = hit_volume_set(st, {S}, step_cap);
    });
    detail::summarize(est);
    return est;
}

struct ReturnStats {
    int trials = 0;
    int conditioned = 0;       // excursions that returned without touching A_T
    double mean_return = 0.0;  // continuous time, conditioned
    std::vector<int> tail_counts;  // tail_counts[j] = #returns with time >= j
    double tail_slope = 0.0;       // least-squares slope of log tail
    double tail_slope_se = 0.0;    // standard error of the slope
};

// Excursion statistics from xi0 in A_M: return to A_M conditioned on not
// hitting A_T first.
inline ReturnStats conditional_return_stats(const ErGraph& g, const ModelParams& params,
                                            const SpinConfig& xi0, int trials,
                                            std::uint64_t seed,
                                            std::uint64_t step_cap = 100000000ULL) {
    if (classify_regime(params) != Regime::metastable)
        throw regime_error("conditional_return_stats: parameters are not metastable");
    Roots r = find_roots(params, params.n);
    if (xi0.volume() != r.M)
        throw std::invalid_argument("conditional_return_stats: xi0 must be in A_M");
    ReturnStats out;
    out.trials = trials;
    std::vector<double> times;
    for (int i = 0; i < trials; ++i) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
        SimState st(g, params, xi0, rng);
        HittingRecord rec = hit_volume_set(st, {r.M}, step_cap, {r.T});
        if (rec.outcome == HitOutcome::hit_target) times.push_back(rec.elapsed_time);
    }
    out.conditioned = static_cast<int>(times.size());
    if (times.empty()) return out;
    double sum = 0.0;
    double tmax = 0.0;
    for (double t : times) {
        sum += t;
        tmax = std::max(tmax, t);
    }
    out.mean_return = sum / times.size();
    int jmax = static_cast<int>(std::ceil(tmax)) + 1;
    out.tail_counts.assign(jmax + 1, 0);
    for (double t : times)
        for (int j = 0; j <= jmax && j <= t; ++j) ++out.tail_counts[j];
    // log-linear fit over thresholds with non-empty tails
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int j = 0; j <= jmax; ++j) {
        if (out.tail_counts[j] == 0) break;
        double y = std::log(static_cast<double>(out.tail_counts[j]) / times.size());
        sx += j;
        sy += y;
        sxx += static_cast<double>(j) * j;
        sxy += j * y;
        ++m;
    }
    if (m >= 2) {
        double den = m * sxx - sx * sx;
        out.tail_slope = (m * sxy - sx * sy) / den;
        if (m > 2) {
            double intercept = (sy - out.tail_slope * sx) / m;
            double ssr = 0;
            for (int j = 0; j < m; ++j) {
                double y = std::log(static_cast<double>(out.tail_counts[j]) / times.size());
                double res = y - (out.tail_slope * j + intercept);
                ssr += res * res;
            }
            out.tail_slope_se = std::sqrt(ssr / (m - 2) / (den / m));
        }
    }
    return out;
}

// g count: jumps into the start level (the start at time 0 included)
// strictly before the first entry into A_S. In the metastable regime xi0
// must sit in A_M; in the strong-field regime any start is allowed and S is
// the unique positive zero of J.
inline std::uint64_t returns_before_crossover(const ErGraph& g, const ModelParams& params,
                                              const SpinConfig& xi0, std::uint64_t seed,
                                              std::uint64_t step_cap = 1000000000ULL) {
    Regime regime = classify_regime(params);
    int target;
    if (regime == Regime::metastable) {
        Roots r = find_roots(params, params.n);
        if (xi0.volume() != r.M)
            throw std::invalid_argument("returns_before_crossover: xi0 must be in A_M");
        target = r.S;
    } else if (regime == Regime::non_metastable_strong_field) {
        target = detail::strong_field_target(params);
    } else {
        throw regime_error("returns_before_crossover: subcritical parameters");
    }
    Rng rng(seed);
    SimState st(g, params, xi0, rng);
    HittingRecord rec = hit_volume_set(st, {target}, step_cap);
    return 1 + rec.returns_to_start_level;
}

struct LocalisationReport {
    int trials = 0;
    int windows_reaching = 0;
    int target_level = 0;
    std::uint64_t window_jumps = 0;
};

// Fraction of windows of n^2 log n jumps, started from xi0 in A_M, that
// reach volume M + C1 n^{5/6}.
inline LocalisationReport localisation_check(const ErGraph& g, const ModelParams& params,
                                             const SpinConfig& xi0, double c1, int trials,
                                             std::uint64_t seed) {
    if (classify_regime(params) != Regime::metastable)
        throw regime_error("localisation_check: parameters are not metastable");
    Roots r = find_roots(params, params.n);
    int n = params.n;
    LocalisationReport rep;
    rep.trials = trials;
    rep.target_level = std::min(n, r.M + static_cast<int>(std::ceil(c1 * std::pow(n, 5.0 / 6.0))));
    rep.window_jumps = static_cast<std::uint64_t>(std::ceil(n * static_cast<double>(n) * std::log(n)));
    for (int i = 0; i < trials; ++i) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
        SimState st(g, params, xi0, rng);
        bool reached = false;
        for (std::uint64_t s = 0; s < rep.window_jumps; ++s) {
            st.step();
            if (st.volume() >= rep.target_level) {
                reached = true;
                break;
            }
        }
        if (reached) ++rep.windows_reaching;
    }
    return rep;
}

// Deviations of |edge boundary| from its mean p k (n-k) over uniform samples
// from A_k.
inline std::vector<double> boundary_histogram_sample(const ErGraph& g, int k, int samples,
                                                     std::uint64_t seed) {
    if (k < 0 || k > g.n) throw std::invalid_argument("boundary_histogram_sample: bad k");
    std::vector<double> devs(samples);
    Rng rng(seed);
    double mean = g.p * static_cast<double>(k) * (g.n - k);
    for (int i = 0; i < samples; ++i) {
        SpinConfig s = SpinConfig::uniform_with_volume(g.n, k, rng);
        devs[i] = static_cast<double>(edge_boundary(g, s)) - mean;
    }
    return devs;
}

struct RateSandwich {
    double up_lower = 0, up_upper = 0, up_actual = 0;
    double down_lower = 0, down_upper = 0, down_actual = 0;
    bool up_ok = false, down_ok = false;
};

// Interval bounds for the aggregate A_k -> A_{k+1} and A_k -> A_{k-1} rates
// at a given configuration, valid for 2n^{1/3} <= k <= n - 2n^{1/3}:
//   (n-k-2n^{2/3}) e^{-2 beta [vartheta_k + 3n^{-1/3}]_+}
//     <= up <= (n-k-2n^{2/3}) e^{-2 beta [vartheta_k - 3n^{-1/3}]_+} + 2n^{2/3}
// and symmetrically for down with -vartheta_k.
inline RateSandwich jump_rate_sandwich(const SimState& st) {
    const ModelParams& pr = st.params();
    int n = pr.n;
    int k = st.volume();
    double n23 = 2.0 * std::pow(n, 2.0 / 3.0);
    double eps = 3.0 * std::pow(n, -1.0 / 3.0);
    double vt = vartheta_rate(k, pr);
    RateSandwich s;
    s.up_actual = st.aggregate_up_rate();
    s.down_actual = st.aggregate_down_rate();
    auto pos = [](double x) { return x > 0 ? x : 0.0; };
    s.up_lower = (n - k - n23) * std::exp(-2.0 * pr.beta * pos(vt + eps));
    s.up_upper = (n - k - n23) * std::exp(-2.0 * pr.beta * pos(vt - eps)) + n23;
    s.down_lower = (k - n23) * std::exp(-2.0 * pr.beta * pos(-vt + eps));
    s.down_upper = (k - n23) * std::exp(-2.0 * pr.beta * pos(-vt - eps)) + n23;
    s.up_ok = s.up_actual >= s.up_lower && s.up_actual <= s.up_upper;
    s.down_ok = s.down_actual >= s.down_lower && s.down_actual <= s.down_upper;
    return s;
}

// First time every vertex has flipped at least once.
inline double update_time(const ErGraph& g, const ModelParams& params, const SpinConfig& xi0,
                          Rng rng, std::uint64_t step_cap = 100000000ULL) {
    SimState st(g, params, xi0, rng);
    std::vector<char> touched(g.n, 0);
    int remaining = g.n;
    for (std::uint64_t s = 0; s < step_cap && remaining > 0; ++s) {
        int v = st.step();
        if (!touched[v]) {
            touched[v] = 1;
            --remaining;
        }
    }
    return st.time();
}

}  // namespace metaspin
