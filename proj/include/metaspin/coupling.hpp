// Two-replica coupling of the spin-flip dynamics on one graph.
//
// Matched vertices (same spin in both replicas) draw their two exponential
// clocks from the maximal coupling of Exp(r) and Exp(r~); mismatched
// vertices draw independently. All clocks are renewed after every jump of
// the joint process, the scheme's literal renewal rule; this module is a
// verifier, not the fast path, so the O(n) cost per jump is accepted.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metaspin/dynamics.hpp"
#include "metaspin/graph.hpp"
#include "metaspin/spin.hpp"

namespace metaspin {

struct CoupledDraw {
    double x1 = 0, x2 = 0;
    bool same = false;
};

namespace detail {
// Inverse of a monotone CDF by bisection on a bracket.
template <typename F>
inline double invert_cdf(F cdf, double lo, double hi, double target) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
}  // namespace detail

// Maximal coupling of Exp(lambda1) and Exp(lambda2) by inverse-CDF sampling
// of the overlap/excess decomposition. Marginals are exact; x1 = x2 happens
// with the overlap probability 1 - d_TV. Draw budget: one selector draw plus
// one inverse-CDF draw per sampled value.
inline CoupledDraw couple_exponentials(double lambda1, double lambda2, Rng& rng) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw std::invalid_argument("couple_exponentials: rates must be > 0");
    CoupledDraw out;
    if (lambda1 == lambda2) {
        out.x1 = out.x2 = rng.exponential(lambda1);
        out.same = true;
        return out;
    }
    const bool swapped = lambda1 > lambda2;
    const double la = swapped ? lambda2 : lambda1;  // smaller rate
    const double lb = swapped ? lambda1 : lambda2;
    // densities cross at xc; below it the Exp(lb) density dominates
    const double xc = std::log(lb / la) / (lb - la);
    const double ea = std::exp(-la * xc), eb = std::exp(-lb * xc);
    const double overlap = 1.0 - ea + eb;
    if (rng.uniform01() < overlap) {
        // common value from the normalized min density: f_a below xc, f_b above
        double mass = overlap * rng.uniform01();
        double x;
        if (mass <= 1.0 - ea)
            x = -std::log1p(-mass) / la;
        else
            x = -std::log(eb - (mass - (1.0 - ea))) / lb;
        out.x1 = out.x2 = x;
        out.same = true;
        return out;
    }
    const double excess = 1.0 - overlap;
    // slow-rate excess lives on [xc, inf): (f_a - f_b)/excess
    double ua = rng.uniform01() * excess;
    double hi = xc + 1.0 / la;
    auto cdf_a = [&](double x) { return (ea - std::exp(-la * x)) - (eb - std::exp(-lb * x)); };
    while (cdf_a(hi) < ua && hi < xc + 1500.0 / la) hi *= 2.0;
    double xa = detail::invert_cdf(cdf_a, xc, hi, ua);
    // fast-rate excess lives on [0, xc]: (f_b - f_a)/excess
    double ub = rng.uniform01() * excess;
    auto cdf_b = [&](double x) { return std::exp(-la * x) - std::exp(-lb * x); };
    double xb = detail::invert_cdf(cdf_b, 0.0, xc, ub);
    out.x1 = swapped ? xb : xa;
    out.x2 = swapped ? xa : xb;
    out.same = false;
    return out;
}

class CoupledState {
  public:
    CoupledState(const ErGraph& g, const ModelParams& params, SpinConfig a, SpinConfig b, Rng rng)
        : g_(&g), params_(params), sa_(std::move(a)), sb_(std::move(b)), rng_(rng) {
        if (sa_.n() != g.n || sb_.n() != g.n)
            throw std::invalid_argument("CoupledState: config/graph size mismatch");
        cnt_a_.resize(g.n);
        cnt_b_.resize(g.n);
        for (int v = 0; v < g.n; ++v) {
            cnt_a_[v] = edges_to_support(g, v, sa_);
            cnt_b_[v] = edges_to_support(g, v, sb_);
        }
        w1_ = 0;
        for (int v = 0; v < g.n; ++v)
            if (sa_.plus(v) != sb_.plus(v)) ++w1_;
    }

    int w1() const { return w1_; }
    bool merged() const { return w1_ == 0; }
    double time() const { return time_; }
    std::uint64_t transitions() const { return transitions_; }
    const SpinConfig& first() const { return sa_; }
    const SpinConfig& second() const { return sb_; }
    Rng& rng() { return rng_; }

    double rate_a(int v) const { return rate_of(sa_, cnt_a_[v], v); }
    double rate_b(int v) const { return rate_of(sb_, cnt_b_[v], v); }

    int recount_w1() const {
        int c = 0;
        for (int v = 0; v < g_->n; ++v)
            if (sa_.plus(v) != sb_.plus(v)) ++c;
        return c;
    }

    // One renewal round: draw all clocks, apply the earliest event, renew.
    // Returns the change in |W1| (-1, 0, or +1).
    int step() {
        double best = std::numeric_limits<double>::infinity();
        int best_v = -1;
        int best_kind = 0;  // 0 both, 1 first only, 2 second only
        for (int v = 0; v < g_->n; ++v) {
            double ra = rate_a(v), rb = rate_b(v);
            if (sa_.plus(v) == sb_.plus(v)) {
                CoupledDraw d = couple_exponentials(ra, rb, rng_);
                if (d.same) {
                    if (d.x1 < best) {
                        best = d.x1;
                        best_v = v;
                        best_kind = 0;
                    }
                } else {
                    if (d.x1 < best) {
                        best = d.x1;
                        best_v = v;
                        best_kind = 1;
                    }
                    if (d.x2 < best) {
                        best = d.x2;
                        best_v = v;
                        best_kind = 2;
                    }
                }
            } else {
                double xa = rng_.exponential(ra);
                double xb = rng_.exponential(rb);
                if (xa < best) {
                    best = xa;
                    best_v = v;
                    best_kind = 1;
                }
                if (xb < best) {
                    best = xb;
                    best_v = v;
                    best_kind = 2;
                }
            }
        }
        time_ += best;
        ++transitions_;
        // a simultaneous flip preserves agreement at v; a lone flip toggles it
        int delta = 0;
        if (best_kind == 0 || best_kind == 1) flip_a(best_v);
        if (best_kind == 0 || best_kind == 2) flip_b(best_v);
        if (best_kind != 0) delta = (sa_.plus(best_v) != sb_.plus(best_v)) ? 1 : -1;
        w1_ += delta;
        return delta;
    }

  private:
    double rate_of(const SpinConfig& s, int cnt, int v) const {
        double dh;
        if (s.plus(v))
            dh = (2.0 / g_->n) * (2 * cnt - g_->degree(v)) + 2.0 * params_.h;
        else
            dh = (2.0 / g_->n) * (g_->degree(v) - 2 * cnt) - 2.0 * params_.h;
        return metropolis_rate(params_.beta, dh);
    }

    void flip_a(int v) { flip_impl(sa_, cnt_a_, v); }
    void flip_b(int v) { flip_impl(sb_, cnt_b_, v); }

    void flip_impl(SpinConfig& s, std::vector<int>& cnt, int v) {
        bool was_plus = s.plus(v);
        s.flip(v);
        int dv = was_plus ? -1 : 1;
        const std::uint64_t* r = g_->row(v);
        for (int i = 0; i < g_->words(); ++i) {
            std::uint64_t bits = r[i];
            while (bits) {
                int w = i * 64 + std::countr_zero(bits);
                bits &= bits - 1;
                cnt[w] += dv;
            }
        }
    }

    const ErGraph* g_;
    ModelParams params_;
    SpinConfig sa_, sb_;
    std::vector<int> cnt_a_, cnt_b_;
    int w1_ = 0;
    double time_ = 0.0;
    std::uint64_t transitions_ = 0;
    Rng rng_;
};

struct ShortCouplingResult {
    bool merged = false;
    double merge_time = 0.0;
    std::uint64_t transitions = 0;
    int max_w1 = 0;
    // drift bookkeeping below the n^{6/7} threshold
    std::uint64_t small_w1_decreases = 0;
    std::uint64_t small_w1_increases = 0;
    std::vector<int> w1_trace;
};

// Run the renewal coupling until merge, until `transition_cap` transitions
// (default n log n), or until continuous time `horizon` (default 2n).
inline ShortCouplingResult run_short_coupling(const ErGraph& g, const ModelParams& params,
                                              const SpinConfig& a, const SpinConfig& b, Rng rng,
                                              double horizon = -1.0,
                                              std::uint64_t transition_cap = 0,
                                              bool keep_trace = false) {
    if (horizon < 0.0) horizon = 2.0 * g.n;
    if (transition_cap == 0)
        transition_cap = static_cast<std::uint64_t>(std::ceil(g.n * std::log(static_cast<double>(g.n))));
    CoupledState st(g, params, a, b, rng);
    ShortCouplingResult out;
    out.max_w1 = st.w1();
    double small_threshold = std::pow(static_cast<double>(g.n), 6.0 / 7.0);
    if (keep_trace) out.w1_trace.push_back(st.w1());
    while (!st.merged() && st.transitions() < transition_cap && st.time() < horizon) {
        int before = st.w1();
        int delta = st.step();
        if (before <= small_threshold && delta != 0) {
            if (delta < 0)
                ++out.small_w1_decreases;
            else
                ++out.small_w1_increases;
        }
        out.max_w1 = std::max(out.max_w1, st.w1());
        if (keep_trace) out.w1_trace.push_back(st.w1());
    }
    out.merged = st.merged();
    out.merge_time = st.time();
    out.transitions = st.transitions();
    return out;
}

struct LongCouplingResult {
    bool merged = false;
    int attempts = 0;
    int max_w1 = 0;
    double time_first = 0.0;   // asynchronous elapsed time of each replica
    double time_second = 0.0;
    SpinConfig glued;          // common configuration at the merge point
};

// Re-attempt the short scheme on windows aligned at each replica's
// successive returns to A_M; run the replicas independently in between.
inline LongCouplingResult run_long_coupling(const ErGraph& g, const ModelParams& params,
                                            const SpinConfig& a, const SpinConfig& b, Rng rng,
                                            int attempt_budget,
                                            std::uint64_t step_cap = 100000000ULL) {
    if (classify_regime(params) != Regime::metastable)
        throw regime_error("run_long_coupling: parameters are not metastable");
    Roots roots = find_roots(params, params.n);
    LongCouplingResult out;
    SpinConfig cur_a = a, cur_b = b;
    double ta = 0.0, tb = 0.0;
    for (int att = 0; att < attempt_budget; ++att) {
        out.attempts = att + 1;
        CoupledState st(g, params, cur_a, cur_b, rng);
        out.max_w1 = std::max(out.max_w1, st.w1());
        double horizon = 2.0 * g.n;
        std::uint64_t cap = static_cast<std::uint64_t>(std::ceil(g.n * std::log(static_cast<double>(g.n))));
        while (!st.merged() && st.transitions() < cap && st.time() < horizon) {
            st.step();
            out.max_w1 = std::max(out.max_w1, st.w1());
        }
        if (st.merged()) {
            out.merged = true;
            out.time_first = ta + st.time();
            out.time_second = tb + st.time();
            out.glued = st.first();
            return out;
        }
        ta += st.time();
        tb += st.time();
        rng = st.rng();
        // run each replica independently to its next return to A_M
        {
            SimState sa(g, params, st.first(), rng);
            HittingRecord rec = hit_volume_set(sa, {roots.M}, step_cap);
            if (rec.outcome != HitOutcome::hit_target) return out;
            cur_a = sa.sigma();
            ta += sa.time();
            rng = sa.rng();
        }
        {
            SimState sb(g, params, st.second(), rng);
            HittingRecord rec = hit_volume_set(sb, {roots.M}, step_cap);
            if (rec.outcome != HitOutcome::hit_target) return out;
            cur_b = sb.sigma();
            tb += sb.time();
            rng = sb.rng();
        }
    }
    return out;
}

}  // namespace metaspin
