// Birth-death chains on {0..N} and their first-passage quantities:
// reversible measure, harmonic function (gambler's ruin), conditional mean
// hitting times through the Doob transform, continuous-time mean hitting
// times, and the one-dimensional capacity. Products of jump-probability
// ratios span e^{+-Theta(n)} in the metastable regime, so every sum of
// products is accumulated in log space.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metaspin/rng.hpp"

namespace metaspin {

inline double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(std::abs(a - b))));
}

// Continuous-time chain on x = 0..N with rates up(x): x -> x+1 and
// down(x): x -> x-1. Interior rates must be strictly positive; up(N) and
// down(0) are zero.
struct BirthDeathChain {
    std::vector<double> up, down;

    int N() const { return static_cast<int>(up.size()) - 1; }

    void validate() const {
        int n = N();
        if (n < 1) throw std::invalid_argument("chain: need at least two states");
        if (down.size() != up.size()) throw std::invalid_argument("chain: rate array size mismatch");
        for (int x = 0; x < n; ++x)
            if (!(up[x] > 0.0)) throw std::invalid_argument("chain: up rate not positive in interior");
        for (int x = 1; x <= n; ++x)
            if (!(down[x] > 0.0)) throw std::invalid_argument("chain: down rate not positive in interior");
    }

    // Jump-chain probability of moving up from x.
    double p_up(int x) const { return up[x] / (up[x] + down[x]); }
};

// log of the (unnormalized) reversible measure: nu(0) = 1 and
// nu(x+1) = nu(x) up(x) / down(x+1).
inline std::vector<double> log_stationary(const BirthDeathChain& c) {
    int n = c.N();
    std::vector<double> lnu(n + 1, 0.0);
    for (int x = 0; x < n; ++x) lnu[x + 1] = lnu[x] + std::log(c.up[x]) - std::log(c.down[x + 1]);
    return lnu;
}

inline std::vector<double> log_stationary_normalized(const BirthDeathChain& c) {
    auto lnu = log_stationary(c);
    double lz = -std::numeric_limits<double>::infinity();
    for (double v : lnu) lz = logaddexp(lz, v);
    for (double& v : lnu) v -= lz;
    return lnu;
}

namespace detail {
// log pi[1,z] = sum_{w=1}^{z} log(down(w)/up(w)) for z = 0..N-1 (empty
// product at z=0); the jump-probability ratio equals the rate ratio.
inline std::vector<double> log_pi_prefix(const BirthDeathChain& c) {
    int n = c.N();
    std::vector<double> lpi(n, 0.0);
    for (int z = 1; z < n; ++z) lpi[z] = lpi[z - 1] + std::log(c.down[z]) - std::log(c.up[z]);
    return lpi;
}
}  // namespace detail

// log h_N(x) = log R(x) - log R(N), R(x) = sum_{z<x} pi[1,z]; h is the
// probability of hitting N before 0 starting from x.
inline std::vector<double> log_harmonic(const BirthDeathChain& c) {
    c.validate();
    int n = c.N();
    auto lpi = detail::log_pi_prefix(c);
    std::vector<double> lR(n + 1);
    double acc = -std::numeric_limits<double>::infinity();
    lR[0] = acc;
    for (int x = 1; x <= n; ++x) {
        acc = logaddexp(acc, lpi[x - 1]);
        lR[x] = acc;
    }
    std::vector<double> lh(n + 1);
    for (int x = 0; x <= n; ++x) lh[x] = lR[x] - lR[n];
    return lh;
}

inline std::vector<double> harmonic(const BirthDeathChain& c) {
    auto lh = log_harmonic(c);
    std::vector<double> h(lh.size());
    for (std::size_t i = 0; i < lh.size(); ++i) h[i] = std::exp(lh[i]);
    return h;
}

// e_N(x) = E_x[steps to N | N hit before 0] for x = 1..N (index 0 unused).
// Computed as the mean hitting time of the Doob-transformed jump chain,
// telescoped into all-positive terms:
//   e_N(x) = sum_{y=x}^{N-1} t(y),
//   t(y)   = (1/(h(y) h(y+1))) sum_{z=1}^{y} pi(z,y] h(z)^2 / p(z,z+1),
// with the inner sum accumulated by the recursion u(y) = Q(y) u(y-1) + g(y).
// Satisfies e_N(N) = 0 and e_N(1) = 1 + e_N(2).
inline std::vector<double> conditional_mean_hits(const BirthDeathChain& c) {
    c.validate();
    int n = c.N();
    auto lh = log_harmonic(c);
    std::vector<double> lt(n, -std::numeric_limits<double>::infinity());
    double lu = -std::numeric_limits<double>::infinity();
    for (int y = 1; y < n; ++y) {
        double lp_up = std::log(c.p_up(y));
        double lq = std::log(c.down[y]) - std::log(c.up[y]);
        double lg = 2.0 * lh[y] - lp_up;
        lu = logaddexp(lq + lu, lg);
        lt[y] = lu - lh[y] - lh[y + 1];
    }
    std::vector<double> e(n + 1, 0.0);
    e[0] = std::numeric_limits<double>::quiet_NaN();
    for (int x = n - 1; x >= 1; --x) e[x] = e[x + 1] + std::exp(lt[x]);
    return e;
}

// E_from[tau_to] in continuous time, from < to:
//   sum_{y=from}^{to-1} (1/(up(y) nu(y))) sum_{z<=y} nu(z).
inline double mean_hitting_time_ct(const BirthDeathChain& c, int from, int to) {
    c.validate();
    if (!(from < to)) throw std::invalid_argument("mean_hitting_time_ct: need from < to");
    if (from < 0 || to > c.N()) throw std::invalid_argument("mean_hitting_time_ct: state out of range");
    auto lnu = log_stationary(c);
    double total = -std::numeric_limits<double>::infinity();
    double lcum = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < to; ++y) {
        lcum = logaddexp(lcum, lnu[y]);
        if (y >= from) total = logaddexp(total, lcum - lnu[y] - std::log(c.up[y]));
    }
    return std::exp(total);
}

// Chain restricted to the window [a..b] (states relabelled 0..b-a).
inline BirthDeathChain window_chain(const BirthDeathChain& c, int a, int b) {
    BirthDeathChain w;
    w.up.assign(c.up.begin() + a, c.up.begin() + b + 1);
    w.down.assign(c.down.begin() + a, c.down.begin() + b + 1);
    w.up.back() = 0.0;
    w.down.front() = 0.0;
    return w;
}

// log P_a[tau_b < tau_a] for a < b: leave a upward, then run gambler's ruin
// on [a..b].
inline double log_escape_prob_up(const BirthDeathChain& c, int a, int b) {
    if (!(a < b)) throw std::invalid_argument("escape_prob_up: need a < b");
    auto lh = log_harmonic(window_chain(c, a, b));
    double p_first_up = c.up[a] / (c.up[a] + (a > 0 ? c.down[a] : 0.0));
    return std::log(p_first_up) + lh[1];
}

inline double escape_prob_up(const BirthDeathChain& c, int a, int b) {
    return std::exp(log_escape_prob_up(c, a, b));
}

// log cap(a,b) for the chain with normalized reversible measure:
// cap(a,b) = [ sum_{x=a}^{b-1} 1/(nu(x) up(x)) ]^{-1}  (series resistance).
inline double log_capacity_1d(const BirthDeathChain& c, int a, int b) {
    if (!(a < b)) throw std::invalid_argument("capacity_1d: need a < b");
    auto lnu = log_stationary_normalized(c);
    double lsum = -std::numeric_limits<double>::infinity();
    for (int x = a; x < b; ++x) lsum = logaddexp(lsum, -(lnu[x] + std::log(c.up[x])));
    return -lsum;
}

struct ChainHit {
    double time = 0.0;
    std::uint64_t steps = 0;
    bool reached = false;
};

// Gillespie realization until `target` is reached or step cap exhausted.
inline ChainHit simulate_hit(const BirthDeathChain& c, int from, int target, Rng& rng,
                             std::uint64_t step_cap = 1000000000ULL) {
    ChainHit out;
    int x = from;
    while (x != target) {
        if (out.steps >= step_cap) return out;
        double r_up = c.up[x], r_dn = c.down[x];
        double tot = r_up + r_dn;
        out.time += rng.exponential(tot);
        x += (rng.uniform01() * tot < r_up) ? 1 : -1;
        ++out.steps;
    }
    out.reached = true;
    return out;
}

}  // namespace metaspin
