// Exact potential theory for the spin-flip dynamics on small state spaces
// (n <= 16, all 2^n configurations):
//
//   E(f,f)    = (1/2) sum mu(s) r(s,s') [f(s)-f(s')]^2
//   cap(A,B)  = min{ E(f,f) : f = 1 on A, 0 on B }
//
// The minimizer is harmonic off A u B and is found by conjugate gradient on
// the mu-weighted (symmetric positive definite) system. Gibbs weights are
// kept as logs; sums use max-shift accumulation since e^{-beta H} spans
// e^{Theta(n)}.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metaspin/birth_death.hpp"
#include "metaspin/cw_chain.hpp"
#include "metaspin/graph.hpp"
#include "metaspin/landscape.hpp"
#include "metaspin/rng.hpp"
#include "metaspin/spin.hpp"

namespace metaspin {

// Online sum of exp(l_i) with a running max shift.
class StableLogSum {
  public:
    void add_log(double l) {
        if (l == -std::numeric_limits<double>::infinity()) return;
        if (l > shift_) {
            sum_ *= std::exp(shift_ - l);
            shift_ = l;
        }
        sum_ += std::exp(l - shift_);
    }
    double log_value() const {
        return sum_ > 0 ? shift_ + std::log(sum_) : -std::numeric_limits<double>::infinity();
    }

  private:
    double shift_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

class FullChain {
  public:
    static constexpr int kMaxN = 16;

    FullChain(const ErGraph& g, const ModelParams& params) : g_(&g), params_(params) {
        if (g.n > kMaxN) throw std::invalid_argument("FullChain: n exceeds the 2^n enumeration cap");
        n_ = g.n;
        size_ = 1u << n_;
        H_.resize(size_);
        const double hn = params.h;
        for (std::uint32_t s = 0; s < size_; ++s) H_[s] = energy_of_mask(s, hn);
        log_z_ = log_partition();
        by_volume_.assign(n_ + 1, {});
        for (std::uint32_t s = 0; s < size_; ++s)
            by_volume_[std::popcount(s)].push_back(s);
    }

    int n() const { return n_; }
    std::uint32_t size() const { return size_; }
    double H(std::uint32_t s) const { return H_[s]; }
    double log_z() const { return log_z_; }
    const std::vector<std::uint32_t>& level(int k) const { return by_volume_[k]; }

    // log mu(s), normalized
    double log_mu(std::uint32_t s) const { return -params_.beta * H_[s] - log_z_; }

    // log of mu(s) r(s, s^v) = -beta max(H(s), H(s^v)) - log Z; symmetric.
    double log_edge_weight(std::uint32_t s, int v) const {
        std::uint32_t t = s ^ (1u << v);
        return -params_.beta * std::max(H_[s], H_[t]) - log_z_;
    }

    double rate(std::uint32_t s, int v) const {
        std::uint32_t t = s ^ (1u << v);
        double dh = H_[t] - H_[s];
        return metropolis_rate(params_.beta, dh);
    }

    double total_rate(std::uint32_t s) const {
        double tot = 0;
        for (int v = 0; v < n_; ++v) tot += rate(s, v);
        return tot;
    }

    const ModelParams& params() const { return params_; }

  private:
    double energy_of_mask(std::uint32_t s, double h) const {
        long long pair2 = 0;
        for (int v = 0; v < n_; ++v) {
            int sv = (s >> v & 1) ? 1 : -1;
            int e = 0;
            for (int w = 0; w < n_; ++w)
                if ((s >> w & 1) && g_->has_edge(v, w)) ++e;
            pair2 += static_cast<long long>(sv) * (2 * e - g_->degree(v));
        }
        long long spin_sum = 2LL * std::popcount(s) - n_;
        return -static_cast<double>(pair2) / (2.0 * n_) - h * static_cast<double>(spin_sum);
    }

    double log_partition() const {
        StableLogSum acc;
        for (std::uint32_t s = 0; s < size_; ++s) acc.add_log(-params_.beta * H_[s]);
        return acc.log_value();
    }

    const ErGraph* g_;
    ModelParams params_;
    int n_ = 0;
    std::uint32_t size_ = 0;
    std::vector<double> H_;
    double log_z_ = 0;
    std::vector<std::vector<std::uint32_t>> by_volume_;
};

// Equilibrium potential: f = 1 on A, 0 on B, harmonic elsewhere
// (sum_v r(s, s^v)[f(s^v) - f(s)] = 0). Solved matrix-free by CG on the
// symmetrized system with Jacobi preconditioning; the flip graph is the
// hypercube, so the system is never singular for Metropolis rates.
inline std::vector<double> equilibrium_potential(const FullChain& c,
                                                 const std::vector<std::uint32_t>& A,
                                                 const std::vector<std::uint32_t>& B,
                                                 double tol = 1e-12, int max_iter = 20000) {
    const std::uint32_t size = c.size();
    const int n = c.n();
    std::vector<std::int8_t> kind(size, 0);  // 0 free, 1 in A, 2 in B
    for (auto s : A) kind[s] = 1;
    for (auto s : B) {
        if (kind[s] == 1) throw std::invalid_argument("equilibrium_potential: A and B intersect");
        kind[s] = 2;
    }
    if (A.empty() || B.empty()) throw std::invalid_argument("equilibrium_potential: empty set");

    // weight shift keeps the CG arithmetic in a sane range
    double shift = -std::numeric_limits<double>::infinity();
    for (std::uint32_t s = 0; s < size; ++s)
        for (int v = 0; v < n; ++v) shift = std::max(shift, c.log_edge_weight(s, v));

    auto w = [&](std::uint32_t s, int v) { return std::exp(c.log_edge_weight(s, v) - shift); };

    std::vector<double> f(size, 0.0), rhs(size, 0.0), diag(size, 0.0);
    for (auto s : A) f[s] = 1.0;
    for (std::uint32_t s = 0; s < size; ++s) {
        if (kind[s] != 0) continue;
        double d = 0.0, b = 0.0;
        for (int v = 0; v < n; ++v) {
            double ww = w(s, v);
            d += ww;
            std::uint32_t t = s ^ (1u << v);
            if (kind[t] == 1) b += ww;
        }
        diag[s] = d;
        rhs[s] = b;
    }

    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::uint32_t s = 0; s < size; ++s) {
            if (kind[s] != 0) {
                out[s] = 0;
                continue;
            }
            double acc = diag[s] * x[s];
            for (int v = 0; v < n; ++v) {
                std::uint32_t t = s ^ (1u << v);
                if (kind[t] == 0) acc -= w(s, v) * x[t];
            }
            out[s] = acc;
        }
    };

    std::vector<double> x(size, 0.0), r(size, 0.0), z(size, 0.0), p(size, 0.0), ap(size, 0.0);
    apply(x, r);
    double rhs_norm = 0.0;
    for (std::uint32_t s = 0; s < size; ++s) {
        if (kind[s] != 0) continue;
        r[s] = rhs[s] - r[s];
        rhs_norm += rhs[s] * rhs[s];
    }
    rhs_norm = std::sqrt(rhs_norm);
    if (rhs_norm == 0.0) rhs_norm = 1.0;
    double rz = 0.0;
    for (std::uint32_t s = 0; s < size; ++s)
        if (kind[s] == 0) {
            z[s] = r[s] / diag[s];
            p[s] = z[s];
            rz += r[s] * z[s];
        }
    for (int it = 0; it < max_iter; ++it) {
        double rnorm = 0.0;
        for (std::uint32_t s = 0; s < size; ++s)
            if (kind[s] == 0) rnorm += r[s] * r[s];
        if (std::sqrt(rnorm) <= tol * rhs_norm) break;
        apply(p, ap);
        double pap = 0.0;
        for (std::uint32_t s = 0; s < size; ++s)
            if (kind[s] == 0) pap += p[s] * ap[s];
        double alpha = rz / pap;
        for (std::uint32_t s = 0; s < size; ++s)
            if (kind[s] == 0) {
                x[s] += alpha * p[s];
                r[s] -= alpha * ap[s];
            }
        double rz_new = 0.0;
        for (std::uint32_t s = 0; s < size; ++s)
            if (kind[s] == 0) {
                z[s] = r[s] / diag[s];
                rz_new += r[s] * z[s];
            }
        double betacg = rz_new / rz;
        rz = rz_new;
        for (std::uint32_t s = 0; s < size; ++s)
            if (kind[s] == 0) p[s] = z[s] + betacg * p[s];
    }
    for (std::uint32_t s = 0; s < size; ++s)
        if (kind[s] == 0) f[s] = x[s];
    return f;
}

inline double dirichlet_energy(const FullChain& c, const std::vector<double>& f) {
    StableLogSum acc;
    for (std::uint32_t s = 0; s < c.size(); ++s)
        for (int v = 0; v < c.n(); ++v) {
            std::uint32_t t = s ^ (1u << v);
            if (t < s) continue;  // each unordered pair once
            double df = f[s] - f[t];
            if (df == 0.0) continue;
            acc.add_log(c.log_edge_weight(s, v) + 2.0 * std::log(std::abs(df)));
        }
    return std::exp(acc.log_value());
}

struct CapacityResult {
    double dirichlet = 0.0;       // E(f,f) at the equilibrium potential
    double flux = 0.0;            // boundary-flux form
    double indicator_bound = 0.0; // single-cut upper bound at the argmin level
    int k_min = -1;               // argmin_j C(n,j) e^{-2 beta j theta_j}
};

// P_s[tau_B < tau_A] for s in A by a first-jump step through 1 - f, with
// f = 1 on A, 0 on B.
inline double escape_probability(const FullChain& c, std::uint32_t s, const std::vector<double>& f) {
    double num = 0.0, den = 0.0;
    for (int v = 0; v < c.n(); ++v) {
        double r = c.rate(s, v);
        den += r;
        num += r * (1.0 - f[s ^ (1u << v)]);
    }
    return num / den;
}

namespace detail {
// argmin over k..k' of C(n,j) e^{-2 beta j theta_j}, theta_j = p(1-j/n) - h;
// ties resolved to the smallest index.
inline int argmin_level(const ModelParams& pr, int k, int k2) {
    int best = k;
    double bestval = std::numeric_limits<double>::infinity();
    for (int j = k; j <= k2; ++j) {
        double val = log_binom(pr.n, j) - 2.0 * pr.beta * j * theta_mean(j, pr);
        if (val < bestval) {
            bestval = val;
            best = j;
        }
    }
    return best;
}
}  // namespace detail

// cap(A_k, A_k') three ways: Dirichlet form at the equilibrium potential,
// the flux identity sum_{s in A} mu(s) r_tot(s) P_s[tau_B < tau_A], and the
// indicator-cut upper bound through the level k_min.
inline CapacityResult capacity_between_levels(const FullChain& c, int k, int k2) {
    if (!(k < k2)) throw std::invalid_argument("capacity_between_levels: need k < k'");
    const auto& A = c.level(k);
    const auto& B = c.level(k2);
    std::vector<double> f = equilibrium_potential(c, A, B);
    CapacityResult out;
    out.dirichlet = dirichlet_energy(c, f);

    StableLogSum flux;
    for (auto s : A) {
        double pesc = escape_probability(c, s, f);
        if (pesc <= 0.0) continue;
        flux.add_log(c.log_mu(s) + std::log(c.total_rate(s)) + std::log(pesc));
    }
    out.flux = std::exp(flux.log_value());

    out.k_min = detail::argmin_level(c.params(), k + 1, k2);
    StableLogSum cut;
    for (auto s : c.level(out.k_min - 1))
        for (int v = 0; v < c.n(); ++v)
            if (!(s >> v & 1)) cut.add_log(c.log_edge_weight(s, v));
    out.indicator_bound = std::exp(cut.log_value());
    return out;
}

// Envelope pair for cap(A_k, A_k') with rho(n) = log n and unit constants:
//   common = (1/Z) e^{-beta H(all minus)} C(n,k_min) e^{-2 beta k_min theta}
//   upper  = common * rho(n) n^{11/6}
//   lower  = common * n^{-1} e^{-(beta + 1/sqrt 3) sqrt(log n)}
struct CapacityEnvelope {
    double lower = 0, upper = 0;
};

inline CapacityEnvelope capacity_envelope(const FullChain& c, const ErGraph& g, int k, int k2) {
    const ModelParams& pr = c.params();
    int km = detail::argmin_level(pr, k + 1, k2);
    double lcommon = -pr.beta * energy_all_minus(g, pr.h) - c.log_z() + log_binom(pr.n, km) -
                     2.0 * pr.beta * km * theta_mean(km, pr);
    double ln = std::log(static_cast<double>(pr.n));
    CapacityEnvelope env;
    env.upper = std::exp(lcommon + std::log(ln) + (11.0 / 6.0) * ln);
    env.lower = std::exp(lcommon - ln - (pr.beta + 1.0 / std::sqrt(3.0)) * std::sqrt(ln));
    return env;
}

struct SandwichSeed {
    std::uint64_t seed = 0;
    double P = 0, P_lower = 0, P_upper = 0;
    bool inside = false;
};

struct SandwichReport {
    std::vector<SandwichSeed> seeds;
    int inside_count = 0;
};

// For each graph seed, P = P_{mu restricted to A_M}[tau_S < tau_M] computed
// exactly on the full chain, sandwiched between the escape probabilities of
// the lower/upper perturbed mean-field chains. At accessible n the field
// shift (11/6) log(n)/n is so large that the perturbed systems have no
// double well of their own, so all three probabilities are evaluated for
// the same crossing M -> S (the formulations coincide as n grows).
inline SandwichReport sandwich_check(int n, const ModelParams& params_in,
                                     const std::vector<std::uint64_t>& seeds, double eps = 0.01) {
    ModelParams pr = params_in;
    pr.n = n;
    if (classify_regime(pr) != Regime::metastable)
        throw regime_error("sandwich_check: parameters are not metastable");
    Roots roots = find_roots(pr, n);

    PerturbedField up{pr.h, PerturbedField::Direction::upper, eps};
    PerturbedField lo{pr.h, PerturbedField::Direction::lower, eps};
    BirthDeathChain cu = build_cw_chain(pr, up.value(n));
    BirthDeathChain cl = build_cw_chain(pr, lo.value(n));
    double p_up = escape_prob_up(cu, roots.M, roots.S);
    double p_lo = escape_prob_up(cl, roots.M, roots.S);

    SandwichReport rep;
    for (auto seed : seeds) {
        ErGraph g = generate_er(n, pr.p, seed);
        FullChain chain(g, pr);
        std::vector<double> f = equilibrium_potential(chain, chain.level(roots.S), chain.level(roots.M));
        // f = 1 on A_S, 0 on A_M: P_s[tau_S < tau_M] steps through f itself
        StableLogSum wsum;
        for (auto s : chain.level(roots.M)) wsum.add_log(chain.log_mu(s));
        double lw = wsum.log_value();
        double P = 0.0;
        for (auto s : chain.level(roots.M)) {
            double num = 0.0, den = 0.0;
            for (int v = 0; v < n; ++v) {
                double r = chain.rate(s, v);
                den += r;
                num += r * f[s ^ (1u << v)];
            }
            P += std::exp(chain.log_mu(s) - lw) * (num / den);
        }
        SandwichSeed row;
        row.seed = seed;
        row.P = P;
        row.P_lower = p_lo;
        row.P_upper = p_up;
        row.inside = p_lo <= P && P <= p_up;
        rep.seeds.push_back(row);
        if (row.inside) ++rep.inside_count;
    }
    return rep;
}

}  // namespace metaspin
