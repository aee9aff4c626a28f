// Spin configurations and the Hamiltonian
//   H(sigma) = -(1/n) sum_{(v,w) in E} sigma(v)sigma(w) - h sum_v sigma(v),
// together with its edge-boundary form and O(1) single-flip differences.
// Edge/boundary sums are accumulated as integers and divided by n once, so
// the two energy routes agree to full double precision.
#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaspin/graph.hpp"
#include "metaspin/rng.hpp"

namespace metaspin {

enum class ModelKind { er_graph, mean_field };

struct ModelParams {
    double p = 1.0;     // coupling / edge retention probability
    double beta = 1.0;  // inverse temperature, > 0
    double h = 0.0;     // external field, >= 0 (0 allowed for diagnostics only)
    int n = 1;
    ModelKind kind = ModelKind::er_graph;

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("params: beta must be > 0");
        if (n < 1) throw std::invalid_argument("params: n must be >= 1");
        if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("params: p must be in (0,1]");
        if (h < 0.0) throw std::invalid_argument("params: h must be >= 0");
    }
};

// Bit set <=> spin +1. volume() is the cached number of +1 spins.
class SpinConfig {
  public:
    SpinConfig() = default;
    explicit SpinConfig(int n) : n_(n), words_((n + 63) / 64), w_(words_, 0), volume_(0) {}

    static SpinConfig all_minus(int n) { return SpinConfig(n); }

    static SpinConfig all_plus(int n) {
        SpinConfig s(n);
        for (int v = 0; v < n; ++v) s.set_plus(v);
        return s;
    }

    // Uniform on A_k: Fisher-Yates choice of k distinct vertices.
    static SpinConfig uniform_with_volume(int n, int k, Rng& rng) {
        SpinConfig s(n);
        std::vector<int> idx(n);
        for (int v = 0; v < n; ++v) idx[v] = v;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
            s.set_plus(idx[i]);
        }
        return s;
    }

    int n() const { return n_; }
    int words() const { return words_; }
    const std::uint64_t* data() const { return w_.data(); }
    int volume() const { return volume_; }
    double magnetization() const { return 2.0 * volume_ / n_ - 1.0; }

    bool plus(int v) const { return (w_[v >> 6] >> (v & 63)) & 1ULL; }

    void flip(int v) {
        std::uint64_t bit = 1ULL << (v & 63);
        w_[v >> 6] ^= bit;
        volume_ += (w_[v >> 6] & bit) ? 1 : -1;
    }

    void set_plus(int v) {
        if (!plus(v)) flip(v);
    }

    int recount() const {
        int c = 0;
        for (auto x : w_) c += std::popcount(x);
        return c;
    }

    bool operator==(const SpinConfig& o) const { return n_ == o.n_ && w_ == o.w_; }

    // Hex string, most-significant vertex first; width ceil(n/4) digits.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        int nibbles = (n_ + 3) / 4;
        std::string out(nibbles, '0');
        for (int i = 0; i < nibbles; ++i) {
            int lo = (nibbles - 1 - i) * 4;
            int val = 0;
            for (int b = 0; b < 4; ++b) {
                int v = lo + b;
                if (v < n_ && plus(v)) val |= 1 << b;
            }
            out[i] = digits[val];
        }
        return out;
    }

    static SpinConfig from_hex(int n, const std::string& hex) {
        SpinConfig s(n);
        int nibbles = (n + 3) / 4;
        if (static_cast<int>(hex.size()) != nibbles)
            throw std::invalid_argument("SpinConfig::from_hex: bad width");
        for (int i = 0; i < nibbles; ++i) {
            char c = hex[i];
            int val = c >= '0' && c <= '9' ? c - '0'
                    : c >= 'a' && c <= 'f' ? c - 'a' + 10
                    : c >= 'A' && c <= 'F' ? c - 'A' + 10
                                           : throw std::invalid_argument("SpinConfig::from_hex: bad digit");
            int lo = (nibbles - 1 - i) * 4;
            for (int b = 0; b < 4; ++b) {
                int v = lo + b;
                if (v < n && (val >> b & 1)) s.set_plus(v);
            }
        }
        return s;
    }

    std::uint64_t hash() const {
        std::uint64_t hsh = 0xcbf29ce484222325ULL;
        for (auto x : w_) {
            hsh ^= x;
            hsh *= 0x100000001b3ULL;
        }
        return hsh;
    }

  private:
    int n_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> w_;
    int volume_ = 0;
};

// |E(v,sigma)| = #{w in adj(v): sigma(w) = +1}. v itself never counts
// (no self-loops), so the value is the same whether or not v is in sigma.
inline int edges_to_support(const ErGraph& g, int v, const SpinConfig& sigma) {
    if (v < 0 || v >= g.n) throw std::invalid_argument("edges_to_support: vertex out of range");
    if (sigma.n() != g.n) throw std::invalid_argument("edges_to_support: size mismatch");
    return g.row_and_popcount(v, sigma.data());
}

// Direct form. sum_{(v,w) in E} sigma(v)sigma(w) = (1/2) sum_v s_v (2|E(v,sigma)| - deg v).
inline double energy(const ErGraph& g, const SpinConfig& sigma, double h) {
    if (g.n != sigma.n()) throw std::invalid_argument("energy: size mismatch");
    long long pair_sum2 = 0;  // twice the edge sum
    for (int v = 0; v < g.n; ++v) {
        int e = edges_to_support(g, v, sigma);
        int sv = sigma.plus(v) ? 1 : -1;
        pair_sum2 += static_cast<long long>(sv) * (2 * e - g.degree(v));
    }
    long long spin_sum = 2LL * sigma.volume() - g.n;
    return -static_cast<double>(pair_sum2) / (2.0 * g.n) - h * static_cast<double>(spin_sum);
}

inline double energy_all_minus(const ErGraph& g, double h) {
    return -static_cast<double>(g.edge_count) / g.n + h * g.n;
}

// |edge boundary| = #{(v,w) in E : sigma(v) = +1, sigma(w) = -1}
inline long long edge_boundary(const ErGraph& g, const SpinConfig& sigma) {
    long long b = 0;
    for (int v = 0; v < g.n; ++v)
        if (sigma.plus(v)) b += g.degree(v) - edges_to_support(g, v, sigma);
    return b;
}

// Geometric form: H(sigma) = H(all minus) + (2/n)|boundary| - 2h|sigma|.
inline double energy_via_boundary(const ErGraph& g, const SpinConfig& sigma, double h) {
    if (g.n != sigma.n()) throw std::invalid_argument("energy_via_boundary: size mismatch");
    return energy_all_minus(g, h) + 2.0 * static_cast<double>(edge_boundary(g, sigma)) / g.n -
           2.0 * h * sigma.volume();
}

// H(sigma^v) - H(sigma).
// Up-flip  (sigma(v) = -1): (2/n)(deg v - 2|E(v,sigma)|) - 2h
// Down-flip (sigma(v) = +1): (2/n)(2|E(v,sigma)| - deg v) + 2h
inline double delta_energy_flip(const ErGraph& g, const SpinConfig& sigma, int v, double h) {
    int e = edges_to_support(g, v, sigma);
    if (sigma.plus(v)) return (2.0 / g.n) * (2 * e - g.degree(v)) + 2.0 * h;
    return (2.0 / g.n) * (g.degree(v) - 2 * e) - 2.0 * h;
}

// Mean-field energies with coupling p/n, as a function of volume only:
// H = n(-(p/2)m^2 - hm), m = 2k/n - 1. The all-pairs diagonal term is a
// constant shift and is dropped; flip differences are unaffected.
inline double mean_field_energy(const ModelParams& pr, int k) {
    double m = 2.0 * k / pr.n - 1.0;
    return pr.n * (-0.5 * pr.p * m * m - pr.h * m);
}

// H(k+1) - H(k); at p = 1 bit-identical to the K_n graph flip difference.
inline double mean_field_delta_up(const ModelParams& pr, int k) {
    return (2.0 * pr.p / pr.n) * (pr.n - 2 * k - 1) - 2.0 * pr.h;
}

// H(k-1) - H(k)
inline double mean_field_delta_down(const ModelParams& pr, int k) {
    return (2.0 * pr.p / pr.n) * (2 * k - pr.n - 1) + 2.0 * pr.h;
}

// Metropolis rate for a proposed energy change.
inline double metropolis_rate(double beta, double delta_h) {
    return delta_h > 0.0 ? std::exp(-beta * delta_h) : 1.0;
}

}  // namespace metaspin
