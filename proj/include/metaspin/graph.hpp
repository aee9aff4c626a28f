// Erdos-Renyi and complete graphs with bitset adjacency rows.
// The row/support AND-popcount is the inner loop of every rate update, so
// adjacency is stored as fixed-width 64-bit words.
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaspin/rng.hpp"

namespace metaspin {

class ErGraph {
  public:
    int n = 0;
    double p = 1.0;
    std::uint64_t seed = 0;
    long long edge_count = 0;

    ErGraph() = default;
    ErGraph(int n_, double p_, std::uint64_t seed_)
        : n(n_), p(p_), seed(seed_), words_((n_ + 63) / 64),
          adj_(static_cast<std::size_t>(n_) * words_, 0), deg_(n_, 0) {}

    int words() const { return words_; }
    const std::uint64_t* row(int v) const { return adj_.data() + static_cast<std::size_t>(v) * words_; }
    int degree(int v) const { return deg_[v]; }

    bool has_edge(int v, int w) const {
        return (row(v)[w >> 6] >> (w & 63)) & 1ULL;
    }

    void add_edge(int v, int w) {
        adj_[static_cast<std::size_t>(v) * words_ + (w >> 6)] |= 1ULL << (w & 63);
        adj_[static_cast<std::size_t>(w) * words_ + (v >> 6)] |= 1ULL << (v & 63);
        ++deg_[v];
        ++deg_[w];
        ++edge_count;
    }

    // |{w in adj(v): bit set in support}|
    int row_and_popcount(int v, const std::uint64_t* support) const {
        const std::uint64_t* r = row(v);
        int c = 0;
        for (int i = 0; i < words_; ++i) c += std::popcount(r[i] & support[i]);
        return c;
    }

    // Symmetry, no self-loops, degree/edge-count consistency. Test hook.
    bool consistent() const {
        long long degsum = 0;
        for (int v = 0; v < n; ++v) {
            if (has_edge(v, v)) return false;
            int d = 0;
            for (int w = 0; w < n; ++w) {
                if (has_edge(v, w)) {
                    ++d;
                    if (!has_edge(w, v)) return false;
                }
            }
            if (d != deg_[v]) return false;
            degsum += d;
        }
        return degsum == 2 * edge_count;
    }

  private:
    int words_ = 0;
    std::vector<std::uint64_t> adj_;
    std::vector<int> deg_;
};

// Each unordered pair (v,w), v<w, taken in lexicographic order, consumes one
// uniform01() draw and is kept iff the draw is < p. p = 1 builds K_n without
// consuming any draws.
inline ErGraph generate_er(int n, double p, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_er: n must be >= 1");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("generate_er: p must be in (0,1]");
    ErGraph g(n, p, seed);
    if (p == 1.0) {
        for (int v = 0; v < n; ++v)
            for (int w = v + 1; w < n; ++w) g.add_edge(v, w);
        return g;
    }
    Rng rng(seed);
    for (int v = 0; v < n; ++v)
        for (int w = v + 1; w < n; ++w)
            if (rng.uniform01() < p) g.add_edge(v, w);
    return g;
}

struct DegreeReport {
    int min_deg = 0;
    int max_deg = 0;
    bool all_within_bound = false;
};

// Checks pn - (1+eps)sqrt(n log n) < deg(v) < pn + (1+eps)sqrt(n log n) for
// every vertex.
inline DegreeReport degree_concentration_report(const ErGraph& g, double eps) {
    DegreeReport rep;
    rep.min_deg = g.n;
    rep.max_deg = 0;
    for (int v = 0; v < g.n; ++v) {
        int d = g.degree(v);
        rep.min_deg = std::min(rep.min_deg, d);
        rep.max_deg = std::max(rep.max_deg, d);
    }
    const double slack = (1.0 + eps) * std::sqrt(static_cast<double>(g.n) * std::log(static_cast<double>(g.n)));
    const double mean = g.p * g.n;
    rep.all_within_bound = (rep.min_deg > mean - slack) && (rep.max_deg < mean + slack);
    return rep;
}

// Text fixture format: line 1 "n p seed", then one "v w" line per edge,
// v < w, sorted lexicographically.
inline void dump_graph(const ErGraph& g, std::ostream& os) {
    os << g.n << ' ' << g.p << ' ' << g.seed << '\n';
    for (int v = 0; v < g.n; ++v)
        for (int w = v + 1; w < g.n; ++w)
            if (g.has_edge(v, w)) os << v << ' ' << w << '\n';
}

inline ErGraph load_graph(std::istream& is) {
    int n;
    double p;
    std::uint64_t seed;
    if (!(is >> n >> p >> seed)) throw std::invalid_argument("load_graph: bad header");
    ErGraph g(n, p, seed);
    int v, w;
    while (is >> v >> w) {
        if (v < 0 || w < 0 || v >= n || w >= n || v >= w)
            throw std::invalid_argument("load_graph: bad edge line");
        g.add_edge(v, w);
    }
    return g;
}

}  // namespace metaspin
