// Exponent fit for n-sweep crossover records: regress log(mean time) on n
// and report the residual prefactor exponent per size against the
// beta (t - m) 11/6 band (reported, never asserted).
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "metaspin/landscape.hpp"
#include "metaspin/stats.hpp"

namespace metaspin {

struct SweepPoint {
    int n = 0;
    double mean_time = 0.0;
    int completed = 0;
};

struct ExponentFit {
    LinearFit line;                 // log mean vs n
    double beta_gamma = 0.0;        // predicted slope beta * Gamma*
    double band = 0.0;              // |E_n| band half-width
    std::vector<double> e_n;        // implied exponent per point
};

inline ExponentFit fit_exponent(const std::vector<SweepPoint>& pts, const ModelParams& base) {
    int distinct = 0;
    {
        std::vector<int> seen;
        for (const auto& p : pts)
            if (std::find(seen.begin(), seen.end(), p.n) == seen.end()) {
                seen.push_back(p.n);
                ++distinct;
            }
    }
    if (distinct < 3) throw std::invalid_argument("fit_exponent: need >= 3 distinct n values");
    for (const auto& p : pts)
        if (p.completed < 30)
            throw std::invalid_argument("fit_exponent: a sweep point has fewer than 30 completed replicas (n=" +
                                        std::to_string(p.n) + ", completed=" + std::to_string(p.completed) + ")");
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
        xs.push_back(static_cast<double>(p.n));
        ys.push_back(std::log(p.mean_time));
    }
    ExponentFit out;
    out.line = fit_line(xs, ys);
    ModelParams pr = base;
    pr.n = pts.front().n;
    Roots r = find_roots(pr, pr.n);
    double gamma = free_energy_R(r.t, pr) - free_energy_R(r.m, pr);
    out.beta_gamma = pr.beta * gamma;
    out.band = pr.beta * (r.t - r.m) * (11.0 / 6.0);
    for (const auto& p : pts)
        out.e_n.push_back((std::log(p.mean_time) - pr.beta * p.n * gamma) / std::log(static_cast<double>(p.n)));
    return out;
}

}  // namespace metaspin
