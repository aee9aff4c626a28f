// Magnetization chains of the mean-field (Curie-Weiss) dynamics with
// coupling p/n and field h, on the grid Gamma_n (state x = volume k,
// a = 2k/n - 1):
//
//   up(k)   = (n-k) exp(-beta [dH_up(k)]_+),   dH_up = (2p/n)(n-2k-1) - 2h
//   down(k) = k     exp(-beta [dH_dn(k)]_+),   dH_dn = (2p/n)(2k-n-1) + 2h
//
// dH_dn(k) = -dH_up(k-1), which makes the chain exactly reversible for
//   nu(a) proportional to exp(beta n ((p/2)a^2 + h a)) C(n, (1+a)n/2)
// and makes the chain the exact lumping of the full K_n spin-flip dynamics
// at p = 1 (the all-pairs Hamiltonian's diagonal term only shifts H).
//
// The perturbed comparison fields are h +- (1+eps) log(n^{11/6}) / n.
#pragma once

#include <cmath>
#include <stdexcept>

#include "metaspin/birth_death.hpp"
#include "metaspin/landscape.hpp"
#include "metaspin/spin.hpp"

namespace metaspin {

struct PerturbedField {
    enum class Direction { upper, lower };
    double h = 0.0;
    Direction direction = Direction::upper;
    double eps = 0.01;

    double value(int n) const {
        double shift = (1.0 + eps) * (11.0 / 6.0) * std::log(static_cast<double>(n)) / n;
        return direction == Direction::upper ? h + shift : h - shift;
    }
};

inline BirthDeathChain build_cw_chain(const ModelParams& params, double h_eff) {
    if (params.n < 2) throw std::invalid_argument("build_cw_chain: n must be >= 2");
    ModelParams pr = params;
    pr.h = h_eff;
    pr.kind = ModelKind::mean_field;
    int n = pr.n;
    BirthDeathChain c;
    c.up.resize(n + 1);
    c.down.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        c.up[k] = (n - k) * metropolis_rate(pr.beta, mean_field_delta_up(pr, k));
        c.down[k] = k * metropolis_rate(pr.beta, mean_field_delta_down(pr, k));
    }
    return c;
}

inline BirthDeathChain build_cw_chain(const ModelParams& params) {
    return build_cw_chain(params, params.h);
}

inline BirthDeathChain build_cw_chain(const ModelParams& params, const PerturbedField& f) {
    return build_cw_chain(params, f.value(params.n));
}

// log nu(k) from the closed form, normalized to a probability vector.
inline std::vector<double> log_stationary_nu(const ModelParams& params, double h_eff) {
    int n = params.n;
    std::vector<double> lnu(n + 1);
    for (int k = 0; k <= n; ++k) {
        double a = 2.0 * k / n - 1.0;
        lnu[k] = params.beta * n * (0.5 * params.p * a * a + h_eff * a) + log_binom(n, k);
    }
    double lz = -std::numeric_limits<double>::infinity();
    for (double v : lnu) lz = logaddexp(lz, v);
    for (double& v : lnu) v -= lz;
    return lnu;
}

inline std::vector<double> stationary_nu(const ModelParams& params, double h_eff) {
    auto lnu = log_stationary_nu(params, h_eff);
    std::vector<double> nu(lnu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = std::exp(lnu[i]);
    return nu;
}

// Asymptotic mean crossover time from the metastable to the stable set:
//   pi/(1+t) sqrt((1-t^2)/(1-m^2)) / (beta sqrt(R''(m) [-R''(t)]))
//     * exp(beta n [R(t) - R(m)]).
inline double kramers_time(const ModelParams& params) {
    if (classify_regime(params) != Regime::metastable)
        throw regime_error("kramers_time: parameters are not metastable");
    Roots r = find_roots(params, params.n);
    double rm = free_energy_Rpp(r.m, params);
    double rt = free_energy_Rpp(r.t, params);
    double pref = M_PI / (1.0 + r.t) * std::sqrt((1.0 - r.t * r.t) / (1.0 - r.m * r.m)) /
                  (params.beta * std::sqrt(rm * (-rt)));
    double gamma = free_energy_R(r.t, params) - free_energy_R(r.m, params);
    return pref * std::exp(params.beta * params.n * gamma);
}

}  // namespace metaspin
