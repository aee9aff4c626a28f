// Free-energy landscape of the (mean-field) spin model at magnetization a:
//
//   I(a)  = ((1-a)/2) log((1-a)/2) + ((1+a)/2) log((1+a)/2)
//   J(a)  = 2 beta (p a + h) + log((1-a)/(1+a))
//   R(a)  = -(p/2) a^2 - h a + I(a)/beta,      R' = -J/(2 beta)
//
// and their finite-n versions on the grid Gamma_n = {-1, -1+2/n, ..., 1},
// where I_n(a) = -(1/n) log C(n, (1+a)n/2) and J_n uses the symmetric
// discrete derivative of I_n over one grid step each way.
//
// The double well exists iff lambda = beta p > 1 and 0 < h < p chi(lambda);
// m < t < s are then the three zeroes of J, with volumes M, T, S.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metaspin/spin.hpp"

namespace metaspin {

struct regime_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double entropy_I(double a) {
    if (a <= -1.0 || a >= 1.0) {
        if (a == -1.0 || a == 1.0) return 0.0;  // 0 log 0 := 0
        throw std::invalid_argument("entropy_I: a outside [-1,1]");
    }
    double qm = 0.5 * (1.0 - a), qp = 0.5 * (1.0 + a);
    return qm * std::log(qm) + qp * std::log(qp);
}

inline double log_binom(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// I_n at grid point a = 2k/n - 1.
inline double entropy_In(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("entropy_In: volume outside 0..n");
    return -log_binom(n, k) / n;
}

inline double entropy_In_at(double a, int n) {
    double kd = 0.5 * (1.0 + a) * n;
    double kr = std::round(kd);
    if (std::abs(kd - kr) > 1e-9 * n) throw std::invalid_argument("entropy_In_at: a not on the grid");
    return entropy_In(n, static_cast<int>(kr));
}

inline double drift_J(double a, const ModelParams& pr) {
    if (a <= -1.0) return std::numeric_limits<double>::infinity();
    if (a >= 1.0) return -std::numeric_limits<double>::infinity();
    return 2.0 * pr.beta * (pr.p * a + pr.h) + std::log((1.0 - a) / (1.0 + a));
}

inline double drift_Jprime(double a, const ModelParams& pr) {
    return 2.0 * (pr.beta * pr.p - 1.0 / (1.0 - a * a));
}

// J_n(a) = 2 beta (p a + h) - 2 I_n'(a), symmetric difference over grid
// spacing 2/n, evaluated in closed form from binomial ratios:
//   -2 I_n'(a) = (1/2) log[(n-k)(n-k+1) / ((k+1)k)],   k = (1+a)n/2.
// Convention J_n = +inf at k=0 and -inf at k=n, matching the limits of J.
inline double drift_Jn(int n, int k, const ModelParams& pr) {
    if (k <= 0) return std::numeric_limits<double>::infinity();
    if (k >= n) return -std::numeric_limits<double>::infinity();
    double a = 2.0 * k / n - 1.0;
    double ent = 0.5 * (std::log(static_cast<double>(n - k) * (n - k + 1)) -
                        std::log(static_cast<double>(k + 1) * k));
    return 2.0 * pr.beta * (pr.p * a + pr.h) + ent;
}

// J*_n(a) = 2 beta (p(a + 2/n) + h) + log((1-a)/(1+a+2/n)); kept as a
// diagnostic companion of J_n only.
inline double drift_Jn_star(double a, const ModelParams& pr) {
    int n = pr.n;
    return 2.0 * pr.beta * (pr.p * (a + 2.0 / n) + pr.h) +
           std::log((1.0 - a) / (1.0 + a + 2.0 / n));
}

// chi(lambda) = sqrt(1 - 1/lambda) - (1/(2 lambda)) log[lambda (1 + sqrt(1 - 1/lambda))^2]
inline double chi_threshold(double lambda) {
    if (lambda < 1.0) throw std::invalid_argument("chi_threshold: lambda must be >= 1");
    double srt = std::sqrt(1.0 - 1.0 / lambda);
    return srt - std::log(lambda * (1.0 + srt) * (1.0 + srt)) / (2.0 * lambda);
}

enum class Regime { metastable, non_metastable_subcritical, non_metastable_strong_field };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::metastable: return "metastable";
        case Regime::non_metastable_subcritical: return "non_metastable_subcritical";
        default: return "non_metastable_strong_field";
    }
}

inline Regime classify_regime(const ModelParams& pr) {
    pr.validate();
    double lambda = pr.beta * pr.p;
    if (lambda <= 1.0) return Regime::non_metastable_subcritical;
    if (pr.h > 0.0 && pr.h < pr.p * chi_threshold(lambda)) return Regime::metastable;
    return Regime::non_metastable_strong_field;
}

inline double free_energy_R(double a, const ModelParams& pr) {
    return -0.5 * pr.p * a * a - pr.h * a + entropy_I(a) / pr.beta;
}

// R'' = -J'/(2 beta) = 1/(beta (1-a^2)) - p
inline double free_energy_Rpp(double a, const ModelParams& pr) {
    return 1.0 / (pr.beta * (1.0 - a * a)) - pr.p;
}

// The two theta conventions, named apart:
// vartheta_k = p(1 - 2k/n) - h enters the volume-process rate bounds,
// theta_mean_k = p(1 - k/n) - h enters the level mean energy 2 k theta_k.
inline double vartheta_rate(int k, const ModelParams& pr) {
    return pr.p * (1.0 - 2.0 * k / pr.n) - pr.h;
}
inline double theta_mean(int k, const ModelParams& pr) {
    return pr.p * (1.0 - static_cast<double>(k) / pr.n) - pr.h;
}

struct Roots {
    double m = 0, t = 0, s = 0;        // continuum zeroes of J, m < t < s
    double m_n = 0, t_n = 0, s_n = 0;  // grid magnetizations
    int M = 0, T = 0, S = 0;           // volumes (n/2)(a+1)
};

namespace detail {
inline double bisect_J(const ModelParams& pr, double lo, double hi) {
    double flo = drift_J(lo, pr);
    double fhi = drift_J(hi, pr);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw std::runtime_error("bisect_J: bracket does not straddle a root");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = drift_J(mid, pr);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}
}  // namespace detail

// Continuum roots by bracketed bisection (J decreases, increases, decreases
// on the three intervals split by +-a_lambda), grid roots by the scan
//   m_n = min{a: J_n(a) <= 0}, t_n = min{a > m_n: J_n(a) >= 0},
//   s_n = min{a > t_n: J_n(a) <= 0},
// with ties at exactly 0 accepted as roots.
inline Roots find_roots(const ModelParams& pr, int n) {
    if (classify_regime(pr) != Regime::metastable)
        throw regime_error("find_roots: parameters are not metastable");
    Roots r;
    double lambda = pr.beta * pr.p;
    double alam = -std::sqrt(1.0 - 1.0 / lambda);
    r.m = detail::bisect_J(pr, -1.0 + 1e-15, alam);
    r.t = detail::bisect_J(pr, alam, 0.0);  // J(0) = 2 beta h > 0
    r.s = detail::bisect_J(pr, -alam, 1.0 - 1e-15);

    int M = -1, T = -1, S = -1;
    for (int k = 0; k <= n; ++k)
        if (drift_Jn(n, k, pr) <= 0.0) {
            M = k;
            break;
        }
    for (int k = M + 1; k <= n; ++k)
        if (drift_Jn(n, k, pr) >= 0.0) {
            T = k;
            break;
        }
    for (int k = T + 1; k <= n; ++k)
        if (drift_Jn(n, k, pr) <= 0.0) {
            S = k;
            break;
        }
    if (M < 0 || T < 0 || S < 0)
        throw regime_error("find_roots: grid scan found no double well at this n");
    r.M = M;
    r.T = T;
    r.S = S;
    r.m_n = 2.0 * M / n - 1.0;
    r.t_n = 2.0 * T / n - 1.0;
    r.s_n = 2.0 * S / n - 1.0;
    return r;
}

// Barrier height Gamma* = R(t) - R(m).
inline double barrier(const ModelParams& pr) {
    Roots r = find_roots(pr, pr.n >= 2 ? pr.n : 2);
    return free_energy_R(r.t, pr) - free_energy_R(r.m, pr);
}

struct LandscapeTables {
    int n = 0;
    std::vector<double> grid;  // a_k = 2k/n - 1
    std::vector<double> I_n, J_n, R_n;
    Roots roots;
    Regime regime = Regime::metastable;
    double barrier = 0.0;  // continuum R(t) - R(m); 0 outside metastability
};

inline LandscapeTables build_landscape_tables(const ModelParams& pr, int n) {
    LandscapeTables t;
    t.n = n;
    t.grid.resize(n + 1);
    t.I_n.resize(n + 1);
    t.J_n.resize(n + 1);
    t.R_n.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        double a = 2.0 * k / n - 1.0;
        t.grid[k] = a;
        t.I_n[k] = entropy_In(n, k);
        t.J_n[k] = drift_Jn(n, k, pr);
        t.R_n[k] = -0.5 * pr.p * a * a - pr.h * a + t.I_n[k] / pr.beta;
    }
    t.regime = classify_regime(pr);
    if (t.regime == Regime::metastable) {
        t.roots = find_roots(pr, n);
        t.barrier = free_energy_R(t.roots.t, pr) - free_energy_R(t.roots.m, pr);
    }
    return t;
}

}  // namespace metaspin
