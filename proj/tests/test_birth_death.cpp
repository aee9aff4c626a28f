#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metaspin/birth_death.hpp"
#include "metaspin/rng.hpp"
#include "oracles.hpp"

using namespace metaspin;

namespace {
// unit-rate chain with given jump-up probabilities
BirthDeathChain from_pup(const std::vector<double>& pup) {
    int N = static_cast<int>(pup.size()) + 1;
    BirthDeathChain c;
    c.up.assign(N + 1, 0.0);
    c.down.assign(N + 1, 0.0);
    c.up[0] = 1.0;
    c.down[N] = 1.0;
    for (int x = 1; x < N; ++x) {
        c.up[x] = pup[x - 1];
        c.down[x] = 1.0 - pup[x - 1];
    }
    return c;
}

BirthDeathChain random_chain(int N, Rng& rng) {
    std::vector<double> pup(N - 1);
    for (auto& p : pup) p = 0.35 + 0.3 * rng.uniform01();
    return from_pup(pup);
}
}  // namespace

TEST_CASE("simple random walk closed forms for all N <= 100") {
    for (int N = 2; N <= 100; ++N) {
        BirthDeathChain c = from_pup(std::vector<double>(N - 1, 0.5));
        auto h = harmonic(c);
        auto e = conditional_mean_hits(c);
        for (int x = 0; x <= N; ++x)
            REQUIRE(std::abs(h[x] - static_cast<double>(x) / N) < 1e-9);
        for (int x = 1; x <= N; ++x)
            REQUIRE(std::abs(e[x] - (static_cast<double>(N) * N - static_cast<double>(x) * x) / 3.0) < 1e-9);
    }
}

TEST_CASE("unconditional SRW mean hitting time x(N-x) as a cross-check") {
    // jump-chain mean of tau_{0 or N}: embed as continuous time with unit
    // total rate per state so continuous time equals expected steps
    int N = 40;
    BirthDeathChain c = from_pup(std::vector<double>(N - 1, 0.5));
    // E_x[tau] = x(N-x) solves the discrete Poisson equation; verify at x = N/2
    // via the Doob-free linear solve on the absorbing pair {0, N}.
    int m = N - 1;
    std::vector<double> lo(m), di(m), up(m), rhs(m, 1.0);
    for (int x = 1; x < N; ++x) {
        di[x - 1] = 1.0;
        lo[x - 1] = x > 1 ? -0.5 : 0.0;
        up[x - 1] = x < N - 1 ? -0.5 : 0.0;
    }
    auto sol = oracles::thomas(lo, di, up, rhs);
    for (int x = 1; x < N; ++x)
        REQUIRE(sol[x - 1] == Catch::Approx(static_cast<double>(x) * (N - x)).epsilon(1e-9));
}

TEST_CASE("constant-ratio chain has the geometric harmonic") {
    int N = 30;
    double q = 0.7;  // p(x,x-1)/p(x,x+1)
    double pup = 1.0 / (1.0 + q);
    BirthDeathChain c = from_pup(std::vector<double>(N - 1, pup));
    auto h = harmonic(c);
    for (int x = 0; x <= N; ++x) {
        double expect = (1 - std::pow(q, x)) / (1 - std::pow(q, N));
        REQUIRE(h[x] == Catch::Approx(expect).epsilon(1e-10).margin(1e-12));
    }
}

TEST_CASE("harmonic recursion holds exactly") {
    Rng rng(11);
    BirthDeathChain c = random_chain(80, rng);
    auto h = harmonic(c);
    CHECK(h[0] == 0.0);
    CHECK(h[80] == Catch::Approx(1.0).epsilon(1e-14));
    for (int x = 1; x < 80; ++x) {
        double lhs = c.p_up(x) * (h[x + 1] - h[x]);
        double rhs = (1 - c.p_up(x)) * (h[x] - h[x - 1]);
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10).margin(1e-14));
        REQUIRE(h[x + 1] >= h[x]);
    }
}

TEST_CASE("harmonic and conditional means match tridiagonal oracles on 50 random chains") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        int N = 4 + static_cast<int>(rng.uniform_below(197));
        BirthDeathChain c = random_chain(N, rng);
        auto h = harmonic(c);
        auto oh = oracles::harmonic_solve(c);
        for (int x = 0; x <= N; ++x)
            REQUIRE(h[x] == Catch::Approx(oh[x]).epsilon(1e-8).margin(1e-300));
        auto e = conditional_mean_hits(c);
        auto oe = oracles::doob_mean_solve(c);
        for (int x = 1; x < N; ++x)
            REQUIRE(e[x] == Catch::Approx(oe[x]).epsilon(1e-8));
        REQUIRE(e[N] == 0.0);
        REQUIRE(e[1] == Catch::Approx(1.0 + e[2]).epsilon(1e-9));
    }
}

TEST_CASE("two-state continuous chain: E_0[tau_1] = 1/rate") {
    BirthDeathChain c;
    c.up = {3.5, 0.0};
    c.down = {0.0, 1.0};
    CHECK(mean_hitting_time_ct(c, 0, 1) == Catch::Approx(1.0 / 3.5).epsilon(1e-12));
}

TEST_CASE("three-state unit-rate chain against the linear-solve oracle") {
    BirthDeathChain c;
    c.up = {1.0, 1.0, 0.0};
    c.down = {0.0, 1.0, 1.0};
    auto oracle = oracles::ct_mean_solve(c, 2);
    CHECK(oracle[0] == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(mean_hitting_time_ct(c, 0, 2) == Catch::Approx(oracle[0]).epsilon(1e-11));
    CHECK(mean_hitting_time_ct(c, 1, 2) == Catch::Approx(oracle[1]).epsilon(1e-11));
}

TEST_CASE("continuous-time means match the oracle on random chains") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        int N = 5 + static_cast<int>(rng.uniform_below(60));
        BirthDeathChain c;
        c.up.assign(N + 1, 0.0);
        c.down.assign(N + 1, 0.0);
        for (int x = 0; x < N; ++x) c.up[x] = 0.2 + rng.uniform01();
        for (int x = 1; x <= N; ++x) c.down[x] = 0.2 + rng.uniform01();
        auto oracle = oracles::ct_mean_solve(c, N);
        for (int from : {0, N / 2, N - 1})
            REQUIRE(mean_hitting_time_ct(c, from, N) == Catch::Approx(oracle[from]).epsilon(1e-9));
    }
}

TEST_CASE("continuous-time mean agrees with Monte Carlo") {
    BirthDeathChain c;
    int N = 12;
    c.up.assign(N + 1, 0.0);
    c.down.assign(N + 1, 0.0);
    Rng init(5);
    for (int x = 0; x < N; ++x) c.up[x] = 0.5 + init.uniform01();
    for (int x = 1; x <= N; ++x) c.down[x] = 0.5 + init.uniform01();
    double exact = mean_hitting_time_ct(c, 0, N);
    Rng rng(99);
    double sum = 0, sq = 0;
    const int runs = 4000;
    for (int i = 0; i < runs; ++i) {
        auto hit = simulate_hit(c, 0, N, rng);
        REQUIRE(hit.reached);
        sum += hit.time;
        sq += hit.time * hit.time;
    }
    double mean = sum / runs;
    double se = std::sqrt((sq - runs * mean * mean) / (runs - 1) / runs);
    CHECK(std::abs(mean - exact) < 3 * se + 1e-12);
}

TEST_CASE("escape probability and 1-d capacity identity") {
    Rng rng(31);
    BirthDeathChain c = random_chain(40, rng);
    auto lnu = log_stationary_normalized(c);
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 40}, {3, 30}, {10, 25}}) {
        double cap = std::exp(log_capacity_1d(c, a, b));
        double flux = std::exp(lnu[a]) * (c.up[a] + c.down[a]);
        double esc = escape_prob_up(c, a, b);
        REQUIRE(cap == Catch::Approx(flux * esc).epsilon(1e-10));
    }
}

TEST_CASE("stationary measure satisfies detailed balance by construction") {
    Rng rng(41);
    BirthDeathChain c = random_chain(60, rng);
    auto lnu = log_stationary(c);
    for (int x = 0; x < 60; ++x) {
        double lhs = lnu[x] + std::log(c.up[x]);
        double rhs = lnu[x + 1] + std::log(c.down[x + 1]);
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12).margin(1e-12));
    }
}

TEST_CASE("chain validation rejects dead interiors") {
    BirthDeathChain c;
    c.up = {1.0, 0.0, 0.0};
    c.down = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(mean_hitting_time_ct(c, 1, 0), std::invalid_argument);
}
