#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metaspin/graph.hpp"
#include "metaspin/spin.hpp"

using namespace metaspin;

TEST_CASE("energy of homogeneous configurations on K_4") {
    ErGraph k4 = generate_er(4, 1.0, 1);
    CHECK(energy(k4, SpinConfig::all_minus(4), 0.1) == Catch::Approx(-1.1).epsilon(1e-14));
    CHECK(energy(k4, SpinConfig::all_plus(4), 0.1) == Catch::Approx(-1.9).epsilon(1e-14));
    CHECK(energy_all_minus(k4, 0.1) == Catch::Approx(-1.1).epsilon(1e-14));
}

TEST_CASE("boundary form equals direct form") {
    Rng rng(17);
    ErGraph g = generate_er(14, 0.4, 321);
    for (int trial = 0; trial < 1000; ++trial) {
        int k = static_cast<int>(rng.uniform_below(15));
        SpinConfig s = SpinConfig::uniform_with_volume(14, k, rng);
        double e1 = energy(g, s, 0.15);
        double e2 = energy_via_boundary(g, s, 0.15);
        REQUIRE(e1 == Catch::Approx(e2).epsilon(1e-12).margin(1e-12));
    }
}

TEST_CASE("boundary form special cases") {
    ErGraph g = generate_er(10, 0.5, 5);
    double h = 0.2;
    SpinConfig minus = SpinConfig::all_minus(10);
    CHECK(energy_via_boundary(g, minus, h) == Catch::Approx(energy_all_minus(g, h)).epsilon(1e-14));
    for (int v = 0; v < 10; ++v) {
        SpinConfig s = SpinConfig::all_minus(10);
        s.set_plus(v);
        double expect = energy_all_minus(g, h) + 2.0 * g.degree(v) / 10.0 - 2 * h;
        CHECK(energy_via_boundary(g, s, h) == Catch::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("flip difference matches recomputation and is antisymmetric") {
    Rng rng(23);
    ErGraph g = generate_er(50, 0.6, 99);
    double h = 0.08;
    for (int trial = 0; trial < 10000; ++trial) {
        int k = static_cast<int>(rng.uniform_below(51));
        SpinConfig s = SpinConfig::uniform_with_volume(50, k, rng);
        int v = static_cast<int>(rng.uniform_below(50));
        double d = delta_energy_flip(g, s, v, h);
        double before = energy(g, s, h);
        SpinConfig flipped = s;
        flipped.flip(v);
        double after = energy(g, flipped, h);
        REQUIRE(d == Catch::Approx(after - before).epsilon(1e-12).margin(1e-12));
        REQUIRE(delta_energy_flip(g, flipped, v, h) == -d);
    }
}

TEST_CASE("flip difference closed forms at the extremes") {
    int n = 8;
    ErGraph g = generate_er(n, 0.7, 2);
    double h = 0.05;
    SpinConfig minus = SpinConfig::all_minus(n);
    for (int v = 0; v < n; ++v)
        CHECK(delta_energy_flip(g, minus, v, h) ==
              Catch::Approx(2.0 * g.degree(v) / n - 2 * h).epsilon(1e-14));
    ErGraph kn = generate_er(n, 1.0, 2);
    SpinConfig plus = SpinConfig::all_plus(n);
    for (int v = 0; v < n; ++v)
        CHECK(delta_energy_flip(kn, plus, v, h) ==
              Catch::Approx(2.0 * (n - 1) / n + 2 * h).epsilon(1e-14));
}

TEST_CASE("magnetization and volume stay in bijection") {
    SpinConfig s(4);
    CHECK(s.magnetization() == -1.0);
    s = SpinConfig::all_plus(4);
    CHECK(s.magnetization() == 1.0);
    Rng rng(3);
    s = SpinConfig::uniform_with_volume(4, 3, rng);
    CHECK(s.magnetization() == Catch::Approx(0.5));
    for (int trial = 0; trial < 100; ++trial) {
        int k = static_cast<int>(rng.uniform_below(33));
        SpinConfig t = SpinConfig::uniform_with_volume(32, k, rng);
        REQUIRE(t.volume() == k);
        REQUIRE(t.volume() == t.recount());
        REQUIRE(t.magnetization() == Catch::Approx(2.0 * k / 32 - 1).epsilon(1e-15));
    }
}

TEST_CASE("mean-field flip difference matches the K_n graph at p=1") {
    int n = 60;
    ErGraph kn = generate_er(n, 1.0, 8);
    ModelParams pr;
    pr.p = 1.0;
    pr.beta = 1.5;
    pr.h = 0.1;
    pr.n = n;
    pr.kind = ModelKind::mean_field;
    Rng rng(4);
    for (int k = 0; k < n; ++k) {
        SpinConfig s = SpinConfig::uniform_with_volume(n, k, rng);
        int v = 0;
        while (s.plus(v)) ++v;  // an up-flip candidate
        REQUIRE(mean_field_delta_up(pr, k) == delta_energy_flip(kn, s, v, pr.h));
        if (k > 0) {
            int w = 0;
            while (!s.plus(w)) ++w;
            REQUIRE(mean_field_delta_down(pr, k) == delta_energy_flip(kn, s, w, pr.h));
        }
    }
}

TEST_CASE("mean-field flip difference is the p-scaled K_n difference") {
    // the interaction part of the K_n flip difference scales linearly in the
    // coupling: dH_p(k) + 2h = p (dH_1(k) + 2h)
    int n = 48;
    ErGraph kn = generate_er(n, 1.0, 3);
    double h = 0.06;
    ModelParams p1 = {1.0, 2.0, h, n, ModelKind::mean_field};
    ModelParams pp = {0.35, 2.0, h, n, ModelKind::mean_field};
    Rng rng(6);
    for (int k = 0; k < n; ++k) {
        SpinConfig s = SpinConfig::uniform_with_volume(n, k, rng);
        int v = 0;
        while (s.plus(v)) ++v;
        double graph_delta = delta_energy_flip(kn, s, v, h);
        REQUIRE(mean_field_delta_up(pp, k) ==
                Catch::Approx(pp.p * (graph_delta + 2 * h) - 2 * h).epsilon(1e-12).margin(1e-15));
        REQUIRE(mean_field_delta_up(p1, k) == graph_delta);
    }
}

TEST_CASE("mean-field energy differences telescope") {
    ModelParams pr;
    pr.p = 0.45;
    pr.beta = 2.0;
    pr.h = 0.07;
    pr.n = 30;
    for (int k = 0; k < 30; ++k) {
        double diff = mean_field_energy(pr, k + 1) - mean_field_energy(pr, k);
        REQUIRE(diff == Catch::Approx(mean_field_delta_up(pr, k)).epsilon(1e-11).margin(1e-12));
    }
}

TEST_CASE("hex serialization round trip, most-significant vertex first") {
    SpinConfig s(5);
    s.set_plus(0);
    s.set_plus(4);
    CHECK(s.to_hex() == "11");
    CHECK(SpinConfig::from_hex(5, "11") == s);
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_below(130));
        int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n + 1)));
        SpinConfig t = SpinConfig::uniform_with_volume(n, k, rng);
        REQUIRE(SpinConfig::from_hex(n, t.to_hex()) == t);
    }
    CHECK_THROWS_AS(SpinConfig::from_hex(5, "111"), std::invalid_argument);
    CHECK_THROWS_AS(SpinConfig::from_hex(5, "1g"), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    ModelParams pr;
    pr.p = 0.5;
    pr.beta = 1.0;
    pr.h = -0.1;
    pr.n = 5;
    CHECK_THROWS_AS(pr.validate(), std::invalid_argument);
    pr.h = 0.0;
    CHECK_NOTHROW(pr.validate());  // h = 0 allowed for diagnostics
    pr.beta = 0.0;
    CHECK_THROWS_AS(pr.validate(), std::invalid_argument);
    ErGraph g = generate_er(4, 1.0, 1);
    SpinConfig wrong(5);
    CHECK_THROWS_AS(energy(g, wrong, 0.1), std::invalid_argument);
}
