#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "metaspin/rate_tree.hpp"
#include "metaspin/rng.hpp"

using namespace metaspin;

TEST_CASE("rate tree totals and updates") {
    RateTree t(5);
    std::vector<double> r = {0.5, 1.0, 0.0, 2.0, 0.25};
    t.rebuild(r);
    CHECK(t.total() == Catch::Approx(3.75).epsilon(1e-15));
    t.set(2, 4.0);
    CHECK(t.total() == Catch::Approx(7.75).epsilon(1e-15));
    CHECK(t.rate(2) == 4.0);
}

TEST_CASE("sampling respects the weights") {
    RateTree t(4);
    t.rebuild({1.0, 0.0, 3.0, 0.5});
    Rng rng(1);
    std::vector<int> counts(4, 0);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) ++counts[t.sample(rng.uniform01())];
    CHECK(counts[1] == 0);
    double total = 4.5;
    for (int i : {0, 2, 3}) {
        double expect = draws * t.rate(i) / total;
        REQUIRE(std::abs(counts[i] - expect) < 4 * std::sqrt(expect));
    }
}

TEST_CASE("sampling never returns zero-weight leaves") {
    RateTree t(6);
    t.rebuild({0.0, 0.0, 1e-3, 0.0, 2.0, 0.0});
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        int v = t.sample(rng.uniform01());
        REQUIRE((v == 2 || v == 4));
    }
}
