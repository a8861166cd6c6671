#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rilab/rng.hpp"

using namespace rilab;

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible and distinct") {
    Rng a = Rng::for_stream(7, {1, 2, 3});
    Rng b = Rng::for_stream(7, {1, 2, 3});
    Rng c = Rng::for_stream(7, {1, 2, 4});
    Rng d = Rng::for_stream(8, {1, 2, 3});
    for (int i = 0; i < 100; ++i) {
        auto x = a();
        CHECK(x == b());
        CHECK(x != c());
        CHECK(x != d());
    }
    CHECK(a.split(0)() != a.split(1)());
    CHECK(a.split(5)() == b.split(5)());
}

TEST_CASE("uniform moments") {
    Rng r(1, 2);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        REQUIRE(u >= 0);
        REQUIRE(u < 1);
        s += u;
        s2 += u * u;
    }
    CHECK(std::abs(s / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(s2 / n - 1.0 / 3) < 0.005);
}

TEST_CASE("below is unbiased (chi-square, 9 classes)") {
    Rng r(3, 4);
    const int n = 90000, k = 9;
    std::vector<int> counts(k);
    for (int i = 0; i < n; ++i) ++counts[r.below(k)];
    double chi2 = 0;
    for (int c : counts) chi2 += (c - n / k) * double(c - n / k) / (n / k);
    // 8 degrees of freedom: P(chi2 > 26.1) = 0.001
    CHECK(chi2 < 26.1);
}

TEST_CASE("exponential mean") {
    Rng r(9, 9);
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += r.exponential();
    CHECK(std::abs(s / n - 1) < 4 / std::sqrt(double(n)));
}

}
