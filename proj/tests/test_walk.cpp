#include <doctest.h>

#include <cmath>
#include <map>

#include "rilab/killed_solve.hpp"
#include "rilab/lattice_green.hpp"
#include "rilab/potential.hpp"
#include "rilab/stats.hpp"
#include "rilab/walk.hpp"

using namespace rilab;

TEST_SUITE("walk") {

TEST_CASE("step kernel is uniform over the 2d neighbours") {
    Graph g = Graph::lattice(3);
    Rng rng(11, 0);
    std::map<Site, int> counts;
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++counts[step(g, origin(), rng)];
    CHECK(counts.size() == 6);
    double chi2 = 0;
    for (const auto& [y, c] : counts) {
        CHECK(norm1(y, 3) == 1);
        chi2 += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
    }
    // 5 degrees of freedom: P(chi2 > 20.5) = 0.001
    CHECK(chi2 < 20.5);
}

TEST_CASE("step kernel on a table graph follows the edge weights") {
    Graph g = Graph::from_table(1, {make_site({0}), make_site({1}), make_site({2})}, {{0, 1, 3.0}, {0, 2, 1.0}});
    Rng rng(5, 5);
    int to1 = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) to1 += step(g, make_site({0}), rng) == make_site({1});
    CHECK(std::abs(to1 / double(n) - 0.75) < 4 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("mean exit time agrees with the Poisson solve") {
    Graph g = Graph::lattice(3);
    SiteSet D = ball(g, origin(), 5);
    KilledOperator op(g, D);
    const double exact = op.exit_time()[D.index_of(origin())];
    Rng rng(1, 1);
    Welford w;
    for (int i = 0; i < 5000; ++i) w.add(double(run_until_exit(g, origin(), D, rng).steps));
    CHECK(std::abs(w.mean() - exact) < 4 * w.se());
}

TEST_CASE("trace stays in the domain and exit site is outside") {
    Graph g = Graph::lattice(3);
    SiteSet D = ball(g, origin(), 4);
    Rng rng(2, 2);
    auto t = run_until_exit(g, origin(), D, rng);
    REQUIRE(t.exit_site);
    CHECK_FALSE(D.contains(*t.exit_site));
    CHECK(t.visited.subset_of(D));
    CHECK(t.path.size() == t.steps);
}

TEST_CASE("escape probability of a point is 1/G(0)") {
    Graph g = Graph::lattice(3);
    const auto gc = lattice_constants(3, WeightScale::unit);
    auto e = escape_probability(g, origin(), SiteSet(3, {origin()}), 1e4, 20000, Rng(3, 3), gc);
    const double exact = 1 / lattice_green(3).visits(origin());
    CHECK(e.lower <= exact);
    CHECK(exact <= e.upper);
    CHECK(std::abs(e.point_estimate - exact) < 0.015);
}

TEST_CASE("jumps stay inside the free room") {
    const auto& J = lattice_jumper(3);
    Rng rng(4, 4);
    for (double room : {4.5, 8.0, 20.0, 300.0}) {
        for (int i = 0; i < 200; ++i) {
            Site y = make_site({100, 0, 0});
            J.jump(y, room, rng);
            REQUIRE(norm2(y - make_site({100, 0, 0}), 3) < room);
        }
    }
}

TEST_CASE("entrance bound is decreasing and inverted by factor_for") {
    const auto gc = lattice_constants(3, WeightScale::normalized);
    CHECK(gc.entrance_bound(10) > gc.entrance_bound(100));
    const double K = gc.factor_for(1e-3);
    CHECK(gc.entrance_bound(K) <= 1e-3 * (1 + 1e-9));
}

}
