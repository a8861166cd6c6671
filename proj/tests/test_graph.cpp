#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "rilab/graph.hpp"

using namespace rilab;

TEST_SUITE("graph") {

TEST_CASE("ball sizes match a brute-force count") {
    for (int d : {3, 4}) {
        Graph g = Graph::lattice(d);
        for (double r : {0.0, 1.0, 1.5, 2.0, 3.2, 5.0}) {
            const auto R = static_cast<std::int64_t>(std::floor(r));
            std::int64_t count = 0;
            Site x{};
            std::function<void(int)> rec = [&](int k) {
                if (k == d) {
                    count += double(norm2_sq(x, d)) <= r * r + 1e-9;
                    return;
                }
                for (x[k] = -R; x[k] <= R; ++x[k]) rec(k + 1);
                x[k] = 0;
            };
            rec(0);
            CHECK(ball(g, origin(), r).size() == static_cast<std::size_t>(count));
        }
    }
    // 1, 7, 19, 27 + 6 = 33 in Z^3
    Graph g = Graph::lattice(3);
    CHECK(ball(g, origin(), 0).size() == 1);
    CHECK(ball(g, origin(), 1).size() == 7);
    CHECK(ball(g, origin(), std::sqrt(2.0)).size() == 19);
    CHECK(ball(g, origin(), 2).size() == 33);
}

TEST_CASE("graph distance balls are l1 balls") {
    Graph g = Graph::lattice(3, DistanceKind::graph);
    CHECK(ball(g, origin(), 2).size() == 25);
    CHECK(g.distance(origin(), make_site({1, -2, 3})) == 6);
}

TEST_CASE("boundaries of the unit ball") {
    Graph g = Graph::lattice(3);
    SiteSet B = ball(g, origin(), 1);
    CHECK(boundary(g, B).size() == 6);
    CHECK_FALSE(boundary(g, B).contains(origin()));
    // outer boundary: 6 at distance 2, 12 at sqrt 2
    CHECK(outer_boundary(g, B).size() == 18);
}

TEST_CASE("weights and lambda per scale") {
    Graph u = Graph::lattice(3, DistanceKind::euclidean, WeightScale::unit);
    Graph n = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    CHECK(u.lambda(origin()) == doctest::Approx(6));
    CHECK(n.lambda(origin()) == doctest::Approx(1));
    CHECK(n.weight(origin(), unit_vector(1)) == doctest::Approx(1.0 / 6));
    CHECK(u.weight(origin(), make_site({1, 1})) == 0);
}

TEST_CASE("site sets deduplicate and index") {
    SiteSet S(3, {make_site({1, 0, 0}), make_site({0, 0, 0}), make_site({1, 0, 0})});
    CHECK(S.size() == 2);
    CHECK(S[0] == origin());
    CHECK(S.index_of(make_site({1, 0, 0})) == 1);
    CHECK(S.index_of(make_site({5, 0, 0})) == -1);
    CHECK(S.subset_of(set_union(S, SiteSet(3, {make_site({0, 2, 0})}))));
}

TEST_CASE("tube sites") {
    Graph g = Graph::lattice(3);
    SiteSet T = tube_sites(g, 10, 2);
    CHECK(T.size() == 11 * 5 * 5);
    CHECK(T.contains(make_site({10, -2, 2})));
    CHECK_FALSE(T.contains(make_site({-1, 0, 0})));
}

TEST_CASE("renormalised cells partition a 40^3 window") {
    Graph g = Graph::lattice(3);
    SiteSet W = box_sites(3, make_site({-20, -20, -20}), make_site({19, 19, 19}));
    for (double L : {2.0, 5.0, 7.0, 12.0}) {
        RenormLattice lat = renorm_sites(g, L, W);
        CHECK(lat.stride == renorm_stride(L, 3));
        std::size_t total = 0;
        for (const auto& z : lat.sites) {
            auto cell = lat.cell_sites(z, W);
            total += cell.size();
            for (const auto& x : cell) CHECK(lat.cell_of(x) == z);
        }
        CHECK(total == W.size());
        // every site within L/2 of its cell centre, so L-balls cover
        for (const auto& x : W) REQUIRE(g.distance(x, lat.cell_of(x)) <= L / 2 + 1e-9);
    }
}

TEST_CASE("table graph from a file") {
    Graph g = Graph::load(std::string(RILAB_TEST_DATA) + "/square.graph");
    CHECK_FALSE(g.is_lattice());
    CHECK(g.dim() == 2);
    CHECK(g.degree(make_site({0, 0})) == 3);
    CHECK(g.lambda(make_site({0, 0})) == doctest::Approx(2.5));
    CHECK(g.lambda(make_site({1, 0})) == doctest::Approx(2.0));
    CHECK(g.distance(make_site({0, 0}), make_site({1, 1})) == doctest::Approx(1));
    CHECK_THROWS(Graph::load(std::string(RILAB_TEST_DATA) + "/missing.graph"));
}

}
