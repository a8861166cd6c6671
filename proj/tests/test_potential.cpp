#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rilab/lattice_green.hpp"
#include "rilab/potential.hpp"

using namespace rilab;

namespace {
const double kG0 = 1.516386059151978;  // return value of Z^3
}

TEST_SUITE("potential") {

TEST_CASE("capacity of a point in both scales") {
    Graph unit = Graph::lattice(3, DistanceKind::euclidean, WeightScale::unit);
    Graph norm = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    SiteSet P(3, {origin()});
    CHECK(equilibrium_and_capacity(unit, P).value == doctest::Approx(3.9567760).epsilon(1e-7));
    CHECK(equilibrium_and_capacity(norm, P).value == doctest::Approx(1 / kG0).epsilon(1e-10));
    CHECK(green(unit, origin(), origin(), GreenMethod::lattice_exact).value ==
          doctest::Approx(0.2527310098586630).epsilon(1e-10));
}

TEST_CASE("capacity of two neighbouring sites") {
    // e = 1 solves [[g0, g1], [g1, g0]] e = 1, so cap = 2 / (g0 + g1)
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    SiteSet A(3, {origin(), unit_vector(0)});
    const double g1 = kG0 - 1;
    CHECK(equilibrium_and_capacity(g, A).value == doctest::Approx(2 / (kG0 + g1)).epsilon(1e-9));
}

TEST_CASE("the three capacity methods agree within their brackets") {
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    SiteSet A = ball(g, origin(), 2);
    auto exact = equilibrium_and_capacity(g, A, CapacityMethod::green_matrix);
    CapacityParams p;
    p.kill_radius = 60;
    auto killed = equilibrium_and_capacity(g, A, CapacityMethod::exact_killed_solve, p);
    CHECK(killed.lower <= exact.value);
    CHECK(exact.value <= killed.upper);
    p.n_samples = 4000;
    p.seed = 3;
    auto mc = equilibrium_and_capacity(g, A, CapacityMethod::monte_carlo, p);
    CHECK(mc.lower <= exact.value);
    CHECK(exact.value <= mc.upper);
}

TEST_CASE("green methods agree") {
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    const Site x = make_site({2, 1, 0});
    auto ex = green(g, origin(), x, GreenMethod::lattice_exact);
    GreenParams p;
    p.kill_radius = 40;
    auto ks = green(g, origin(), x, GreenMethod::exact_killed_solve, p);
    CHECK(ks.lower <= ex.value);
    CHECK(ex.value <= ks.upper);
    p.n_samples = 20000;
    p.seed = 9;
    auto mc = green(g, origin(), x, GreenMethod::monte_carlo, p);
    CHECK(mc.lower <= ex.value);
    CHECK(ex.value <= mc.upper);
}

TEST_CASE("energy and hitting identities") {
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    SiteSet A = ball(g, make_site({1, 0, 0}), 2.3);
    auto cap = equilibrium_and_capacity(g, A);
    auto table = green_table(g, A, GreenMethod::lattice_exact);
    auto bar = cap.normalized();
    CHECK(energy(bar, table) * cap.value == doctest::Approx(1).epsilon(1e-9));
    for (const auto& x : A) {
        auto h = hitting_probability(g, x, cap);
        CHECK(h.lower <= 1 + 1e-9);
        CHECK(h.upper >= 1 - 1e-9);
    }
    auto far = hitting_probability(g, make_site({30, 0, 0}), cap);
    CHECK(far.value < 0.1);
    // unnormalised measures are rejected
    std::vector<double> bad(A.size(), 1.0);
    CHECK_THROWS(energy(bad, table));
}

TEST_CASE("f_nu branches") {
    CHECK(f_nu(std::exp(2.0), 1.0, 1.0) == doctest::Approx(std::exp(2.0) / 2));
    CHECK(f_nu(2.0, 1.0, 1.0) == doctest::Approx(2.0));
    CHECK(f_nu(16.0, 1.0, 0.5) == doctest::Approx(4.0));
    CHECK(f_nu(10.0, 2.0, 2.0) == doctest::Approx(20.0));
    CHECK_THROWS(f_nu(0.0, 1.0, 1.0));
}

TEST_CASE("scaling constants of Z^3") {
    auto n = ScalingConstants::lattice(3, WeightScale::normalized);
    CHECK(n.c_beta == doctest::Approx(std::numbers::pi / 3));
    CHECK(n.c_asymp == doctest::Approx(3 / (2 * std::numbers::pi)));
    auto u = ScalingConstants::lattice(3, WeightScale::unit);
    CHECK(u.c_beta == doctest::Approx(2 * std::numbers::pi));
    CHECK(std::isnan(ScalingConstants::lattice(4, WeightScale::normalized).c_beta));
}

TEST_CASE("calibrated constants bracket the lattice values") {
    const auto& gc = lattice_constants(3, WeightScale::normalized);
    CHECK(gc.nu == 1);
    CHECK(gc.C_G >= kG0 - 1e-9);
    CHECK(gc.c_cap <= gc.C_cap);
    auto c4 = equilibrium_and_capacity(Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized),
                                       ball(Graph::lattice(3), origin(), 4));
    CHECK(gc.c_cap * 4 <= c4.value);
    CHECK(c4.value <= gc.C_cap * 4);
}

TEST_CASE("tube capacity ratio and union bound") {
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    auto rep = tube_capacity_check(g, 200, 4, 0.0);
    CHECK(rep.ratio.value >= 0.8);
    CHECK(rep.ratio.value <= 1.2);
    CHECK(rep.union_lower_bound <= rep.cap.upper);
    auto sc = ScalingConstants::lattice(3, WeightScale::normalized);
    const double lb = union_capacity_lower_bound(2.0, 10, 100, 1, 0, sc);
    CHECK(lb == doctest::Approx(1 / (1 / 20.0 + 1 / (sc.c_beta * 100 / std::log(10.0)))));
}

TEST_CASE("laplace functional prediction") {
    Graph g = Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized);
    auto t1 = green_table(g, SiteSet(3, {origin()}), GreenMethod::lattice_exact);
    CHECK(laplace_functional_prediction(t1, {0.0}, 2.0) == doctest::Approx(1));
    // single site: exp(-u theta / (1 + theta g(0,0)))
    const double th = 0.7, u = 1.3;
    CHECK(laplace_functional_prediction(t1, {-th}, u) == doctest::Approx(std::exp(-u * th / (1 + th * kG0))));
    // positive single site: exp(u v / (1 - v g(0,0)))
    CHECK(laplace_functional_prediction(t1, {0.1}, u) == doctest::Approx(std::exp(u * 0.1 / (1 - 0.1 * kG0))));
    CHECK_THROWS(laplace_functional_prediction(t1, {1.0}, u));
}

TEST_CASE("symmetry group of a centred ball has 48 elements") {
    Graph g = Graph::lattice(3);
    CHECK(set_symmetries(ball(g, origin(), 3)).size() == 48);
    CHECK(set_symmetries(tube_sites(g, 10, 2)).size() == 16);
}

}
