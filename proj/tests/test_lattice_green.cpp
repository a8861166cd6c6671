#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rilab/lattice_green.hpp"

using namespace rilab;

TEST_SUITE("lattice_green") {

TEST_CASE("return values of Z^3, Z^4, Z^5") {
    // Watson's integral and its 4d/5d analogues
    CHECK(lattice_green(3).visits(origin()) == doctest::Approx(1.516386059151978).epsilon(1e-10));
    CHECK(lattice_green(4).visits(origin()) == doctest::Approx(1.239467121848).epsilon(1e-9));
    CHECK(lattice_green(5).visits(origin()) == doctest::Approx(1.156308).epsilon(1e-5));
}

TEST_CASE("mean value identity G(0) = 1 + G(e_1)") {
    for (int d : {3, 4}) {
        const auto& G = lattice_green(d);
        CHECK(G.visits(origin()) - G.visits(unit_vector(0)) == doctest::Approx(1).epsilon(1e-10));
    }
}

TEST_CASE("harmonic away from the origin") {
    const auto& G = lattice_green(3);
    for (Site x : {make_site({3, 1, 0}), make_site({5, 5, 2}), make_site({12, 0, 7})}) {
        double avg = 0;
        for (int i = 0; i < 3; ++i) avg += G.visits(x + unit_vector(i)) + G.visits(x - unit_vector(i));
        CHECK(avg / 6 == doctest::Approx(G.visits(x)).epsilon(1e-9));
    }
}

TEST_CASE("symmetric under signed permutations") {
    const auto& G = lattice_green(3);
    const double v = G.visits(make_site({4, -2, 1}));
    CHECK(G.visits(make_site({1, 4, 2})) == v);
    CHECK(G.visits(make_site({-2, -1, -4})) == v);
}

TEST_CASE("asymptotic constant and decay") {
    CHECK(LatticeGreen::asymptotic_constant(3) == doctest::Approx(3 / (2 * std::numbers::pi)));
    const auto& G = lattice_green(3);
    const Site far = make_site({60, 0, 0});
    CHECK(G.visits(far) * 60 == doctest::Approx(3 / (2 * std::numbers::pi)).epsilon(1e-3));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    std::vector<double> x, w;
    gauss_legendre(5, 0, 2, x, w);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 9);
    CHECK(s == doctest::Approx(102.4).epsilon(1e-13));
}

}
