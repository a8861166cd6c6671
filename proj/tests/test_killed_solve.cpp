#include <doctest.h>

#include <cmath>

#include "rilab/killed_solve.hpp"

using namespace rilab;

TEST_SUITE("killed_solve") {

TEST_CASE("exit time of the unit ball from 0 is 12/5") {
    // E_0 = 1 + E_1, E_1 = 1 + E_0 / 6
    Graph g = Graph::lattice(3);
    KilledOperator op(g, ball(g, origin(), 1));
    auto T = op.exit_time();
    CHECK(T[op.domain().index_of(origin())] == doctest::Approx(2.4).epsilon(1e-10));
    CHECK(T[op.domain().index_of(unit_vector(2))] == doctest::Approx(1.4).epsilon(1e-10));
}

TEST_CASE("symmetric reduction matches the full solve") {
    Graph g = Graph::lattice(3);
    const double R = 9.5;
    KilledOperator op(g, ball(g, origin(), R));
    SymmetricBall sb(3, R);
    auto full = op.exit_time();
    auto red = sb.solve_poisson(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sb.size())));
    for (Site x : {origin(), make_site({3, 2, 1}), make_site({0, 9, 0}), make_site({-5, 5, 4})})
        CHECK(red[sb.index_of(x)] == doctest::Approx(full[op.domain().index_of(x)]).epsilon(1e-8));
    // visits from the centre: column of the killed Green function times lambda
    auto vis = sb.visits_from_center();
    auto col = op.green_column(origin());
    CHECK(vis[sb.index_of(make_site({2, 1, 0}))] ==
          doctest::Approx(col[op.domain().index_of(make_site({2, 1, 0}))] * g.lambda(origin())).epsilon(1e-8));
}

TEST_CASE("exit time is about R^2 for large balls") {
    Graph g = Graph::lattice(3);
    SymmetricBall sb(3, 20);
    auto T = sb.solve_poisson(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sb.size())));
    // continuum value R^2 with a boundary layer correction
    CHECK(T[sb.index_of(origin())] / 400 == doctest::Approx(1).epsilon(0.06));
}

TEST_CASE("hitting before exit is harmonic and equals 1 on A") {
    Graph g = Graph::lattice(3);
    SiteSet D = ball(g, origin(), 6);
    SiteSet A = ball(g, origin(), 1);
    auto h = hit_before_exit(g, D, A);
    for (const auto& a : A) CHECK(h[D.index_of(a)] == doctest::Approx(1));
    const Site x = make_site({3, 2, 0});
    double avg = 0;
    for (int i = 0; i < 3; ++i) {
        for (Site y : {x + unit_vector(i), x - unit_vector(i)}) {
            auto j = D.index_of(y);
            avg += j < 0 ? 0 : h[j];
        }
    }
    CHECK(avg / 6 == doctest::Approx(h[D.index_of(x)]).epsilon(1e-9));
    auto esc = escape_before_exit(g, D, A);
    CHECK(esc.size() == static_cast<Eigen::Index>(A.size()));
    CHECK(esc[A.index_of(origin())] == doctest::Approx(0));
}

TEST_CASE("orbit sizes") {
    CHECK(orbit_size({0, 0, 0, 0, 0}, 3) == 1);
    CHECK(orbit_size({1, 0, 0, 0, 0}, 3) == 6);
    CHECK(orbit_size({1, 1, 0, 0, 0}, 3) == 12);
    CHECK(orbit_size({2, 1, 0, 0, 0}, 3) == 24);
    CHECK(orbit_size({3, 2, 1, 0, 0}, 3) == 48);
    CHECK(orbit_size({1, 1, 1, 0, 0}, 3) == 8);
}

}
