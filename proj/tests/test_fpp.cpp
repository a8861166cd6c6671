#include <doctest.h>

#include <cmath>
#include <queue>

#include "rilab/fpp.hpp"

using namespace rilab;

namespace {

Graph z3() { return Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized); }

std::vector<char> bernoulli(std::size_t n, double p, Rng& rng) {
    std::vector<char> f(n);
    for (auto& c : f) c = rng.uniform() < p;
    return f;
}

// steps of a shortest lattice path from x to a site at distance > N, through
// sites of W with open[i]
int bfs_exit(const Graph& g, const SiteSet& W, const std::vector<char>& open, const Site& x, double N) {
    std::vector<int> dist(W.size(), -1);
    std::queue<std::int64_t> q;
    auto ix = W.index_of(x);
    if (!open[ix]) return -1;
    dist[ix] = 0;
    q.push(ix);
    while (!q.empty()) {
        auto i = q.front();
        q.pop();
        if (g.distance(x, W[i]) > N) return dist[i];
        g.for_each_neighbor(W[i], [&](const Site& y, double) {
            auto j = W.index_of(y);
            if (j >= 0 && open[j] && dist[j] < 0) {
                dist[j] = dist[i] + 1;
                q.push(j);
            }
        });
    }
    return -1;
}

}  // namespace

TEST_SUITE("fpp") {

TEST_CASE("all weights zero gives distance zero") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 6);
    auto w = build_weights(g, W, std::vector<char>(W.size(), 0), WeightKind::occupied_indicator, 1);
    auto r = fpp_distance(g, w, origin(), FppTarget::exit(5));
    CHECK(r.distance == 0);
    CHECK(g.distance(origin(), r.path.back()) > 5);
}

TEST_CASE("unit weights reproduce the BFS exit length") {
    Graph g = z3();
    for (double N : {2.0, 3.5, 5.0}) {
        SiteSet W = ball(g, origin(), N + 1);
        std::vector<char> all(W.size(), 1);
        auto w = build_weights(g, W, all, WeightKind::occupied_indicator, 1);
        auto r = fpp_distance(g, w, origin(), FppTarget::exit(N));
        // a path of k steps has k + 1 sites
        CHECK(r.distance == bfs_exit(g, W, all, origin(), N) + 1);
        CHECK(r.path.size() == static_cast<std::size_t>(r.distance));
    }
}

TEST_CASE("dijkstra equals the dynamic programme on dyadic weights") {
    Graph g = z3();
    Rng rng(1, 1);
    for (int rep = 0; rep < 20; ++rep) {
        const double N = 3 + rep % 4;
        SiteSet W = ball(g, make_site({rep % 3, 0, -1}), N + 1);
        auto w = build_weights(g, W, std::vector<char>(W.size(), 0), WeightKind::occupied_indicator, 1);
        for (auto& t : w.weights) t = double(rng.below(17)) / 16;
        const Site x = make_site({rep % 3, 0, -1});
        auto r = fpp_distance(g, w, x, FppTarget::exit(N));
        CHECK(r.distance == fpp_distance_dp(g, w, x, FppTarget::exit(N)));
        double s = 0;
        for (const auto& z : r.path) s += w.at(z);
        CHECK(s == r.distance);
        const Site y = x + make_site({2, -1, 1});
        CHECK(fpp_distance(g, w, x, FppTarget::site(y)).distance == fpp_distance_dp(g, w, x, FppTarget::site(y)));
    }
}

TEST_CASE("triangle inequality with the shared site counted once") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 6);
    Rng rng(2, 2);
    auto w = build_weights(g, W, bernoulli(W.size(), 0.5, rng), WeightKind::occupied_indicator, 1);
    for (int k = 0; k < 30; ++k) {
        auto pick = [&] { return w.lattice.sites[rng.below(w.lattice.sites.size())]; };
        Site a = pick(), b = pick(), c = pick();
        const double ab = fpp_distance(g, w, a, FppTarget::site(b)).distance;
        const double bc = fpp_distance(g, w, b, FppTarget::site(c)).distance;
        const double ac = fpp_distance(g, w, a, FppTarget::site(c)).distance;
        CHECK(ac <= ab + bc - w.at(b));
    }
}

TEST_CASE("zero distance is vacant connection") {
    Graph g = z3();
    const double N = 5;
    SiteSet W = ball(g, origin(), N + 1);
    Rng rng(3, 3);
    int zero = 0;
    for (int k = 0; k < 60; ++k) {
        auto occ = bernoulli(W.size(), 0.45 + 0.005 * k, rng);
        std::vector<char> vacant(W.size());
        for (std::size_t i = 0; i < W.size(); ++i) vacant[i] = !occ[i];
        auto w = build_weights(g, W, occ, WeightKind::occupied_indicator, 1);
        const bool connected = bfs_exit(g, W, vacant, origin(), N) >= 0;
        const double d = fpp_distance(g, w, origin(), FppTarget::exit(N)).distance;
        CHECK((d == 0) == connected);
        zero += d == 0;
    }
    CHECK(zero > 0);
    CHECK(zero < 60);
}

TEST_CASE("distance is monotone in the level and in N") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 9);
    WindowSampler ws(g, W, 3.0);
    Rng base(4, 0);
    for (int i = 0; i < 30; ++i) {
        Rng r = base.split(i);
        auto s = ws.sample(r);
        double prev = -1;
        for (double v : {0.5, 1.0, 2.0, 3.0}) {
            auto w = build_weights(g, s, v, WeightKind::occupied_indicator, 1);
            const double d = fpp_distance(g, w, origin(), FppTarget::exit(6)).distance;
            REQUIRE(d >= prev);
            prev = d;
        }
        auto w = build_weights(g, s, 3.0, WeightKind::occupied_indicator, 1);
        double prevN = -1;
        for (double N : {2.0, 4.0, 6.0, 8.0}) {
            const double d = fpp_distance(g, w, origin(), FppTarget::exit(N)).distance;
            REQUIRE(d >= prevN);
            prevN = d;
        }
    }
}

TEST_CASE("window too small is rejected") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 3);
    auto w = build_weights(g, W, std::vector<char>(W.size(), 1), WeightKind::occupied_indicator, 1);
    CHECK_THROWS(fpp_distance(g, w, origin(), FppTarget::exit(5)));
    CHECK_THROWS(build_weights(g, W, std::vector<char>(W.size(), 1), WeightKind::occupied_indicator, 2));
}

TEST_CASE("box weights live on the stride lattice") {
    Graph g = z3();
    SiteSet W = box_sites(3, make_site({-12, -12, -12}), make_site({12, 12, 12}));
    std::vector<char> occ(W.size(), 0);
    occ[W.index_of(make_site({5, 0, 0}))] = 1;
    auto w = build_weights(g, W, occ, WeightKind::box_nonempty, 4);
    double total = 0;
    for (double t : w.weights) total += t;
    CHECK(total == 1);
    CHECK(w.at(w.lattice.cell_of(make_site({5, 0, 0}))) == 1);
    auto dec = build_weights(g, W, occ, WeightKind::box_nonempty, 4, Monotonicity::decreasing);
    CHECK(dec.at(dec.lattice.cell_of(make_site({5, 0, 0}))) == 0);
}

TEST_CASE("local uniqueness") {
    Graph g = z3();
    const double N = 4, xi = 2;
    SiteSet W = ball(g, origin(), xi * N);
    std::vector<char> occ(W.size(), 0);
    CHECK(local_uniqueness(g, W, occ, origin(), N, xi));
    occ[W.index_of(make_site({1, 2, 0}))] = 1;
    CHECK(local_uniqueness(g, W, occ, origin(), N, xi));
    // two straight trajectories in disjoint tubes along e_1, never joined
    // inside B(0, xi N)
    std::fill(occ.begin(), occ.end(), 0);
    for (const auto& y : W)
        if ((y[1] == 2 || y[1] == -2) && y[2] == 0) occ[W.index_of(y)] = 1;
    CHECK_FALSE(local_uniqueness(g, W, occ, origin(), N, xi));
    // a bridge at x_1 = 6, outside B(0, N) but inside B(0, xi N), joins them
    for (std::int64_t k = -1; k <= 1; ++k) occ[W.index_of(make_site({6, k, 0}))] = 1;
    CHECK(local_uniqueness(g, W, occ, origin(), N, xi));
    CHECK_THROWS(local_uniqueness(g, ball(g, origin(), 5), std::vector<char>(ball(g, origin(), 5).size()), origin(), N,
                                  xi));
    CHECK_THROWS(local_uniqueness(g, W, occ, origin(), N, 1.0));
}

TEST_CASE("forced two-tube sample breaks local uniqueness") {
    // Two trajectories entering W on opposite sides and running straight
    // through B(0,N) in the tubes {x_2 = 3} and {x_2 = -3}.
    Graph g = z3();
    const double N = 5, xi = 2;
    InterlacementSample s;
    s.window = ball(g, origin(), xi * N);
    s.u = 1;
    for (std::int64_t side : {3, -3}) {
        Trajectory t;
        t.label = 0.5;
        for (std::int64_t a = -9; a <= 9; ++a) {
            auto i = s.window.index_of(make_site({a, side, 0}));
            if (i >= 0) t.forward.push_back(static_cast<std::int32_t>(i));
        }
        t.entry = t.forward.front();
        s.trajectories.push_back(t);
    }
    CHECK_FALSE(local_uniqueness(g, s, origin(), N, xi, 1.0));
    // at a level below both labels the set is empty, hence unique
    CHECK(local_uniqueness(g, s, origin(), N, xi, 0.25));
}

TEST_CASE("trace capacity of a walk stopped at N = 1") {
    Graph g = z3();
    Rng rng(5, 5);
    // B(0, 1/2) = {0}: the trace before exit is {0}
    auto c = walk_trace_capacity(g, origin(), 0.5, rng);
    CHECK(c.value == doctest::Approx(1 / 1.516386059151978).epsilon(1e-9));
}

TEST_CASE("confinement probability edge cases") {
    Graph g = z3();
    SiteSet big = ball(g, origin(), 10);
    CHECK(confinement_probability(g, origin(), 4, big) == doctest::Approx(1));
    CHECK(confinement_probability(g, make_site({20, 0, 0}), 4, big) == 0);
    const double p = confinement_probability(g, origin(), 6, tube_sites(g, 10, 1));
    CHECK(p > 0);
    CHECK(p < 1);
}

TEST_CASE("tube confinement: exact solve inside the MC interval") {
    Graph g = z3();
    for (int P : {1, 3, 5}) {
        auto t = tube_confinement(g, origin(), 10, P, Rng(6, P), 4000);
        CHECK(t.mc_interval.lower <= t.exact);
        CHECK(t.exact <= t.mc_interval.upper);
        for (const auto& c : t.centers) CHECK(t.tube.contains(c));
        if (P == 1) CHECK(t.exact == 1);
    }
    CHECK_THROWS(tube_confinement(g, origin(), 3, 4, Rng(6, 0), 10));
}

}
