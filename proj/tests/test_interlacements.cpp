#include <doctest.h>

#include <cmath>

#include "rilab/interlacements.hpp"
#include "rilab/stats.hpp"

using namespace rilab;

namespace {
Graph z3() { return Graph::lattice(3, DistanceKind::euclidean, WeightScale::normalized); }
}

TEST_SUITE("interlacements") {

TEST_CASE("number of trajectories is Poisson(u cap)") {
    Graph g = z3();
    WindowSampler ws(g, ball(g, origin(), 2), 0.3);
    Rng rng(1, 1);
    Welford w;
    for (int i = 0; i < 20000; ++i) w.add(double(ws.sample_count(rng)));
    const double mean = 0.3 * ws.capacity().value;
    CHECK(std::abs(w.mean() - mean) < 4 * w.se());
    CHECK(w.variance() == doctest::Approx(mean).epsilon(0.05));
}

TEST_CASE("entry law is the normalised equilibrium measure") {
    Graph g = z3();
    WindowSampler ws(g, ball(g, origin(), 1), 1.0);
    auto bar = ws.capacity().normalized();
    std::vector<int> counts(bar.size());
    Rng rng(2, 2);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[ws.sample_entry(rng)];
    for (std::size_t k = 0; k < bar.size(); ++k)
        CHECK(std::abs(counts[k] / double(n) - bar[k]) <= 4 * std::sqrt(bar[k] * (1 - bar[k]) / n));
}

TEST_CASE("emptiness of a sub-window has probability exp(-u cap)") {
    Graph g = z3();
    const double u = 0.4;
    SiteSet W = ball(g, origin(), 3);
    SiteSet K = ball(g, origin(), 1);
    WindowSampler ws(g, W, u);
    const double cap = equilibrium_and_capacity(g, K).value;
    Rng base(3, 0);
    int empty = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        Rng r = base.split(i);
        auto s = ws.sample(r);
        auto occ = s.occupied();
        bool hit = false;
        for (const auto& x : K) hit = hit || occ.contains(x);
        empty += !hit;
    }
    const double p = std::exp(-u * cap);
    CHECK(std::abs(empty / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n) + ws.bias_bound());
}

TEST_CASE("levels are nested") {
    Graph g = z3();
    WindowSampler ws(g, ball(g, origin(), 3), 2.0);
    Rng base(4, 0);
    for (int i = 0; i < 200; ++i) {
        Rng r = base.split(i);
        auto s = ws.sample(r);
        auto lv = coupled_levels(s, {0.25, 0.5, 1.0, 2.0});
        REQUIRE(lv.size() == 4);
        for (std::size_t k = 1; k < lv.size(); ++k) REQUIRE(lv[k - 1].subset_of(lv[k]));
        REQUIRE(lv.back() == s.occupied());
        for (const auto& t : s.trajectories) {
            REQUIRE(t.label > 0);
            REQUIRE(t.label <= 2.0);
            REQUIRE(t.forward.front() == t.entry);
        }
    }
}

TEST_CASE("local times increase with the level and have mean u") {
    Graph g = z3();
    const double u = 1.0;
    WindowSampler ws(g, ball(g, origin(), 2), u);
    Rng base(5, 0);
    Welford w;
    for (int i = 0; i < 3000; ++i) {
        Rng r = base.split(i);
        auto s = ws.sample(r);
        auto lo = local_times(g, s, r.split(7), 0.5);
        auto hi = local_times(g, s, r.split(7), 1.0);
        for (Eigen::Index k = 0; k < lo.times.size(); ++k) REQUIRE(lo.times[k] <= hi.times[k]);
        w.add(hi.at(origin()));
    }
    // E[l_x] = u in the normalised scale
    CHECK(std::abs(w.mean() - u) < 4 * w.se());
}

TEST_CASE("json round trip") {
    Graph g = z3();
    WindowSampler ws(g, ball(g, make_site({2, -1, 0}), 3), 1.5);
    Rng r(6, 6);
    auto s = ws.sample(r);
    REQUIRE_FALSE(s.trajectories.empty());
    auto back = sample_from_json(to_json(s));
    CHECK(back.u == s.u);
    CHECK(back.window == s.window);
    REQUIRE(back.trajectories.size() == s.trajectories.size());
    for (std::size_t k = 0; k < s.trajectories.size(); ++k) {
        CHECK(back.trajectories[k].label == s.trajectories[k].label);
        CHECK(back.trajectories[k].entry == s.trajectories[k].entry);
        CHECK(back.trajectories[k].forward == s.trajectories[k].forward);
    }
    CHECK(to_json(back) == to_json(s));
    CHECK_THROWS(sample_from_json("{\"schema_version\": 999}"));
}

TEST_CASE("skipping the backward walk leaves the occupied set law unchanged") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 2);
    SamplerParams on, off;
    off.sample_backward = false;
    WindowSampler a(g, W, 0.5, on), b(g, W, 0.5, off);
    Welford wa, wb;
    for (int i = 0; i < 6000; ++i) {
        Rng ra = Rng(7, 1).split(i), rb = Rng(7, 2).split(i);
        auto sa = a.sample(ra);
        auto sb = b.sample(rb);
        wa.add(double(sa.occupied().size()));
        wb.add(double(sb.occupied().size()));
        for (const auto& t : sb.trajectories) REQUIRE(t.backward_attempts == 0);
        for (const auto& t : sa.trajectories) REQUIRE(t.backward_attempts >= 1);
    }
    CHECK(std::abs(wa.mean() - wb.mean()) < 4 * std::hypot(wa.se(), wb.se()));
}

TEST_CASE("trajectory_hits agrees with the stored forward walk") {
    Graph g = z3();
    SiteSet W = ball(g, origin(), 3);
    SamplerParams sp;
    sp.sample_backward = false;
    WindowSampler ws(g, W, 1.0, sp);
    std::vector<char> flags(W.size(), 0);
    flags[W.index_of(origin())] = 1;
    int hits_a = 0, hits_b = 0;
    const int n = 8000;
    for (int i = 0; i < n; ++i) {
        Rng ra = Rng(8, 1).split(i), rb = Rng(8, 2).split(i);
        hits_a += ws.trajectory_hits(flags, ra);
        auto t = ws.sample_trajectory(rb);
        bool h = false;
        for (auto k : t.forward) h = h || flags[k];
        hits_b += h;
    }
    // P(hit 0) = cap({0}) / cap(W) for a trajectory started from e_W
    const double p = equilibrium_and_capacity(g, SiteSet(3, {origin()})).value / ws.capacity().value;
    CHECK(std::abs(hits_a / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
    CHECK(std::abs(hits_b / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
}

}
