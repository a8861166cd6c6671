#include "rilab/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "rilab/killed_solve.hpp"
#include "rilab/walk.hpp"

namespace rilab {

std::string to_string(WeightKind k) {
    switch (k) {
        case WeightKind::occupied_indicator: return "occupied_indicator";
        case WeightKind::box_nonempty: return "box_nonempty";
        case WeightKind::box_capacity_threshold: return "box_capacity_threshold";
    }
    return "?";
}

WeightKind parse_weight_kind(const std::string& s) {
    if (s == "occupied_indicator") return WeightKind::occupied_indicator;
    if (s == "box_nonempty") return WeightKind::box_nonempty;
    if (s == "box_capacity_threshold") return WeightKind::box_capacity_threshold;
    throw std::invalid_argument("unknown weight kind: " + s);
}

// ---------------------------------------------------------------- weights

namespace {

// Largest capacity among the clusters of occupied sites in `sites`, stopping
// as soon as one reaches kappa.
bool has_cluster_with_capacity(const Graph& g, const std::vector<Site>& sites, double kappa, double cap_point) {
    if (sites.empty()) return kappa <= 0;
    SiteSet S(g.dim(), sites);
    UnionFind uf(S.size());
    for (std::size_t i = 0; i < S.size(); ++i)
        g.for_each_neighbor(S[i], [&](const Site& y, double) {
            auto j = S.index_of(y);
            if (j >= 0) uf.unite(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
        });
    std::vector<std::vector<Site>> clusters(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) clusters[uf.find(static_cast<std::int32_t>(i))].push_back(S[i]);
    std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& c : clusters) {
        if (c.empty()) break;
        // subadditivity: cap(C) <= |C| cap({x})
        if (static_cast<double>(c.size()) * cap_point < kappa) break;
        auto est = equilibrium_and_capacity(g, SiteSet(g.dim(), c), CapacityMethod::green_matrix);
        if (est.value >= kappa) return true;
    }
    return false;
}

}  // namespace

FppWeights build_weights(const Graph& g, const SiteSet& window, const std::vector<char>& occupied, WeightKind kind,
                         double R, Monotonicity mono, double kappa) {
    if (!g.is_lattice()) throw std::invalid_argument("build_weights: lattice graphs only");
    if (occupied.size() != window.size()) throw std::invalid_argument("build_weights: occupancy does not match window");
    if (kind == WeightKind::occupied_indicator && R != 1)
        throw std::invalid_argument("build_weights: occupied_indicator needs R = 1");
    if (kind == WeightKind::box_capacity_threshold && !(kappa > 0))
        throw std::invalid_argument("build_weights: capacity threshold must be positive");
    FppWeights w;
    w.R = R;
    w.kind = kind;
    w.monotonicity = mono;
    w.kappa = kappa;
    RenormLattice all = renorm_sites(g, R, window);
    auto occ = [&](const Site& x) {
        auto i = window.index_of(x);
        return i >= 0 && occupied[i];
    };
    const double cap_point = kind == WeightKind::box_capacity_threshold
                                 ? equilibrium_and_capacity(g, SiteSet(g.dim(), {Site{}})).upper
                                 : 0.0;
    const auto cell_volume = static_cast<std::size_t>(std::llround(std::pow(double(all.stride), g.dim())));
    std::vector<Site> keep;
    for (const auto& z : all.sites) {
        double t;
        if (kind == WeightKind::occupied_indicator) {
            if (!window.contains(z)) continue;
            t = occ(z) ? 1 : 0;
        } else if (kind == WeightKind::box_nonempty) {
            auto cell = all.cell_sites(z, window);
            if (cell.size() != cell_volume) continue;
            t = std::any_of(cell.begin(), cell.end(), occ) ? 1 : 0;
        } else {
            SiteSet B = ball(g, z, R);
            if (!B.subset_of(window)) continue;
            std::vector<Site> hit;
            for (const auto& x : B)
                if (occ(x)) hit.push_back(x);
            t = has_cluster_with_capacity(g, hit, kappa, cap_point) ? 1 : 0;
        }
        keep.push_back(z);
        w.weights.push_back(mono == Monotonicity::increasing ? t : 1 - t);
    }
    if (keep.empty()) throw std::invalid_argument("build_weights: window too small for any weight");
    w.lattice = all;
    // keep is in the lexicographic order of all.sites, so weights stay aligned
    w.lattice.sites = SiteSet(g.dim(), std::move(keep));
    return w;
}

FppWeights build_weights(const Graph& g, const InterlacementSample& s, double level, WeightKind kind, double R,
                         Monotonicity mono, double kappa) {
    return build_weights(g, s.window, s.occupied_flags(level), kind, R, mono, kappa);
}

FppWeights build_weights(const Graph& g, const LocalTimeField& f, WeightKind kind, double R, Monotonicity mono,
                         double kappa) {
    std::vector<char> occ(f.window.size());
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = f.times[static_cast<Eigen::Index>(i)] > 0;
    return build_weights(g, f.window, occ, kind, R, mono, kappa);
}

// ---------------------------------------------------------------- distances

namespace {

struct Search {
    std::vector<std::int64_t> sources;
    std::vector<char> is_target;
};

Search setup(const Graph& g, const FppWeights& w, const Site& x, const FppTarget& t) {
    const SiteSet& S = w.lattice.sites;
    Search s;
    s.is_target.assign(S.size(), 0);
    const auto cx = S.index_of(w.lattice.cell_of(x));
    if (cx < 0) throw std::invalid_argument("fpp_distance: start outside the weighted window");
    s.sources.push_back(cx);
    if (t.to_site) {
        auto ty = S.index_of(w.lattice.cell_of(t.y));
        if (ty < 0) throw std::invalid_argument("fpp_distance: target outside the weighted window");
        s.is_target[ty] = 1;
        return s;
    }
    bool any = false;
    for (std::size_t i = 0; i < S.size(); ++i) {
        const double d = g.distance(x, S[i]);
        if (d <= t.L && static_cast<std::int64_t>(i) != cx) s.sources.push_back(static_cast<std::int64_t>(i));
        if (d > t.N) {
            s.is_target[i] = 1;
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("fpp_distance: no lattice site beyond distance N in the window");
    return s;
}

template <class F>
void for_each_lattice_neighbor(const FppWeights& w, int d, std::int64_t i, F&& f) {
    const Site& z = w.lattice.sites[i];
    for (int k = 0; k < d; ++k)
        for (int sgn : {-1, 1}) {
            Site y = z;
            y[k] += sgn * w.lattice.stride;
            f(y, w.lattice.sites.index_of(y));
        }
}

std::string describe(const Site& x, int d, const FppTarget& t, bool source) {
    if (source) return t.to_site || t.L <= 0 ? to_string(x, d) : "B(" + to_string(x, d) + "," + std::to_string(t.L) + ")";
    if (t.to_site) return to_string(t.y, d);
    return "B(" + to_string(x, d) + "," + std::to_string(t.N) + ")^c";
}

}  // namespace

FppResult fpp_distance(const Graph& g, const FppWeights& w, const Site& x, const FppTarget& target) {
    const int d = g.dim();
    Search s = setup(g, w, x, target);
    const SiteSet& S = w.lattice.sites;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(S.size(), inf);
    std::vector<std::int64_t> pred(S.size(), -1);
    std::vector<char> done(S.size(), 0);
    using Item = std::pair<double, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (auto i : s.sources) {
        dist[i] = w.weights[i];
        pq.emplace(dist[i], i);
    }
    std::int64_t hit = -1;
    while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (done[u] || du > dist[u]) continue;
        done[u] = 1;
        if (s.is_target[u]) {
            hit = u;
            break;
        }
        for_each_lattice_neighbor(w, d, u, [&](const Site& y, std::int64_t v) {
            if (v < 0) {
                if (!target.to_site)
                    throw std::invalid_argument("fpp_distance: window does not cover B(x,N); missing " + to_string(y, d));
                return;
            }
            if (done[v]) return;
            const double nd = du + w.weights[v];
            if (nd < dist[v] || (nd == dist[v] && u < pred[v])) {
                if (nd < dist[v]) pq.emplace(nd, v);
                dist[v] = nd;
                pred[v] = u;
            }
        });
    }
    if (hit < 0) throw std::runtime_error("fpp_distance: target unreachable inside the window");
    FppResult r;
    r.distance = dist[hit];
    for (auto v = hit; v >= 0; v = pred[v]) r.path.push_back(S[v]);
    std::reverse(r.path.begin(), r.path.end());
    r.source = describe(x, d, target, true);
    r.target = describe(x, d, target, false);
    return r;
}

double fpp_distance_dp(const Graph& g, const FppWeights& w, const Site& x, const FppTarget& target) {
    const int d = g.dim();
    Search s = setup(g, w, x, target);
    const SiteSet& S = w.lattice.sites;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(S.size(), inf);
    for (auto i : s.sources) dist[i] = w.weights[i];
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t v = 0; v < S.size(); ++v)
            for_each_lattice_neighbor(w, d, static_cast<std::int64_t>(v), [&](const Site&, std::int64_t u) {
                if (u < 0 || dist[u] == inf) return;
                const double nd = dist[u] + w.weights[v];
                if (nd < dist[v]) {
                    dist[v] = nd;
                    changed = true;
                }
            });
    }
    double best = inf;
    for (std::size_t i = 0; i < S.size(); ++i)
        if (s.is_target[i]) best = std::min(best, dist[i]);
    if (best == inf) throw std::runtime_error("fpp_distance_dp: target unreachable inside the window");
    return best;
}

// ---------------------------------------------------------------- local uniqueness

bool local_uniqueness(const Graph& g, const SiteSet& window, const std::vector<char>& occupied, const Site& x,
                      double N, double xi) {
    if (!(xi > 1)) throw std::invalid_argument("local_uniqueness: xi must exceed 1");
    if (occupied.size() != window.size()) throw std::invalid_argument("local_uniqueness: occupancy does not match window");
    // replicas of one study share the window, so the ball and the containment
    // check are cached per thread
    struct Cache {
        const SiteSet* window = nullptr;
        std::size_t window_size = 0;
        Site x{};
        double r = -1;
        int dim = 0;
        std::vector<std::int64_t> idx;  // window indices of B(x, r)
    };
    thread_local Cache cache;
    const double r = xi * N;
    if (cache.window != &window || cache.window_size != window.size() || cache.x != x || cache.r != r ||
        cache.dim != g.dim()) {
        SiteSet big = ball(g, x, r);
        std::vector<std::int64_t> idx;
        idx.reserve(big.size());
        for (const auto& y : big) {
            auto i = window.index_of(y);
            if (i < 0) throw std::invalid_argument("local_uniqueness: window does not contain B(x, xi N)");
            idx.push_back(i);
        }
        cache = {&window, window.size(), x, r, g.dim(), std::move(idx)};
    }
    std::vector<Site> occ;
    for (auto i : cache.idx)
        if (occupied[i]) occ.push_back(window[i]);
    SiteSet O(g.dim(), std::move(occ));
    UnionFind uf(O.size());
    for (std::size_t i = 0; i < O.size(); ++i)
        g.for_each_neighbor(O[i], [&](const Site& y, double) {
            auto j = O.index_of(y);
            if (j >= 0) uf.unite(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
        });
    std::int32_t root = -1;
    for (std::size_t i = 0; i < O.size(); ++i) {
        if (g.distance(x, O[i]) > N) continue;
        const auto r = uf.find(static_cast<std::int32_t>(i));
        if (root < 0)
            root = r;
        else if (r != root)
            return false;
    }
    return true;
}

bool local_uniqueness(const Graph& g, const InterlacementSample& s, const Site& x, double N, double xi, double v) {
    return local_uniqueness(g, s.window, s.occupied_flags(v), x, N, xi);
}

// ---------------------------------------------------------------- walk traces and tubes

CapacityEstimate walk_trace_capacity(const Graph& g, const Site& x, double N, Rng& rng, CapacityMethod method,
                                     const CapacityParams& p) {
    SiteSet D = ball(g, x, N);
    bool truncated = false;
    auto sites = trace_until_exit(g, x, D, rng, truncated);
    if (truncated) throw std::runtime_error("walk_trace_capacity: walk hit max_steps");
    return equilibrium_and_capacity(g, SiteSet(g.dim(), std::move(sites)), method, p);
}

double confinement_probability(const Graph& g, const Site& x, double N, const SiteSet& D) {
    if (!D.contains(x)) return 0;
    std::vector<Site> e;
    for (const auto& y : D)
        if (g.distance(x, y) <= N) e.push_back(y);
    KilledOperator op(g, SiteSet(g.dim(), std::move(e)));
    auto h = op.harmonic([&](const Site& y) { return g.distance(x, y) > N ? 1.0 : 0.0; });
    return h[op.domain().index_of(x)];
}

TubeConfinement tube_confinement(const Graph& g, const Site& x, double N, int P, const Rng& rng,
                                 std::uint64_t n_samples, double c2) {
    if (!g.is_lattice()) throw std::invalid_argument("tube_confinement: lattice graphs only");
    if (P < 1 || P > N) throw std::invalid_argument("tube_confinement: need 1 <= P <= N");
    if (!(c2 > 1)) throw std::invalid_argument("tube_confinement: c2 must exceed 1");
    TubeConfinement t;
    t.ball_radius = c2 * N / P;
    t.target_radius = N / P;
    t.centers.push_back(x);
    if (P >= 2) {
        // x'_P at distance N + N/P + 1, so B(x'_P, N/P) misses B(x, N)
        const double spacing = (N + N / P + 1) / (P - 1);
        if (!(2 * t.ball_radius > spacing + 1)) throw std::invalid_argument("tube_confinement: balls do not overlap");
        for (int i = 2; i <= P; ++i) t.centers.push_back(x + unit_vector(0, std::llround((i - 1) * spacing)));
    }
    std::vector<Site> all;
    for (const auto& c : t.centers) {
        SiteSet b = ball(g, c, t.ball_radius);
        all.insert(all.end(), b.begin(), b.end());
    }
    t.tube = SiteSet(g.dim(), std::move(all));
    const Site far = t.centers.back();
    auto in_target = [&](const Site& y) { return g.distance(far, y) <= t.target_radius; };

    if (in_target(x)) {
        t.exact = 1;
    } else {
        std::vector<Site> e;
        for (const auto& y : t.tube)
            if (!in_target(y)) e.push_back(y);
        KilledOperator op(g, SiteSet(g.dim(), std::move(e)));
        auto h = op.harmonic([&](const Site& y) { return in_target(y) ? 1.0 : 0.0; });
        t.exact = h[op.domain().index_of(x)];
    }

    t.n_samples = n_samples;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        Rng r = rng.split(i);
        Site y = x;
        while (true) {
            if (in_target(y)) {
                ++hits;
                break;
            }
            if (!t.tube.contains(y)) break;
            y = step(g, y, r);
        }
    }
    t.mc = n_samples ? static_cast<double>(hits) / static_cast<double>(n_samples) : 0;
    t.mc_interval = wilson(hits, n_samples);
    return t;
}

}  // namespace rilab
