#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rilab/graph.hpp"
#include "rilab/interlacements.hpp"
#include "rilab/potential.hpp"
#include "rilab/rng.hpp"
#include "rilab/stats.hpp"

namespace rilab {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::int32_t>(i);
    }
    std::int32_t find(std::int32_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::int32_t> parent_;
};

enum class WeightKind { occupied_indicator, box_nonempty, box_capacity_threshold };
enum class Monotonicity { increasing, decreasing };

std::string to_string(WeightKind k);
WeightKind parse_weight_kind(const std::string& s);

// t_z on the renormalised lattice. Only sites whose neighbourhood (the site,
// its cell, or B(z,R)) lies inside the window carry a weight.
struct FppWeights {
    double R = 1;
    RenormLattice lattice;  // sites = those with a weight
    std::vector<double> weights;
    WeightKind kind = WeightKind::occupied_indicator;
    Monotonicity monotonicity = Monotonicity::increasing;
    double kappa = 0;

    double at(const Site& z) const {
        auto i = lattice.sites.index_of(z);
        return i < 0 ? 0.0 : weights[i];
    }
};

// occupied is aligned with window.sites().
FppWeights build_weights(const Graph& g, const SiteSet& window, const std::vector<char>& occupied, WeightKind kind,
                         double R, Monotonicity mono = Monotonicity::increasing, double kappa = 0);
FppWeights build_weights(const Graph& g, const InterlacementSample& s, double level, WeightKind kind, double R,
                         Monotonicity mono = Monotonicity::increasing, double kappa = 0);
FppWeights build_weights(const Graph& g, const LocalTimeField& f, WeightKind kind, double R,
                         Monotonicity mono = Monotonicity::increasing, double kappa = 0);

struct FppTarget {
    bool to_site = false;
    Site y{};
    double N = 0;  // exit target: sites with d(x, z) > N
    double L = 0;  // sources: sites with d(x, z) <= L (at least the cell of x)

    static FppTarget site(const Site& y) { return {true, y, 0, 0}; }
    static FppTarget exit(double N, double L = 0) { return {false, Site{}, N, L}; }
};

struct FppResult {
    double distance = 0;
    std::vector<Site> path;
    std::string source, target;
};

// Node-weighted Dijkstra on the nearest-neighbour graph of the renormalised
// lattice: a path costs the sum of t_z over its sites, both ends included.
// Ties are broken towards the lexicographically smaller predecessor.
FppResult fpp_distance(const Graph& g, const FppWeights& w, const Site& x, const FppTarget& target);
// Same distance by exhaustive relaxation to a fixed point (test oracle).
double fpp_distance_dp(const Graph& g, const FppWeights& w, const Site& x, const FppTarget& target);

// All sites of I^v n B(x,N) connected inside I^v n B(x, xi N); true when
// I^v n B(x,N) is empty.
bool local_uniqueness(const Graph& g, const InterlacementSample& s, const Site& x, double N, double xi, double v);
bool local_uniqueness(const Graph& g, const SiteSet& window, const std::vector<char>& occupied, const Site& x,
                      double N, double xi);

// Capacity of the set visited by the walk from x before leaving B(x,N).
CapacityEstimate walk_trace_capacity(const Graph& g, const Site& x, double N, Rng& rng,
                                     CapacityMethod method = CapacityMethod::green_matrix,
                                     const CapacityParams& p = {});

// P_x(T_{B(x,N)} < T_D): the walk leaves B(x,N) without leaving D before, so
// its trace inside B(x,N) stays in D. Exact killed solve.
double confinement_probability(const Graph& g, const Site& x, double N, const SiteSet& D);

struct TubeConfinement {
    SiteSet tube;               // union of B(x'_i, c2 N/P)
    std::vector<Site> centers;  // x'_1 = x, ..., x'_P along e_1
    double ball_radius = 0, target_radius = 0;
    double exact = 0;           // P_x(H_{B(x'_P, N/P)} < T_tube) by a killed solve
    double mc = 0;              // Monte Carlo frequency
    Interval mc_interval;
    std::uint64_t n_samples = 0;
};

TubeConfinement tube_confinement(const Graph& g, const Site& x, double N, int P, const Rng& rng,
                                 std::uint64_t n_samples = 10000, double c2 = 2.0);

}  // namespace rilab
