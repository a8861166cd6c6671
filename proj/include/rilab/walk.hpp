#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rilab/graph.hpp"
#include "rilab/killed_solve.hpp"
#include "rilab/rng.hpp"

namespace rilab {

inline constexpr std::uint64_t kDefaultMaxSteps = 100000000;

Site step(const Graph& g, const Site& x, Rng& rng);

struct Trace {
    SiteSet visited;
    std::vector<Site> path;  // X_0, ..., X_{T-1}: the in-domain part
    std::optional<Site> exit_site;
    std::uint64_t steps = 0;
    bool truncated = false;
};

Trace run_until_exit(const Graph& g, const Site& x, const SiteSet& domain, Rng& rng,
                     std::uint64_t max_steps = kDefaultMaxSteps);

// Distinct sites visited before leaving the domain, without keeping the path.
std::vector<Site> trace_until_exit(const Graph& g, const Site& x, const SiteSet& domain, Rng& rng,
                                   bool& truncated, std::uint64_t max_steps = kDefaultMaxSteps);

// Constants of the Green and capacity bounds used for truncation brackets:
//   g(x,y) <= C_G max(1, d(x,y))^{-nu},  c_cap R^nu <= cap(B(x,R)) <= C_cap R^nu.
struct GreenConstants {
    double nu = 1;
    double c_G = 0, C_G = 0;
    double c_cap = 0, C_cap = 0;

    // Upper bound on P_y(H_A < inf) for A inside B(x,R) and y outside B(x,KR).
    double entrance_bound(double K) const;
    // Smallest K with entrance_bound(K) <= eps.
    double factor_for(double eps) const;
};

// Exact exit laws of lattice balls centred at the walker, used to move a
// lattice walk across regions it provably cannot use. Far from everything a
// uniform point on a sphere of 0.8 times the free distance is used instead.
class LatticeJumper {
public:
    explicit LatticeJumper(int d);

    int dim() const { return d_; }
    const std::vector<std::int64_t>& radii() const { return radii_; }
    std::int64_t max_table_radius() const { return radii_.back(); }
    // Distance below which the continuum jump is never used.
    double continuum_threshold() const { return 2.0 * radii_.back() + 4; }

    // Moves y by one jump, staying clear of everything within `room` of y:
    // the jump lands at distance <= m+1 where m + 1 < room. Requires room > 3.
    void jump(Site& y, double room, Rng& rng) const;

private:
    struct Table {
        std::int64_t m;
        std::vector<SymmetricBall::Key> reps;
        std::vector<double> cum;
    };
    void apply_random_symmetry(const SymmetricBall::Key& k, Site& out, Rng& rng) const;

    int d_;
    std::vector<std::int64_t> radii_;
    std::vector<Table> tables_;
};

const LatticeJumper& lattice_jumper(int d);

// Kill region B(c, rho) in the graph's distance.
struct KillRegion {
    Site center{};
    double rho = 0;
    std::optional<SiteSet> table_ball;  // table graphs only
};
KillRegion make_kill_region(const Graph& g, const Site& c, double rho);

enum class Fate { hit, escaped, truncated };

struct Excursion {
    Fate fate = Fate::escaped;
    Site site{};
    std::uint64_t steps = 0;
};

// Runs the walk from y until it lies in A or leaves the kill region.
// A must lie in the closed Euclidean ball B(a_center, a_radius).
Excursion walk_until_hit_or_exit(const Graph& g, Site y, const SiteSet& A, const Site& a_center,
                                 double a_radius, const KillRegion& kill, Rng& rng,
                                 std::uint64_t max_steps = kDefaultMaxSteps);

struct EscapeEstimate {
    double point_estimate = 0;
    double lower = 0, upper = 1;
    std::uint64_t n_samples = 0;
    double kill_radius = 0;
    double eps_ret = 0, eps_stat = 0;
    std::uint64_t truncated = 0;
};

// P_x(tilde H_A = inf) from walks killed on leaving B(center(A), rho).
EscapeEstimate escape_probability(const Graph& g, const Site& x, const SiteSet& A, double rho,
                                  std::uint64_t n_samples, const Rng& rng, const GreenConstants& gc);

}  // namespace rilab
