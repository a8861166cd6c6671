#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rilab/graph.hpp"
#include "rilab/potential.hpp"
#include "rilab/rng.hpp"

namespace rilab {

// One trajectory of the interlacement hitting the window W, seen from its
// first visit to W. Only the part inside W is stored: the forward walk lists
// every visit to W (with repetitions, W-indices), and the backward walk is
// conditioned never to come back, so it adds no W-visit beyond the entry.
struct Trajectory {
    double label = 0;                   // uniform on (0, u]
    std::int32_t entry = 0;             // index in W, law e_W / cap(W)
    std::vector<std::int32_t> forward;  // X_0 = entry, X_1, ... restricted to W
    std::uint32_t backward_attempts = 1;
    bool truncated = false;             // forward walk hit max_steps
};

struct InterlacementSample {
    SiteSet window;
    double u = 0;
    double kill_radius = 0;
    // Bound on the probability that some trajectory comes back to W after
    // being killed at distance kill_radius.
    double truncation_bias_bound = 0;
    std::vector<Trajectory> trajectories;

    // I^v n W for v <= u.
    SiteSet occupied(double v) const;
    SiteSet occupied() const { return occupied(u); }
    // Membership flags aligned with window.sites().
    std::vector<char> occupied_flags(double v) const;
};

struct SamplerParams {
    double kill_radius = 0;       // 0: chosen from bias_target
    double bias_target = 1e-3;
    std::uint32_t rejection_budget = 10000;
    std::uint64_t max_steps = kDefaultMaxSteps;
    // The backward walk never revisits W, so skipping it leaves every
    // W-functional unchanged; backward_attempts is then 0.
    bool sample_backward = true;
};

// Prepared sampler for one window: capacity, equilibrium law and kill region
// are computed once and shared by all replicas (read-only).
class WindowSampler {
public:
    WindowSampler(const Graph& g, SiteSet W, double u_max, const SamplerParams& p = {});
    // Uses a precomputed capacity of W (must carry the equilibrium measure).
    WindowSampler(const Graph& g, CapacityEstimate cap, double u_max, const SamplerParams& p = {});

    const Graph& graph() const { return *g_; }
    const SiteSet& window() const { return cap_.set; }
    const CapacityEstimate& capacity() const { return cap_; }
    double u_max() const { return u_; }
    double kill_radius() const { return kill_.rho; }
    // Per-trajectory return bound and its union over the expected count.
    double per_trajectory_bias() const { return eps_; }
    double bias_bound() const;

    std::uint64_t sample_count(Rng& rng) const;
    std::int32_t sample_entry(Rng& rng) const;
    Trajectory sample_trajectory(Rng& rng) const;
    // Same law with the entry given (W-index).
    Trajectory sample_trajectory_from(std::int32_t entry, Rng& rng) const;
    InterlacementSample sample(Rng& rng) const;
    // Draws one trajectory (entry and forward walk) and reports whether it
    // visits a flagged W-site; the walk stops at the first such visit.
    bool trajectory_hits(const std::vector<char>& flags, Rng& rng) const;

private:
    void init(const SamplerParams& p);

    const Graph* g_;
    CapacityEstimate cap_;
    double u_;
    std::vector<double> cum_;
    Site center_{};
    double radius_euc_ = 0;
    KillRegion kill_;
    double eps_ = 0;
    std::uint32_t budget_ = 10000;
    std::uint64_t max_steps_ = kDefaultMaxSteps;
    bool backward_ = true;
};

// Poisson(u cap) with the value of the estimate (its bracket stays in cap).
std::uint64_t sample_count(const CapacityEstimate& cap, double u, Rng& rng);

InterlacementSample sample_window(const Graph& g, const SiteSet& W, double u, double kill_radius, Rng& rng);

// l_{x,v} = (1/lambda_x) sum of Exp(1) holding times over visits by trajectories
// with label <= v. Holding times of trajectory k come from rng.split(k), so
// fields at different levels of one sample are coupled monotonically.
struct LocalTimeField {
    SiteSet window;
    Eigen::VectorXd times;  // aligned with window.sites()
    std::uint64_t stream = 0;

    double at(const Site& x) const {
        auto i = window.index_of(x);
        return i < 0 ? 0.0 : times[i];
    }
};

LocalTimeField local_times(const Graph& g, const InterlacementSample& s, const Rng& rng, double v);
inline LocalTimeField local_times(const Graph& g, const InterlacementSample& s, const Rng& rng) {
    return local_times(g, s, rng, s.u);
}

// Occupied sets at each level of the sorted list (all <= the sample level).
std::vector<SiteSet> coupled_levels(const InterlacementSample& s, const std::vector<double>& levels);

// JSON with schema_version; forward walks are stored as start site plus
// run-length encoded unit moves, split where the walk leaves W.
std::string to_json(const InterlacementSample& s);
InterlacementSample sample_from_json(const std::string& text);

}  // namespace rilab
