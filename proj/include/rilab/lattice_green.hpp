#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "rilab/graph.hpp"

namespace rilab {

// Expected number of visits to z of simple random walk on Z^d started at 0,
//   G(z) = int_0^inf prod_i exp(-t/d) I_{z_i}(t/d) dt,
// evaluated by Gauss-Legendre panels on [0, 2^28] with the Bessel values from
// Miller's backward recurrence, plus the two-term large-t tail in closed form.
class LatticeGreen {
public:
    explicit LatticeGreen(int d);

    int dim() const { return d_; }
    double visits(const Site& z) const;
    // Absolute accuracy of visits(), from the truncated tail expansion.
    double tolerance() const { return 1e-11; }

    // G(z) ~ c_d |z|^{2-d}, c_d = (d/2) Gamma(d/2 - 1) pi^{-d/2}.
    static double asymptotic_constant(int d);
    double asymptotic(const Site& z) const;

private:
    using Key = std::array<std::int64_t, kMaxDim>;
    double compute(const Key& k, const std::vector<double>& bessel, std::int64_t nmax) const;
    void build_bessel(std::int64_t nmax, std::vector<double>& out) const;
    Key canonical(const Site& z) const;

    int d_;
    std::vector<double> t_, w_;
    double T_;
    // node-major tables: bessel[k * (nmax+1) + n]; the base table is fixed after
    // construction, the far table only changes under mu_.
    std::int64_t dense_max_;
    std::vector<double> base_;
    mutable std::int64_t far_nmax_ = -1;
    mutable std::vector<double> far_;
    std::unique_ptr<std::atomic<double>[]> dense_;
    mutable std::unordered_map<Key, double, SiteHash> cache_;
    mutable std::mutex mu_;
};

// Shared instance per dimension; construction is done once and is thread-safe.
const LatticeGreen& lattice_green(int d);

// Gauss-Legendre nodes and weights on [a,b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

}  // namespace rilab
