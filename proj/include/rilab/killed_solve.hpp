#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "rilab/graph.hpp"

namespace rilab {

// Walk killed on leaving a finite domain D. Internally works with the symmetric
// matrix M = Lambda - W restricted to D, so that M^{-1}(x,y) is the killed Green
// function g_D(x,y) and (I - P) u = f reads M u = Lambda f.
class KilledOperator {
public:
    KilledOperator(const Graph& g, SiteSet domain);
    ~KilledOperator();
    KilledOperator(KilledOperator&&) noexcept;

    const SiteSet& domain() const { return D_; }
    std::size_t size() const { return D_.size(); }

    // u with (I - P) u = f on D and u = 0 off D.
    Eigen::VectorXd solve_poisson(const Eigen::VectorXd& f) const;
    // g_D(., y) for y in D.
    Eigen::VectorXd green_column(const Site& y) const;
    // Harmonic in D with u = h outside D.
    Eigen::VectorXd harmonic(const std::function<double(const Site&)>& h) const;
    // E_x[T_D].
    Eigen::VectorXd exit_time() const;

    int iterations() const { return last_iters_; }

private:
    Eigen::VectorXd solve_raw(const Eigen::VectorXd& b) const;

    const Graph* g_;
    SiteSet D_;
    Eigen::VectorXd lambda_;
    Eigen::SparseMatrix<double> M_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    mutable int last_iters_ = 0;
};

// P_x(H_A < T_D) for x in D (equal to 1 on A).
Eigen::VectorXd hit_before_exit(const Graph& g, const SiteSet& D, const SiteSet& A);
// P_x(tilde H_A > T_D) for each x in A (A inside D), aligned with A.sites().
Eigen::VectorXd escape_before_exit(const Graph& g, const SiteSet& D, const SiteSet& A);

// Hyperoctahedral reduction of a centred lattice ball {|x|_2 <= R} on Z^d: one
// unknown per orbit of coordinate permutations and sign changes. Only functions
// invariant under the group are represented.
class SymmetricBall {
public:
    using Key = std::array<std::int64_t, kMaxDim>;

    SymmetricBall(int d, double R);

    int dim() const { return d_; }
    double radius() const { return R_; }
    std::size_t size() const { return reps_.size(); }
    const std::vector<Key>& reps() const { return reps_; }
    const std::vector<double>& orbit_size() const { return wsize_; }
    Key canonical(const Site& x) const;
    bool inside(const Key& k) const;
    // Orbit index of x, or -1 outside the ball.
    std::int64_t index_of(const Site& x) const;

    // (I - P) u = f inside, u = 0 outside, for simple random walk; f per orbit.
    Eigen::VectorXd solve_poisson(const Eigen::VectorXd& f) const;
    // Harmonic inside, u = h outside (h must be invariant).
    Eigen::VectorXd harmonic(const std::function<double(const Site&)>& h) const;
    // Expected visits to each orbit representative by the walk from 0 killed on exit.
    Eigen::VectorXd visits_from_center() const;

    // Law of the exit point from the centre, grouped by orbit of exit sites.
    struct ExitLaw {
        std::vector<Key> reps;
        std::vector<double> mass;  // total mass of each orbit
    };
    ExitLaw exit_law() const;

    int iterations() const { return last_iters_; }

private:
    Eigen::VectorXd solve_raw(const Eigen::VectorXd& b) const;
    std::int64_t lookup(const Key& k) const;

    int d_;
    double R_;
    std::int64_t Ri_;
    std::int64_t R2_;
    std::vector<Key> reps_;
    std::vector<double> wsize_;
    std::vector<std::int32_t> index_;
    // neighbour orbit indices (-1 outside) for the rep, 2d per orbit
    std::vector<std::int64_t> nbr_;
    Eigen::SparseMatrix<double> M_;
    mutable int last_iters_ = 0;
};

// Number of lattice points in the orbit of a canonical key under signed permutations.
double orbit_size(const SymmetricBall::Key& k, int d);

}  // namespace rilab
