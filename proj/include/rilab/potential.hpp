#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rilab/graph.hpp"
#include "rilab/walk.hpp"

namespace rilab {

struct Bracket {
    double value = 0;
    double lower = 0;
    double upper = 0;
    double width() const { return upper - lower; }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

enum class GreenMethod { lattice_exact, exact_killed_solve, monte_carlo };
enum class CapacityMethod { green_matrix, exact_killed_solve, monte_carlo };

std::string to_string(GreenMethod m);
std::string to_string(CapacityMethod m);
GreenMethod parse_green_method(const std::string& s);
CapacityMethod parse_capacity_method(const std::string& s);

struct GreenParams {
    double kill_radius = 0;  // 0 picks a default
    std::uint64_t n_samples = 100000;
    std::uint64_t seed = 0;
};

// g(x,y) = E_x[#visits to y] / lambda_y.
Bracket green(const Graph& g, const Site& x, const Site& y, GreenMethod method, const GreenParams& p = {});

// Centred killed solve on a lattice ball of radius rho around the source, plus
// the harmonic extension of the asymptotic Green function from outside the
// ball; brackets come from the relative error band of the asymptotic form.
struct GreenProfile {
    SymmetricBall ball;
    Eigen::VectorXd killed, lower, value, upper;  // per orbit of the ball
    double rel_band = 0;
    double scale = 1;  // 1 / lambda

    Bracket at(const Site& z) const;
};
GreenProfile green_profile(const Graph& g, double rho);

struct GreenTable {
    SiteSet domain;
    Eigen::MatrixXd values;
    double abs_error = 0;  // uniform bound on |values - g|
    GreenMethod method = GreenMethod::lattice_exact;
    double kill_radius = 0;

    double at(const Site& x, const Site& y) const { return values(domain.index_of(x), domain.index_of(y)); }
};

GreenTable green_table(const Graph& g, const SiteSet& A, GreenMethod method, const GreenParams& p = {});

struct CapacityParams {
    double kill_radius = 0;
    std::uint64_t n_samples = 20000;
    std::uint64_t seed = 0;
    bool use_symmetry = true;
    std::optional<GreenConstants> constants;
};

struct CapacityEstimate {
    double value = 0, lower = 0, upper = 0;
    CapacityMethod method = CapacityMethod::green_matrix;
    SiteSet set;
    // e_A aligned with set.sites(); empty when not computed.
    std::vector<double> equilibrium;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    double kill_radius = 0;

    bool has_equilibrium() const { return !equilibrium.empty(); }
    Bracket bracket() const { return {value, lower, upper}; }
    // Normalised equilibrium measure.
    std::vector<double> normalized() const;
};

CapacityEstimate equilibrium_and_capacity(const Graph& g, const SiteSet& A,
                                          CapacityMethod method = CapacityMethod::green_matrix,
                                          const CapacityParams& p = {});

// Signed permutations about the centre of A that leave A invariant (always
// contains the identity). Each element maps x to c + s(x - c) with doubled
// coordinates so half-integer centres are allowed.
struct SymmetryGroup {
    int dim = 3;
    Site center2{};  // twice the centre
    std::vector<std::array<int, kMaxDim>> perm;
    std::vector<std::array<int, kMaxDim>> sign;
    std::size_t size() const { return perm.size(); }
    Site apply(std::size_t k, const Site& x) const;
};
SymmetryGroup set_symmetries(const SiteSet& A);

double energy(const std::vector<double>& mu, const GreenTable& table);
double energy(const SiteSet& support, const std::vector<double>& mu, const GreenTable& table);

// P_x(H_A < inf) = sum_y g(x,y) e_A(y).
Bracket hitting_probability(const Graph& g, const Site& x, const CapacityEstimate& cap);

// x^nu (nu < 1), x / (1 v log(x/y)) (nu = 1), x y^{nu-1} (nu > 1).
double f_nu(double x, double y, double nu);
inline double f_nu(double x, double nu) { return f_nu(x, 1.0, nu); }

struct ScalingConstants {
    double c_beta = 0, C_beta = 0;
    double nu = 1, alpha = 3;
    double c_asymp = 0, C_asymp = 0;

    // Constants of Z^d with the given edge scale; checks the defining relation.
    static ScalingConstants lattice(int d, WeightScale scale);
};

// Calibrated bound constants for Z^d (Green function from the exact lattice
// values, capacity ratios from balls of radius 1..16).
GreenConstants calibrate_lattice_constants(int d, WeightScale scale);
const GreenConstants& lattice_constants(int d, WeightScale scale);
GreenConstants constants_for(const Graph& g);

struct TubeCapacityReport {
    std::int64_t N = 0, p = 0;
    int d = 3;
    CapacityEstimate cap;
    // d = 3: cap * 3 log(N/p) / (pi N) in the normalised scale
    // d >= 4: cap / (N p^{d-3})
    Bracket ratio;
    double eta = 0;
    // axis balls of radius p/4 with centres k p e_1
    double union_lower_bound = 0;
    double kappa = 0;
    std::int64_t n_balls = 0;
};

TubeCapacityReport tube_capacity_check(const Graph& g, std::int64_t N, std::int64_t p, double eta);

// Lower bound for the capacity of a union of P sets with cap >= kappa placed
// along a line at spacing N/P:
//   (1/(c kappa P) + (1+eta) / (c_beta F_nu(N, N/P)))^{-1}.
double union_capacity_lower_bound(double kappa, std::int64_t P, double N, double c, double eta,
                                  const ScalingConstants& sc);

// E[exp(sum_x V(x) l_{x,u})] from the Green table restricted to supp(V).
// Uses exp(u <V, (I - G V)^{-1} 1>) when V has a positive part (requires
// ||G|V|||_inf < 1) and exp(-u <sqrt(-V), (I + sqrt(-V) G sqrt(-V))^{-1} sqrt(-V)>)
// when V <= 0.
double laplace_functional_prediction(const GreenTable& table, const std::vector<double>& V, double u);

}  // namespace rilab
