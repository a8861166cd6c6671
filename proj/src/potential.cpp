#include "rilab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "rilab/killed_solve.hpp"
#include "rilab/lattice_green.hpp"

namespace rilab {

std::string to_string(GreenMethod m) {
    switch (m) {
        case GreenMethod::lattice_exact: return "lattice_exact";
        case GreenMethod::exact_killed_solve: return "exact_killed_solve";
        case GreenMethod::monte_carlo: return "monte_carlo";
    }
    return "?";
}

std::string to_string(CapacityMethod m) {
    switch (m) {
        case CapacityMethod::green_matrix: return "green_matrix";
        case CapacityMethod::exact_killed_solve: return "exact_killed_solve";
        case CapacityMethod::monte_carlo: return "monte_carlo";
    }
    return "?";
}

GreenMethod parse_green_method(const std::string& s) {
    if (s == "lattice_exact") return GreenMethod::lattice_exact;
    if (s == "exact_killed_solve") return GreenMethod::exact_killed_solve;
    if (s == "monte_carlo") return GreenMethod::monte_carlo;
    throw std::invalid_argument("unknown Green method: " + s);
}

CapacityMethod parse_capacity_method(const std::string& s) {
    if (s == "green_matrix") return CapacityMethod::green_matrix;
    if (s == "exact_killed_solve") return CapacityMethod::exact_killed_solve;
    if (s == "monte_carlo") return CapacityMethod::monte_carlo;
    throw std::invalid_argument("unknown capacity method: " + s);
}

namespace {

double lattice_g(const Graph& g, const Site& z) {
    return lattice_green(g.dim()).visits(z) / g.lambda(Site{});
}

double lattice_g_err(const Graph& g) { return lattice_green(g.dim()).tolerance() / g.lambda(Site{}); }

void require_lattice(const Graph& g, const char* what) {
    if (!g.is_lattice()) throw std::invalid_argument(std::string(what) + ": lattice graphs only");
}

// Relative accuracy of the asymptotic Green function beyond distance rho.
double asymptotic_band(int d, double rho) { return d / (rho * rho); }

}  // namespace

// ---------------------------------------------------------------- Green function

GreenProfile green_profile(const Graph& g, double rho) {
    require_lattice(g, "green_profile");
    if (g.distance_kind() != DistanceKind::euclidean) throw std::invalid_argument("green_profile: euclidean lattice only");
    if (rho < 4) throw std::invalid_argument("green_profile: kill radius too small");
    GreenProfile p{SymmetricBall(g.dim(), rho), {}, {}, {}, {}, 0, 0};
    const auto& lg = lattice_green(g.dim());
    p.killed = p.ball.visits_from_center();
    Eigen::VectorXd h = p.ball.harmonic([&](const Site& y) { return lg.asymptotic(y); });
    p.rel_band = asymptotic_band(g.dim(), rho);
    p.scale = 1.0 / g.lambda(Site{});
    p.value = (p.killed + h) * p.scale;
    p.lower = (p.killed + (1 - p.rel_band) * h) * p.scale;
    p.upper = (p.killed + (1 + p.rel_band) * h) * p.scale;
    return p;
}

Bracket GreenProfile::at(const Site& z) const {
    auto i = ball.index_of(z);
    if (i < 0) throw std::invalid_argument("GreenProfile::at: site outside the kill ball");
    return {value[i], lower[i], upper[i]};
}

namespace {

Bracket green_killed_table_graph(const Graph& g, const Site& x, const Site& y, double rho) {
    SiteSet D = ball(g, y, rho);
    if (!D.contains(x)) throw std::invalid_argument("green: x outside the kill ball");
    KilledOperator op(g, D);
    Eigen::VectorXd col = op.green_column(y);
    double v = col[D.index_of(x)];
    GreenConstants gc = constants_for(g);
    double tail = gc.C_G * std::pow(std::max(1.0, rho), -gc.nu);
    return {v, v, std::isfinite(tail) ? v + tail : std::numeric_limits<double>::infinity()};
}

Bracket green_mc(const Graph& g, const Site& x, const Site& y, const GreenParams& p) {
    GreenConstants gc = constants_for(g);
    double dxy = g.distance(x, y);
    double rho = p.kill_radius > 0 ? p.kill_radius : std::max(4.0, dxy) * std::min(1e7, gc.factor_for(1e-4));
    KillRegion kill = make_kill_region(g, y, rho);
    SiteSet Y(g.dim(), {y});
    Rng base = Rng::for_stream(p.seed, {0x67726e, 0});
    double s = 0, s2 = 0;
    for (std::uint64_t i = 0; i < p.n_samples; ++i) {
        Rng r = base.split(i);
        Site pos = x;
        double c = 0;
        while (true) {
            auto ex = walk_until_hit_or_exit(g, pos, Y, y, 0.0, kill, r);
            if (ex.fate != Fate::hit) break;
            c += 1;
            pos = step(g, y, r);
        }
        s += c;
        s2 += c * c;
    }
    const double n = static_cast<double>(p.n_samples);
    const double lam = g.lambda(y);
    double mean = s / n, var = std::max(0.0, s2 / n - mean * mean);
    double se = std::sqrt(var / n);
    // visits missed after the kill: at most eps * (1 + mean visits from y)
    double eps = std::min(1.0, gc.entrance_bound(rho / std::max(1.0, dxy)));
    double tail = eps * (1.0 + mean);
    return {mean / lam, std::max(0.0, mean - 3 * se) / lam, (mean + 3 * se + tail) / lam};
}

}  // namespace

Bracket green(const Graph& g, const Site& x, const Site& y, GreenMethod method, const GreenParams& p) {
    if (method == GreenMethod::lattice_exact) {
        require_lattice(g, "green(lattice_exact)");
        double v = lattice_g(g, x - y), e = lattice_g_err(g);
        return {v, v - e, v + e};
    }
    if (method == GreenMethod::monte_carlo) {
        if (p.n_samples == 0) throw std::invalid_argument("green: n_samples = 0");
        return green_mc(g, x, y, p);
    }
    const double dxy = g.distance(x, y);
    double rho = p.kill_radius > 0 ? p.kill_radius : std::max(40.0, 2 * dxy + 10);
    if (!g.is_lattice()) return green_killed_table_graph(g, x, y, rho);
    if (dxy >= rho) throw std::invalid_argument("green: kill radius must exceed d(x,y)");
    GreenProfile prof = green_profile(g, rho);
    return prof.at(x - y);
}

GreenTable green_table(const Graph& g, const SiteSet& A, GreenMethod method, const GreenParams& p) {
    if (A.empty()) throw std::invalid_argument("green_table: empty domain");
    GreenTable t;
    t.domain = A;
    t.method = method;
    const auto n = static_cast<Eigen::Index>(A.size());
    t.values.resize(n, n);
    if (method == GreenMethod::lattice_exact) {
        require_lattice(g, "green_table(lattice_exact)");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) t.values(i, j) = t.values(j, i) = lattice_g(g, A[i] - A[j]);
        t.abs_error = lattice_g_err(g);
        return t;
    }
    const Site c = set_center(A);
    const double rA = set_radius(g, A, c);
    if (method == GreenMethod::exact_killed_solve) {
        double rho = p.kill_radius > 0 ? p.kill_radius : rA + 30;
        t.kill_radius = rho;
        SiteSet D = ball(g, c, rho);
        if (!A.subset_of(D)) throw std::invalid_argument("green_table: kill ball does not contain the set");
        KilledOperator op(g, D);
        double err = 0;
        const LatticeGreen* lg = g.is_lattice() ? &lattice_green(g.dim()) : nullptr;
        const double band = g.is_lattice() ? asymptotic_band(g.dim(), rho - rA) : 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd col = op.green_column(A[j]);
            Eigen::VectorXd corr = Eigen::VectorXd::Zero(col.size());
            if (lg) {
                const double lam = g.lambda(A[j]);
                corr = op.harmonic([&](const Site& w) { return lg->asymptotic(w - A[j]) / lam; });
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                auto k = D.index_of(A[i]);
                t.values(i, j) = col[k] + corr[k];
                err = std::max(err, band * corr[k]);
            }
        }
        if (!g.is_lattice()) {
            GreenConstants gc = constants_for(g);
            err = gc.C_G * std::pow(std::max(1.0, rho - rA), -gc.nu);
            if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
        }
        // symmetrise the round-off
        t.values = 0.5 * (t.values + t.values.transpose()).eval();
        t.abs_error = err + 1e-10 * t.values.cwiseAbs().maxCoeff();
        return t;
    }
    // Monte Carlo: visit counts of every site of A from every source.
    GreenConstants gc = constants_for(g);
    double rho = p.kill_radius > 0 ? p.kill_radius : std::max(1.0, rA) * std::min(1e7, gc.factor_for(1e-4));
    t.kill_radius = rho;
    KillRegion kill = make_kill_region(g, c, rho);
    double r_euc = 0;
    for (const auto& a : A) r_euc = std::max(r_euc, norm2(a - c, g.dim()));
    double worst_se = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Rng base = Rng::for_stream(p.seed, {0x67746d63, static_cast<std::uint64_t>(i)});
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n), s2 = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd c1(n);
        for (std::uint64_t k = 0; k < p.n_samples; ++k) {
            Rng r = base.split(k);
            c1.setZero();
            Site pos = A[i];
            while (true) {
                auto ex = walk_until_hit_or_exit(g, pos, A, c, r_euc, kill, r);
                if (ex.fate != Fate::hit) break;
                c1[A.index_of(ex.site)] += 1;
                pos = step(g, ex.site, r);
            }
            s += c1;
            s2 += c1.cwiseProduct(c1);
        }
        const double nn = static_cast<double>(p.n_samples);
        for (Eigen::Index j = 0; j < n; ++j) {
            double m = s[j] / nn, v = std::max(0.0, s2[j] / nn - m * m);
            t.values(i, j) = m / g.lambda(A[j]);
            worst_se = std::max(worst_se, std::sqrt(v / nn) / g.lambda(A[j]));
        }
    }
    t.abs_error = 3 * worst_se;
    return t;
}

// ---------------------------------------------------------------- symmetries

Site SymmetryGroup::apply(std::size_t k, const Site& x) const {
    Site y{};
    for (int i = 0; i < dim; ++i) {
        const int j = perm[k][i];
        y[i] = (center2[i] + sign[k][i] * (2 * x[j] - center2[j])) / 2;
    }
    return y;
}

SymmetryGroup set_symmetries(const SiteSet& A) {
    SymmetryGroup G;
    G.dim = A.dim();
    const int d = A.dim();
    for (int i = 0; i < d; ++i) G.center2[i] = A.box().lo[i] + A.box().hi[i];
    std::array<int, kMaxDim> perm{};
    for (int i = 0; i < d; ++i) perm[i] = i;
    do {
        for (std::uint32_t s = 0; s < (1u << d); ++s) {
            std::array<int, kMaxDim> sign{};
            for (int i = 0; i < d; ++i) sign[i] = ((s >> i) & 1) ? -1 : 1;
            bool ok = true;
            for (const auto& x : A) {
                Site y{};
                for (int i = 0; i < d; ++i) {
                    const int j = perm[i];
                    auto v = G.center2[i] + sign[i] * (2 * x[j] - G.center2[j]);
                    if (v % 2 != 0) {
                        ok = false;
                        break;
                    }
                    y[i] = v / 2;
                }
                if (!ok || !A.contains(y)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                G.perm.push_back(perm);
                G.sign.push_back(sign);
            }
        }
    } while (std::next_permutation(perm.begin(), perm.begin() + d));
    return G;
}

// ---------------------------------------------------------------- capacity

std::vector<double> CapacityEstimate::normalized() const {
    if (!has_equilibrium()) throw std::invalid_argument("normalized: no equilibrium measure");
    std::vector<double> out = equilibrium;
    double s = 0;
    for (double v : out) s += v;
    for (double& v : out) v /= s;
    return out;
}

namespace {

CapacityEstimate capacity_green_matrix(const Graph& g, const SiteSet& A, const CapacityParams& p) {
    require_lattice(g, "capacity(green_matrix)");
    CapacityEstimate est;
    est.method = CapacityMethod::green_matrix;
    est.set = A;
    est.equilibrium.assign(A.size(), 0.0);
    SiteSet B = boundary(g, A);

    // orbits of the boundary under the symmetries of the boundary
    std::vector<std::vector<std::int64_t>> orbits;
    std::vector<std::int64_t> orbit_of(B.size(), -1);
    SymmetryGroup G;
    bool sym = p.use_symmetry && B.size() > 1 && B.size() * std::tgamma(g.dim() + 1.0) * std::ldexp(1.0, g.dim()) < 5e7;
    if (sym) G = set_symmetries(B);
    for (std::size_t i = 0; i < B.size(); ++i) {
        if (orbit_of[i] >= 0) continue;
        std::vector<std::int64_t> orb{static_cast<std::int64_t>(i)};
        orbit_of[i] = static_cast<std::int64_t>(orbits.size());
        if (sym)
            for (std::size_t k = 0; k < G.size(); ++k) {
                auto j = B.index_of(G.apply(k, B[i]));
                if (j < 0) throw std::logic_error("symmetry does not preserve the boundary");
                if (orbit_of[j] < 0) {
                    orbit_of[j] = orbit_of[i];
                    orb.push_back(j);
                }
            }
        orbits.push_back(std::move(orb));
    }
    const auto m = static_cast<Eigen::Index>(orbits.size());
    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd rhs(m);
    const auto& lg = lattice_green(g.dim());
    const double inv_lam = 1.0 / g.lambda(Site{});
    if (static_cast<std::size_t>(m) == B.size()) {
        // no symmetry: plain symmetric Green matrix, lower half only
        for (Eigen::Index a = 0; a < m; ++a) {
            rhs[a] = 1;
            for (Eigen::Index b = 0; b <= a; ++b) M(a, b) = lg.visits(B[a] - B[b]) * inv_lam;
        }
    } else {
        for (Eigen::Index a = 0; a < m; ++a) {
            const Site& x = B[orbits[a][0]];
            const double wa = static_cast<double>(orbits[a].size());
            rhs[a] = wa;
            for (Eigen::Index b = 0; b < m; ++b) {
                double s = 0;
                for (auto j : orbits[b]) s += lg.visits(x - B[j]);
                M(a, b) = wa * s * inv_lam;
            }
        }
        M = 0.5 * (M + M.transpose()).eval();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw std::runtime_error("capacity: Green matrix not positive definite");
    Eigen::VectorXd e = llt.solve(rhs);
    double cap = 0;
    for (Eigen::Index a = 0; a < m; ++a) {
        if (e[a] < -1e-9) throw std::runtime_error("capacity: negative equilibrium weight");
        const double v = std::max(0.0, e[a]);
        cap += v * static_cast<double>(orbits[a].size());
        for (auto j : orbits[a]) est.equilibrium[A.index_of(B[j])] = v;
    }
    // perturbation of 1^T G^{-1} 1 under entrywise errors delta: |dcap| <= delta cap^2
    const double delta = lattice_g_err(g);
    const double half = delta * cap * cap * 1.01 + 1e-12 * cap;
    est.value = cap;
    est.lower = cap - half;
    est.upper = cap + half;
    return est;
}

CapacityEstimate capacity_killed(const Graph& g, const SiteSet& A, const CapacityParams& p) {
    CapacityEstimate est;
    est.method = CapacityMethod::exact_killed_solve;
    est.set = A;
    const Site c = set_center(A);
    const double R = std::max(1.0, set_radius(g, A, c));
    const double rho = p.kill_radius > 0 ? p.kill_radius : R + std::max(20.0, R);
    if (!(rho > 2 * R)) throw std::invalid_argument("capacity: kill radius must exceed 2 radius(A)");
    est.kill_radius = rho;
    SiteSet D = ball(g, c, rho);
    Eigen::VectorXd esc = escape_before_exit(g, D, A);
    GreenConstants gc = p.constants ? *p.constants : constants_for(g);
    const double eps = std::min(1.0, gc.entrance_bound(rho / R));
    double cap_rho = 0;
    est.equilibrium.assign(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) {
        double e = g.lambda(A[i]) * esc[static_cast<Eigen::Index>(i)];
        cap_rho += e;
        est.equilibrium[i] = e * (1 - 0.5 * eps);
    }
    est.upper = cap_rho * (1 + 1e-10);
    est.lower = cap_rho * (1 - eps);
    est.value = cap_rho * (1 - 0.5 * eps);
    return est;
}

CapacityEstimate capacity_mc(const Graph& g, const SiteSet& A, const CapacityParams& p) {
    CapacityEstimate est;
    est.method = CapacityMethod::monte_carlo;
    est.set = A;
    est.n_samples = p.n_samples;
    est.seed = p.seed;
    GreenConstants gc = p.constants ? *p.constants : constants_for(g);
    const Site c = set_center(A);
    const double R = std::max(1.0, set_radius(g, A, c));
    const double rho = p.kill_radius > 0 ? p.kill_radius : R * std::max(3.0, std::min(1e7, gc.factor_for(1e-3)));
    est.kill_radius = rho;
    est.equilibrium.assign(A.size(), 0.0);
    SiteSet B = boundary(g, A);
    Rng base = Rng::for_stream(p.seed, {0x636170, 0});
    for (std::size_t i = 0; i < B.size(); ++i) {
        auto e = escape_probability(g, B[i], A, rho, p.n_samples, base.split(i), gc);
        const double lam = g.lambda(B[i]);
        est.equilibrium[A.index_of(B[i])] = lam * e.point_estimate;
        est.value += lam * e.point_estimate;
        est.lower += lam * e.lower;
        est.upper += lam * e.upper;
    }
    return est;
}

}  // namespace

CapacityEstimate equilibrium_and_capacity(const Graph& g, const SiteSet& A, CapacityMethod method,
                                          const CapacityParams& p) {
    if (A.empty()) throw std::invalid_argument("capacity: empty set");
    switch (method) {
        case CapacityMethod::green_matrix: return capacity_green_matrix(g, A, p);
        case CapacityMethod::exact_killed_solve: return capacity_killed(g, A, p);
        case CapacityMethod::monte_carlo: return capacity_mc(g, A, p);
    }
    throw std::logic_error("capacity: bad method");
}

// ---------------------------------------------------------------- energy, hitting

double energy(const std::vector<double>& mu, const GreenTable& table) {
    if (mu.size() != table.domain.size()) throw std::invalid_argument("energy: measure does not match the table");
    double s = 0;
    for (double v : mu) {
        if (v < 0) throw std::invalid_argument("energy: negative mass");
        s += v;
    }
    if (std::abs(s - 1) > 1e-9) throw std::invalid_argument("energy: measure is not normalised");
    Eigen::Map<const Eigen::VectorXd> m(mu.data(), static_cast<Eigen::Index>(mu.size()));
    return m.dot(table.values * m);
}

double energy(const SiteSet& support, const std::vector<double>& mu, const GreenTable& table) {
    if (mu.size() != support.size()) throw std::invalid_argument("energy: measure does not match its support");
    std::vector<double> full(table.domain.size(), 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) {
        auto j = table.domain.index_of(support[i]);
        if (j < 0) {
            if (mu[i] != 0) throw std::invalid_argument("energy: measure charges a site outside the table");
            continue;
        }
        full[j] = mu[i];
    }
    return energy(full, table);
}

Bracket hitting_probability(const Graph& g, const Site& x, const CapacityEstimate& cap) {
    if (!cap.has_equilibrium()) throw std::invalid_argument("hitting_probability: equilibrium measure missing");
    const SiteSet& A = cap.set;
    double v = 0, mass = 0, gerr = 0;
    if (g.is_lattice()) {
        for (std::size_t i = 0; i < A.size(); ++i) {
            if (cap.equilibrium[i] == 0) continue;
            v += lattice_g(g, x - A[i]) * cap.equilibrium[i];
            mass += cap.equilibrium[i];
        }
        gerr = lattice_g_err(g) * mass;
    } else {
        const double rho = cap.kill_radius > 0 ? cap.kill_radius : 1e9;
        SiteSet D = ball(g, x, rho);
        KilledOperator op(g, D);
        Eigen::VectorXd col = op.green_column(x);
        for (std::size_t i = 0; i < A.size(); ++i) {
            auto j = D.index_of(A[i]);
            if (j >= 0) v += col[j] * cap.equilibrium[i];
        }
    }
    const double lo = cap.value > 0 ? cap.lower / cap.value : 1, hi = cap.value > 0 ? cap.upper / cap.value : 1;
    return {v, v * lo - gerr, v * hi + gerr};
}

double f_nu(double x, double y, double nu) {
    if (!(x > 0) || !(y > 0)) throw std::invalid_argument("f_nu: arguments must be positive");
    if (nu < 1) return std::pow(x, nu);
    if (nu == 1) return x / std::max(1.0, std::log(x / y));
    return x * std::pow(y, nu - 1);
}

// ---------------------------------------------------------------- constants

ScalingConstants ScalingConstants::lattice(int d, WeightScale scale) {
    ScalingConstants s;
    const double lam = scale == WeightScale::unit ? 2.0 * d : 1.0;
    s.nu = d - 2;
    s.alpha = d;
    s.c_asymp = s.C_asymp = LatticeGreen::asymptotic_constant(d) / lam;
    if (s.nu == 1) {
        s.c_beta = s.C_beta = 0.5 / s.c_asymp;
    } else if (s.nu < 1) {
        double b = std::beta(0.5 * (1 + s.nu), 0.5 * (1 + s.nu)) * std::cos(0.5 * std::numbers::pi * s.nu) / std::numbers::pi;
        s.c_beta = s.C_beta = b / s.c_asymp;
    } else {
        s.c_beta = s.C_beta = std::numeric_limits<double>::quiet_NaN();
    }
    if (s.nu == 1 && std::abs(s.C_beta * s.c_asymp - 0.5) > 1e-12)
        throw std::logic_error("ScalingConstants: C_beta c_asymp != 1/2");
    if (d == 3 && scale == WeightScale::normalized &&
        (std::abs(s.c_beta - std::numbers::pi / 3) > 1e-12 || std::abs(s.C_beta - std::numbers::pi / 3) > 1e-12))
        throw std::logic_error("ScalingConstants: c_beta = C_beta = pi/3 fails on Z^3");
    return s;
}

GreenConstants calibrate_lattice_constants(int d, WeightScale scale) {
    Graph g = make_lattice(d, DistanceKind::euclidean, scale);
    const double lam = g.lambda(Site{});
    const double nu = d - 2;
    const auto& lg = lattice_green(d);
    GreenConstants gc;
    gc.nu = nu;
    const double casym = LatticeGreen::asymptotic_constant(d);
    double cmin = casym, cmax = std::max(casym, lg.visits(Site{}));
    const std::int64_t M = d == 3 ? 16 : 8;
    Site lo{}, hi{};
    for (int i = 0; i < d; ++i) hi[i] = M;
    for (const auto& z : box_sites(d, lo, hi)) {
        if (z == Site{}) continue;
        double v = lg.visits(z) * std::pow(norm2(z, d), nu);
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
    }
    gc.c_G = cmin / lam;
    gc.C_G = cmax / lam;
    std::vector<double> radii = d == 3 ? std::vector<double>{1, 2, 4, 8, 16} : std::vector<double>{1, 2, 3, 4, 6};
    double rmin = lam / casym, rmax = lam / casym;  // large-R limit R^nu / c_asymp
    for (double R : radii) {
        auto cap = equilibrium_and_capacity(g, ball(g, Site{}, R), CapacityMethod::green_matrix);
        double v = cap.value / std::pow(R, nu);
        rmin = std::min(rmin, v);
        rmax = std::max(rmax, v);
    }
    gc.c_cap = rmin;
    gc.C_cap = rmax;
    return gc;
}

const GreenConstants& lattice_constants(int d, WeightScale scale) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<GreenConstants>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& p = cache[{d, static_cast<int>(scale)}];
    if (!p) p = std::make_unique<GreenConstants>(calibrate_lattice_constants(d, scale));
    return *p;
}

GreenConstants constants_for(const Graph& g) {
    if (g.is_lattice()) {
        GreenConstants gc = lattice_constants(g.dim(), g.scale());
        // graph distance: |z|_1 <= sqrt(d) |z|_2
        if (g.distance_kind() == DistanceKind::graph) gc.C_G *= std::pow(std::sqrt(double(g.dim())), gc.nu);
        return gc;
    }
    GreenConstants gc;
    gc.nu = g.nu() > 0 ? g.nu() : 1;
    gc.c_G = gc.c_cap = 0;
    gc.C_G = gc.C_cap = std::numeric_limits<double>::infinity();
    return gc;
}

// ---------------------------------------------------------------- tubes

double union_capacity_lower_bound(double kappa, std::int64_t P, double N, double c, double eta,
                                  const ScalingConstants& sc) {
    if (P < 1 || !(kappa > 0) || !(N > 0)) throw std::invalid_argument("union_capacity_lower_bound: bad arguments");
    double F = f_nu(N, N / static_cast<double>(P), sc.nu);
    return 1.0 / (1.0 / (c * kappa * static_cast<double>(P)) + (1 + eta) / (sc.c_beta * F));
}

TubeCapacityReport tube_capacity_check(const Graph& g, std::int64_t N, std::int64_t p, double eta) {
    require_lattice(g, "tube_capacity_check");
    if (p < 1 || p > N) throw std::invalid_argument("tube_capacity_check: need 1 <= p <= N");
    TubeCapacityReport r;
    r.N = N;
    r.p = p;
    r.d = g.dim();
    r.eta = eta;
    r.cap = equilibrium_and_capacity(g, tube_sites(g, N, p), CapacityMethod::green_matrix);
    const double lam = g.lambda(Site{});
    if (g.dim() == 3) {
        const double f = 3.0 * std::log(double(N) / double(p)) / (std::numbers::pi * double(N)) / lam;
        r.ratio = {r.cap.value * f, r.cap.lower * f, r.cap.upper * f};
    } else {
        const double f = 1.0 / (double(N) * std::pow(double(p), g.dim() - 3.0));
        r.ratio = {r.cap.value * f, r.cap.lower * f, r.cap.upper * f};
    }
    // balls B(k p e_1, p/4), k = 1..floor(N/p)-1, spacing p over length p floor(N/p) - p
    const std::int64_t P = N / p - 1;
    r.n_balls = P;
    if (P >= 1 && g.dim() == 3) {
        auto kcap = equilibrium_and_capacity(g, ball(g, Site{}, p / 4.0), CapacityMethod::green_matrix);
        r.kappa = kcap.lower;
        ScalingConstants sc = ScalingConstants::lattice(g.dim(), g.scale());
        r.union_lower_bound = union_capacity_lower_bound(r.kappa, P, double(p * (N / p) - p), 1.0, 0.0, sc);
    }
    return r;
}

// ---------------------------------------------------------------- Laplace functionals

double laplace_functional_prediction(const GreenTable& table, const std::vector<double>& V, double u) {
    if (V.size() != table.domain.size()) throw std::invalid_argument("laplace: V does not match the table");
    if (u < 0) throw std::invalid_argument("laplace: negative level");
    std::vector<Eigen::Index> S;
    bool positive = false;
    for (std::size_t i = 0; i < V.size(); ++i)
        if (V[i] != 0) {
            S.push_back(static_cast<Eigen::Index>(i));
            positive = positive || V[i] > 0;
        }
    if (S.empty()) return 1.0;
    const auto n = static_cast<Eigen::Index>(S.size());
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd v(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        v[a] = V[S[a]];
        for (Eigen::Index b = 0; b < n; ++b) G(a, b) = table.values(S[a], S[b]);
    }
    if (positive) {
        // ||G V||_inf over the whole graph is attained on supp(V) (maximum principle)
        double norm = (G * v.cwiseAbs()).maxCoeff();
        if (!(norm < 1)) throw std::domain_error("laplace: ||G V||_inf >= 1, generating function diverges");
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - G * v.asDiagonal();
        Eigen::VectorXd w = M.partialPivLu().solve(Eigen::VectorXd::Ones(n));
        return std::exp(u * v.dot(w));
    }
    Eigen::VectorXd s = (-v).cwiseSqrt();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + s.asDiagonal() * G * s.asDiagonal();
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0)) throw std::domain_error("laplace: I + sqrt(V) G sqrt(V) not positive definite");
    Eigen::VectorXd w = M.llt().solve(s);
    return std::exp(-u * s.dot(w));
}

}  // namespace rilab
