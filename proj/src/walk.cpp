#include "rilab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>

namespace rilab {

Site step(const Graph& g, const Site& x, Rng& rng) {
    if (g.is_lattice()) {
        const auto k = rng.below(static_cast<std::uint32_t>(2 * g.dim()));
        Site y = x;
        y[k >> 1] += (k & 1) ? 1 : -1;
        return y;
    }
    const double lam = g.lambda(x);
    if (!(lam > 0)) throw std::invalid_argument("step: isolated site " + to_string(x, g.dim()));
    const auto i = g.table_id(x);
    const auto& off = g.offsets();
    const auto& adj = g.adjacency();
    const auto& w = g.adjacency_weights();
    double u = rng.uniform() * lam;
    for (auto k = off[i]; k < off[i + 1]; ++k) {
        u -= w[k];
        if (u < 0) return g.table_sites()[adj[k]];
    }
    return g.table_sites()[adj[off[i + 1] - 1]];
}

Trace run_until_exit(const Graph& g, const Site& x, const SiteSet& domain, Rng& rng, std::uint64_t max_steps) {
    if (!domain.contains(x)) throw std::invalid_argument("run_until_exit: start outside domain");
    Trace t;
    Site y = x;
    while (true) {
        if (!domain.contains(y)) {
            t.exit_site = y;
            break;
        }
        t.path.push_back(y);
        if (t.steps >= max_steps) {
            t.truncated = true;
            break;
        }
        y = step(g, y, rng);
        ++t.steps;
    }
    t.visited = SiteSet(g.dim(), t.path);
    return t;
}

std::vector<Site> trace_until_exit(const Graph& g, const Site& x, const SiteSet& domain, Rng& rng, bool& truncated,
                                   std::uint64_t max_steps) {
    truncated = false;
    std::vector<char> seen(domain.size(), 0);
    std::vector<Site> out;
    Site y = x;
    std::uint64_t steps = 0;
    while (true) {
        auto i = domain.index_of(y);
        if (i < 0) break;
        if (!seen[i]) {
            seen[i] = 1;
            out.push_back(y);
        }
        if (steps++ >= max_steps) {
            truncated = true;
            break;
        }
        y = step(g, y, rng);
    }
    return out;
}

// ---------------------------------------------------------------- constants

double GreenConstants::entrance_bound(double K) const {
    return std::pow(2.0, nu) * C_G * C_cap / std::pow(K, nu);
}

double GreenConstants::factor_for(double eps) const {
    return std::pow(std::pow(2.0, nu) * C_G * C_cap / eps, 1.0 / nu);
}

// ---------------------------------------------------------------- jumper

LatticeJumper::LatticeJumper(int d) : d_(d) {
    if (d == 3)
        radii_ = {2, 3, 4, 6, 8, 11, 16, 22, 32, 45, 64};
    else if (d == 4)
        radii_ = {2, 3, 4, 6, 8, 11, 16, 22};
    else if (d == 5)
        radii_ = {2, 3, 4, 6, 8, 11};
    else
        throw std::invalid_argument("LatticeJumper: need 3 <= d <= 5");
    for (auto m : radii_) {
        SymmetricBall b(d, static_cast<double>(m));
        auto law = b.exit_law();
        Table t;
        t.m = m;
        t.reps = std::move(law.reps);
        double s = 0;
        for (double v : law.mass) {
            s += v;
            t.cum.push_back(s);
        }
        for (double& v : t.cum) v /= s;
        tables_.push_back(std::move(t));
    }
}

void LatticeJumper::apply_random_symmetry(const SymmetricBall::Key& k, Site& out, Rng& rng) const {
    std::array<int, kMaxDim> perm{};
    for (int i = 0; i < d_; ++i) perm[i] = i;
    for (int i = d_ - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint32_t>(i + 1))]);
    std::uint32_t signs = rng.next32();
    for (int i = 0; i < d_; ++i) out[perm[i]] = ((signs >> i) & 1) ? -k[i] : k[i];
}

void LatticeJumper::jump(Site& y, double room, Rng& rng) const {
    if (!(room > 3)) throw std::logic_error("LatticeJumper::jump: room <= 3");
    if (room >= continuum_threshold()) {
        const double m = 0.8 * room;
        std::normal_distribution<double> nd;
        std::array<double, kMaxDim> v{};
        double s = 0;
        do {
            s = 0;
            for (int i = 0; i < d_; ++i) {
                v[i] = nd(rng);
                s += v[i] * v[i];
            }
        } while (s == 0);
        s = m / std::sqrt(s);
        for (int i = 0; i < d_; ++i) y[i] += static_cast<std::int64_t>(std::llround(v[i] * s));
        return;
    }
    // largest tabulated m with m + 1 < room
    std::size_t j = 0;
    while (j + 1 < tables_.size() && double(tables_[j + 1].m) + 1 < room) ++j;
    const auto& t = tables_[j];
    const double u = rng.uniform();
    auto it = std::upper_bound(t.cum.begin(), t.cum.end(), u);
    auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - t.cum.begin()), t.reps.size() - 1);
    Site off{};
    apply_random_symmetry(t.reps[idx], off, rng);
    for (int i = 0; i < d_; ++i) y[i] += off[i];
}

const LatticeJumper& lattice_jumper(int d) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<LatticeJumper>> inst;
    std::lock_guard<std::mutex> lock(mu);
    auto& p = inst[d];
    if (!p) p = std::make_unique<LatticeJumper>(d);
    return *p;
}

// ---------------------------------------------------------------- excursions

KillRegion make_kill_region(const Graph& g, const Site& c, double rho) {
    KillRegion k;
    k.center = c;
    k.rho = rho;
    if (!g.is_lattice()) k.table_ball = ball(g, c, rho);
    return k;
}

namespace {

bool outside_kill(const Graph& g, const Site& y, const KillRegion& k) {
    if (k.table_ball) return !k.table_ball->contains(y);
    const Site z = y - k.center;
    if (g.distance_kind() == DistanceKind::euclidean) return static_cast<double>(norm2_sq(z, g.dim())) > k.rho * k.rho + 1e-9;
    return static_cast<double>(norm1(z, g.dim())) > k.rho + 1e-9;
}

double room_to_kill(const Graph& g, const Site& y, const KillRegion& k) {
    const Site z = y - k.center;
    if (g.distance_kind() == DistanceKind::euclidean) return k.rho - norm2(z, g.dim());
    return (k.rho - static_cast<double>(norm1(z, g.dim()))) / std::sqrt(double(g.dim()));
}

}  // namespace

Excursion walk_until_hit_or_exit(const Graph& g, Site y, const SiteSet& A, const Site& a_center, double a_radius,
                                 const KillRegion& kill, Rng& rng, std::uint64_t max_steps) {
    Excursion e;
    const LatticeJumper* jumper = g.is_lattice() ? &lattice_jumper(g.dim()) : nullptr;
    while (true) {
        if (A.contains(y)) {
            e.fate = Fate::hit;
            break;
        }
        if (outside_kill(g, y, kill)) {
            e.fate = Fate::escaped;
            break;
        }
        if (e.steps >= max_steps) {
            e.fate = Fate::truncated;
            break;
        }
        ++e.steps;
        if (jumper) {
            double room = std::min(norm2(y - a_center, g.dim()) - a_radius, room_to_kill(g, y, kill));
            if (room > 3) {
                jumper->jump(y, room, rng);
                continue;
            }
        }
        y = step(g, y, rng);
    }
    e.site = y;
    return e;
}

EscapeEstimate escape_probability(const Graph& g, const Site& x, const SiteSet& A, double rho,
                                  std::uint64_t n_samples, const Rng& rng, const GreenConstants& gc) {
    if (!A.contains(x)) throw std::invalid_argument("escape_probability: x not in A");
    if (n_samples == 0) throw std::invalid_argument("escape_probability: n_samples = 0");
    const Site c = set_center(A);
    double r_euc = 0;
    for (const auto& a : A) r_euc = std::max(r_euc, norm2(a - c, g.dim()));
    const double R = std::max(1.0, set_radius(g, A, c));
    if (!(rho > 2 * R)) throw std::invalid_argument("escape_probability: kill radius must exceed 2 radius(A)");
    const KillRegion kill = make_kill_region(g, c, rho);

    std::uint64_t esc = 0, trunc = 0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        Rng r = rng.split(i);
        Site y = step(g, x, r);
        if (A.contains(y)) continue;
        auto ex = walk_until_hit_or_exit(g, y, A, c, r_euc, kill, r);
        if (ex.fate == Fate::escaped) ++esc;
        if (ex.fate == Fate::truncated) ++trunc;
    }
    EscapeEstimate e;
    const double n = static_cast<double>(n_samples);
    e.n_samples = n_samples;
    e.kill_radius = rho;
    e.truncated = trunc;
    e.point_estimate = static_cast<double>(esc) / n;
    const double p = e.point_estimate;
    e.eps_stat = 3.0 * std::sqrt((p * (1 - p) + 1.0 / n) / n);
    e.eps_ret = std::min(1.0, gc.entrance_bound(rho / R));
    e.lower = std::max(0.0, p - e.eps_ret - e.eps_stat);
    e.upper = std::min(1.0, p + e.eps_stat + static_cast<double>(trunc) / n);
    return e;
}

}  // namespace rilab
