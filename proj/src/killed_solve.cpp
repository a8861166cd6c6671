#include "rilab/killed_solve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace rilab {

namespace {
constexpr std::size_t kDirectLimit = 2000;
constexpr double kCgTol = 1e-13;

using SpMat = Eigen::SparseMatrix<double>;
using Cg = Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;
}  // namespace

struct KilledOperator::Impl {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    Cg cg;
    bool direct = true;
};

KilledOperator::~KilledOperator() = default;
KilledOperator::KilledOperator(KilledOperator&&) noexcept = default;

KilledOperator::KilledOperator(const Graph& g, SiteSet domain)
    : g_(&g), D_(std::move(domain)), impl_(std::make_unique<Impl>()) {
    const auto n = static_cast<Eigen::Index>(D_.size());
    if (n == 0) throw std::invalid_argument("killed solve: empty domain");
    lambda_.resize(n);
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(n * (2 * g.dim() + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Site& x = D_[i];
        double lam = g.lambda(x);
        if (!(lam > 0)) throw std::invalid_argument("killed solve: isolated site " + to_string(x, g.dim()));
        lambda_[i] = lam;
        tr.emplace_back(i, i, lam);
        g.for_each_neighbor(x, [&](const Site& y, double w) {
            auto j = D_.index_of(y);
            if (j >= 0) tr.emplace_back(i, j, -w);
        });
    }
    M_.resize(n, n);
    M_.setFromTriplets(tr.begin(), tr.end());
    M_.makeCompressed();
    impl_->direct = D_.size() <= kDirectLimit;
    if (impl_->direct) {
        impl_->ldlt.compute(M_);
        if (impl_->ldlt.info() != Eigen::Success) throw std::runtime_error("killed solve: factorisation failed (singular domain?)");
    } else {
        impl_->cg.setTolerance(kCgTol);
        impl_->cg.setMaxIterations(100000);
        impl_->cg.compute(M_);
    }
}

Eigen::VectorXd KilledOperator::solve_raw(const Eigen::VectorXd& b) const {
    if (impl_->direct) {
        last_iters_ = 0;
        return impl_->ldlt.solve(b);
    }
    Eigen::VectorXd u = impl_->cg.solve(b);
    last_iters_ = static_cast<int>(impl_->cg.iterations());
    if (impl_->cg.info() != Eigen::Success) throw std::runtime_error("killed solve: CG did not converge");
    return u;
}

Eigen::VectorXd KilledOperator::solve_poisson(const Eigen::VectorXd& f) const {
    return solve_raw(lambda_.cwiseProduct(f));
}

Eigen::VectorXd KilledOperator::green_column(const Site& y) const {
    auto j = D_.index_of(y);
    if (j < 0) throw std::invalid_argument("green_column: site outside domain");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D_.size()));
    b[j] = 1.0;
    return solve_raw(b);
}

Eigen::VectorXd KilledOperator::harmonic(const std::function<double(const Site&)>& h) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D_.size()));
    for (std::size_t i = 0; i < D_.size(); ++i)
        g_->for_each_neighbor(D_[i], [&](const Site& y, double w) {
            if (!D_.contains(y)) b[i] += w * h(y);
        });
    return solve_raw(b);
}

Eigen::VectorXd KilledOperator::exit_time() const { return solve_raw(lambda_); }

Eigen::VectorXd hit_before_exit(const Graph& g, const SiteSet& D, const SiteSet& A) {
    std::vector<Site> rest;
    for (const auto& x : D)
        if (!A.contains(x)) rest.push_back(x);
    Eigen::VectorXd out = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(D.size()));
    if (rest.empty()) return out;
    KilledOperator op(g, SiteSet(D.dim(), std::move(rest)));
    Eigen::VectorXd h = op.harmonic([&](const Site& y) { return A.contains(y) ? 1.0 : 0.0; });
    for (std::size_t i = 0; i < op.domain().size(); ++i) out[D.index_of(op.domain()[i])] = h[i];
    return out;
}

Eigen::VectorXd escape_before_exit(const Graph& g, const SiteSet& D, const SiteSet& A) {
    Eigen::VectorXd h = hit_before_exit(g, D, A);
    Eigen::VectorXd e(static_cast<Eigen::Index>(A.size()));
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (!D.contains(A[i])) throw std::invalid_argument("escape_before_exit: A not inside D");
        double s = 0;
        g.for_each_neighbor(A[i], [&](const Site& y, double w) {
            auto j = D.index_of(y);
            double hy = j < 0 ? 0.0 : h[j];
            s += w * (1.0 - hy);
        });
        e[i] = s / g.lambda(A[i]);
    }
    return e;
}

// ---------------------------------------------------------------- symmetric ball

double orbit_size(const SymmetricBall::Key& k, int d) {
    double perms = 1;
    int run = 1;
    for (int i = 1; i <= d; ++i) {
        if (i < d && k[i] == k[i - 1]) {
            ++run;
        } else {
            for (int r = 2; r <= run; ++r) perms *= r;
            run = 1;
        }
    }
    double fact = 1;
    for (int r = 2; r <= d; ++r) fact *= r;
    int nz = 0;
    for (int i = 0; i < d; ++i) nz += k[i] != 0;
    return fact / perms * std::ldexp(1.0, nz);
}

SymmetricBall::Key SymmetricBall::canonical(const Site& x) const {
    Key k{};
    for (int i = 0; i < d_; ++i) k[i] = x[i] < 0 ? -x[i] : x[i];
    std::sort(k.begin(), k.begin() + d_);
    return k;
}

bool SymmetricBall::inside(const Key& k) const {
    std::int64_t s = 0;
    for (int i = 0; i < d_; ++i) s += k[i] * k[i];
    return s <= R2_;
}

std::int64_t SymmetricBall::lookup(const Key& k) const {
    if (k[d_ - 1] > Ri_ || !inside(k)) return -1;
    std::int64_t lin = 0;
    for (int i = d_ - 1; i >= 0; --i) lin = lin * (Ri_ + 1) + k[i];
    return index_[lin];
}

std::int64_t SymmetricBall::index_of(const Site& x) const { return lookup(canonical(x)); }

SymmetricBall::SymmetricBall(int d, double R) : d_(d), R_(R) {
    if (d < 3 || d > kMaxDim) throw std::invalid_argument("SymmetricBall: need 3 <= d <= 5");
    if (R < 0) throw std::invalid_argument("SymmetricBall: negative radius");
    Ri_ = static_cast<std::int64_t>(std::floor(R + 1e-9));
    R2_ = static_cast<std::int64_t>(std::floor(R * R + 1e-9));
    double cube = std::pow(double(Ri_ + 1), d);
    if (cube > 6e7) throw std::invalid_argument("SymmetricBall: radius too large for this dimension");
    index_.assign(static_cast<std::size_t>(cube), -1);

    Key k{};
    while (true) {
        if (inside(k)) {
            std::int64_t lin = 0;
            for (int i = d - 1; i >= 0; --i) lin = lin * (Ri_ + 1) + k[i];
            index_[lin] = static_cast<std::int32_t>(reps_.size());
            reps_.push_back(k);
            wsize_.push_back(rilab::orbit_size(k, d));
        }
        int i = 0;
        while (i < d && k[i] == (i + 1 < d ? k[i + 1] : Ri_)) ++i;
        if (i == d) break;
        ++k[i];
        for (int j = 0; j < i; ++j) k[j] = 0;
    }

    const auto n = static_cast<Eigen::Index>(reps_.size());
    nbr_.resize(reps_.size() * 2 * d);
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(n * (2 * d + 1));
    const double p = 1.0 / (2 * d);
    for (Eigen::Index a = 0; a < n; ++a) {
        Site x{};
        for (int i = 0; i < d; ++i) x[i] = reps_[a][i];
        std::map<std::int64_t, double> row;
        row[a] += wsize_[a];
        for (int i = 0; i < d; ++i)
            for (int s = -1; s <= 1; s += 2) {
                Site y = x;
                y[i] += s;
                auto b = index_of(y);
                nbr_[a * 2 * d + 2 * i + (s > 0)] = b;
                if (b >= 0) row[b] -= wsize_[a] * p;
            }
        for (auto [b, v] : row) tr.emplace_back(a, b, v);
    }
    M_.resize(n, n);
    M_.setFromTriplets(tr.begin(), tr.end());
    M_.makeCompressed();
}

Eigen::VectorXd SymmetricBall::solve_raw(const Eigen::VectorXd& b) const {
    if (reps_.size() <= kDirectLimit / 4) {
        Eigen::SimplicialLDLT<SpMat> ldlt(M_);
        if (ldlt.info() != Eigen::Success) throw std::runtime_error("SymmetricBall: factorisation failed");
        last_iters_ = 0;
        return ldlt.solve(b);
    }
    Cg cg;
    cg.setTolerance(kCgTol);
    cg.setMaxIterations(200000);
    cg.compute(M_);
    Eigen::VectorXd u = cg.solve(b);
    last_iters_ = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) throw std::runtime_error("SymmetricBall: CG did not converge");
    return u;
}

Eigen::VectorXd SymmetricBall::solve_poisson(const Eigen::VectorXd& f) const {
    Eigen::VectorXd b(f.size());
    for (Eigen::Index a = 0; a < f.size(); ++a) b[a] = wsize_[a] * f[a];
    return solve_raw(b);
}

Eigen::VectorXd SymmetricBall::harmonic(const std::function<double(const Site&)>& h) const {
    const auto n = static_cast<Eigen::Index>(reps_.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    const double p = 1.0 / (2 * d_);
    for (Eigen::Index a = 0; a < n; ++a)
        for (int i = 0; i < d_; ++i)
            for (int s = -1; s <= 1; s += 2) {
                if (nbr_[a * 2 * d_ + 2 * i + (s > 0)] >= 0) continue;
                Site y{};
                for (int j = 0; j < d_; ++j) y[j] = reps_[a][j];
                y[i] += s;
                b[a] += wsize_[a] * p * h(y);
            }
    return solve_raw(b);
}

Eigen::VectorXd SymmetricBall::visits_from_center() const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reps_.size()));
    f[0] = 1.0;
    return solve_poisson(f);
}

SymmetricBall::ExitLaw SymmetricBall::exit_law() const {
    Eigen::VectorXd G = visits_from_center();
    std::map<Key, double> mass;
    const double p = 1.0 / (2 * d_);
    for (std::size_t a = 0; a < reps_.size(); ++a)
        for (int i = 0; i < d_; ++i)
            for (int s = -1; s <= 1; s += 2) {
                if (nbr_[a * 2 * d_ + 2 * i + (s > 0)] >= 0) continue;
                Site y{};
                for (int j = 0; j < d_; ++j) y[j] = reps_[a][j];
                y[i] += s;
                mass[canonical(y)] += G[static_cast<Eigen::Index>(a)] * wsize_[a] * p;
            }
    ExitLaw law;
    for (auto& [k, m] : mass) {
        law.reps.push_back(k);
        law.mass.push_back(m);
    }
    return law;
}

}  // namespace rilab
