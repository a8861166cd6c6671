#include "rilab/lattice_green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace rilab {

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        double wi = 2 / ((1 - z * z) * dp * dp);
        double h = 0.5 * (b - a), m = 0.5 * (b + a);
        x[i] = m - h * z;
        x[n - 1 - i] = m + h * z;
        w[i] = w[n - 1 - i] = h * wi;
    }
}

namespace {

constexpr int kNodes = 24;
constexpr int kPanels = 28;

// f[n] = exp(-s) I_n(s) for n = 0..nmax, by backward recurrence normalised with
// exp(-s) (I_0 + 2 sum_{n>=1} I_n) = 1.
void scaled_bessel(double s, std::int64_t nmax, double* f) {
    auto start = nmax + static_cast<std::int64_t>(std::ceil(std::sqrt(80.0 * std::max(s, 1.0)))) + 30;
    double ip1 = 0, in = 1e-280, sum = 0;
    for (std::int64_t n = start; n >= 1; --n) {
        double im1 = ip1 + (2.0 * n / s) * in;
        if (n <= nmax) f[n] = in;
        sum += in;
        ip1 = in;
        in = im1;
        if (in > 1e250) {
            const double r = 1e-250;
            in *= r;
            ip1 *= r;
            sum *= r;
            for (std::int64_t k = n; k <= nmax; ++k) f[k] *= r;
        }
    }
    f[0] = in;
    double norm = in + 2 * sum;
    for (std::int64_t k = 0; k <= nmax; ++k) f[k] /= norm;
}

}  // namespace

double LatticeGreen::asymptotic_constant(int d) {
    return 0.5 * d * std::tgamma(0.5 * d - 1) * std::pow(std::numbers::pi, -0.5 * d);
}

double LatticeGreen::asymptotic(const Site& z) const {
    double r = norm2(z, d_);
    if (r == 0) throw std::invalid_argument("asymptotic Green function at the origin");
    return asymptotic_constant(d_) * std::pow(r, 2.0 - d_);
}

LatticeGreen::LatticeGreen(int d) : d_(d) {
    if (d < 3 || d > kMaxDim) throw std::invalid_argument("LatticeGreen: need 3 <= d <= 5");
    std::vector<double> x, w;
    gauss_legendre(kNodes, 0, 1, x, w);
    t_ = x;
    w_ = w;
    for (int j = 0; j < kPanels; ++j) {
        gauss_legendre(kNodes, std::ldexp(1.0, j), std::ldexp(1.0, j + 1), x, w);
        t_.insert(t_.end(), x.begin(), x.end());
        w_.insert(w_.end(), w.begin(), w.end());
    }
    T_ = std::ldexp(1.0, kPanels);
    dense_max_ = d == 3 ? 160 : d == 4 ? 40 : 16;
    build_bessel(dense_max_, base_);
    std::size_t vol = 1;
    for (int i = 0; i < d; ++i) vol *= static_cast<std::size_t>(dense_max_ + 1);
    dense_ = std::make_unique<std::atomic<double>[]>(vol);
    for (std::size_t i = 0; i < vol; ++i) dense_[i].store(std::numeric_limits<double>::quiet_NaN(), std::memory_order_relaxed);
}

void LatticeGreen::build_bessel(std::int64_t nmax, std::vector<double>& out) const {
    out.assign((nmax + 1) * t_.size(), 0.0);
    for (std::size_t k = 0; k < t_.size(); ++k) scaled_bessel(t_[k] / d_, nmax, &out[k * (nmax + 1)]);
}

LatticeGreen::Key LatticeGreen::canonical(const Site& z) const {
    Key k{};
    for (int i = 0; i < d_; ++i) k[i] = z[i] < 0 ? -z[i] : z[i];
    for (int i = 1; i < d_; ++i)
        for (int j = i; j > 0 && k[j - 1] > k[j]; --j) std::swap(k[j - 1], k[j]);
    return k;
}

double LatticeGreen::compute(const Key& k, const std::vector<double>& bessel, std::int64_t nmax) const {
    const std::int64_t stride = nmax + 1;
    double s = 0;
    for (std::size_t j = 0; j < t_.size(); ++j) {
        const double* f = &bessel[j * stride];
        double p = w_[j];
        for (int i = 0; i < d_; ++i) p *= f[k[i]];
        s += p;
    }
    double half = 0.5 * d_, q = 0;
    for (int i = 0; i < d_; ++i) q += 4.0 * double(k[i]) * double(k[i]) - 1.0;
    double c = std::pow(d_ / (2 * std::numbers::pi), half);
    s += c * (std::pow(T_, 1 - half) / (half - 1) - (d_ * q / 8.0) * std::pow(T_, -half) / half);
    return s;
}

double LatticeGreen::visits(const Site& z) const {
    Key k = canonical(z);
    if (k[d_ - 1] <= dense_max_) {
        std::size_t lin = 0;
        for (int i = d_ - 1; i >= 0; --i) lin = lin * (dense_max_ + 1) + k[i];
        double v = dense_[lin].load(std::memory_order_relaxed);
        if (std::isnan(v)) {
            v = compute(k, base_, dense_max_);
            dense_[lin].store(v, std::memory_order_relaxed);
        }
        return v;
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    if (k[d_ - 1] > 1000000) throw std::invalid_argument("LatticeGreen: site too far");
    if (k[d_ - 1] > far_nmax_) {
        far_nmax_ = std::max<std::int64_t>(k[d_ - 1], 2 * std::max<std::int64_t>(far_nmax_, dense_max_));
        build_bessel(far_nmax_, far_);
    }
    double v = compute(k, far_, far_nmax_);
    cache_.emplace(k, v);
    return v;
}

const LatticeGreen& lattice_green(int d) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<LatticeGreen>> inst;
    std::lock_guard<std::mutex> lock(mu);
    auto& p = inst[d];
    if (!p) p = std::make_unique<LatticeGreen>(d);
    return *p;
}

}  // namespace rilab
