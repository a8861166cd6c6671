#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace rilab {

class Welford {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double se() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0, m2_ = 0;
};

struct Interval {
    double lower = 0, upper = 1;
};

// Wilson score interval with z standard errors.
Interval wilson(std::uint64_t k, std::uint64_t n, double z = 3.0);
// Exact upper bound for k = 0 successes out of n at two-sided level alpha.
double clopper_pearson_zero_upper(std::uint64_t n, double alpha = 0.05);

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
    std::vector<double> residuals;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rilab
