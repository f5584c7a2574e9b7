#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bbm {

/// Welford accumulator; merge() combines partial accumulators in any order.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    void merge(const RunningStats& o) noexcept;

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Mean/std-error of a batch, summed in index order.
RunningStats summarize(std::span<const double> xs);

double normal_cdf(double x) noexcept;
double chi_square_sf(double statistic, double dof);
/// Asymptotic Kolmogorov distribution tail P(sqrt(n) D > lambda), with the usual
/// small-sample correction lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
double kolmogorov_pvalue(double d, std::size_t n);

struct GoodnessOfFit {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

/// One-sample KS test against a continuous CDF.
GoodnessOfFit ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Pearson chi-square; bins with expected count below `min_expected` are merged into their
/// neighbour. `fitted_params` reduces the degrees of freedom.
GoodnessOfFit chi_square_test(std::span<const double> observed, std::span<const double> expected,
                              double min_expected = 5.0, int fitted_params = 0);

/// Linear-interpolated quantile of an ascending sequence.
double quantile_sorted(std::span<const double> sorted, double p);

struct MedianSummary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double std_error_log = 0.0;  // half-width of the +-1 sigma order-statistic interval, in log
};
/// Samples must be positive.
MedianSummary median_summary(std::vector<double> samples);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_std_error = 0.0;
    double r_squared = 0.0;
    std::size_t points_used = 0;
};

/// Weighted least squares of y on x with weights 1/se^2. The slope error is the usual
/// inverse-information one, so it is calibrated when `se` are the true standard errors.
/// Throws InsufficientPoints (< 3 points) and DegenerateWeights (non-positive or non-finite se,
/// or no spread in x).
FitResult weighted_line_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> se);

}  // namespace bbm
