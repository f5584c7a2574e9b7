#include "bbm/stats.hpp"

#include "bbm/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <numeric>

namespace bbm {

void RunningStats::merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
}

RunningStats summarize(std::span<const double> xs) {
    RunningStats s;
    for (double x : xs) s.add(x);
    return s;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi_square_sf(double statistic, double dof) {
    if (!(dof > 0.0)) throw Error(ErrorCode::OutOfRange, "chi-square needs dof > 0");
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

double kolmogorov_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

GoodnessOfFit ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw Error(ErrorCode::InsufficientSamples, "KS test on empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return {d, 0.0, kolmogorov_pvalue(d, samples.size())};
}

GoodnessOfFit chi_square_test(std::span<const double> observed, std::span<const double> expected,
                              double min_expected, int fitted_params) {
    if (observed.size() != expected.size() || observed.empty())
        throw Error(ErrorCode::InsufficientSamples, "chi-square needs matching non-empty bins");
    std::vector<double> o, e;
    double acc_o = 0.0, acc_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        acc_o += observed[i];
        acc_e += expected[i];
        if (acc_e >= min_expected) {
            o.push_back(acc_o);
            e.push_back(acc_e);
            acc_o = acc_e = 0.0;
        }
    }
    if (acc_e > 0.0 || acc_o > 0.0) {
        if (e.empty()) {
            o.push_back(acc_o);
            e.push_back(acc_e);
        } else {
            o.back() += acc_o;
            e.back() += acc_e;
        }
    }
    GoodnessOfFit r;
    for (std::size_t i = 0; i < o.size(); ++i) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
    r.dof = static_cast<double>(o.size()) - 1.0 - fitted_params;
    if (r.dof < 1.0) throw Error(ErrorCode::InsufficientSamples, "too few chi-square bins");
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::InsufficientSamples, "quantile of empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

MedianSummary median_summary(std::vector<double> samples) {
    if (samples.size() < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 samples");
    std::sort(samples.begin(), samples.end());
    MedianSummary m;
    m.median = quantile_sorted(samples, 0.5);
    m.q1 = quantile_sorted(samples, 0.25);
    m.q3 = quantile_sorted(samples, 0.75);
    // Ranks n/2 -+ sqrt(n)/2 bracket the median with ~68% coverage.
    const double n = static_cast<double>(samples.size());
    const double half = std::sqrt(n) / 2.0;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(n / 2.0 - half)));
    const auto hi = std::min(samples.size() - 1, static_cast<std::size_t>(std::ceil(n / 2.0 + half)));
    m.std_error_log = 0.5 * (std::log(samples[hi]) - std::log(samples[lo]));
    return m;
}

}  // namespace bbm

namespace bbm {

FitResult weighted_line_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> se) {
    const std::size_t n = x.size();
    if (y.size() != n || se.size() != n)
        throw Error(ErrorCode::InsufficientPoints, "x, y and se must have equal length");
    if (n < 3) throw Error(ErrorCode::InsufficientPoints, "need >= 3 points, got " + std::to_string(n));
    long double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error(ErrorCode::InsufficientPoints, "non-finite point");
        if (!(se[i] > 0.0) || !std::isfinite(se[i]))
            throw Error(ErrorCode::DegenerateWeights, "standard errors must be finite and > 0");
        const long double w = 1.0L / (static_cast<long double>(se[i]) * se[i]);
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    const long double mx = sx / sw, my = sy / sw;
    long double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long double w = 1.0L / (static_cast<long double>(se[i]) * se[i]);
        sxx += w * (x[i] - mx) * (x[i] - mx);
        sxy += w * (x[i] - mx) * (y[i] - my);
        syy += w * (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0)) throw Error(ErrorCode::DegenerateWeights, "no spread in x");
    FitResult f;
    f.slope = static_cast<double>(sxy / sxx);
    f.intercept = static_cast<double>(my - sxy / sxx * mx);
    f.slope_std_error = static_cast<double>(std::sqrt(1.0L / sxx));
    f.r_squared = syy > 0 ? static_cast<double>(sxy * sxy / (sxx * syy)) : 1.0;
    f.points_used = n;
    return f;
}

}  // namespace bbm
