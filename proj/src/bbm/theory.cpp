#include "bbm/theory.hpp"

#include "bbm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace bbm {

namespace {

constexpr double kBoundaryTol = 1e-12;

void require_subcritical(double beta, const char* what) {
    if (!(beta >= 0.0 && beta < kSqrt2))
        throw Error(ErrorCode::OutOfRange,
                    std::string(what) + " needs 0 <= beta < sqrt(2), got " + std::to_string(beta));
}

}  // namespace

const char* to_string(Regime r) noexcept {
    switch (r) {
    case Regime::TypicalHigh: return "TypicalHigh";
    case Regime::TypicalCritical: return "TypicalCritical";
    case Regime::TypicalLow: return "TypicalLow";
    case Regime::MeanHigh: return "MeanHigh";
    case Regime::MeanCritical: return "MeanCritical";
    case Regime::MeanLow: return "MeanLow";
    case Regime::InfiniteTemp: return "InfiniteTemp";
    }
    return "?";
}

Regime typical_regime(double beta) {
    require_subcritical(beta, "typical_regime");
    if (std::abs(beta - kTypicalThreshold) <= kBoundaryTol) return Regime::TypicalCritical;
    return beta < kTypicalThreshold ? Regime::TypicalHigh : Regime::TypicalLow;
}

Regime mean_regime(double beta) {
    require_subcritical(beta, "mean_regime");
    if (beta == 0.0) return Regime::InfiniteTemp;
    if (std::abs(beta - kMeanThreshold) <= kBoundaryTol) return Regime::MeanCritical;
    return beta < kMeanThreshold ? Regime::MeanHigh : Regime::MeanLow;
}

double psi(double beta) {
    if (!(beta >= 0.0)) throw Error(ErrorCode::OutOfRange, "psi needs beta >= 0");
    return 1.0 + beta * beta / 2.0;
}

double psi_typ(double beta) {
    require_subcritical(beta, "psi_typ");
    if (beta < kTypicalThreshold) return 1.0 - beta * beta;
    return (kSqrt2 - beta) * (kSqrt2 - beta);
}

double psi_mean(double beta) {
    require_subcritical(beta, "psi_mean");
    if (beta <= kMeanThreshold) return 1.0 - beta * beta;
    const double b2 = beta * beta;
    return (2.0 - b2) * (2.0 - b2) / (8.0 * b2);
}

double v_speed(double beta) {
    require_subcritical(beta, "v_speed");
    if (beta == 0.0) return 0.0;
    return std::min(2.0 * beta, psi(beta) / beta);
}

double m_centering(double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "m_centering needs t > 0");
    return kSqrt2 * t - 3.0 / (2.0 * kSqrt2) * std::log(t);
}

LogValue rescaling_factor(double beta, double a, double t) {
    if (!(a > 0.0 && a < 1.0) || !(t > 0.0))
        throw Error(ErrorCode::OutOfRange, "rescaling_factor needs 0 < a < 1 and t > 0");
    const double at = a * t;
    switch (typical_regime(beta)) {
    case Regime::TypicalHigh: return LogValue::from_log((1.0 - beta * beta) * at);
    case Regime::TypicalCritical: return LogValue::from_log(0.5 * std::log(at) + at / 2.0);
    default:
        return LogValue::from_log(3.0 * beta / kSqrt2 * std::log(at) +
                                  (kSqrt2 - beta) * (kSqrt2 - beta) * at);
    }
}

LogValue mean_rescaling(double beta, double a, double t) {
    if (!(a > 0.0 && a < 1.0) || !(t > 0.0))
        throw Error(ErrorCode::OutOfRange, "mean_rescaling needs 0 < a < 1 and t > 0");
    const double at = a * t;
    switch (mean_regime(beta)) {
    case Regime::InfiniteTemp: return LogValue::from_log(at - std::log(2.0 * at));
    case Regime::MeanHigh: return LogValue::from_log((1.0 - beta * beta) * at);
    case Regime::MeanCritical: return LogValue::from_log(0.5 * std::log(t) + at / 3.0);
    default: return LogValue::from_log(1.5 * std::log(t) + psi_mean(beta) * at);
    }
}

namespace {

struct SimpsonState {
    const std::function<double(double)>& f;
    int max_depth;
    bool failed = false;
};

double simpson_step(SimpsonState& st, double lo, double hi, double flo, double fmid, double fhi,
                    double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const double flm = st.f(lm);
    const double frm = st.f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= st.max_depth) {
        st.failed = true;
        return left + right + delta / 15.0;
    }
    return simpson_step(st, lo, mid, flo, flm, fmid, left, tol / 2.0, depth + 1) +
           simpson_step(st, mid, hi, fmid, frm, fhi, right, tol / 2.0, depth + 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double abs_tol, int max_depth) {
    if (!(hi > lo)) return 0.0;
    SimpsonState st{f, max_depth};
    const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double r = simpson_step(st, lo, hi, flo, fmid, fhi, whole, abs_tol, 0);
    if (st.failed || !std::isfinite(r))
        throw Error(ErrorCode::QuadratureNotConverged,
                    "adaptive Simpson did not reach tolerance on [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    return r;
}

double exact_mean_overlap_beta0(double a, double t, double rel_tol) {
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::OutOfRange, "need 0 < a < 1");
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "need t > 0");
    if (!(rel_tol >= 1e-12)) throw Error(ErrorCode::OutOfRange, "rel_tol must be >= 1e-12");

    // M ~ Geometric(q) ancestors at time at, each with Geometric(p) descendants at t.
    const double log_q = -a * t;
    const double log_p = -(1.0 - a) * t;
    const double p = std::exp(log_p);
    const double pq = std::exp(log_p + log_q);

    // 1 - (1 - r) e^{-u}, without cancellation for small u and r.
    auto one_minus = [](double r, double u) { return -std::expm1(-u) + r * std::exp(-u); };
    // Integrand against dy with u = e^y.
    auto g = [&](double y) {
        const double u = std::exp(y);
        const double eu = std::exp(-u);
        const double dp = one_minus(p, u);
        const double dpq = one_minus(pq, u);
        return u * u * eu * (1.0 + (1.0 - p) * eu) / (dp * dpq * dpq);
    };

    const double y_lo = log_p + log_q + std::log(1e-9);
    const double y_hi = std::log(60.0);
    std::array<double, 5> cuts{y_lo, log_p + log_q, log_p, 0.0, y_hi};
    std::sort(cuts.begin(), cuts.end());

    // Scale estimate from the dominant 2/(p u) shape: (2/p) log(1/q) + O(1/p).
    double coarse = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const int n = 64;
        const double h = (cuts[i + 1] - cuts[i]) / n;
        for (int k = 0; k < n; ++k) {
            const double x0 = cuts[i] + k * h;
            coarse += h / 6.0 * (g(x0) + 4.0 * g(x0 + h / 2) + g(x0 + h));
        }
    }
    const double tol = rel_tol * std::abs(coarse) / 4.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += adaptive_simpson(g, cuts[i], cuts[i + 1], tol);
    return pq * total;
}

}  // namespace bbm
