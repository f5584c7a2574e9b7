#pragma once

#include "bbm/log_value.hpp"

#include <functional>
#include <numbers>

namespace bbm {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kTypicalThreshold = std::numbers::sqrt2 / 2.0;
/// sqrt(2/3)
inline const double kMeanThreshold = std::sqrt(2.0 / 3.0);

enum class Regime {
    TypicalHigh,      // beta < sqrt(2)/2
    TypicalCritical,  // beta = sqrt(2)/2
    TypicalLow,       // sqrt(2)/2 < beta < sqrt(2)
    MeanHigh,         // 0 < beta < sqrt(2/3)
    MeanCritical,     // beta = sqrt(2/3)
    MeanLow,          // sqrt(2/3) < beta < sqrt(2)
    InfiniteTemp,     // beta = 0 (mean classification only)
};

const char* to_string(Regime r) noexcept;

/// Classification for the conditional (typical) overlap; beta = 0 is TypicalHigh.
Regime typical_regime(double beta);
/// Classification for the mean overlap.
Regime mean_regime(double beta);

double psi(double beta);
double psi_typ(double beta);
double psi_mean(double beta);
/// Location slope (divided by a t) of the particles that carry the mean overlap.
double v_speed(double beta);
/// sqrt(2) t - 3/(2 sqrt(2)) log t
double m_centering(double t);

/// Factor r such that r * nu_{beta,t}([a,1]) has a non-degenerate limit.
LogValue rescaling_factor(double beta, double a, double t);
/// Inverse of the reference decay envelope of E[nu_{beta,t}([a,1])].
LogValue mean_rescaling(double beta, double a, double t);

/// Adaptive Simpson on [lo, hi] to absolute tolerance `abs_tol`. Throws QuadratureNotConverged.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double abs_tol, int max_depth = 48);

/// E[nu_{0,t}([a,1])], exact up to relative error rel_tol.
double exact_mean_overlap_beta0(double a, double t, double rel_tol = 1e-10);

}  // namespace bbm
