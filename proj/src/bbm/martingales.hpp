#pragma once

#include "bbm/log_value.hpp"
#include "bbm/snapshot.hpp"

#include <utility>
#include <vector>

namespace bbm {

struct MartingaleSeries {
    double beta = 0.0;
    std::vector<std::pair<double, LogValue>> entries;  // (t, W_t), t strictly increasing
};

/// W_t(beta) = e^{-psi(beta) t} sum_{u in N(t)} e^{beta X_u(t)}.
LogValue additive_martingale(const Snapshot& snapshot, double beta, double t);
MartingaleSeries additive_series(const Snapshot& snapshot, double beta);

/// Z_t = sum_{u in N(t)} (sqrt(2) t - X_u(t)) e^{sqrt(2) X_u(t) - 2t}.
double derivative_martingale(const Snapshot& snapshot, double t);

/// W_t^{(u,s)}(beta): additive martingale of the subtree rooted at u, shifted to start at (s, X_u(s)).
LogValue shifted_martingale(const Snapshot& snapshot, const ParticleLabel& u, double s, double beta,
                            double t);

/// W_{t}^{(w,s)}(beta) for every w in N(s), in census order of checkpoint s.
std::vector<LogValue> shifted_martingales(const Snapshot& snapshot, double s, double beta, double t);

/// E[W_inf(beta)^2] = 2 / (1 - beta^2), for 0 <= beta < 1.
double second_moment_W(double beta);
/// E[W_r(beta)^2] = e^{-(1-beta^2) r} + 2 (1 - e^{-(1-beta^2) r}) / (1 - beta^2) (beta != 1).
double second_moment_W(double beta, double r);

}  // namespace bbm
