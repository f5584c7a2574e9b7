#include "bbm/harness.hpp"

#include "bbm/brownian.hpp"
#include "bbm/errors.hpp"
#include "bbm/martingales.hpp"
#include "bbm/overlap.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"
#include "bbm/spine.hpp"
#include "bbm/subtree_sampler.hpp"
#include "bbm/theory.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bbm {

using json = nlohmann::ordered_json;

namespace {

struct KindName {
    ExperimentKind kind;
    const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::TypicalOverlap, "typical_overlap"},
    {ExperimentKind::MeanOverlapNaive, "mean_overlap_naive"},
    {ExperimentKind::MeanOverlapIs, "mean_overlap_is"},
    {ExperimentKind::Beta0Exact, "beta0_exact"},
    {ExperimentKind::MartingaleSuite, "martingale_suite"},
    {ExperimentKind::BallotSuite, "ballot_suite"},
    {ExperimentKind::RnCheck, "rn_check"},
};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

bool is_overlap_kind(ExperimentKind k) {
    return k == ExperimentKind::TypicalOverlap || k == ExperimentKind::MeanOverlapNaive ||
           k == ExperimentKind::MeanOverlapIs;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string brief(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

const char* to_string(ExperimentKind kind) noexcept {
    for (const auto& k : kKinds)
        if (k.kind == kind) return k.name;
    return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    for (const auto& k : kKinds)
        if (s == k.name) return k.kind;
    invalid("unknown experiment kind '" + s + "'");
}

double ExperimentConfig::tolerance(const std::string& key, double fallback) const {
    const auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

double ExperimentConfig::parameter(const std::string& key, double fallback) const {
    const auto it = parameters.find(key);
    return it == parameters.end() ? fallback : it->second;
}

void ExperimentConfig::validate() const {
    if (t_grid.empty()) invalid("t_grid must not be empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0) || !std::isfinite(t_grid[i])) invalid("t_grid entries must be > 0");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1])) invalid("t_grid must be strictly increasing");
    }
    if (replicas < 2) invalid("replicas must be >= 2");
    if (population_cap < 1) invalid("population_cap must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) invalid("beta must be >= 0");
    if (is_overlap_kind(kind)) {
        if (!(beta < kSqrt2)) invalid("overlap experiments need beta < sqrt(2)");
        if (!(a > 0.0 && a < 1.0)) invalid("a must lie in (0,1)");
        for (double t : t_grid)
            if (!(a * t > 0.0 && a * t < t)) invalid("a*t must be an interior checkpoint");
    }
    if (kind == ExperimentKind::Beta0Exact && !(a > 0.0 && a <= 1.0))
        invalid("a must lie in (0,1]");
    if (subtree_sampler.pool_size < 2) invalid("subtree_sampler.pool_size must be >= 2");
    if (!(subtree_sampler.level_step > 0.0)) invalid("subtree_sampler.level_step must be > 0");
    if (!(subtree_sampler.direct_horizon >= 0.0))
        invalid("subtree_sampler.direct_horizon must be >= 0");
}

namespace {

double number(const json& j, const char* key) {
    if (!j.is_number()) invalid(std::string(key) + " must be a number");
    return j.get<double>();
}

std::uint64_t count(const json& j, const char* key) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        invalid(std::string(key) + " must be a non-negative integer");
    return j.get<std::uint64_t>();
}

std::map<std::string, double> number_map(const json& j, const char* key) {
    if (!j.is_object()) invalid(std::string(key) + " must be an object");
    std::map<std::string, double> m;
    for (const auto& [k, v] : j.items()) m[k] = number(v, key);
    return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) invalid("config must be a JSON object");
    ExperimentConfig c;
    bool have_kind = false;
    for (const auto& [key, v] : j.items()) {
        if (key == "kind") {
            if (!v.is_string()) invalid("kind must be a string");
            c.kind = parse_experiment_kind(v.get<std::string>());
            have_kind = true;
        } else if (key == "beta") {
            c.beta = number(v, "beta");
        } else if (key == "a") {
            c.a = number(v, "a");
        } else if (key == "t_grid") {
            if (!v.is_array()) invalid("t_grid must be an array");
            c.t_grid.clear();
            for (const auto& t : v) c.t_grid.push_back(number(t, "t_grid"));
        } else if (key == "replicas") {
            c.replicas = count(v, "replicas");
        } else if (key == "master_seed") {
            c.master_seed = count(v, "master_seed");
        } else if (key == "population_cap") {
            c.population_cap = count(v, "population_cap");
        } else if (key == "output_dir") {
            if (!v.is_string()) invalid("output_dir must be a string");
            c.output_dir = v.get<std::string>();
        } else if (key == "tolerances") {
            c.tolerances = number_map(v, "tolerances");
        } else if (key == "parameters") {
            c.parameters = number_map(v, "parameters");
        } else if (key == "subtree_sampler") {
            if (!v.is_object()) invalid("subtree_sampler must be an object");
            for (const auto& [sk, sv] : v.items()) {
                if (sk == "mode") {
                    const auto m = sv.is_string() ? sv.get<std::string>() : std::string{};
                    if (m == "exact") c.subtree_sampler.mode = SubtreeMode::Exact;
                    else if (m == "pooled") c.subtree_sampler.mode = SubtreeMode::Pooled;
                    else invalid("subtree_sampler.mode must be \"exact\" or \"pooled\"");
                } else if (sk == "pool_size") {
                    c.subtree_sampler.pool_size = count(sv, "pool_size");
                } else if (sk == "level_step") {
                    c.subtree_sampler.level_step = number(sv, "level_step");
                } else if (sk == "direct_horizon") {
                    c.subtree_sampler.direct_horizon = number(sv, "direct_horizon");
                } else {
                    invalid("unknown subtree_sampler field '" + sk + "'");
                }
            }
        } else {
            invalid("unknown config field '" + key + "'");
        }
    }
    if (!have_kind) invalid("kind is required");
    c.subtree_sampler.population_cap = c.population_cap;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        invalid(path + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["beta"] = c.beta;
    j["a"] = c.a;
    j["t_grid"] = c.t_grid;
    j["replicas"] = c.replicas;
    j["master_seed"] = c.master_seed;
    j["population_cap"] = c.population_cap;
    j["output_dir"] = c.output_dir;
    j["tolerances"] = json::object();
    for (const auto& [k, v] : c.tolerances) j["tolerances"][k] = v;
    j["parameters"] = json::object();
    for (const auto& [k, v] : c.parameters) j["parameters"][k] = v;
    j["subtree_sampler"] = {{"mode", c.subtree_sampler.mode == SubtreeMode::Exact ? "exact" : "pooled"},
                            {"pool_size", c.subtree_sampler.pool_size},
                            {"level_step", c.subtree_sampler.level_step},
                            {"direct_horizon", c.subtree_sampler.direct_horizon}};
    return j;
}

bool ExperimentResult::all_pass() const noexcept {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

FitResult fit_exponent(const std::vector<EstimatePoint>& points) {
    std::vector<double> x, y, se;
    for (const auto& p : points) {
        x.push_back(p.t);
        y.push_back(p.log_point);
        se.push_back(p.se_log);
    }
    return weighted_line_fit(x, y, se);
}

namespace {

std::uint64_t grid_seed(const ExperimentConfig& c, std::size_t k) {
    return derive_substream(c.master_seed, k);
}

Verdict relative_verdict(std::string name, std::string prediction, double predicted,
                         double observed, double tol) {
    Verdict v{std::move(name), std::move(prediction), predicted, observed, tol, false, ""};
    v.pass = std::abs(observed - predicted) <= tol * std::abs(predicted);
    v.detail = "relative error " + brief(std::abs(observed - predicted) / std::abs(predicted));
    return v;
}

Verdict z_verdict(std::string name, std::string prediction, double predicted, double observed,
                  double se, double z_max) {
    Verdict v{std::move(name), std::move(prediction), predicted, observed, z_max, false, ""};
    const double z = se > 0.0 ? (observed - predicted) / se : (observed == predicted ? 0.0 : INFINITY);
    v.pass = std::abs(z) <= z_max;
    v.detail = "z = " + brief(z);
    return v;
}

// Runs fn for every grid point, recording per-point failures instead of aborting.
template <class Fn>
void each_point(ExperimentResult& r, Fn&& fn) {
    const auto& c = r.config;
    for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
        try {
            fn(k, c.t_grid[k]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PopulationCapExceeded) throw;
            r.failures.emplace_back(c.t_grid[k], e.what());
        }
    }
}

std::vector<EstimatePoint> fittable(const std::vector<EstimatePoint>& pts) {
    std::vector<EstimatePoint> out;
    for (const auto& p : pts)
        if (std::isfinite(p.log_point) && p.se_log > 0.0 && std::isfinite(p.se_log)) out.push_back(p);
    return out;
}

void fit_decay(ExperimentResult& r, const std::vector<EstimatePoint>& corrected, double predicted,
               const std::string& prediction, double tol) {
    const auto pts = fittable(corrected);
    if (pts.size() < 3) {
        r.verdicts.push_back({"decay_rate", prediction, predicted, NAN, tol, false,
                              "fewer than 3 usable grid points"});
        return;
    }
    const auto f = fit_exponent(pts);
    r.fit = f;
    r.verdicts.push_back(relative_verdict("decay_rate", prediction, predicted, -f.slope, tol));
}

void run_typical(ExperimentResult& r) {
    const auto& c = r.config;
    // heavy-tailed limit beyond beta = 1/sqrt(2): the median is the stable summary there
    const bool use_median = c.beta > 1.0 / kSqrt2;
    r.statistic = use_median ? "median" : "mean";
    std::vector<EstimatePoint> rescaled;
    each_point(r, [&](std::size_t k, double t) {
        const auto pt =
            estimate_typical_point(c.beta, c.a, t, k, c.replicas, c.master_seed, c.subtree_sampler);
        const double log_r = pt.rescaling.log_magnitude();
        double log_stat, se;
        if (use_median) {
            log_stat = pt.median.point.log_magnitude();
            se = pt.median.std_error_log;
        } else {
            const auto e = mean_estimate(pt.rescaled, c.master_seed);
            log_stat = e.point.log_magnitude();
            se = e.std_error_log;
        }
        r.points.push_back({t, log_stat - log_r, se, c.replicas, grid_seed(c, k)});
        rescaled.push_back({t, log_stat, se, c.replicas, grid_seed(c, k)});
    });
    const double predicted = psi_typ(c.beta);
    // -log(nu)/a against t
    std::vector<EstimatePoint> scaled;
    for (auto p : r.points) {
        p.log_point /= c.a;
        p.se_log /= c.a;
        scaled.push_back(p);
    }
    fit_decay(r, scaled, predicted, "psi_typ(beta) = " + brief(predicted), c.tolerance("exponent", 0.15));
    const auto rp = fittable(rescaled);
    if (rp.size() >= 3) {
        const auto f = fit_exponent(rp);
        r.extra["rescaled_slope"] = f.slope;
        r.extra["rescaled_slope_std_error"] = f.slope_std_error;
    }
    r.extra["regime"] = to_string(typical_regime(c.beta));
}

void run_mean(ExperimentResult& r, bool importance) {
    const auto& c = r.config;
    r.statistic = "mean";
    const double rate = psi_mean(c.beta);
    std::vector<EstimatePoint> corrected;
    each_point(r, [&](std::size_t k, double t) {
        const auto e = importance ? is_mean_overlap_estimator(c.beta, c.a, t, c.replicas,
                                                              grid_seed(c, k), c.subtree_sampler,
                                                              c.parameter("tilt", -1.0))
                                  : naive_mean_overlap({c.beta, c.a, t}, c.replicas,
                                                       grid_seed(c, k), c.subtree_sampler);
        const double lp = e.point.log_magnitude();
        r.points.push_back({t, lp, e.std_error_log, c.replicas, grid_seed(c, k)});
        // strip the polynomial part of the rescaling so only the exponential rate is fitted
        const double log_poly = mean_rescaling(c.beta, c.a, t).log_magnitude() - rate * c.a * t;
        corrected.push_back({t, lp + log_poly, e.std_error_log, c.replicas, grid_seed(c, k)});
    });
    const double predicted = rate * c.a;
    fit_decay(r, corrected, predicted, "psi_mean(beta) * a = " + brief(predicted),
              c.tolerance("exponent", 0.15));
    r.extra["regime"] = to_string(mean_regime(c.beta));
    if (importance)
        r.extra["tilt"] = c.parameter("tilt", -1.0) < 0.0 ? default_overlap_tilt(c.beta)
                                                          : c.parameter("tilt", -1.0);
}

void run_beta0(ExperimentResult& r) {
    const auto& c = r.config;
    r.statistic = "exact";
    const double naive_max_t = c.parameter("naive_max_t", 6.0);
    double worst = -1.0;
    json naive = json::array();
    for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
        const double t = c.t_grid[k];
        const double exact = exact_mean_overlap_beta0(c.a, t, c.tolerance("quadrature", 1e-10));
        r.points.push_back({t, std::log(exact), 0.0, 0, 0});
        if (t >= 25.0) {
            const double at = c.a * t;
            worst = std::max(worst, std::abs(exact / (2.0 * at * std::exp(-at)) - 1.0));
        }
        if (t <= naive_max_t && c.a < 1.0) {
            SubtreeSamplerOptions o = c.subtree_sampler;
            o.mode = SubtreeMode::Exact;
            const auto e = naive_mean_overlap({0.0, c.a, t}, c.replicas, grid_seed(c, k), o);
            auto v = z_verdict("naive_vs_exact_t" + fmt(t), "exact value", exact, e.value(),
                               e.std_error(), c.tolerance("z", 4.0));
            naive.push_back({{"t", t}, {"naive", e.value()}, {"se", e.std_error()}, {"exact", exact}});
            r.verdicts.push_back(std::move(v));
        }
    }
    if (worst >= 0.0) {
        Verdict v{"asymptotic_ratio", "2at e^{-at}", 0.0, worst, c.tolerance("beta0_ratio", 0.05),
                  false, "max |ratio - 1| over t >= 25"};
        v.pass = worst <= v.tolerance;
        r.verdicts.push_back(v);
    }
    r.extra["naive"] = naive;
}

void run_martingales(ExperimentResult& r) {
    const auto& c = r.config;
    r.statistic = "mean";
    constexpr std::uint64_t tag = hash_tag("martingale_suite");
    each_point(r, [&](std::size_t k, double t) {
        const std::uint64_t seed = grid_seed(c, k);
        const auto w = farm(c.replicas, [&](std::size_t i) {
            Rng rng(derive_stream(seed, tag, i));
            return sample_additive_martingale_exact(c.beta, t, rng, c.population_cap);
        });
        const auto st = summarize(w);
        r.points.push_back({t, std::log(st.mean()), st.std_error() / st.mean(), c.replicas, seed});
        r.verdicts.push_back(z_verdict("additive_mean_t" + fmt(t), "E W_t = 1", 1.0, st.mean(),
                                       st.std_error(), c.tolerance("z", 4.0)));
        if (t <= c.parameter("derivative_max_t", 6.0)) {
            const auto z = farm(c.replicas, [&](std::size_t i) {
                const auto snap =
                    simulate_snapshot(t, {t}, derive_stream(seed ^ tag, tag, i), c.population_cap);
                return derivative_martingale(snap, t);
            });
            const auto sz = summarize(z);
            r.verdicts.push_back(z_verdict("derivative_mean_t" + fmt(t), "E Z_t = 0", 0.0,
                                           sz.mean(), sz.std_error(), c.tolerance("z", 4.0)));
        }
    });
}

json estimate_json(const BarrierEstimate& e) {
    return {{"t", e.t}, {"lower", e.lower}, {"lower_se", e.lower_se}, {"upper", e.upper},
            {"upper_se", e.upper_se}};
}

void run_ballot(ExperimentResult& r) {
    const auto& c = r.config;
    r.statistic = "mean";
    const double x = c.parameter("x", 2.0), y = c.parameter("y", 2.0);
    const double alpha = c.parameter("alpha", 0.25);
    const auto plain = ballot_scaling_check(x, c.t_grid, alpha, c.replicas, c.master_seed);
    for (std::size_t k = 0; k < plain.points.size(); ++k) {
        const auto& p = plain.points[k];
        r.points.push_back({p.t, std::log(p.mid()), std::max(p.lower_se, p.upper_se) / p.mid(),
                            c.replicas, grid_seed(c, k)});
    }
    r.fit = plain.upper_fit;
    const double tol = c.tolerance("ballot_slope", 0.15);
    for (const auto* f : {&plain.lower_fit, &plain.upper_fit}) {
        Verdict v{f == &plain.lower_fit ? "ballot_slope_lower" : "ballot_slope_upper",
                  "t^{-1/2}", -0.5, f->slope, tol, std::abs(f->slope + 0.5) <= tol,
                  "+- " + brief(f->slope_std_error)};
        r.verdicts.push_back(v);
    }
    r.verdicts.push_back(z_verdict("ballot_flat_vs_reflection", "reflection principle",
                                   plain.flat_exact, plain.flat.lower,
                                   std::sqrt(plain.flat_exact * (1 - plain.flat_exact) / c.replicas),
                                   c.tolerance("z", 4.0)));
    const auto end = ballot_endpoint_scaling_check(x, y, c.t_grid, alpha, c.replicas, c.master_seed);
    const double tol2 = c.tolerance("ballot_endpoint_slope", 0.2);
    for (const auto* f : {&end.lower_fit, &end.upper_fit}) {
        Verdict v{f == &end.lower_fit ? "endpoint_slope_lower" : "endpoint_slope_upper",
                  "t^{-3/2}", -1.5, f->slope, tol2, std::abs(f->slope + 1.5) <= tol2,
                  "+- " + brief(f->slope_std_error)};
        r.verdicts.push_back(v);
    }
    r.verdicts.push_back(z_verdict("endpoint_flat_vs_reflection", "reflection principle",
                                   end.flat_exact, end.flat.lower,
                                   std::sqrt(end.flat_exact * (1 - end.flat_exact) / c.replicas),
                                   c.tolerance("z", 4.0)));
    json pts = json::array(), epts = json::array();
    for (const auto& p : plain.points) pts.push_back(estimate_json(p));
    for (const auto& p : end.points) epts.push_back(estimate_json(p));
    r.extra["ballot"] = {{"x", x}, {"alpha", alpha}, {"points", pts}};
    r.extra["ballot_endpoint"] = {{"x", x}, {"y", y}, {"alpha", alpha}, {"points", epts}};
}

void run_rn(ExperimentResult& r) {
    const auto& c = r.config;
    r.statistic = "mean";
    json checks = json::array();
    each_point(r, [&](std::size_t k, double t) {
        for (const auto& id : statistic_catalog()) {
            const auto rc = radon_nikodym_check(c.beta, t, id, c.replicas, grid_seed(c, k));
            if (id == statistic_catalog().front())
                r.points.push_back({t, rc.p_side.point.log_magnitude(), rc.p_side.std_error_log,
                                    c.replicas, grid_seed(c, k)});
            Verdict v{"rn_" + id + "_t" + fmt(t), "E_P[g W_t] = E_Q[g]", rc.q_side.value(),
                      rc.p_side.value(), c.tolerance("z", 4.0),
                      std::abs(rc.z_score) <= c.tolerance("z", 4.0), "z = " + brief(rc.z_score)};
            r.verdicts.push_back(v);
            checks.push_back({{"t", t}, {"statistic", id}, {"p_side", rc.p_side.value()},
                              {"q_side", rc.q_side.value()}, {"z", rc.z_score}});
        }
    });
    r.extra["catalog"] = kStatisticCatalogVersion;
    r.extra["checks"] = checks;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult r;
    r.config = config;
    r.config.subtree_sampler.population_cap = config.population_cap;
    switch (config.kind) {
    case ExperimentKind::TypicalOverlap: run_typical(r); break;
    case ExperimentKind::MeanOverlapNaive: run_mean(r, false); break;
    case ExperimentKind::MeanOverlapIs: run_mean(r, true); break;
    case ExperimentKind::Beta0Exact: run_beta0(r); break;
    case ExperimentKind::MartingaleSuite: run_martingales(r); break;
    case ExperimentKind::BallotSuite: run_ballot(r); break;
    case ExperimentKind::RnCheck: run_rn(r); break;
    }
    for (const auto& [t, what] : r.failures)
        r.verdicts.push_back({"grid_point_t" + fmt(t), "completed", 0.0, 0.0, 0.0, false, what});
    if (!config.output_dir.empty()) emit_report(r, config.output_dir);
    return r;
}

std::string estimates_csv(const std::vector<EstimatePoint>& points) {
    std::string out = std::string(kCsvHeader) + "\r\n";
    for (const auto& p : points) {
        out += fmt(p.t) + ',' + fmt(p.log_point) + ',' + fmt(p.se_log) + ',' +
               std::to_string(p.replicas) + ',' + std::to_string(p.seed) + "\r\n";
    }
    return out;
}

json summary_json(const ExperimentResult& r) {
    json j;
    j["schema"] = kSummarySchema;
    j["config"] = to_json(r.config);
    j["statistic"] = r.statistic;
    j["points"] = r.points.size();
    json failures = json::array();
    for (const auto& [t, what] : r.failures) failures.push_back({{"t", t}, {"error", what}});
    j["failures"] = failures;
    if (r.fit) {
        j["fit"] = {{"slope", r.fit->slope},
                    {"intercept", r.fit->intercept},
                    {"slope_std_error", r.fit->slope_std_error},
                    {"r_squared", r.fit->r_squared},
                    {"points_used", r.fit->points_used}};
    } else {
        j["fit"] = nullptr;
    }
    json verdicts = json::array();
    for (const auto& v : r.verdicts) {
        verdicts.push_back({{"name", v.name},
                            {"prediction", v.prediction},
                            {"predicted", std::isfinite(v.predicted) ? json(v.predicted) : json(nullptr)},
                            {"observed", std::isfinite(v.observed) ? json(v.observed) : json(nullptr)},
                            {"tolerance", v.tolerance},
                            {"pass", v.pass},
                            {"detail", v.detail}});
    }
    j["verdicts"] = verdicts;
    j["all_pass"] = r.all_pass();
    j["extra"] = r.extra;
    return j;
}

std::string plot_script(const ExperimentResult& r) {
    std::ostringstream g;
    g << "# " << to_string(r.config.kind) << ", beta = " << fmt(r.config.beta)
      << ", a = " << fmt(r.config.a) << "\n";
    g << "set datafile separator ','\n";
    g << "set key autotitle columnhead\n";
    g << "set xlabel 't'\nset ylabel 'log " << (r.statistic.empty() ? "estimate" : r.statistic)
      << "'\n";
    g << "set terminal pngcairo size 900,600\nset output 'plot.png'\n";
    if (r.fit) {
        g << "f(x) = " << fmt(r.fit->intercept) << " + (" << fmt(r.fit->slope) << ") * x\n";
        g << "plot 'estimates.csv' using 1:2:3 with yerrorbars title 'estimate', f(x) title 'fit'\n";
    } else {
        g << "plot 'estimates.csv' using 1:2:3 with yerrorbars title 'estimate'\n";
    }
    return g.str();
}

void emit_report(const ExperimentResult& r, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
    auto write = [&](const char* name, const std::string& body) {
        const auto path = fs::path(dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        out << body;
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
    };
    write("estimates.csv", estimates_csv(r.points));
    write("summary.json", summary_json(r).dump(2) + "\n");
    write("plot.gp", plot_script(r));
}

namespace {

// Splits one RFC 4180 record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    return fields;
}

}  // namespace

std::vector<EstimatePoint> read_estimates_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string line;
    std::vector<EstimatePoint> pts;
    std::size_t lineno = 0;
    auto bad = [&](const std::string& why) {
        throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != kCsvHeader) bad("expected header '" + std::string(kCsvHeader) + "'");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_record(line);
        if (f.size() != 5) bad("expected 5 fields");
        try {
            EstimatePoint p;
            p.t = std::stod(f[0]);
            p.log_point = std::stod(f[1]);
            p.se_log = std::stod(f[2]);
            p.replicas = std::stoull(f[3]);
            p.seed = std::stoull(f[4]);
            pts.push_back(p);
        } catch (const std::exception&) {
            bad("malformed number");
        }
    }
    if (lineno == 0) bad("empty file");
    return pts;
}

}  // namespace bbm
