#pragma once

#include "bbm/stats.hpp"
#include "bbm/subtree_sampler.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bbm {

enum class ExperimentKind {
    TypicalOverlap,
    MeanOverlapNaive,
    MeanOverlapIs,
    Beta0Exact,
    MartingaleSuite,
    BallotSuite,
    RnCheck,
};

const char* to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(const std::string& s);  // throws ConfigInvalid

inline constexpr const char* kSummarySchema = "bbm-summary/1";
inline constexpr const char* kCsvHeader = "t,log_point,se_log,replicas,seed";

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::TypicalOverlap;
    double beta = 0.0;
    double a = 0.5;
    std::vector<double> t_grid;
    std::size_t replicas = 1000;
    std::uint64_t master_seed = 1;
    std::size_t population_cap = kDefaultPopulationCap;
    std::string output_dir;  // empty: nothing is written
    std::map<std::string, double> tolerances;
    // kind-specific knobs (ballot x, y, alpha; beta0 naive cut-off ...)
    std::map<std::string, double> parameters;
    SubtreeSamplerOptions subtree_sampler;

    double tolerance(const std::string& key, double fallback) const;
    double parameter(const std::string& key, double fallback) const;
    void validate() const;  // throws ConfigInvalid
};

ExperimentConfig parse_config(const nlohmann::ordered_json& j);  // throws ConfigInvalid
ExperimentConfig load_config(const std::string& path);           // throws IoError, ConfigInvalid
nlohmann::ordered_json to_json(const ExperimentConfig& c);

struct EstimatePoint {
    double t = 0.0;
    double log_point = 0.0;
    double se_log = 0.0;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
};

struct Verdict {
    std::string name;
    std::string prediction;  // what theory says, in words
    double predicted = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<EstimatePoint> points;
    std::vector<std::pair<double, std::string>> failures;  // (t, error) per skipped grid point
    std::optional<FitResult> fit;
    std::string statistic;  // mean / median / exact
    std::vector<Verdict> verdicts;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    bool all_pass() const noexcept;
};

/// Weighted least squares of log_estimate on t with weights 1/se^2.
FitResult fit_exponent(const std::vector<EstimatePoint>& points);

/// Runs the experiment and, when output_dir is set, writes estimates.csv, summary.json and
/// plot.gp there.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes the three artifacts of a finished experiment. Throws IoError.
void emit_report(const ExperimentResult& result, const std::string& output_dir);

std::string estimates_csv(const std::vector<EstimatePoint>& points);
nlohmann::ordered_json summary_json(const ExperimentResult& result);
std::string plot_script(const ExperimentResult& result);

/// Reader for files written by estimates_csv (RFC 4180, the documented header).
std::vector<EstimatePoint> read_estimates_csv(const std::string& path);  // throws IoError

}  // namespace bbm
