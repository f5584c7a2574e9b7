// bbm command line: run / beta0 / check / fit. Talks to the library through the C interface only.
#include "bbm/bbm.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitVerdictFail = 2;

struct CString {
    char* p = nullptr;
    ~CString() { bbm_string_free(p); }
};

int report_error(const char* what) {
    std::cerr << "bbm: " << what << ": " << bbm_last_error() << "\n";
    return kExitError;
}

void print_verdicts(const nlohmann::ordered_json& verdicts) {
    for (const auto& v : verdicts) {
        std::cout << "  " << (v.value("pass", false) ? "ok   " : "FAIL ") << v.value("name", "")
                  << ": " << v.value("detail", "") << "\n";
    }
}

int cmd_run(const std::string& path, bool dump_json) {
    CString summary;
    int pass = 0;
    if (bbm_run_experiment_file(path.c_str(), &summary.p, &pass) != BBM_OK)
        return report_error("run failed");
    const auto j = nlohmann::ordered_json::parse(summary.p);
    if (dump_json) {
        std::cout << summary.p << "\n";
    } else {
        const auto& cfg = j["config"];
        std::cout << cfg.value("kind", "") << " -> " << cfg.value("output_dir", "") << " ("
                  << j.value("statistic", "") << ", " << j["points"].get<std::size_t>() << " points)\n";
        if (j["fit"].is_object())
            std::printf("  slope %.6g +- %.3g  r2 %.4f\n", j["fit"]["slope"].get<double>(),
                        j["fit"]["slope_std_error"].get<double>(), j["fit"]["r_squared"].get<double>());
        for (const auto& f : j["failures"]) std::cout << "  grid failure: " << f.dump() << "\n";
        print_verdicts(j["verdicts"]);
    }
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitPass : kExitVerdictFail;
}

int cmd_beta0(double a, double t, double tol) {
    double v = 0.0;
    if (bbm_exact_mean_overlap_beta0(a, t, tol, &v) != BBM_OK) return report_error("beta0 failed");
    std::printf("%.17g\n", v);
    return kExitPass;
}

int run_one_suite(const std::string& name, bool& all_pass) {
    CString report;
    int pass = 0;
    if (bbm_run_suite(name.c_str(), &report.p, &pass) != BBM_OK) return report_error("check failed");
    const auto j = nlohmann::ordered_json::parse(report.p);
    std::printf("%s %s (%.1fs) %s\n", pass ? "PASS" : "FAIL", name.c_str(),
                j["seconds"].get<double>(), j.value("title", "").c_str());
    print_verdicts(j["verdicts"]);
    all_pass = all_pass && pass;
    return kExitPass;
}

int cmd_check(const std::string& suite) {
    bool all_pass = true;
    if (suite == "all") {
        CString names;
        if (bbm_suite_names(&names.p) != BBM_OK) return report_error("check failed");
        std::string s = names.p, line;
        for (std::size_t pos = 0; pos < s.size();) {
            const auto nl = s.find('\n', pos);
            line = s.substr(pos, nl - pos);
            pos = nl == std::string::npos ? s.size() : nl + 1;
            if (line.empty()) continue;
            if (run_one_suite(line, all_pass) != kExitPass) return kExitError;
        }
    } else if (run_one_suite(suite, all_pass) != kExitPass) {
        return kExitError;
    }
    return all_pass ? kExitPass : kExitVerdictFail;
}

int cmd_fit(const std::string& path) {
    bbm_fit f{};
    if (bbm_fit_estimates_csv(path.c_str(), &f) != BBM_OK) return report_error("fit failed");
    std::printf("slope %.10g\nintercept %.10g\nslope_std_error %.6g\nr_squared %.6f\npoints_used %zu\n",
                f.slope, f.intercept, f.slope_std_error, f.r_squared, f.points_used);
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching Brownian motion overlap experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bbm_version()));

    std::string config_path;
    bool dump_json = false;
    auto* run = app.add_subcommand("run", "run an experiment config, write estimates.csv, summary.json, plot.gp");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_flag("--json", dump_json, "print the summary document");

    double a = 0.0, t = 0.0, tol = 1e-10;
    auto* beta0 = app.add_subcommand("beta0", "exact E[nu([a,1])] at beta = 0");
    beta0->add_option("--a", a)->required();
    beta0->add_option("--t", t)->required();
    beta0->add_option("--tol", tol, "relative quadrature tolerance")->capture_default_str();

    std::string suite;
    auto* check = app.add_subcommand("check", "run a named check suite (or all)");
    check->add_option("--suite", suite)->required();

    std::string csv_path;
    auto* fit = app.add_subcommand("fit", "weighted slope fit of an estimates.csv");
    fit->add_option("csv", csv_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitError;
    }

    if (*run) return cmd_run(config_path, dump_json);
    if (*beta0) return cmd_beta0(a, t, tol);
    if (*check) return cmd_check(suite);
    if (*fit) return cmd_fit(csv_path);
    return kExitError;
}
