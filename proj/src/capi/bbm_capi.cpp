#include "bbm/bbm.h"

#include "bbm/errors.hpp"
#include "bbm/harness.hpp"
#include "bbm/martingales.hpp"
#include "bbm/overlap.hpp"
#include "bbm/serialize.hpp"
#include "bbm/snapshot.hpp"
#include "bbm/stats.hpp"
#include "bbm/suites.hpp"
#include "bbm/theory.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

struct bbm_snapshot {
    bbm::Snapshot snap;
};

namespace {

thread_local std::string g_last_error;

bbm_status fail(bbm_status s, const std::string& what) {
    g_last_error = what;
    return s;
}

template <class Fn>
bbm_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return BBM_OK;
    } catch (const bbm::Error& e) {
        return fail(static_cast<bbm_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::exception& e) {
        return fail(BBM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(BBM_ERR_INTERNAL, "unknown exception");
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

#define BBM_REQUIRE(cond, msg) \
    if (!(cond)) return fail(BBM_ERR_INVALID_ARGUMENT, msg)

void copy_fit(const bbm::FitResult& f, bbm_fit* out) {
    out->slope = f.slope;
    out->intercept = f.intercept;
    out->slope_std_error = f.slope_std_error;
    out->r_squared = f.r_squared;
    out->points_used = f.points_used;
}

}  // namespace

extern "C" {

const char* bbm_version(void) { return "0.1.0"; }

const char* bbm_last_error(void) { return g_last_error.c_str(); }

void bbm_string_free(char* s) { std::free(s); }

bbm_status bbm_snapshot_simulate(double horizon, const double* checkpoints, size_t count,
                                 uint64_t seed, size_t population_cap, bbm_snapshot** out) {
    BBM_REQUIRE(out, "out must not be null");
    BBM_REQUIRE(checkpoints || count == 0, "checkpoints must not be null");
    *out = nullptr;
    return guarded([&] {
        std::vector<double> cps(checkpoints, checkpoints + count);
        auto* h = new bbm_snapshot{bbm::simulate_snapshot(horizon, std::move(cps), seed,
                                                          population_cap ? population_cap
                                                                         : bbm::kDefaultPopulationCap)};
        *out = h;
    });
}

void bbm_snapshot_free(bbm_snapshot* s) { delete s; }

bbm_status bbm_snapshot_node_count(const bbm_snapshot* s, size_t* out) {
    BBM_REQUIRE(s && out, "null argument");
    *out = s->snap.size();
    return BBM_OK;
}

bbm_status bbm_snapshot_alive_count(const bbm_snapshot* s, double time, size_t* out) {
    BBM_REQUIRE(s && out, "null argument");
    return guarded([&] { *out = s->snap.alive_at(time).size(); });
}

bbm_status bbm_snapshot_positions(const bbm_snapshot* s, double time, double* buffer,
                                  size_t capacity, size_t* written) {
    BBM_REQUIRE(s && written, "null argument");
    BBM_REQUIRE(buffer || capacity == 0, "buffer must not be null");
    return guarded([&] {
        const auto alive = s->snap.alive_at(time);
        for (size_t i = 0; i < alive.size() && i < capacity; ++i) buffer[i] = alive[i].position;
        *written = alive.size();
    });
}

bbm_status bbm_snapshot_save(const bbm_snapshot* s, const char* path, int as_json) {
    BBM_REQUIRE(s && path, "null argument");
    return guarded([&] { bbm::save_snapshot(s->snap, path, as_json != 0); });
}

bbm_status bbm_snapshot_load(const char* path, bbm_snapshot** out) {
    BBM_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw bbm::Error(bbm::ErrorCode::IoError, std::string("cannot open ") + path);
        const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                              std::istreambuf_iterator<char>());
        *out = new bbm_snapshot{bbm::read_snapshot_binary(bytes)};
    });
}

bbm_status bbm_additive_martingale_log(const bbm_snapshot* s, double beta, double t, double* out) {
    BBM_REQUIRE(s && out, "null argument");
    return guarded([&] { *out = bbm::additive_martingale(s->snap, beta, t).log_magnitude(); });
}

bbm_status bbm_overlap_tail(const bbm_snapshot* s, double beta, double a, double t, int route,
                            double* out) {
    BBM_REQUIRE(s && out, "null argument");
    BBM_REQUIRE(route == 0 || route == 1, "route must be 0 or 1");
    return guarded([&] {
        const bbm::OverlapQuery q{beta, a, t};
        *out = (route == 0 ? bbm::overlap_tail_direct(s->snap, q)
                           : bbm::overlap_tail_aggregated(s->snap, q))
                   .value();
    });
}

bbm_status bbm_psi_typ(double beta, double* out) {
    BBM_REQUIRE(out, "null argument");
    return guarded([&] { *out = bbm::psi_typ(beta); });
}

bbm_status bbm_psi_mean(double beta, double* out) {
    BBM_REQUIRE(out, "null argument");
    return guarded([&] { *out = bbm::psi_mean(beta); });
}

bbm_status bbm_exact_mean_overlap_beta0(double a, double t, double rel_tol, double* out) {
    BBM_REQUIRE(out, "null argument");
    return guarded([&] { *out = bbm::exact_mean_overlap_beta0(a, t, rel_tol > 0 ? rel_tol : 1e-10); });
}

static bbm_status finish_experiment(const bbm::ExperimentConfig& c, char** summary_out,
                                    int* all_pass) {
    const auto r = bbm::run_experiment(c);
    if (all_pass) *all_pass = r.all_pass() ? 1 : 0;
    if (summary_out) *summary_out = dup(bbm::summary_json(r).dump(2));
    return BBM_OK;
}

bbm_status bbm_run_experiment_json(const char* config_json, char** summary_out, int* all_pass) {
    BBM_REQUIRE(config_json, "null argument");
    if (summary_out) *summary_out = nullptr;
    return guarded([&] {
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(config_json);
        } catch (const nlohmann::ordered_json::exception& e) {
            throw bbm::Error(bbm::ErrorCode::ConfigInvalid, e.what());
        }
        finish_experiment(bbm::parse_config(j), summary_out, all_pass);
    });
}

bbm_status bbm_run_experiment_file(const char* config_path, char** summary_out, int* all_pass) {
    BBM_REQUIRE(config_path, "null argument");
    if (summary_out) *summary_out = nullptr;
    return guarded([&] { finish_experiment(bbm::load_config(config_path), summary_out, all_pass); });
}

bbm_status bbm_suite_names(char** out) {
    BBM_REQUIRE(out, "null argument");
    return guarded([&] {
        std::string s;
        for (const auto& n : bbm::suite_names()) s += n + "\n";
        *out = dup(s);
    });
}

bbm_status bbm_run_suite(const char* name, char** report_out, int* pass) {
    BBM_REQUIRE(name, "null argument");
    if (report_out) *report_out = nullptr;
    return guarded([&] {
        const auto r = bbm::run_suite(name);
        if (pass) *pass = r.pass() ? 1 : 0;
        if (report_out) {
            nlohmann::ordered_json j;
            j["suite"] = r.name;
            j["title"] = r.title;
            j["seconds"] = r.seconds;
            j["pass"] = r.pass();
            j["verdicts"] = nlohmann::ordered_json::array();
            for (const auto& v : r.verdicts)
                j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
            *report_out = dup(j.dump(2));
        }
    });
}

bbm_status bbm_fit_exponent(const double* t, const double* log_estimate, const double* se,
                            size_t count, bbm_fit* out) {
    BBM_REQUIRE(out && ((t && log_estimate && se) || count == 0), "null argument");
    return guarded([&] {
        copy_fit(bbm::weighted_line_fit({t, count}, {log_estimate, count}, {se, count}), out);
    });
}

bbm_status bbm_fit_estimates_csv(const char* path, bbm_fit* out) {
    BBM_REQUIRE(path && out, "null argument");
    return guarded([&] { copy_fit(bbm::fit_exponent(bbm::read_estimates_csv(path)), out); });
}

}  // extern "C"
