#pragma once

#include "bbm/harness.hpp"

#include <string>
#include <vector>

namespace bbm {

struct SuiteReport {
    std::string name;
    std::string title;
    std::vector<Verdict> verdicts;
    double seconds = 0.0;

    bool pass() const noexcept;
};

/// Named check suites, in acceptance order.
const std::vector<std::string>& suite_names();

/// Runs one suite with its built-in sizes and seed. Throws ConfigInvalid for an unknown name.
SuiteReport run_suite(const std::string& name);

}  // namespace bbm
