// Acceptance run: one line per criterion, exit status 1 if any fails.
// Pass suite names as arguments to run a subset.
#include "bbm/errors.hpp"
#include "bbm/suites.hpp"

#include <cstdio>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    const auto& names = bbm::suite_names();
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.empty()) wanted = names;
    int failed = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        bool selected = false;
        for (const auto& w : wanted) selected = selected || w == names[i];
        if (!selected) continue;
        try {
            const auto r = bbm::run_suite(names[i]);
            std::printf("criterion %zu [%s]: %s (%.1fs) %s\n", i + 1, r.name.c_str(),
                        r.pass() ? "PASS" : "FAIL", r.seconds, r.title.c_str());
            for (const auto& v : r.verdicts)
                std::printf("    %-4s %s: observed %.6g, expected %.6g (%s); %s\n", v.pass ? "ok" : "FAIL",
                            v.name.c_str(), v.observed, v.predicted, v.prediction.c_str(), v.detail.c_str());
            failed += !r.pass();
        } catch (const std::exception& e) {
            std::printf("criterion %zu [%s]: FAIL (error) %s\n", i + 1, names[i].c_str(), e.what());
            ++failed;
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
