// Acceptance gate: runs every release check and prints one verdict line per
// check. Exit 0 only when all pass.

#include <cstdio>

#include "cbfnav/verification.hpp"

int main() {
    const std::vector<cbfnav::CheckResult> results = cbfnav::run_verification();
    int failures = 0;
    for (const auto& r : results) {
        if (!r.passed) ++failures;
        std::printf("[%s] %-28s %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str(), r.runtime_s);
    }
    std::printf("%zu checks, %d failed\n", results.size(), failures);
    return failures == 0 ? 0 : 1;
}
