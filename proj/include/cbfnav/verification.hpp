#pragma once

// Acceptance checks behind the `verify` CLI command and the acceptance
// binary: quantitative anchors for the derived barrier parameters, oracle
// comparisons for gradients and the velocity filter, kinematic invariance and
// return runs, closed-loop preset missions, and determinism.

#include <functional>
#include <string>
#include <vector>

#include "cbfnav/math_core.hpp"

namespace cbfnav {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // measured values against their bounds
    double runtime_s = 0.0;
};

// Worst relative mismatch between an analytic gradient and central finite
// differences of its scalar field over the given evaluation points.
// Parameterized so tests can feed a deliberately wrong gradient and watch the
// number blow past the tolerance.
double max_gradient_rel_error(const std::function<double(const Vec3&)>& field,
                              const std::function<Vec3(const Vec3&)>& gradient,
                              const std::vector<Vec3>& points, double step);

// Runs every acceptance check in order. Expensive (dozens of full simulated
// missions); intended for the CLI and the acceptance binary, not unit tests.
std::vector<CheckResult> run_verification();

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace cbfnav
