#pragma once

#include <string>
#include <vector>

namespace mmra {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Runs the full verification suite (analytic identities, estimator accuracy,
/// protocol case studies, end-to-end Monte Carlo targets, determinism).
/// Several checks are Monte Carlo; the whole suite targets a few minutes on
/// one core.
std::vector<CriterionResult> run_acceptance();

}  // namespace mmra
