#pragma once

// Self-verification suite behind `lf2w check`: numerical identities that must
// hold for any correctly built binary, plus a deliberate-mutation probe that
// confirms the equivalence check has teeth.

#include <string>
#include <vector>

#include <lf2w/backbone.hpp>

namespace lf2w {

struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0;      // worst observed error (or margin, for the mutation probe)
    double tolerance = 0;
};

std::vector<CheckResult> run_check_suite(std::uint64_t seed);

} // namespace lf2w
