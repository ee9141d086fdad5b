#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fraglab {

struct CheckResult {
    std::string id;
    std::string title;
    bool pass = false;
    std::string detail;  // measured values against their thresholds
};

// Ids in run order: invariants I1..I10, then acceptance criteria A1..A10.
std::vector<std::string> selfcheck_ids();

/**
 * Runs the selected checks (all when `only` is empty) and writes one
 * "PASS|FAIL <id> <title>: <detail>" line per check to out as it finishes.
 * Unknown ids raise InvalidArgument before anything runs. A check that throws
 * is reported as FAIL with the error message.
 */
std::vector<CheckResult> run_selfcheck(const std::vector<std::string>& only, std::ostream& out);

}  // namespace fraglab
