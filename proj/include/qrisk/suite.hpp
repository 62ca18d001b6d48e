#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace qrisk {

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;  // measured vs required
    double seconds = 0.0;
};

// Runs the full acceptance battery and prints one pass/fail line per
// criterion to `log`. Quick mode shrinks replicate counts and widens the
// Monte Carlo tolerances accordingly.
std::vector<CriterionResult> run_acceptance_suite(bool quick, std::uint64_t seed,
                                                  std::size_t workers, std::ostream& log);

}  // namespace qrisk
