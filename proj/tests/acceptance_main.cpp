// Acceptance battery: one pass/fail line per criterion, exit 1 on any
// failure. QRISK_ACCEPT_QUICK=1 switches to reduced replicates.

#include <cstdlib>
#include <iostream>

#include "qrisk/parallel.hpp"
#include "qrisk/suite.hpp"

int main() {
    const bool quick = std::getenv("QRISK_ACCEPT_QUICK") != nullptr;
    std::uint64_t seed = 20240501;
    if (const char* env = std::getenv("QRISK_SEED")) seed = std::strtoull(env, nullptr, 10);

    const auto results =
        qrisk::run_acceptance_suite(quick, seed, qrisk::default_workers(), std::cout);
    for (const auto& r : results)
        if (!r.pass) return 1;
    return 0;
}
