#pragma once

#include <stdexcept>
#include <string>

namespace qrisk {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy shared across the library. Everything derives from
// qrisk::error so callers can catch the whole family at once.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_input : error {
    using error::error;
};

// Matrix is not positive definite (Cholesky pivot <= 0).
struct not_pd : error {
    using error::error;
};

// Discrete design whose covariance is rank deficient.
struct not_full_rank : error {
    using error::error;
};

// Quantile level incompatible with the replicate budget or with the
// estimated singularity mass.
struct invalid_level : error {
    using error::error;
};

// |t|^p overflowed; rescale the data.
struct numeric_overflow : error {
    using error::error;
};

// Search ran out of probes before bracketing.
struct budget_exceeded : error {
    using error::error;
};

struct invalid_config : error {
    using error::error;
};

}  // namespace qrisk
