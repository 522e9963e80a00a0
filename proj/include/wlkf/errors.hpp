#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wlkf {

enum class ErrorCode {
    // algebra
    not_psd,
    zero_variance,
    not_augmented,
    singular,
    dimension_mismatch,
    non_finite,
    // stats
    infeasible_pseudovariance,
    unstable_ar,
    // model / network
    missing_observation,
    asymmetric_adjacency,
    connectivity_failure,
    // filters
    singular_innovation,
    singular_m,
    // analysis
    insufficient_trials,
    // harness
    config,
    io,
};

/// True for failures caused by numerics rather than by a bad description of the problem.
constexpr bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::not_psd:
    case ErrorCode::singular:
    case ErrorCode::singular_innovation:
    case ErrorCode::singular_m:
    case ErrorCode::non_finite:
        return true;
    default:
        return false;
    }
}

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::not_psd: return "NotPSD";
    case ErrorCode::zero_variance: return "ZeroVariance";
    case ErrorCode::not_augmented: return "NotAugmented";
    case ErrorCode::singular: return "Singular";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::infeasible_pseudovariance: return "InfeasiblePseudovariance";
    case ErrorCode::unstable_ar: return "UnstableAR";
    case ErrorCode::missing_observation: return "MissingObservation";
    case ErrorCode::asymmetric_adjacency: return "AsymmetricAdjacency";
    case ErrorCode::connectivity_failure: return "ConnectivityFailure";
    case ErrorCode::singular_innovation: return "SingularInnovation";
    case ErrorCode::singular_m: return "SingularM";
    case ErrorCode::insufficient_trials: return "InsufficientTrials";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "IOError";
    }
    return "Unknown";
}

} // namespace wlkf
