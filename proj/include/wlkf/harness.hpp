#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wlkf/analysis.hpp"
#include "wlkf/config.hpp"

namespace wlkf {

/// Monte-Carlo results of one filter variant at one circularity point.
struct VariantSeries {
    FilterVariant variant{};
    std::vector<double> steady_mse;  ///< per node, mean squared error over the steady-state window
    std::vector<double> mean_mse;    ///< per node, over the whole horizon
    std::vector<double> bias_norm;   ///< per node, norm of the mean window-averaged error
    std::vector<std::optional<BiasEstimate>> bias; ///< per node; set from 100 trials on
    std::vector<double> network_curve; ///< per step, network-average MSE
    std::vector<double> trial_steady;  ///< per trial, network-average steady-state MSE
    std::vector<std::vector<double>> trial_node_steady; ///< [node][trial]
    std::optional<MseReport> report;   ///< theoretical comparison when the variant is analysable
    int settled_at = -1;               ///< settling index of the theoretical covariance

    double network_steady() const;
    /// Monte-Carlo standard error of network_steady().
    double standard_error() const;
    double node_standard_error(std::size_t node) const;
};

struct EtaPoint {
    double eta = 0;
    int trials = 0; ///< completed trials
    std::vector<VariantSeries> variants;

    const VariantSeries& at(FilterVariant variant) const;
};

struct MseSeries {
    std::string scenario;
    std::uint64_t seed = 0;
    int horizon = 0;
    int window = 0;
    std::vector<EtaPoint> points;
    std::vector<std::string> diagnostics; ///< one line per aborted trial
};

/// Paired standard error of the per-trial difference a - b of network steady-state MSE.
double paired_standard_error(const VariantSeries& a, const VariantSeries& b);

/// Runs every variant on the same simulated data for each circularity point.
///
/// Trial t draws from RngStream(seed, t). Trials are grouped into fixed blocks that are
/// reduced in trial order, so the output does not depend on the number of threads. A trial
/// whose estimates become non-finite is dropped with a diagnostic; NumericalFailure-class
/// errors are raised when no trial survives.
MseSeries run_scenario(const ScenarioConfig& config);

/// Trials per reduction block.
inline constexpr int trial_block = 16;

// ---------------------------------------------------------------------------
// CSV

struct CsvRow {
    std::string scenario;
    std::string variant;
    double eta = 0;
    int node = 0; ///< 1-based
    double steady_state_mse = 0;
    double mean_mse = 0;
    double bias_norm = 0;
    int trials = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

inline constexpr const char* csv_header = "scenario,variant,eta,node,steady_state_mse,mean_mse,bias_norm,trials,seed";

std::vector<CsvRow> csv_rows(const MseSeries& series);
void write_csv(std::ostream& out, const MseSeries& series);
/// Throws IoError naming the path.
void emit_csv(const MseSeries& series, const std::filesystem::path& path);
std::vector<CsvRow> parse_csv(std::istream& in);
std::vector<CsvRow> load_csv(const std::filesystem::path& path);

} // namespace wlkf
