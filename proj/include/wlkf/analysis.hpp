#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wlkf/filters.hpp"

namespace wlkf {

// Exact second-moment propagation of the network estimation errors.
//
// With the filter's gains, the non-diffused error of filter k obeys
//
//     e_k = T_k (F e_k' + w) - G_k v_(N_k),   T_k = I - G_k H_k,
//
// where e_k' is its diffused error of the previous step, and the diffused error of filter i is
// sum_k c_ki e_k. The joint covariance of all filters' errors is propagated exactly.

struct PropagationOptions {
    int steps = 0;
    /// E{e_0 e_0^H} in the filter algebra, shared by every filter. Defaults to the prior M0.
    std::optional<CMatrix> initial_error;
    double settle_tolerance = 1e-8;
    int settle_run = 5;
};

struct CovariancePropagation {
    Algebra algebra{};
    double trace_scale = 1; ///< 1/2 in the augmented algebra, where the trace counts x and x*
    std::vector<std::vector<double>> mse; ///< [n][node], theoretical MSE after step n + 1
    std::vector<CMatrix> sigma;           ///< final diffused error covariance per node
    std::vector<CMatrix> sigma_double_sum; ///< same, from the sum over Gamma blocks
    CMatrix gamma;                         ///< final joint covariance of the non-diffused errors
    CMatrix joint;                         ///< final joint covariance of the diffused errors
    std::vector<double> worst_node_bound;  ///< final per node
    /// Largest relative Frobenius gap between the two sigma computations over all steps.
    double path_discrepancy = 0;
    /// First step after which the joint covariance stayed settled; -1 if it never did.
    int settled_at = -1;

    /// tr(Gamma_kk) scaled like the MSE, for filter k.
    double local_mse(int filter) const;
};

/// Throws ConfigError when a strictly-linear filter is analysed against a widely-linear
/// model (its error recursion is not closed in the strict algebra) or the algebra is real.
CovariancePropagation propagate_covariance(const StateSpaceModel& model, const NetworkFilterModel<cplx>& fm,
                                           const GainSchedule<cplx>& schedule, const PropagationOptions& options);

CovariancePropagation propagate_covariance(FilterVariant variant, const StateSpaceModel& model,
                                           const Topology& topology, const DiffusionWeights& weights,
                                           const FilterPrior& prior, PropagationOptions options);

/// e_0 e_0^H for the deterministic start x_0 against the prior mean, lifted into the filter algebra.
CMatrix deterministic_initial_error(const NetworkFilterModel<cplx>& fm, const CVector& x0);

/// max over filters k of tr(Gamma_kk) * scale, where Gamma_kk is the block of `gamma`.
double worst_node_bound(const CMatrix& gamma, std::span<const int> filters, Eigen::Index block, double scale);

// ---------------------------------------------------------------------------
// Bias

/// Mean and standard error of the real and imaginary parts of one node's error.
struct BiasEstimate {
    RVector mean;           ///< [Re e; Im e]
    RVector standard_error; ///< same layout
    int trials = 0;

    /// True when every component lies within k standard errors of zero.
    bool within(double k) const;
    double norm() const { return mean.norm(); }
};

/// Streaming mean/variance of per-trial error vectors.
class BiasAccumulator {
public:
    explicit BiasAccumulator(Eigen::Index state_dim = 0);

    void add(const CVector& error);
    void merge(const BiasAccumulator& other);
    int count() const noexcept { return count_; }

    /// Throws InsufficientTrials below 100 samples.
    BiasEstimate estimate() const;

private:
    int count_ = 0;
    RVector mean_;
    RVector m2_;
};

/// errors[trial] is that trial's error of one node. Throws InsufficientTrials below 100 trials.
BiasEstimate empirical_bias(std::span<const CVector> errors);

inline constexpr int minimum_bias_trials = 100;

// ---------------------------------------------------------------------------

struct MseReport {
    std::vector<double> theoretical;      ///< per node
    std::vector<double> empirical;        ///< per node
    std::vector<double> worst_node_bound; ///< per node
    double network_theoretical = 0;
    double network_empirical = 0;
};

MseReport make_mse_report(const CovariancePropagation& propagation, std::span<const double> empirical);

} // namespace wlkf
