#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "wlkf/kalman.hpp"
#include "wlkf/model.hpp"
#include "wlkf/network.hpp"

namespace wlkf {

/// Representation a filter computes in.
enum class Algebra {
    strict,    ///< complex state x; pseudocovariances and conjugate matrices are ignored
    augmented, ///< complex augmented state [x; x*]
    real,      ///< real composite state [Re x; Im x]
};

enum class FilterVariant {
    dckf,         ///< diffusion complex KF on neighbourhood data (strictly linear)
    dackf,        ///< diffusion augmented complex KF
    dackf_info,   ///< information form of dackf; requires uncorrelated node noises
    central_ckf,  ///< single strictly-linear KF on all nodes' data
    central_ackf, ///< single augmented KF on all nodes' data
    drkf,         ///< real composite dual of dackf
    local,        ///< non-cooperative strictly-linear KF per node
    diffusion_kf, ///< strictly-linear information-form diffusion KF that ignores cross-node correlation
};

std::string_view to_string(FilterVariant variant) noexcept;
std::optional<FilterVariant> parse_variant(std::string_view name) noexcept;
std::span<const FilterVariant> all_variants() noexcept;

enum class FilterScope { neighbourhood, centralised, isolated };

struct VariantTraits {
    Algebra algebra;
    FilterScope scope;
    bool information_form;
    bool diffuse;
    bool requires_uncorrelated_noise;
};

VariantTraits traits(FilterVariant variant) noexcept;

// ---------------------------------------------------------------------------
// Lifting complex model quantities into a filter algebra

/// strict: M1; augmented: [[M1, M2], [M2*, M1*]]; real: J^-1 (augmented) J.
template <typename Scalar>
Matrix<Scalar> lift_operator(Algebra algebra, const CMatrix& m1, const CMatrix& m2);

/// strict: R; augmented: [[R, P], [P*, R*]]; real: J^-1 (augmented) J^-H.
template <typename Scalar>
Matrix<Scalar> lift_covariance(Algebra algebra, const SecondOrderStats<>& stats);

/// strict: v; augmented: [v; v*]; real: [Re v; Im v].
template <typename Scalar>
Vector<Scalar> lift_vector(Algebra algebra, const CVector& v);

/// Inverse of lift_vector, reading the complex state back.
template <typename Scalar>
CVector lower_vector(Algebra algebra, const Vector<Scalar>& x);

/// Initial estimate and M = variance * I in the complex domain (lifted per algebra).
struct FilterPrior {
    CVector mean;          ///< empty means zero
    double variance = 100;
};

/// The data one filter instance listens to.
template <typename Scalar>
struct FilterChannel {
    std::vector<int> nodes;                    ///< ascending node ids
    Matrix<Scalar> h;                          ///< stacked observation matrix
    Matrix<Scalar> r;                          ///< stacked noise covariance (covariance form)
    std::vector<InformationTerm<Scalar>> info; ///< per-node terms with empty y (information form)
};

/// A state-space model, topology and weights compiled into one variant's algebra.
template <typename Scalar>
struct NetworkFilterModel {
    FilterVariant variant{};
    Algebra algebra{};
    bool information_form = false;
    Eigen::Index obs_dim = 0;
    Eigen::Index state_dim = 0; ///< complex state length L
    Matrix<Scalar> f;
    Matrix<Scalar> q;
    Vector<Scalar> u;
    std::vector<FilterChannel<Scalar>> channels;
    Eigen::MatrixXd weights;       ///< (k, i): weight filter i gives filter k's local estimate
    std::vector<int> node_filter;  ///< filter whose estimate node i reports
    Vector<Scalar> x0;
    Matrix<Scalar> m0;

    int filter_count() const noexcept { return static_cast<int>(channels.size()); }
    int node_count() const noexcept { return static_cast<int>(node_filter.size()); }

    /// Observation vector of a channel in the filter algebra, from per-node raw observations.
    void stack_observations(int filter, std::span<const CVector> observations, Vector<Scalar>& out) const;
    Vector<Scalar> stack_observations(int filter, std::span<const CVector> observations) const {
        Vector<Scalar> out;
        stack_observations(filter, observations, out);
        return out;
    }
};

/// Throws ConfigError for information-form variants that need uncorrelated noise when a
/// neighbourhood has nonzero cross-node covariance or pseudocovariance.
template <typename Scalar>
NetworkFilterModel<Scalar> build_filter_model(FilterVariant variant, const StateSpaceModel& model,
                                              const Topology& topology, const DiffusionWeights& weights,
                                              const FilterPrior& prior = {});

template <typename Scalar>
struct NetworkState {
    std::vector<NodeFilterState<Scalar>> filters;
};

template <typename Scalar>
NetworkState<Scalar> initial_network_state(const NetworkFilterModel<Scalar>& fm);

/// Extra outputs of a network step.
template <typename Scalar>
struct StepDetail {
    std::vector<NodeFilterState<Scalar>> local; ///< non-diffused estimates and M
    std::vector<Matrix<Scalar>> gain;           ///< covariance form only
};

/// One time step: predict, local (or information) update per filter, then diffusion of the
/// estimates. M matrices are not diffused.
template <typename Scalar>
NetworkState<Scalar> step_network(const NetworkState<Scalar>& state, const NetworkFilterModel<Scalar>& fm,
                                  std::span<const CVector> observations, StepDetail<Scalar>* detail = nullptr);

/// Complex state estimate reported by each node.
template <typename Scalar>
std::vector<CVector> node_estimates(const NetworkState<Scalar>& state, const NetworkFilterModel<Scalar>& fm);

// ---------------------------------------------------------------------------
// Precomputed gains
//
// The M and gain recursions do not depend on the data, so they are computed once and shared
// by every Monte-Carlo trial; each trial then only propagates the estimates:
//
//     x_local = C_n x + b_n + G_n y,  C_n = (I - G_n H) F,  b_n = (I - G_n H) u.

template <typename Scalar>
struct GainEntry {
    Matrix<Scalar> gain;       ///< effective gain on the stacked observation
    Matrix<Scalar> correction; ///< (I - G H) F
    Vector<Scalar> offset;     ///< (I - G H) u
    Matrix<Scalar> m_pred;
    Matrix<Scalar> m_post;
};

template <typename Scalar>
struct GainSchedule {
    std::vector<std::vector<GainEntry<Scalar>>> steps; ///< [n][filter]
    /// First step from which the stored last entry is reused; -1 if every step is stored.
    int settled_at = -1;
    int horizon = 0;

    const GainEntry<Scalar>& at(int n, int filter) const {
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(n), steps.size() - 1);
        return steps[idx][static_cast<std::size_t>(filter)];
    }
};

/// Runs the M recursion for `horizon` steps. Once every gain and M changes by less than
/// 1e-14 (relative Frobenius) for 5 consecutive steps, the last entry is reused.
template <typename Scalar>
GainSchedule<Scalar> compute_gain_schedule(const NetworkFilterModel<Scalar>& fm, int horizon);

/// Estimate-only propagation with precomputed gains. One instance per thread.
template <typename Scalar>
class ScheduledFilter {
public:
    ScheduledFilter(const NetworkFilterModel<Scalar>& fm, const GainSchedule<Scalar>& schedule);

    void reset();
    /// Consumes the observations of step n (0-based).
    void step(int n, std::span<const CVector> observations);
    void estimate(int node, CVector& out) const;
    const Vector<Scalar>& filter_estimate(int filter) const { return x_[static_cast<std::size_t>(filter)]; }

private:
    const NetworkFilterModel<Scalar>* fm_;
    const GainSchedule<Scalar>* schedule_;
    std::vector<Vector<Scalar>> x_;
    std::vector<Vector<Scalar>> local_;
    std::vector<Vector<Scalar>> y_;
    std::vector<std::vector<std::pair<int, double>>> mix_;
};

/// Variant-erased runner used by the harness.
class FilterRunner {
public:
    virtual ~FilterRunner() = default;
    virtual void reset() = 0;
    virtual void step(int n, std::span<const CVector> observations) = 0;
    virtual void estimate(int node, CVector& out) const = 0;
};

/// Filter model plus gain schedule for one variant; immutable and shareable across threads.
class CompiledFilter {
public:
    CompiledFilter(FilterVariant variant, const StateSpaceModel& model, const Topology& topology,
                   const DiffusionWeights& weights, const FilterPrior& prior, int horizon);

    FilterVariant variant() const noexcept { return variant_; }
    std::unique_ptr<FilterRunner> runner() const;

    /// Set when the variant computes in a complex algebra.
    const NetworkFilterModel<cplx>* complex_model() const;
    const GainSchedule<cplx>* complex_schedule() const;

private:
    template <typename Scalar>
    struct Compiled {
        NetworkFilterModel<Scalar> model;
        GainSchedule<Scalar> schedule;
    };

    FilterVariant variant_;
    std::variant<Compiled<cplx>, Compiled<double>> impl_;
};

/// Diffusion weights used by a variant: the given ones for diffusing variants, identity otherwise.
DiffusionWeights weights_for(FilterVariant variant, const DiffusionWeights& weights);

#define WLKF_FILTERS_EXTERN(S)                                                                                       \
    extern template Matrix<S> lift_operator<S>(Algebra, const CMatrix&, const CMatrix&);                             \
    extern template Matrix<S> lift_covariance<S>(Algebra, const SecondOrderStats<>&);                                \
    extern template Vector<S> lift_vector<S>(Algebra, const CVector&);                                               \
    extern template CVector lower_vector<S>(Algebra, const Vector<S>&);                                              \
    extern template struct NetworkFilterModel<S>;                                                                    \
    extern template NetworkFilterModel<S> build_filter_model<S>(FilterVariant, const StateSpaceModel&,               \
                                                                const Topology&, const DiffusionWeights&,            \
                                                                const FilterPrior&);                                 \
    extern template NetworkState<S> initial_network_state<S>(const NetworkFilterModel<S>&);                          \
    extern template NetworkState<S> step_network<S>(const NetworkState<S>&, const NetworkFilterModel<S>&,            \
                                                    std::span<const CVector>, StepDetail<S>*);                       \
    extern template std::vector<CVector> node_estimates<S>(const NetworkState<S>&, const NetworkFilterModel<S>&);    \
    extern template GainSchedule<S> compute_gain_schedule<S>(const NetworkFilterModel<S>&, int);                     \
    extern template class ScheduledFilter<S>;

WLKF_FILTERS_EXTERN(cplx)
WLKF_FILTERS_EXTERN(double)
#undef WLKF_FILTERS_EXTERN

} // namespace wlkf
