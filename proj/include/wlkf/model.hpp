#pragma once

#include <span>
#include <vector>

#include "wlkf/algebra.hpp"
#include "wlkf/network.hpp"
#include "wlkf/stats.hpp"

namespace wlkf {

/// Widely-linear distributed state space with a known deterministic input:
///
///     x_n     = F x_{n-1} + A x*_{n-1} + u + G w_n
///     y_{i,n} = H_i x_n + B_i x*_n + v_{i,n}
///
/// w_n is the driving noise (dimension m, shaped into the state by G); v_n is drawn jointly
/// over all nodes from the observation NoiseSpec. All matrices are time invariant.
struct StateSpaceModel {
    CMatrix transition;                  ///< F, L x L
    CMatrix conjugate_transition;        ///< A, L x L
    std::vector<CMatrix> observation;    ///< H_i, K x L per node
    std::vector<CMatrix> conjugate_observation; ///< B_i, K x L per node
    CMatrix noise_gain;                  ///< G, L x m
    SecondOrderStats<> driving_noise;    ///< statistics of w_n
    NoiseSpec observation_noise;
    CVector input;                       ///< u, L
    CVector initial_state;               ///< x_0 used by simulate()

    Eigen::Index state_dim() const noexcept { return transition.rows(); }
    Eigen::Index obs_dim() const noexcept { return observation_noise.block_dim(); }
    int node_count() const noexcept { return observation_noise.node_count(); }

    /// A = 0 and every B_i = 0.
    bool strictly_linear() const;

    /// Statistics of G w_n: Q = G Q_w G^H, P = G P_w G^T.
    SecondOrderStats<> state_noise() const;

    /// Throws on inconsistent dimensions or non-finite entries.
    void validate() const;

    /// Same model with H_i = h, B_i = b for every node and zero A.
    static StateSpaceModel shared_observation(CMatrix f, CMatrix h, CMatrix noise_gain, SecondOrderStats<> driving,
                                              NoiseSpec obs_noise);
};

/// Augmented representation: F^a, H^a_i, Q^a, and the joint R^a of all nodes.
struct AugmentedModel {
    AugmentedMatrix<> transition;
    std::vector<AugmentedMatrix<>> observation;
    AugmentedMatrix<> state_noise;
    AugmentedMatrix<> observation_noise;
    CVector input; ///< [u; u*]
};

AugmentedModel augment_model(const StateSpaceModel& model);

/// Neighbourhood observation y_i = H_i x + B_i x* + v_i stacked over the nodes of N_i in
/// ascending node order.
struct NeighbourhoodObservation {
    std::vector<int> nodes;
    CVector y;          ///< empty when only the model part was stacked
    CMatrix h;
    CMatrix b;
    SecondOrderStats<> noise; ///< R_i and U_i

    CMatrix augmented_h() const { return AugmentedMatrix<>(h, b).full(); }
    CMatrix augmented_r() const { return noise.augmented().full(); }
    CVector augmented_y() const { return augment_vector(y); }
};

/// Stacks the model part (H, B, R, U) of the listed nodes.
NeighbourhoodObservation stack_model(std::span<const int> nodes, const StateSpaceModel& model);

/// Stacks model and observations of N_i. observations[k] is node k's observation at this
/// step; an empty vector marks it missing (MissingObservation if k is in N_i).
NeighbourhoodObservation stack_neighbourhood(int node, const Topology& topology, const StateSpaceModel& model,
                                             std::span<const CVector> observations);

struct Trajectory {
    std::vector<CVector> states;                    ///< x_1 .. x_horizon
    std::vector<std::vector<CVector>> observations; ///< [n][node]
};

/// Substreams used by simulate(): the driving noise and the observation noise.
inline constexpr std::uint64_t state_noise_substream = 0;
inline constexpr std::uint64_t observation_noise_substream = 1;

/// Draws a trajectory of `horizon` steps starting from model.initial_state.
Trajectory simulate(const StateSpaceModel& model, int horizon, const RngStream& rng);

/// Reusable simulator holding the noise samplers; draws the same trajectory as simulate().
class Simulator {
public:
    explicit Simulator(const StateSpaceModel& model);

    void run(int horizon, const RngStream& rng, Trajectory& out);

private:
    const StateSpaceModel* model_;
    ComplexGaussianSampler state_sampler_;
    ComplexGaussianSampler obs_sampler_;
};

/// AR(2) companion form: state [z_n; z_{n-1}], observed through H = [1, 0] at every node.
StateSpaceModel ar2_model(cplx a1, cplx a2, const SecondOrderStats<>& driving, NoiseSpec obs_noise);

/// Projectile in the complex plane: state [x + jy; vx + jvy], F = [[1, T], [0, 1]],
/// input -j K g with K = [T^2/2; T], driving noise shaped by K, position observed at every node.
StateSpaceModel projectile_model(double sample_interval, double gravity, cplx initial_position,
                                 cplx initial_velocity, const SecondOrderStats<>& driving, NoiseSpec obs_noise);

} // namespace wlkf
