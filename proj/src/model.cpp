#include "wlkf/model.hpp"

#include <string>

namespace wlkf {

bool StateSpaceModel::strictly_linear() const {
    if (max_norm(conjugate_transition) != 0) return false;
    for (const auto& b : conjugate_observation)
        if (max_norm(b) != 0) return false;
    return true;
}

SecondOrderStats<> StateSpaceModel::state_noise() const {
    return SecondOrderStats<>(noise_gain * driving_noise.covariance() * noise_gain.adjoint(),
                              noise_gain * driving_noise.pseudocovariance() * noise_gain.transpose());
}

void StateSpaceModel::validate() const {
    const auto l = state_dim();
    const auto k = obs_dim();
    const auto n = static_cast<std::size_t>(node_count());
    auto fail = [](const std::string& what) { throw Error(ErrorCode::dimension_mismatch, "state-space model: " + what); };
    if (l == 0) fail("empty state");
    if (transition.cols() != l) fail("F must be square");
    if (conjugate_transition.rows() != l || conjugate_transition.cols() != l) fail("A must match F");
    if (observation.size() != n || conjugate_observation.size() != n) fail("one H_i and B_i per node required");
    for (std::size_t i = 0; i < n; ++i) {
        if (observation[i].rows() != k || observation[i].cols() != l) fail("H_i must be K x L");
        if (conjugate_observation[i].rows() != k || conjugate_observation[i].cols() != l) fail("B_i must be K x L");
        if (!observation[i].allFinite() || !conjugate_observation[i].allFinite())
            throw Error(ErrorCode::non_finite, "observation matrices contain non-finite entries");
    }
    if (noise_gain.rows() != l || noise_gain.cols() != driving_noise.dim()) fail("noise gain must be L x m");
    if (input.size() != l) fail("input must have length L");
    if (initial_state.size() != l) fail("initial state must have length L");
    if (!transition.allFinite() || !conjugate_transition.allFinite() || !noise_gain.allFinite() ||
        !input.allFinite() || !initial_state.allFinite())
        throw Error(ErrorCode::non_finite, "state-space model contains non-finite entries");
}

StateSpaceModel StateSpaceModel::shared_observation(CMatrix f, CMatrix h, CMatrix noise_gain,
                                                    SecondOrderStats<> driving, NoiseSpec obs_noise) {
    const auto l = f.rows();
    const auto n = static_cast<std::size_t>(obs_noise.node_count());
    StateSpaceModel m;
    m.conjugate_transition = CMatrix::Zero(l, l);
    m.transition = std::move(f);
    m.observation.assign(n, h);
    m.conjugate_observation.assign(n, CMatrix::Zero(h.rows(), h.cols()));
    m.noise_gain = std::move(noise_gain);
    m.driving_noise = std::move(driving);
    m.observation_noise = std::move(obs_noise);
    m.input = CVector::Zero(l);
    m.initial_state = CVector::Zero(l);
    m.validate();
    return m;
}

AugmentedModel augment_model(const StateSpaceModel& model) {
    model.validate();
    AugmentedModel a;
    a.transition = AugmentedMatrix<>(model.transition, model.conjugate_transition);
    for (int i = 0; i < model.node_count(); ++i)
        a.observation.emplace_back(model.observation[static_cast<std::size_t>(i)],
                                   model.conjugate_observation[static_cast<std::size_t>(i)]);
    a.state_noise = model.state_noise().augmented();
    a.observation_noise = model.observation_noise.stats().augmented();
    a.input = augment_vector(model.input);
    return a;
}

NeighbourhoodObservation stack_model(std::span<const int> nodes, const StateSpaceModel& model) {
    const auto k = model.obs_dim();
    const auto l = model.state_dim();
    const auto m = static_cast<Eigen::Index>(nodes.size());
    NeighbourhoodObservation out;
    out.nodes.assign(nodes.begin(), nodes.end());
    out.h.resize(m * k, l);
    out.b.resize(m * k, l);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto node = static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]);
        if (node >= static_cast<std::size_t>(model.node_count()))
            throw Error(ErrorCode::dimension_mismatch, "node index outside the model");
        out.h.middleRows(a * k, k) = model.observation[node];
        out.b.middleRows(a * k, k) = model.conjugate_observation[node];
    }
    out.noise = model.observation_noise.select(nodes);
    return out;
}

NeighbourhoodObservation stack_neighbourhood(int node, const Topology& topology, const StateSpaceModel& model,
                                             std::span<const CVector> observations) {
    if (node < 0 || node >= topology.node_count())
        throw Error(ErrorCode::dimension_mismatch, "node " + std::to_string(node + 1) + " is not in the network");
    const auto& nodes = topology.neighbourhood(node);
    NeighbourhoodObservation out = stack_model(nodes, model);
    const auto k = model.obs_dim();
    out.y.resize(static_cast<Eigen::Index>(nodes.size()) * k);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const auto src = static_cast<std::size_t>(nodes[a]);
        if (src >= observations.size() || observations[src].size() != k)
            throw Error(ErrorCode::missing_observation,
                        "no observation from node " + std::to_string(nodes[a] + 1) + " in the neighbourhood of " +
                            std::to_string(node + 1));
        out.y.segment(static_cast<Eigen::Index>(a) * k, k) = observations[src];
    }
    return out;
}

Simulator::Simulator(const StateSpaceModel& model)
    : model_(&model), state_sampler_(model.driving_noise), obs_sampler_(model.observation_noise.stats()) {
    model.validate();
}

void Simulator::run(int horizon, const RngStream& rng, Trajectory& out) {
    if (horizon < 1) throw Error(ErrorCode::config, "simulation horizon must be at least 1");
    const auto& m = *model_;
    const auto n_nodes = static_cast<std::size_t>(m.node_count());
    const auto k = m.obs_dim();
    auto state_engine = rng.with_substream(state_noise_substream).engine();
    auto obs_engine = rng.with_substream(observation_noise_substream).engine();

    out.states.resize(static_cast<std::size_t>(horizon));
    out.observations.resize(static_cast<std::size_t>(horizon));
    CVector x = m.initial_state;
    CVector next(x.size());
    for (std::size_t n = 0; n < static_cast<std::size_t>(horizon); ++n) {
        next.noalias() = m.transition * x;
        next.noalias() += m.conjugate_transition * x.conjugate();
        next += m.input;
        next.noalias() += m.noise_gain * state_sampler_(state_engine);
        x.swap(next);
        out.states[n] = x;

        const CVector v = obs_sampler_(obs_engine);
        auto& obs = out.observations[n];
        obs.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            obs[i].noalias() = m.observation[i] * x;
            obs[i].noalias() += m.conjugate_observation[i] * x.conjugate();
            obs[i] += v.segment(static_cast<Eigen::Index>(i) * k, k);
        }
    }
}

Trajectory simulate(const StateSpaceModel& model, int horizon, const RngStream& rng) {
    Simulator sim(model);
    Trajectory t;
    sim.run(horizon, rng, t);
    return t;
}

StateSpaceModel ar2_model(cplx a1, cplx a2, const SecondOrderStats<>& driving, NoiseSpec obs_noise) {
    check_ar2_stable(a1, a2);
    if (driving.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "AR(2) driving noise must be scalar");
    if (obs_noise.block_dim() != 1) throw Error(ErrorCode::dimension_mismatch, "AR(2) observations are scalar");
    CMatrix f(2, 2);
    f << a1, a2, 1, 0;
    CMatrix h(1, 2);
    h << 1, 0;
    CMatrix g(2, 1);
    g << 1, 0;
    return StateSpaceModel::shared_observation(std::move(f), std::move(h), std::move(g), driving, std::move(obs_noise));
}

StateSpaceModel projectile_model(double sample_interval, double gravity, cplx initial_position,
                                 cplx initial_velocity, const SecondOrderStats<>& driving, NoiseSpec obs_noise) {
    if (!(sample_interval > 0)) throw Error(ErrorCode::config, "sample interval must be positive");
    if (driving.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "projectile driving noise must be scalar");
    if (obs_noise.block_dim() != 1) throw Error(ErrorCode::dimension_mismatch, "projectile observations are scalar");
    const double t = sample_interval;
    CMatrix f(2, 2);
    f << 1, t, 0, 1;
    CMatrix h(1, 2);
    h << 1, 0;
    CMatrix k(2, 1);
    k << t * t / 2, t;
    StateSpaceModel m = StateSpaceModel::shared_observation(std::move(f), std::move(h), k, driving, std::move(obs_noise));
    m.input = -cplx(0, 1) * gravity * k.col(0);
    m.initial_state.resize(2);
    m.initial_state << initial_position, initial_velocity;
    return m;
}

} // namespace wlkf
