#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wlkf/filters.hpp"

namespace wlkf {

enum class ScenarioKind { ar2, projectile, custom };

/// Which noise source the circularity sweep acts on; the other one stays circular.
enum class EtaTarget { state, observation, both };

/// How node-to-node pseudocovariances follow the swept circularity.
///   zero:   u_ik = 0 for i != k
///   common: u_ik = eta e^{j phi} r_ik, i.e. the whole noise vector has U = eta e^{j phi} R
enum class CrossPseudo { zero, common };

enum class WeightScheme { nearest_neighbour, uniform };

struct TopologySource {
    enum class Kind { file, random_geometric, complete, path } kind = Kind::random_geometric;
    std::filesystem::path file;
    int nodes = 10;
    double radius = 0.5;
    std::uint64_t seed = 7;
};

/// Flat description of one experiment. Every field has a `key = value` counterpart in the
/// config file format (see configs/example.cfg).
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::ar2;
    std::string name = "ar2";
    TopologySource topology;
    WeightScheme weights = WeightScheme::nearest_neighbour;
    std::vector<FilterVariant> variants;

    int horizon = 2000;
    int window = 0; ///< steady-state window in steps; 0 means the final 25% of the horizon
    int trials = 1000;
    std::uint64_t seed = 1;
    int threads = 0; ///< 0 means hardware concurrency
    bool analysis = true;

    EtaTarget eta_target = EtaTarget::state;
    std::vector<double> eta_sweep{0.0};
    double state_pseudo_phase = 0; ///< phase of the driving-noise pseudovariance, radians
    double obs_pseudo_phase = 0;   ///< phase of the observation-noise pseudocovariances, radians
    CrossPseudo cross_pseudo = CrossPseudo::zero;

    // Noise: driving variance and r_i = base + scale * i^power (1-based i), r_ik = cross.
    double driving_variance = 2;
    double obs_variance_base = 4;
    double obs_variance_scale = 1;
    double obs_variance_power = -0.5;
    double obs_cross_covariance = 4;

    // ar2
    cplx ar_a1{1.2, 0};
    cplx ar_a2{-0.8, 0};

    // projectile
    double sample_interval = 0.05;
    double gravity = 9.8;
    cplx initial_position{0, 0};
    cplx initial_velocity{20, 10};

    // custom: scalar observation per node, scalar driving noise
    CMatrix transition;
    CMatrix conjugate_transition;
    CMatrix observation;            ///< 1 x L, shared by every node
    CMatrix conjugate_observation;  ///< 1 x L
    CMatrix noise_gain;             ///< L x 1
    CVector input;
    CVector initial_state;

    double prior_variance = 100;
    bool prior_at_initial_state = false; ///< prior mean equals the true initial state instead of zero

    std::filesystem::path out;

    int steady_window() const noexcept { return window > 0 ? window : std::max(1, horizon / 4); }
    std::size_t node_count() const;

    /// Throws ConfigError on any inconsistency; loads the topology to check it.
    void validate() const;
};

ScenarioConfig builtin_ar2_config();
ScenarioConfig builtin_projectile_config();

/// Names accepted by `--scenario` besides config file paths.
std::vector<std::string> builtin_scenarios();
std::optional<ScenarioConfig> builtin_config(const std::string& name);

/// Parses `key = value` lines; '#' starts a comment. Relative fixture paths are resolved
/// against `base_dir`. Unknown keys and malformed values raise ConfigError.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Writes a config that parse_config reads back to an equal configuration.
void write_config(std::ostream& out, const ScenarioConfig& config);

// Value parsers shared with the CLI.
cplx parse_complex(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<FilterVariant> parse_variant_list(const std::string& text);
CMatrix parse_matrix(const std::string& text);

// ---------------------------------------------------------------------------
// Materialisation

Topology build_topology(const ScenarioConfig& config);
DiffusionWeights build_weights(const ScenarioConfig& config, const Topology& topology);

/// Observation noise at circularity eta (ignored unless the sweep targets observations).
NoiseSpec build_observation_noise(const ScenarioConfig& config, double eta);
SecondOrderStats<> build_driving_noise(const ScenarioConfig& config, double eta);
StateSpaceModel build_model(const ScenarioConfig& config, double eta);
FilterPrior build_prior(const ScenarioConfig& config, const StateSpaceModel& model);

std::string_view to_string(ScenarioKind kind) noexcept;
std::string_view to_string(EtaTarget target) noexcept;
std::string_view to_string(CrossPseudo mode) noexcept;
std::string_view to_string(WeightScheme scheme) noexcept;

} // namespace wlkf
