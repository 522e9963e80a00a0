#include "wlkf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace wlkf {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::config, what); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& text) {
    const auto t = trim(text);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        config_error("not a number: '" + t + "'");
    }
    if (used != t.size()) config_error("not a number: '" + t + "'");
    if (!std::isfinite(v)) config_error("non-finite number: '" + t + "'");
    return v;
}

long long parse_integer(const std::string& text) {
    const auto t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        config_error("not an integer: '" + t + "'");
    }
    if (used != t.size()) config_error("not an integer: '" + t + "'");
    return v;
}

bool parse_bool(const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    config_error("not a boolean: '" + t + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_complex(cplx z) {
    if (z.imag() == 0) return format_double(z.real());
    std::string im = format_double(z.imag());
    if (im.front() != '-') im = "+" + im;
    return format_double(z.real()) + im + "j";
}

std::string format_matrix(const CMatrix& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) out += "; ";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ", ";
            out += format_complex(m(r, c));
        }
    }
    return out;
}

CVector parse_vector(const std::string& text) {
    const auto parts = split(text, ',');
    CVector v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t k = 0; k < parts.size(); ++k) v(static_cast<Eigen::Index>(k)) = parse_complex(parts[k]);
    return v;
}

std::string format_vector(const CVector& v) { return format_matrix(v.transpose()); }

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& text, const Enum (&values)[N], const char* what) {
    const auto t = trim(text);
    for (auto v : values)
        if (to_string(v) == t) return v;
    config_error(std::string("unknown ") + what + ": '" + t + "'");
}

constexpr ScenarioKind kinds[] = {ScenarioKind::ar2, ScenarioKind::projectile, ScenarioKind::custom};
constexpr EtaTarget targets[] = {EtaTarget::state, EtaTarget::observation, EtaTarget::both};
constexpr CrossPseudo pseudo_modes[] = {CrossPseudo::zero, CrossPseudo::common};
constexpr WeightScheme schemes[] = {WeightScheme::nearest_neighbour, WeightScheme::uniform};

std::string topology_value(const TopologySource& t) {
    switch (t.kind) {
    case TopologySource::Kind::file: return t.file.string();
    case TopologySource::Kind::random_geometric: return "rgg";
    case TopologySource::Kind::complete: return "complete";
    case TopologySource::Kind::path: return "path";
    }
    return {};
}

bool eta_on_state(EtaTarget t) { return t != EtaTarget::observation; }
bool eta_on_observation(EtaTarget t) { return t != EtaTarget::state; }

} // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
    case ScenarioKind::ar2: return "ar2";
    case ScenarioKind::projectile: return "projectile";
    case ScenarioKind::custom: return "custom";
    }
    return "unknown";
}

std::string_view to_string(EtaTarget target) noexcept {
    switch (target) {
    case EtaTarget::state: return "state";
    case EtaTarget::observation: return "observation";
    case EtaTarget::both: return "both";
    }
    return "unknown";
}

std::string_view to_string(CrossPseudo mode) noexcept {
    return mode == CrossPseudo::zero ? "zero" : "common";
}

std::string_view to_string(WeightScheme scheme) noexcept {
    return scheme == WeightScheme::nearest_neighbour ? "nearest_neighbour" : "uniform";
}

cplx parse_complex(const std::string& text) {
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) config_error("empty complex number");
    const char last = t.back();
    if (last != 'j' && last != 'i') return parse_double(t);
    t.pop_back();
    // Split "a+b" at the last sign that is not an exponent sign.
    std::size_t split_at = std::string::npos;
    for (std::size_t k = t.size(); k-- > 1;) {
        if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
            split_at = k;
            break;
        }
    }
    auto imag_of = [](const std::string& s) {
        if (s.empty() || s == "+") return 1.0;
        if (s == "-") return -1.0;
        return parse_double(s);
    };
    if (split_at == std::string::npos) return {0.0, imag_of(t)};
    return {parse_double(t.substr(0, split_at)), imag_of(t.substr(split_at))};
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
    return out;
}

std::vector<FilterVariant> parse_variant_list(const std::string& text) {
    std::vector<FilterVariant> out;
    for (const auto& part : split(text, ',')) {
        if (part == "all") {
            const auto all = all_variants();
            out.insert(out.end(), all.begin(), all.end());
            continue;
        }
        const auto v = parse_variant(part);
        if (!v) config_error("unknown filter variant '" + part + "'");
        out.push_back(*v);
    }
    if (out.empty()) config_error("variant list is empty");
    return out;
}

CMatrix parse_matrix(const std::string& text) {
    const auto rows = split(text, ';');
    std::vector<CVector> parsed;
    for (const auto& row : rows) parsed.push_back(parse_vector(row));
    if (parsed.empty() || parsed.front().size() == 0) config_error("empty matrix");
    CMatrix m(static_cast<Eigen::Index>(parsed.size()), parsed.front().size());
    for (std::size_t r = 0; r < parsed.size(); ++r) {
        if (parsed[r].size() != m.cols()) config_error("matrix rows have different lengths: '" + text + "'");
        m.row(static_cast<Eigen::Index>(r)) = parsed[r].transpose();
    }
    return m;
}

// ---------------------------------------------------------------------------

std::size_t ScenarioConfig::node_count() const { return static_cast<std::size_t>(build_topology(*this).node_count()); }

void ScenarioConfig::validate() const {
    if (trials < 1) config_error("trials must be at least 1");
    if (horizon < 1) config_error("horizon must be at least 1");
    if (window < 0) config_error("window must be non-negative");
    if (steady_window() >= horizon && horizon > 1) config_error("horizon must exceed the steady-state window");
    if (threads < 0) config_error("threads must be non-negative");
    if (variants.empty()) config_error("no filter variants selected");
    for (double eta : eta_sweep)
        if (!(eta >= 0 && eta <= 1)) config_error("circularity degrees must lie in [0, 1]");
    if (!(driving_variance >= 0)) config_error("driving variance must be non-negative");
    if (!(prior_variance > 0)) config_error("prior variance must be positive");
    if (topology.kind == TopologySource::Kind::file && !std::filesystem::exists(topology.file))
        config_error("topology fixture not found: " + topology.file.string());
    const auto topo = build_topology(*this);
    if (!topo.connected()) config_error("topology is not connected");
    for (double eta : eta_sweep.empty() ? std::vector<double>{0.0} : eta_sweep) {
        try {
            build_model(*this, eta);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::config) throw;
            config_error("model at eta " + format_double(eta) + ": " + e.what());
        }
    }
}

ScenarioConfig builtin_ar2_config() {
    ScenarioConfig c;
    c.kind = ScenarioKind::ar2;
    c.name = "ar2";
    c.topology = {TopologySource::Kind::random_geometric, {}, 10, 0.5, 7};
    c.variants = {FilterVariant::diffusion_kf, FilterVariant::dckf, FilterVariant::dackf, FilterVariant::central_ckf,
                  FilterVariant::central_ackf};
    c.horizon = 2000;
    c.trials = 1000;
    c.seed = 1;
    c.eta_target = EtaTarget::state;
    c.eta_sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    c.cross_pseudo = CrossPseudo::common;
    c.driving_variance = 2;
    c.obs_variance_base = 4;
    c.obs_variance_scale = 1;
    c.obs_variance_power = -0.5;
    c.obs_cross_covariance = 4;
    c.ar_a1 = 1.2;
    c.ar_a2 = -0.8;
    return c;
}

ScenarioConfig builtin_projectile_config() {
    ScenarioConfig c;
    c.kind = ScenarioKind::projectile;
    c.name = "projectile";
    c.topology = {TopologySource::Kind::random_geometric, {}, 20, 0.3, 11};
    c.variants = {FilterVariant::central_ckf, FilterVariant::central_ackf, FilterVariant::dckf, FilterVariant::dackf};
    c.horizon = 100;
    c.trials = 1000;
    c.seed = 1;
    c.eta_target = EtaTarget::both;
    c.eta_sweep = {0.85};
    c.obs_pseudo_phase = std::numbers::pi / 2;
    c.cross_pseudo = CrossPseudo::common;
    c.driving_variance = 5;
    c.obs_variance_base = 1;
    c.obs_variance_scale = 2;
    c.obs_variance_power = 0.5;
    c.obs_cross_covariance = 1;
    c.sample_interval = 0.05;
    c.gravity = 9.8;
    c.initial_position = 0;
    c.initial_velocity = {20, 10};
    c.prior_at_initial_state = true;
    return c;
}

std::vector<std::string> builtin_scenarios() { return {"ar2", "projectile"}; }

std::optional<ScenarioConfig> builtin_config(const std::string& name) {
    if (name == "ar2") return builtin_ar2_config();
    if (name == "projectile") return builtin_projectile_config();
    return std::nullopt;
}

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    ScenarioConfig c;
    std::optional<ScenarioKind> kind;
    std::map<std::string, std::string> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) config_error("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) config_error("line " + std::to_string(line_no) + ": empty key");
        if (!values.emplace(key, value).second) config_error("line " + std::to_string(line_no) + ": duplicate key " + key);
    }

    // The scenario kind selects the defaults the remaining keys override.
    if (auto it = values.find("scenario"); it != values.end()) {
        kind = parse_enum(it->second, kinds, "scenario kind");
        values.erase(it);
    }
    if (!kind) config_error("missing key 'scenario'");
    if (*kind == ScenarioKind::ar2) c = builtin_ar2_config();
    else if (*kind == ScenarioKind::projectile) c = builtin_projectile_config();
    else {
        c.kind = ScenarioKind::custom;
        c.name = "custom";
        c.variants = {FilterVariant::dckf, FilterVariant::dackf};
    }

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"name", [&](const std::string& v) { c.name = v; }},
        {"topology",
         [&](const std::string& v) {
             if (v == "rgg") c.topology.kind = TopologySource::Kind::random_geometric;
             else if (v == "complete") c.topology.kind = TopologySource::Kind::complete;
             else if (v == "path") c.topology.kind = TopologySource::Kind::path;
             else {
                 c.topology.kind = TopologySource::Kind::file;
                 std::filesystem::path p(v);
                 c.topology.file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
             }
         }},
        {"topology_nodes", [&](const std::string& v) { c.topology.nodes = static_cast<int>(parse_integer(v)); }},
        {"topology_radius", [&](const std::string& v) { c.topology.radius = parse_double(v); }},
        {"topology_seed", [&](const std::string& v) { c.topology.seed = static_cast<std::uint64_t>(parse_integer(v)); }},
        {"weights", [&](const std::string& v) { c.weights = parse_enum(v, schemes, "weight scheme"); }},
        {"variants", [&](const std::string& v) { c.variants = parse_variant_list(v); }},
        {"horizon", [&](const std::string& v) { c.horizon = static_cast<int>(parse_integer(v)); }},
        {"window", [&](const std::string& v) { c.window = static_cast<int>(parse_integer(v)); }},
        {"trials", [&](const std::string& v) { c.trials = static_cast<int>(parse_integer(v)); }},
        {"seed", [&](const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_integer(v)); }},
        {"threads", [&](const std::string& v) { c.threads = static_cast<int>(parse_integer(v)); }},
        {"analysis", [&](const std::string& v) { c.analysis = parse_bool(v); }},
        {"eta_target", [&](const std::string& v) { c.eta_target = parse_enum(v, targets, "eta target"); }},
        {"eta_sweep", [&](const std::string& v) { c.eta_sweep = parse_double_list(v); }},
        {"state_pseudo_phase", [&](const std::string& v) { c.state_pseudo_phase = parse_double(v); }},
        {"obs_pseudo_phase", [&](const std::string& v) { c.obs_pseudo_phase = parse_double(v); }},
        {"cross_pseudo", [&](const std::string& v) { c.cross_pseudo = parse_enum(v, pseudo_modes, "cross_pseudo mode"); }},
        {"driving_variance", [&](const std::string& v) { c.driving_variance = parse_double(v); }},
        {"obs_variance_base", [&](const std::string& v) { c.obs_variance_base = parse_double(v); }},
        {"obs_variance_scale", [&](const std::string& v) { c.obs_variance_scale = parse_double(v); }},
        {"obs_variance_power", [&](const std::string& v) { c.obs_variance_power = parse_double(v); }},
        {"obs_cross_covariance", [&](const std::string& v) { c.obs_cross_covariance = parse_double(v); }},
        {"ar_a1", [&](const std::string& v) { c.ar_a1 = parse_complex(v); }},
        {"ar_a2", [&](const std::string& v) { c.ar_a2 = parse_complex(v); }},
        {"sample_interval", [&](const std::string& v) { c.sample_interval = parse_double(v); }},
        {"gravity", [&](const std::string& v) { c.gravity = parse_double(v); }},
        {"initial_position", [&](const std::string& v) { c.initial_position = parse_complex(v); }},
        {"initial_velocity", [&](const std::string& v) { c.initial_velocity = parse_complex(v); }},
        {"transition", [&](const std::string& v) { c.transition = parse_matrix(v); }},
        {"conjugate_transition", [&](const std::string& v) { c.conjugate_transition = parse_matrix(v); }},
        {"observation", [&](const std::string& v) { c.observation = parse_matrix(v); }},
        {"conjugate_observation", [&](const std::string& v) { c.conjugate_observation = parse_matrix(v); }},
        {"noise_gain", [&](const std::string& v) { c.noise_gain = parse_matrix(v); }},
        {"input", [&](const std::string& v) { c.input = parse_vector(v); }},
        {"initial_state", [&](const std::string& v) { c.initial_state = parse_vector(v); }},
        {"prior_variance", [&](const std::string& v) { c.prior_variance = parse_double(v); }},
        {"prior_mean",
         [&](const std::string& v) {
             if (v == "zero") c.prior_at_initial_state = false;
             else if (v == "initial_state") c.prior_at_initial_state = true;
             else config_error("prior_mean must be 'zero' or 'initial_state'");
         }},
        {"out", [&](const std::string& v) { c.out = v; }},
    };
    for (const auto& [key, value] : values) {
        const auto it = setters.find(key);
        if (it == setters.end()) config_error("unknown config key '" + key + "'");
        it->second(value);
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open config " + path.string());
    return parse_config(in, path.parent_path());
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
    auto line = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
    line("scenario", std::string(to_string(c.kind)));
    line("name", c.name);
    line("topology", topology_value(c.topology));
    line("topology_nodes", std::to_string(c.topology.nodes));
    line("topology_radius", format_double(c.topology.radius));
    line("topology_seed", std::to_string(c.topology.seed));
    line("weights", std::string(to_string(c.weights)));
    std::string variants;
    for (auto v : c.variants) variants += (variants.empty() ? "" : ",") + std::string(to_string(v));
    line("variants", variants);
    line("horizon", std::to_string(c.horizon));
    line("window", std::to_string(c.window));
    line("trials", std::to_string(c.trials));
    line("seed", std::to_string(c.seed));
    line("threads", std::to_string(c.threads));
    line("analysis", c.analysis ? "true" : "false");
    line("eta_target", std::string(to_string(c.eta_target)));
    std::string sweep;
    for (double e : c.eta_sweep) sweep += (sweep.empty() ? "" : ",") + format_double(e);
    line("eta_sweep", sweep);
    line("state_pseudo_phase", format_double(c.state_pseudo_phase));
    line("obs_pseudo_phase", format_double(c.obs_pseudo_phase));
    line("cross_pseudo", std::string(to_string(c.cross_pseudo)));
    line("driving_variance", format_double(c.driving_variance));
    line("obs_variance_base", format_double(c.obs_variance_base));
    line("obs_variance_scale", format_double(c.obs_variance_scale));
    line("obs_variance_power", format_double(c.obs_variance_power));
    line("obs_cross_covariance", format_double(c.obs_cross_covariance));
    line("ar_a1", format_complex(c.ar_a1));
    line("ar_a2", format_complex(c.ar_a2));
    line("sample_interval", format_double(c.sample_interval));
    line("gravity", format_double(c.gravity));
    line("initial_position", format_complex(c.initial_position));
    line("initial_velocity", format_complex(c.initial_velocity));
    if (c.transition.size()) line("transition", format_matrix(c.transition));
    if (c.conjugate_transition.size()) line("conjugate_transition", format_matrix(c.conjugate_transition));
    if (c.observation.size()) line("observation", format_matrix(c.observation));
    if (c.conjugate_observation.size()) line("conjugate_observation", format_matrix(c.conjugate_observation));
    if (c.noise_gain.size()) line("noise_gain", format_matrix(c.noise_gain));
    if (c.input.size()) line("input", format_vector(c.input));
    if (c.initial_state.size()) line("initial_state", format_vector(c.initial_state));
    line("prior_variance", format_double(c.prior_variance));
    line("prior_mean", c.prior_at_initial_state ? "initial_state" : "zero");
    if (!c.out.empty()) line("out", c.out.string());
}

// ---------------------------------------------------------------------------

Topology build_topology(const ScenarioConfig& c) {
    const auto& t = c.topology;
    switch (t.kind) {
    case TopologySource::Kind::file: return load_topology(t.file);
    case TopologySource::Kind::random_geometric: return random_geometric_topology(t.nodes, t.radius, t.seed);
    case TopologySource::Kind::complete: return Topology::complete(t.nodes);
    case TopologySource::Kind::path: return Topology::path(t.nodes);
    }
    config_error("unknown topology source");
}

DiffusionWeights build_weights(const ScenarioConfig& c, const Topology& topology) {
    return c.weights == WeightScheme::nearest_neighbour ? nearest_neighbour_weights(topology)
                                                        : uniform_weights(topology);
}

NoiseSpec build_observation_noise(const ScenarioConfig& c, double eta) {
    const int n = build_topology(c).node_count();
    const double e = eta_on_observation(c.eta_target) ? eta : 0.0;
    const cplx rot = std::polar(e, c.obs_pseudo_phase);
    std::vector<double> var(static_cast<std::size_t>(n));
    std::vector<cplx> pseudo(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        var[static_cast<std::size_t>(i)] =
            c.obs_variance_base + c.obs_variance_scale * std::pow(static_cast<double>(i + 1), c.obs_variance_power);
        pseudo[static_cast<std::size_t>(i)] = rot * var[static_cast<std::size_t>(i)];
    }
    const cplx cross_pseudo = c.cross_pseudo == CrossPseudo::common ? rot * c.obs_cross_covariance : cplx(0);
    return NoiseSpec::scalar_nodes(var, pseudo, c.obs_cross_covariance, cross_pseudo);
}

SecondOrderStats<> build_driving_noise(const ScenarioConfig& c, double eta) {
    const double e = eta_on_state(c.eta_target) ? eta : 0.0;
    return SecondOrderStats<>::scalar(c.driving_variance, std::polar(e, c.state_pseudo_phase) * c.driving_variance);
}

StateSpaceModel build_model(const ScenarioConfig& c, double eta) {
    auto obs = build_observation_noise(c, eta);
    const auto driving = build_driving_noise(c, eta);
    switch (c.kind) {
    case ScenarioKind::ar2: return ar2_model(c.ar_a1, c.ar_a2, driving, std::move(obs));
    case ScenarioKind::projectile:
        return projectile_model(c.sample_interval, c.gravity, c.initial_position, c.initial_velocity, driving,
                                std::move(obs));
    case ScenarioKind::custom: {
        if (c.transition.size() == 0 || c.observation.size() == 0)
            config_error("custom scenarios need 'transition' and 'observation'");
        const auto l = c.transition.rows();
        if (c.transition.cols() != l) config_error("transition must be square");
        if (c.observation.rows() != 1 || c.observation.cols() != l) config_error("observation must be 1 x L");
        const CMatrix g = c.noise_gain.size() ? c.noise_gain : CMatrix(CMatrix::Identity(l, 1));
        if (g.rows() != l || g.cols() != 1) config_error("noise_gain must be L x 1");
        StateSpaceModel m = StateSpaceModel::shared_observation(c.transition, c.observation, g, driving, std::move(obs));
        if (c.conjugate_transition.size()) m.conjugate_transition = c.conjugate_transition;
        if (c.conjugate_observation.size())
            m.conjugate_observation.assign(m.observation.size(), c.conjugate_observation);
        if (c.input.size()) m.input = c.input;
        if (c.initial_state.size()) m.initial_state = c.initial_state;
        try {
            m.validate();
        } catch (const Error& e) {
            config_error(std::string("custom model: ") + e.what());
        }
        return m;
    }
    }
    config_error("unknown scenario kind");
}

FilterPrior build_prior(const ScenarioConfig& c, const StateSpaceModel& model) {
    FilterPrior p;
    p.variance = c.prior_variance;
    if (c.prior_at_initial_state) p.mean = model.initial_state;
    return p;
}

} // namespace wlkf
