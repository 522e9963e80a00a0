#include "wlkf/network.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace wlkf {

std::vector<std::vector<int>> neighbourhoods(const Adjacency& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw Error(ErrorCode::asymmetric_adjacency, "adjacency matrix is not square");
    const auto n = static_cast<int>(adjacency.rows());
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            if (adjacency(i, k) != adjacency(k, i))
                throw Error(ErrorCode::asymmetric_adjacency,
                            "edge " + std::to_string(i + 1) + "-" + std::to_string(k + 1) + " is one-directional");
            if (k == i || adjacency(i, k)) out[static_cast<std::size_t>(i)].push_back(k);
        }
    }
    return out;
}

Topology::Topology(Adjacency adjacency) : adjacency_(std::move(adjacency)) {
    neighbourhoods_ = wlkf::neighbourhoods(adjacency_);
    adjacency_.matrix().diagonal().setConstant(true);

    const auto n = neighbourhoods_.size();
    std::vector<bool> seen(n, false);
    std::vector<int> stack;
    if (n > 0) {
        stack.push_back(0);
        seen[0] = true;
    }
    std::size_t reached = n > 0 ? 1 : 0;
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int k : neighbourhoods_[static_cast<std::size_t>(i)]) {
            if (!seen[static_cast<std::size_t>(k)]) {
                seen[static_cast<std::size_t>(k)] = true;
                ++reached;
                stack.push_back(k);
            }
        }
    }
    connected_ = reached == n;
}

Topology Topology::from_edges(int nodes, std::span<const std::pair<int, int>> edges) {
    Adjacency adj = Adjacency::Constant(nodes, nodes, false);
    for (auto [i, k] : edges) {
        if (i < 0 || k < 0 || i >= nodes || k >= nodes)
            throw Error(ErrorCode::config, "edge references node outside 1.." + std::to_string(nodes));
        adj(i, k) = adj(k, i) = true;
    }
    return Topology(std::move(adj));
}

Topology Topology::complete(int nodes) { return Topology(Adjacency::Constant(nodes, nodes, true)); }

Topology Topology::path(int nodes) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
    return from_edges(nodes, edges);
}

std::vector<std::pair<int, int>> Topology::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < node_count(); ++i)
        for (int k = i + 1; k < node_count(); ++k)
            if (adjacency_(i, k)) out.emplace_back(i, k);
    return out;
}

Topology Topology::permuted(std::span<const int> perm) const {
    const int n = node_count();
    Adjacency adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) adj(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]) = adjacency_(i, k);
    return Topology(std::move(adj));
}

DiffusionWeights::DiffusionWeights(Eigen::MatrixXd c, const Topology& topology) : c_(std::move(c)) {
    const int n = topology.node_count();
    if (c_.rows() != n || c_.cols() != n)
        throw Error(ErrorCode::dimension_mismatch, "weight matrix does not match the topology");
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            if (c_(k, i) < 0) throw Error(ErrorCode::config, "negative diffusion weight");
            if (!topology.adjacency()(k, i) && c_(k, i) != 0)
                throw Error(ErrorCode::config, "diffusion weight outside the neighbourhood");
        }
        if (std::abs(c_.col(i).sum() - 1) > 1e-12)
            throw Error(ErrorCode::config, "diffusion weights of node " + std::to_string(i + 1) + " do not sum to 1");
    }
}

DiffusionWeights DiffusionWeights::identity(int nodes) {
    DiffusionWeights w;
    w.c_ = Eigen::MatrixXd::Identity(nodes, nodes);
    return w;
}

DiffusionWeights nearest_neighbour_weights(const Topology& topology) {
    const int n = topology.node_count();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double alpha = 0;
        for (int k : topology.neighbourhood(i)) alpha += static_cast<double>(topology.neighbourhood(k).size());
        for (int k : topology.neighbourhood(i)) c(k, i) = static_cast<double>(topology.neighbourhood(k).size()) / alpha;
    }
    return DiffusionWeights(std::move(c), topology);
}

DiffusionWeights uniform_weights(const Topology& topology) {
    const int n = topology.node_count();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = topology.neighbourhood(i);
        for (int k : nb) c(k, i) = 1.0 / static_cast<double>(nb.size());
    }
    return DiffusionWeights(std::move(c), topology);
}

Topology random_geometric_topology(int nodes, double radius, std::uint64_t seed) {
    if (nodes < 1) throw Error(ErrorCode::config, "random geometric topology needs at least one node");
    if (!(radius > 0)) throw Error(ErrorCode::config, "random geometric radius must be positive");
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::Vector2d> pos(static_cast<std::size_t>(nodes));
    for (auto& p : pos) {
        p.x() = unit(engine);
        p.y() = unit(engine);
    }
    constexpr int max_retries = 20;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        Adjacency adj = Adjacency::Constant(nodes, nodes, false);
        for (int i = 0; i < nodes; ++i)
            for (int k = 0; k < nodes; ++k)
                adj(i, k) = (pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(k)]).norm() <= radius;
        Topology topo(std::move(adj));
        if (topo.connected()) return topo;
        radius *= 1.1;
    }
    throw Error(ErrorCode::connectivity_failure,
                "no connected graph after " + std::to_string(max_retries) + " radius increases");
}

Topology read_topology(std::istream& in) {
    std::string line;
    int nodes = -1;
    std::vector<std::pair<int, int>> edges;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        const auto where = "topology line " + std::to_string(line_no);
        if (nodes < 0) {
            if (first != "nodes" || !(ls >> nodes) || nodes < 1)
                throw Error(ErrorCode::config, where + ": expected `nodes N` header");
            continue;
        }
        int i = 0, k = 0;
        try {
            i = std::stoi(first);
        } catch (const std::exception&) {
            throw Error(ErrorCode::config, where + ": expected an `i j` pair");
        }
        if (!(ls >> k)) throw Error(ErrorCode::config, where + ": expected an `i j` pair");
        if (i < 1 || k < 1 || i > nodes || k > nodes)
            throw Error(ErrorCode::config, where + ": node id outside 1.." + std::to_string(nodes));
        edges.emplace_back(i - 1, k - 1);
    }
    if (nodes < 0) throw Error(ErrorCode::config, "topology fixture has no `nodes N` header");
    return Topology::from_edges(nodes, edges);
}

Topology load_topology(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open topology fixture " + path.string());
    return read_topology(in);
}

void write_topology(std::ostream& out, const Topology& topology) {
    out << "nodes " << topology.node_count() << '\n';
    for (auto [i, k] : topology.edges()) out << i + 1 << ' ' << k + 1 << '\n';
}

void save_topology(const std::filesystem::path& path, const Topology& topology) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write topology fixture " + path.string());
    write_topology(out, topology);
}

} // namespace wlkf
