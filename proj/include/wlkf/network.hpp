#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wlkf/errors.hpp"

namespace wlkf {

using Adjacency = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Self-inclusive neighbour lists in ascending node order. Throws AsymmetricAdjacency.
std::vector<std::vector<int>> neighbourhoods(const Adjacency& adjacency);

/// Undirected network with implied self-loops. Node ids are 0-based in code and 1-based in
/// fixture files.
class Topology {
public:
    Topology() = default;
    explicit Topology(Adjacency adjacency);

    static Topology from_edges(int nodes, std::span<const std::pair<int, int>> edges);
    static Topology complete(int nodes);
    static Topology path(int nodes);

    int node_count() const noexcept { return static_cast<int>(neighbourhoods_.size()); }
    const Adjacency& adjacency() const noexcept { return adjacency_; }
    const std::vector<int>& neighbourhood(int i) const { return neighbourhoods_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::vector<int>>& neighbourhoods() const noexcept { return neighbourhoods_; }
    bool connected() const noexcept { return connected_; }

    /// Edges (i, k) with i < k, sorted.
    std::vector<std::pair<int, int>> edges() const;

    /// Relabels node i as perm[i].
    Topology permuted(std::span<const int> perm) const;

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.adjacency_.rows() == b.adjacency_.rows() && (a.adjacency_ == b.adjacency_).all();
    }

private:
    Adjacency adjacency_;
    std::vector<std::vector<int>> neighbourhoods_;
    bool connected_ = true;
};

/// Column-stochastic combination matrix: weight(k, i) = c_{k,i}, the weight node i gives to
/// the local estimate of neighbour k.
class DiffusionWeights {
public:
    DiffusionWeights() = default;
    DiffusionWeights(Eigen::MatrixXd c, const Topology& topology);

    /// Non-cooperative weights (c_{i,i} = 1).
    static DiffusionWeights identity(int nodes);

    const Eigen::MatrixXd& matrix() const noexcept { return c_; }
    double operator()(int k, int i) const { return c_(k, i); }
    int node_count() const noexcept { return static_cast<int>(c_.cols()); }

private:
    Eigen::MatrixXd c_;
};

/// c_{k,i} = |N_k| / sum_{m in N_i} |N_m| for k in N_i.
DiffusionWeights nearest_neighbour_weights(const Topology& topology);

/// c_{k,i} = 1 / |N_i| for k in N_i.
DiffusionWeights uniform_weights(const Topology& topology);

/// Nodes uniform in the unit square, edge iff distance <= radius. Radius grows by 10% per
/// retry until the graph is connected; ConnectivityFailure after 20 retries.
Topology random_geometric_topology(int nodes, double radius, std::uint64_t seed);

// Fixture format: a `nodes N` header then one `i j` pair per line, 1-based; `#` starts a comment.
Topology read_topology(std::istream& in);
Topology load_topology(const std::filesystem::path& path);
void write_topology(std::ostream& out, const Topology& topology);
void save_topology(const std::filesystem::path& path, const Topology& topology);

} // namespace wlkf
