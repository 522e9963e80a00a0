#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wlkf/algebra.hpp"

namespace wlkf {

/// Deterministic random stream addressed by (master seed, stream, substream).
///
/// Trials use the stream index; noise sources inside a trial use the substream index.
/// Identical addresses give bit-identical engines.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : seed_(seed), stream_(stream), substream_(substream) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t substream() const noexcept { return substream_; }

    RngStream with_stream(std::uint64_t stream) const { return RngStream(seed_, stream, 0); }
    RngStream with_substream(std::uint64_t substream) const { return RngStream(seed_, stream_, substream); }

    std::mt19937_64 engine() const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t substream_;
};

/// Moments of the real and imaginary parts of a scalar complex variable.
struct BivariateParams {
    double var_real;
    double var_imag;
    double cov_ri;
};

/// Splits (variance, pseudovariance) into the 2x2 real covariance of (Re u, Im u).
BivariateParams bivariate_params(double variance, cplx pseudovariance);

/// 2n x 2n covariance of [Re x; Im x] for a complex vector with the given statistics.
RMatrix real_composite_covariance(const SecondOrderStats<>& stats);

/// Draws from the zero-mean complex Gaussian with given covariance and pseudocovariance.
///
/// The real composite covariance is factorised once with an eigenvalue square root, so
/// rank-deficient statistics are allowed. Eigenvalues below -1e-10 (scaled) are rejected.
class ComplexGaussianSampler {
public:
    explicit ComplexGaussianSampler(const SecondOrderStats<>& stats);

    Eigen::Index dim() const noexcept { return dim_; }

    template <typename Engine>
    CVector operator()(Engine& engine) {
        for (Eigen::Index k = 0; k < standard_.size(); ++k) standard_(k) = normal_(engine);
        composite_.noalias() = root_ * standard_;
        CVector out(dim_);
        for (Eigen::Index k = 0; k < dim_; ++k) out(k) = {composite_(k), composite_(dim_ + k)};
        return out;
    }

    /// Square root S with S S^T equal to the real composite covariance.
    const RMatrix& root() const noexcept { return root_; }

private:
    Eigen::Index dim_;
    RMatrix root_;
    RVector standard_;
    RVector composite_;
    std::normal_distribution<double> normal_;
};

/// Joint statistics of observation noise over all nodes. Each node contributes a block of
/// block_dim() components; off-diagonal blocks hold the cross-covariances r_ik and
/// cross-pseudocovariances u_ik.
class NoiseSpec {
public:
    NoiseSpec() = default;

    NoiseSpec(SecondOrderStats<> stats, Eigen::Index block_dim);

    /// Scalar noise per node with a common cross-covariance and cross-pseudocovariance for
    /// every pair i < k (r_ki = conj(r_ik), u_ki = u_ik).
    static NoiseSpec scalar_nodes(std::span<const double> variances, std::span<const cplx> pseudovariances,
                                  cplx cross_covariance = 0, cplx cross_pseudocovariance = 0);

    int node_count() const noexcept { return nodes_; }
    Eigen::Index block_dim() const noexcept { return block_; }
    const SecondOrderStats<>& stats() const noexcept { return stats_; }

    CMatrix covariance_block(int i, int k) const;
    CMatrix pseudocovariance_block(int i, int k) const;

    /// Statistics of the stacked noise of the listed nodes, in the order given.
    SecondOrderStats<> select(std::span<const int> nodes) const;

    /// True when every cross block between distinct listed nodes is zero.
    bool uncorrelated_within(std::span<const int> nodes) const;

private:
    SecondOrderStats<> stats_;
    Eigen::Index block_ = 1;
    int nodes_ = 0;
};

/// One joint draw of the network noise: entry block i belongs to node i.
CVector sample_network_noise(const NoiseSpec& spec, const RngStream& rng);

/// z_n = a1 z_{n-1} + a2 z_{n-2} + u_n from zero initial conditions.
///
/// The first ar2_burn_in samples are discarded. Throws UnstableAR unless both roots of
/// x^2 - a1 x - a2 lie strictly inside the unit circle.
inline constexpr int ar2_burn_in = 500;

std::vector<cplx> ar2_sequence(cplx a1, cplx a2, const SecondOrderStats<>& driving, int length,
                               const RngStream& rng);

/// Throws UnstableAR if the AR(2) recursion with these coefficients is not stationary.
void check_ar2_stable(cplx a1, cplx a2);

} // namespace wlkf
