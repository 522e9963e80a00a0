#include "wlkf/stats.hpp"

#include <string>

namespace wlkf {

std::mt19937_64 RngStream::engine() const {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed_), hi(seed_), lo(stream_), hi(stream_), lo(substream_), hi(substream_)};
    return std::mt19937_64(seq);
}

BivariateParams bivariate_params(double variance, cplx pseudovariance) {
    if (!(variance >= 0) || std::abs(pseudovariance) > variance * (1 + 1e-12))
        throw Error(ErrorCode::infeasible_pseudovariance,
                    "|p| = " + std::to_string(std::abs(pseudovariance)) + " exceeds variance " +
                        std::to_string(variance));
    return {(variance + pseudovariance.real()) / 2, (variance - pseudovariance.real()) / 2,
            pseudovariance.imag() / 2};
}

RMatrix real_composite_covariance(const SecondOrderStats<>& stats) {
    const CMatrix& r = stats.covariance();
    const CMatrix& p = stats.pseudocovariance();
    const auto n = stats.dim();
    // With x = a + jb: E{aa^T} = Re(R+P)/2, E{bb^T} = Re(R-P)/2, E{ab^T} = Im(P-R)/2.
    RMatrix c(2 * n, 2 * n);
    c.topLeftCorner(n, n) = (r + p).real() / 2;
    c.bottomRightCorner(n, n) = (r - p).real() / 2;
    c.topRightCorner(n, n) = (p - r).imag() / 2;
    c.bottomLeftCorner(n, n) = c.topRightCorner(n, n).transpose();
    return c;
}

ComplexGaussianSampler::ComplexGaussianSampler(const SecondOrderStats<>& stats)
    : dim_(stats.dim()), standard_(2 * stats.dim()), composite_(2 * stats.dim()) {
    const RMatrix cov = real_composite_covariance(stats);
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(cov);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::not_psd, "eigendecomposition of noise covariance failed");
    const double floor = -1e-10 * std::max(max_norm(cov), 1e-300);
    RVector lambda = eig.eigenvalues();
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda(k) < floor)
            throw Error(ErrorCode::not_psd, "joint noise covariance has eigenvalue " + std::to_string(lambda(k)));
        lambda(k) = std::sqrt(std::max(lambda(k), 0.0));
    }
    root_ = eig.eigenvectors() * lambda.asDiagonal();
}

NoiseSpec::NoiseSpec(SecondOrderStats<> stats, Eigen::Index block_dim) : stats_(std::move(stats)), block_(block_dim) {
    if (block_ <= 0 || stats_.dim() % block_ != 0)
        throw Error(ErrorCode::dimension_mismatch, "noise dimension is not a multiple of the node block size");
    nodes_ = static_cast<int>(stats_.dim() / block_);
    for (int i = 0; i < nodes_; ++i) {
        for (Eigen::Index a = 0; a < block_; ++a) {
            const auto idx = i * block_ + a;
            bivariate_params(stats_.covariance()(idx, idx).real(), stats_.pseudocovariance()(idx, idx));
        }
    }
}

NoiseSpec NoiseSpec::scalar_nodes(std::span<const double> variances, std::span<const cplx> pseudovariances,
                                  cplx cross_covariance, cplx cross_pseudocovariance) {
    if (variances.size() != pseudovariances.size() || variances.empty())
        throw Error(ErrorCode::dimension_mismatch, "one variance and pseudovariance per node required");
    const auto n = static_cast<Eigen::Index>(variances.size());
    CMatrix r(n, n), p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        bivariate_params(variances[i], pseudovariances[i]);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (i == k) {
                r(i, k) = variances[i];
                p(i, k) = pseudovariances[i];
            } else {
                r(i, k) = i < k ? cross_covariance : std::conj(cross_covariance);
                p(i, k) = cross_pseudocovariance;
            }
        }
    }
    return NoiseSpec(SecondOrderStats<>(std::move(r), std::move(p)), 1);
}

CMatrix NoiseSpec::covariance_block(int i, int k) const {
    return stats_.covariance().block(i * block_, k * block_, block_, block_);
}

CMatrix NoiseSpec::pseudocovariance_block(int i, int k) const {
    return stats_.pseudocovariance().block(i * block_, k * block_, block_, block_);
}

SecondOrderStats<> NoiseSpec::select(std::span<const int> nodes) const {
    const auto m = static_cast<Eigen::Index>(nodes.size());
    CMatrix r(m * block_, m * block_), p(m * block_, m * block_);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            r.block(a * block_, b * block_, block_, block_) = covariance_block(nodes[a], nodes[b]);
            p.block(a * block_, b * block_, block_, block_) = pseudocovariance_block(nodes[a], nodes[b]);
        }
    }
    return SecondOrderStats<>(std::move(r), std::move(p));
}

bool NoiseSpec::uncorrelated_within(std::span<const int> nodes) const {
    for (int i : nodes) {
        for (int k : nodes) {
            if (i == k) continue;
            if (max_norm(covariance_block(i, k)) != 0 || max_norm(pseudocovariance_block(i, k)) != 0) return false;
        }
    }
    return true;
}

CVector sample_network_noise(const NoiseSpec& spec, const RngStream& rng) {
    ComplexGaussianSampler sampler(spec.stats());
    auto engine = rng.engine();
    return sampler(engine);
}

void check_ar2_stable(cplx a1, cplx a2) {
    // Roots of x^2 - a1 x - a2.
    const cplx disc = std::sqrt(a1 * a1 + 4.0 * a2);
    const cplx r1 = (a1 + disc) / 2.0;
    const cplx r2 = (a1 - disc) / 2.0;
    if (std::abs(r1) >= 1 || std::abs(r2) >= 1)
        throw Error(ErrorCode::unstable_ar, "AR(2) characteristic roots outside the unit circle (|r| = " +
                                                std::to_string(std::max(std::abs(r1), std::abs(r2))) + ")");
}

std::vector<cplx> ar2_sequence(cplx a1, cplx a2, const SecondOrderStats<>& driving, int length,
                               const RngStream& rng) {
    check_ar2_stable(a1, a2);
    if (driving.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "AR(2) driving noise must be scalar");
    if (length < 0) throw Error(ErrorCode::dimension_mismatch, "negative AR(2) length");
    ComplexGaussianSampler sampler(driving);
    auto engine = rng.engine();
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(length));
    cplx z1 = 0, z2 = 0;
    for (int n = 0; n < ar2_burn_in + length; ++n) {
        const cplx z = a1 * z1 + a2 * z2 + sampler(engine)(0);
        z2 = z1;
        z1 = z;
        if (n >= ar2_burn_in) out.push_back(z);
    }
    return out;
}

} // namespace wlkf
