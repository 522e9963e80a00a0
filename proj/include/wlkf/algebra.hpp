#pragma once

// Augmented complex linear algebra.
//
// A complex vector z is carried alongside its conjugate as z^a = [z; z*]. Second
// order statistics of z then live in a single Hermitian matrix
//
//     R^a = E{z^a z^aH} = [[R, P], [P*, R*]]
//
// with covariance R = E{z z^H} and pseudocovariance P = E{z z^T}. The map
// J = [[I, jI], [I, -jI]] carries the stacked real representation [Re z; Im z]
// onto z^a; its inverse is J^H / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "wlkf/errors.hpp"

namespace wlkf {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using cplx = std::complex<double>;
using CMatrix = Matrix<cplx>;
using CVector = Vector<cplx>;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Scalar traits shared by the real and complex code paths.
template <typename Scalar>
struct ScalarTraits {
    using Real = Scalar;
    static constexpr bool is_complex = false;
};
template <typename Real_>
struct ScalarTraits<std::complex<Real_>> {
    using Real = Real_;
    static constexpr bool is_complex = true;
};
template <typename Scalar>
using RealOf = typename ScalarTraits<Scalar>::Real;

struct Tolerance {
    /// Absolute tolerance for Hermitian/conjugate-pair/PSD checks, multiplied by the max-norm.
    double structural = 1e-10;
    /// Inversions fail above this (estimated) condition number.
    double max_condition = 1e12;
};

inline constexpr Tolerance default_tolerance{};

template <typename Derived>
RealOf<typename Derived::Scalar> max_norm(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0;
    return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

namespace detail {

template <typename Derived>
RealOf<typename Derived::Scalar> scaled_tol(const Eigen::MatrixBase<Derived>& m, double tol) {
    const auto scale = max_norm(m);
    return static_cast<RealOf<typename Derived::Scalar>>(tol) * (scale > 0 ? scale : 1);
}

} // namespace detail

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = default_tolerance.structural) {
    if (m.rows() != m.cols()) return false;
    return max_norm(m - m.adjoint()) <= detail::scaled_tol(m, tol);
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double tol = default_tolerance.structural) {
    if (m.rows() != m.cols()) return false;
    return max_norm(m - m.transpose()) <= detail::scaled_tol(m, tol);
}

/// Smallest eigenvalue of the Hermitian part of m.
template <typename Derived>
RealOf<typename Derived::Scalar> min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
    using S = typename Derived::Scalar;
    const Matrix<S> h = (m + m.adjoint()) / RealOf<S>(2);
    Eigen::SelfAdjointEigenSolver<Matrix<S>> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, double tol = default_tolerance.structural) {
    if (!is_hermitian(m, tol)) return false;
    if (m.size() == 0) return true;
    return min_eigenvalue(m) >= -detail::scaled_tol(m, tol);
}

/// Dense LU inverse that refuses ill-conditioned input instead of regularising it.
template <typename Derived>
Matrix<typename Derived::Scalar> checked_inverse(const Eigen::MatrixBase<Derived>& m,
                                                 ErrorCode code = ErrorCode::singular,
                                                 double max_condition = default_tolerance.max_condition) {
    using S = typename Derived::Scalar;
    if (m.rows() != m.cols()) throw Error(ErrorCode::dimension_mismatch, "inverse of a non-square matrix");
    if (m.size() == 0) return Matrix<S>(0, 0);
    if (!m.allFinite()) throw Error(ErrorCode::non_finite, "inverse of a matrix with non-finite entries");
    Eigen::PartialPivLU<Matrix<S>> lu(m);
    const auto rcond = lu.rcond();
    if (!(rcond * max_condition >= 1)) {
        throw Error(code, "condition estimate " + std::to_string(1.0 / static_cast<double>(rcond)) +
                              " exceeds " + std::to_string(max_condition));
    }
    return lu.inverse();
}

// ---------------------------------------------------------------------------
// Augmented vectors and matrices

/// [x; x*]
template <typename Derived>
Vector<typename Derived::Scalar> augment_vector(const Eigen::MatrixBase<Derived>& x) {
    const auto n = x.size();
    Vector<typename Derived::Scalar> out(2 * n);
    out.head(n) = x;
    out.tail(n) = x.conjugate();
    return out;
}

/// Largest deviation of the lower half from the conjugate of the upper half.
template <typename Derived>
RealOf<typename Derived::Scalar> conjugate_pair_defect(const Eigen::MatrixBase<Derived>& v) {
    const auto n = v.size() / 2;
    if (n == 0) return 0;
    return max_norm(v.tail(n) - v.head(n).conjugate());
}

template <typename Derived>
bool is_augmented_vector(const Eigen::MatrixBase<Derived>& v, double tol = default_tolerance.structural) {
    return v.size() % 2 == 0 && conjugate_pair_defect(v) <= detail::scaled_tol(v, tol);
}

/// True when m = [[M1, M2], [M2*, M1*]].
template <typename Derived>
bool is_augmented_matrix(const Eigen::MatrixBase<Derived>& m, double tol = default_tolerance.structural) {
    if (m.rows() % 2 != 0 || m.cols() % 2 != 0) return false;
    const auto p = m.rows() / 2;
    const auto q = m.cols() / 2;
    const auto t = detail::scaled_tol(m, tol);
    return max_norm(m.bottomRightCorner(p, q) - m.topLeftCorner(p, q).conjugate()) <= t &&
           max_norm(m.bottomLeftCorner(p, q) - m.topRightCorner(p, q).conjugate()) <= t;
}

/// A matrix with the augmented block pattern [[A1, A2], [A2*, A1*]]. Only the two independent
/// blocks are stored, so the pattern holds by construction.
template <typename Real = double>
class AugmentedMatrix {
public:
    using Scalar = std::complex<Real>;
    using Block = Matrix<Scalar>;

    AugmentedMatrix() = default;

    AugmentedMatrix(Block a1, Block a2) : a1_(std::move(a1)), a2_(std::move(a2)) {
        if (a1_.rows() != a2_.rows() || a1_.cols() != a2_.cols())
            throw Error(ErrorCode::dimension_mismatch, "augmented blocks must have equal dimensions");
    }

    /// Strictly-linear operator: [[A1, 0], [0, A1*]].
    static AugmentedMatrix strictly_linear(Block a1) {
        Block zero = Block::Zero(a1.rows(), a1.cols());
        return {std::move(a1), std::move(zero)};
    }

    /// Extracts the blocks from a full matrix, checking the conjugate pattern.
    static AugmentedMatrix from_full(const Block& full, double tol = default_tolerance.structural) {
        if (!is_augmented_matrix(full, tol))
            throw Error(ErrorCode::not_augmented, "matrix does not have the augmented block pattern");
        const auto p = full.rows() / 2;
        const auto q = full.cols() / 2;
        return {full.topLeftCorner(p, q), full.topRightCorner(p, q)};
    }

    const Block& a1() const noexcept { return a1_; }
    const Block& a2() const noexcept { return a2_; }
    Eigen::Index block_rows() const noexcept { return a1_.rows(); }
    Eigen::Index block_cols() const noexcept { return a1_.cols(); }

    Block full() const {
        const auto p = a1_.rows();
        const auto q = a1_.cols();
        Block m(2 * p, 2 * q);
        m.topLeftCorner(p, q) = a1_;
        m.topRightCorner(p, q) = a2_;
        m.bottomLeftCorner(p, q) = a2_.conjugate();
        m.bottomRightCorner(p, q) = a1_.conjugate();
        return m;
    }

    AugmentedMatrix adjoint() const { return {a1_.adjoint(), a2_.transpose()}; }

    bool strictly_linear_part_only(double tol = default_tolerance.structural) const {
        return max_norm(a2_) <= detail::scaled_tol(a1_, tol);
    }

    friend AugmentedMatrix operator*(const AugmentedMatrix& lhs, const AugmentedMatrix& rhs) {
        if (lhs.block_cols() != rhs.block_rows())
            throw Error(ErrorCode::dimension_mismatch, "augmented product dimensions");
        return {lhs.a1_ * rhs.a1_ + lhs.a2_ * rhs.a2_.conjugate(),
                lhs.a1_ * rhs.a2_ + lhs.a2_ * rhs.a1_.conjugate()};
    }

    /// Applies the operator to x, i.e. returns A1 x + A2 x* (the upper half of M [x; x*]).
    template <typename Derived>
    Vector<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
        return a1_ * x + a2_ * x.conjugate();
    }

private:
    Block a1_;
    Block a2_;
};

/// Covariance R and pseudocovariance P of a zero-mean complex random vector.
template <typename Real = double>
class SecondOrderStats {
public:
    using Scalar = std::complex<Real>;
    using Block = Matrix<Scalar>;

    SecondOrderStats() = default;

    /// Validates R Hermitian, P symmetric, and [[R, P], [P*, R*]] positive semi-definite.
    SecondOrderStats(Block covariance, Block pseudocovariance, double tol = default_tolerance.structural)
        : r_(std::move(covariance)), p_(std::move(pseudocovariance)) {
        if (r_.rows() == 0 || r_.rows() != r_.cols() || p_.rows() != r_.rows() || p_.cols() != r_.cols())
            throw Error(ErrorCode::dimension_mismatch, "covariance/pseudocovariance must be square and equal-sized");
        if (!r_.allFinite() || !p_.allFinite())
            throw Error(ErrorCode::non_finite, "second-order statistics contain non-finite entries");
        if (!is_hermitian(r_, tol)) throw Error(ErrorCode::not_psd, "covariance is not Hermitian");
        if (!is_symmetric(p_, tol)) throw Error(ErrorCode::not_psd, "pseudocovariance is not symmetric");
        const Block full = augmented().full();
        const auto min_eig = min_eigenvalue(full);
        if (min_eig < -detail::scaled_tol(full, tol))
            throw Error(ErrorCode::not_psd,
                        "augmented covariance has eigenvalue " + std::to_string(static_cast<double>(min_eig)));
    }

    /// Circular statistics (zero pseudocovariance).
    static SecondOrderStats circular(Block covariance) {
        Block zero = Block::Zero(covariance.rows(), covariance.cols());
        return {std::move(covariance), std::move(zero)};
    }

    static SecondOrderStats scalar(Real variance, Scalar pseudovariance) {
        return {Block::Constant(1, 1, Scalar(variance)), Block::Constant(1, 1, pseudovariance)};
    }

    const Block& covariance() const noexcept { return r_; }
    const Block& pseudocovariance() const noexcept { return p_; }
    Eigen::Index dim() const noexcept { return r_.rows(); }

    AugmentedMatrix<Real> augmented() const { return {r_, p_}; }

private:
    Block r_;
    Block p_;
};

/// Augmented covariance [[R, P], [P*, R*]]. The statistics are validated on construction, so
/// NotPSD surfaces there.
template <typename Real>
AugmentedMatrix<Real> build_augmented_cov(const SecondOrderStats<Real>& stats) {
    return stats.augmented();
}

/// |E{u^2}| / E{|u|^2}: 0 for circular, 1 for maximally noncircular.
template <typename Real>
Real circularity_degree(Real variance, std::complex<Real> pseudovariance) {
    if (!(variance > 0)) throw Error(ErrorCode::zero_variance, "circularity degree needs a positive variance");
    return std::abs(pseudovariance) / variance;
}

template <typename Real>
Real circularity_degree(const SecondOrderStats<Real>& stats) {
    if (stats.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "circularity degree is defined for scalars");
    return circularity_degree(stats.covariance()(0, 0).real(), stats.pseudocovariance()(0, 0));
}

// ---------------------------------------------------------------------------
// Complex <-> real duality

/// The map J = [[I, jI], [I, -jI]] for complex length q, with J^-1 = J^H / 2.
template <typename Real = double>
class DualityMap {
public:
    using Scalar = std::complex<Real>;

    explicit DualityMap(Eigen::Index q) : q_(q) {
        if (q < 0) throw Error(ErrorCode::dimension_mismatch, "negative duality dimension");
    }

    Eigen::Index dim() const noexcept { return q_; }

    Matrix<Scalar> matrix() const {
        const Scalar j(0, 1);
        const Matrix<Scalar> id = Matrix<Scalar>::Identity(q_, q_);
        Matrix<Scalar> m(2 * q_, 2 * q_);
        m << id, j * id, id, -j * id;
        return m;
    }

    Matrix<Scalar> inverse() const { return matrix().adjoint() / Real(2); }

private:
    Eigen::Index q_;
};

/// J^-1 z^a = [Re z; Im z] for an augmented vector z^a = [z; z*].
template <typename Derived>
Vector<RealOf<typename Derived::Scalar>> complex_to_real(const Eigen::MatrixBase<Derived>& za,
                                                         double tol = default_tolerance.structural) {
    using Real = RealOf<typename Derived::Scalar>;
    if (!is_augmented_vector(za, tol))
        throw Error(ErrorCode::not_augmented, "vector lacks the conjugate-pair structure");
    const auto q = za.size() / 2;
    const auto upper = za.head(q);
    const auto lower = za.tail(q);
    Vector<Real> zr(2 * q);
    const Vector<std::complex<Real>> z = (upper + lower.conjugate()) / Real(2);
    zr.head(q) = z.real();
    zr.tail(q) = z.imag();
    return zr;
}

/// J z^r: [z; z*] from [Re z; Im z].
template <typename Derived>
Vector<std::complex<typename Derived::Scalar>> real_to_complex(const Eigen::MatrixBase<Derived>& zr) {
    using Real = typename Derived::Scalar;
    if (zr.size() % 2 != 0) throw Error(ErrorCode::dimension_mismatch, "real composite vector has odd length");
    const auto q = zr.size() / 2;
    Vector<std::complex<Real>> z(q);
    for (Eigen::Index k = 0; k < q; ++k) z(k) = {zr(k), zr(q + k)};
    return augment_vector(z);
}

namespace detail {

template <typename Real>
Matrix<Real> real_part_checked(const Matrix<std::complex<Real>>& m, double tol) {
    if (max_norm(m.imag()) > scaled_tol(m, tol))
        throw Error(ErrorCode::not_augmented, "transport left an imaginary residue; input not augmented");
    return m.real();
}

} // namespace detail

/// J_p^-1 M^a J_q: an augmented operator (2p x 2q) as a real operator on composite vectors.
template <typename Real>
Matrix<Real> to_real_operator(const Matrix<std::complex<Real>>& ma, double tol = default_tolerance.structural) {
    if (ma.rows() % 2 != 0 || ma.cols() % 2 != 0)
        throw Error(ErrorCode::dimension_mismatch, "augmented operator has odd dimensions");
    const DualityMap<Real> jp(ma.rows() / 2), jq(ma.cols() / 2);
    return detail::real_part_checked<Real>(jp.inverse() * ma * jq.matrix(), tol);
}

template <typename Real>
Matrix<Real> to_real_operator(const AugmentedMatrix<Real>& ma, double tol = default_tolerance.structural) {
    return to_real_operator<Real>(ma.full(), tol);
}

/// J_p M^r J_q^-1, the inverse of to_real_operator.
template <typename Real>
Matrix<std::complex<Real>> to_augmented_operator(const Matrix<Real>& mr) {
    const DualityMap<Real> jp(mr.rows() / 2), jq(mr.cols() / 2);
    return jp.matrix() * mr.template cast<std::complex<Real>>() * jq.inverse();
}

/// J^-1 C^a J^-H: an augmented covariance as the covariance of the real composite vector.
template <typename Real>
Matrix<Real> to_real_covariance(const Matrix<std::complex<Real>>& ca, double tol = default_tolerance.structural) {
    if (ca.rows() != ca.cols() || ca.rows() % 2 != 0)
        throw Error(ErrorCode::dimension_mismatch, "augmented covariance must be square with even size");
    const DualityMap<Real> j(ca.rows() / 2);
    const Matrix<std::complex<Real>> jinv = j.inverse();
    return detail::real_part_checked<Real>(jinv * ca * jinv.adjoint(), tol);
}

template <typename Real>
Matrix<Real> to_real_covariance(const AugmentedMatrix<Real>& ca, double tol = default_tolerance.structural) {
    return to_real_covariance<Real>(ca.full(), tol);
}

/// J C^r J^H, the inverse of to_real_covariance.
template <typename Real>
Matrix<std::complex<Real>> to_augmented_covariance(const Matrix<Real>& cr) {
    const DualityMap<Real> j(cr.rows() / 2);
    const Matrix<std::complex<Real>> jm = j.matrix();
    return jm * cr.template cast<std::complex<Real>>() * jm.adjoint();
}

// ---------------------------------------------------------------------------
// Widely-linear MMSE estimation

template <typename Real = double>
struct WidelyLinearCoefficients {
    Matrix<std::complex<Real>> b; ///< multiplies x
    Matrix<std::complex<Real>> c; ///< multiplies x*
};

/// Coefficients of the widely-linear MMSE estimator y_hat = B x + C x* from the second-order
/// statistics of x (R_x, P_x) and the cross moments R_yx = E{y x^H}, P_yx = E{y x^T}.
template <typename Real>
WidelyLinearCoefficients<Real> wl_mmse_coefficients(const Matrix<std::complex<Real>>& r_x,
                                                    const Matrix<std::complex<Real>>& p_x,
                                                    const Matrix<std::complex<Real>>& r_yx,
                                                    const Matrix<std::complex<Real>>& p_yx) {
    using M = Matrix<std::complex<Real>>;
    const auto n = r_x.rows();
    if (r_x.cols() != n || p_x.rows() != n || p_x.cols() != n || r_yx.cols() != n || p_yx.cols() != n ||
        r_yx.rows() != p_yx.rows())
        throw Error(ErrorCode::dimension_mismatch, "wl_mmse_coefficients operand dimensions");
    const M r_conj_inv = checked_inverse(M(r_x.conjugate()));
    const M d = checked_inverse(M(r_x - p_x * r_conj_inv * p_x.conjugate()));
    const M e = -d * p_x * r_conj_inv;
    return {r_yx * d + p_yx * e.conjugate(), r_yx * e + p_yx * d.conjugate()};
}

} // namespace wlkf
