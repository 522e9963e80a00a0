#pragma once

// Kalman recursions shared by every filter variant. The scalar is std::complex<double> for the
// strictly-linear and augmented algebras and double for the real composite algebra; the
// equations are identical in all three.

#include <span>
#include <vector>

#include "wlkf/algebra.hpp"

namespace wlkf {

/// Estimate and its M matrix. After diffusion M is no longer the error covariance of x.
template <typename Scalar>
struct NodeFilterState {
    Vector<Scalar> x;
    Matrix<Scalar> m;
};

/// x = F x + u, M = F M F^H + Q.
template <typename Scalar>
NodeFilterState<Scalar> predict(const NodeFilterState<Scalar>& state, const Matrix<Scalar>& f,
                                const Matrix<Scalar>& q, const Vector<Scalar>& u) {
    NodeFilterState<Scalar> out;
    out.x = f * state.x + u;
    out.m = f * state.m * f.adjoint() + q;
    return out;
}

template <typename Scalar>
struct UpdateResult {
    NodeFilterState<Scalar> state;
    Matrix<Scalar> gain;
};

/// Kalman gain G = M H^H (H M H^H + R)^-1. Throws SingularInnovation.
///
/// An identically zero innovation covariance (noiseless data on an already exact
/// prediction) yields G = 0.
template <typename Scalar>
Matrix<Scalar> kalman_gain(const Matrix<Scalar>& m_pred, const Matrix<Scalar>& h, const Matrix<Scalar>& r) {
    const Matrix<Scalar> mh = m_pred * h.adjoint();
    const Matrix<Scalar> innovation = h * mh + r;
    if (innovation.size() > 0 && innovation.cwiseAbs().maxCoeff() == 0) return Matrix<Scalar>::Zero(mh.rows(), mh.cols());
    return mh * checked_inverse(innovation, ErrorCode::singular_innovation);
}

/// Measurement update against a stacked observation y = H x + v, cov(v) = R.
///
/// M is propagated in Joseph form (I - GH) M (I - GH)^H + G R G^H, which equals (I - GH) M
/// for the optimal gain and keeps M Hermitian PSD under roundoff.
template <typename Scalar>
UpdateResult<Scalar> local_update(const NodeFilterState<Scalar>& predicted, const Matrix<Scalar>& h,
                                  const Matrix<Scalar>& r, const Vector<Scalar>& y) {
    if (h.cols() != predicted.x.size() || h.rows() != y.size() || r.rows() != y.size() || r.cols() != y.size())
        throw Error(ErrorCode::dimension_mismatch, "local_update operand dimensions");
    UpdateResult<Scalar> out;
    out.gain = kalman_gain(predicted.m, h, r);
    out.state.x = predicted.x + out.gain * (y - h * predicted.x);
    const auto l = predicted.x.size();
    const Matrix<Scalar> t = Matrix<Scalar>::Identity(l, l) - out.gain * h;
    const Matrix<Scalar> joseph = t * predicted.m * t.adjoint() + out.gain * r * out.gain.adjoint();
    out.state.m = (joseph + joseph.adjoint()) / RealOf<Scalar>(2);
    return out;
}

/// Per-node contribution to an information-form update: y_k = H_k x + v_k, cov(v_k) = R_k.
template <typename Scalar>
struct InformationTerm {
    Matrix<Scalar> h;
    Matrix<Scalar> r;
    Vector<Scalar> y;
};

/// Information-form update. Sums S = sum H_k^H R_k^-1 H_k and r = sum H_k^H R_k^-1 y_k, then
/// M_post^-1 = M_pred^-1 + S and x = x_pred + M_post (r - S x_pred). Node noises are
/// taken as mutually uncorrelated. Throws SingularM.
template <typename Scalar>
NodeFilterState<Scalar> info_update(const NodeFilterState<Scalar>& predicted,
                                    std::span<const InformationTerm<Scalar>> terms) {
    if (terms.empty()) return predicted;
    const auto l = predicted.x.size();
    Matrix<Scalar> s = Matrix<Scalar>::Zero(l, l);
    Vector<Scalar> r = Vector<Scalar>::Zero(l);
    for (const auto& term : terms) {
        if (term.h.cols() != l || term.h.rows() != term.y.size() || term.r.rows() != term.y.size())
            throw Error(ErrorCode::dimension_mismatch, "info_update term dimensions");
        const Matrix<Scalar> hr = term.h.adjoint() * checked_inverse(term.r, ErrorCode::singular);
        s += hr * term.h;
        r += hr * term.y;
    }
    NodeFilterState<Scalar> out;
    const Matrix<Scalar> info = checked_inverse(predicted.m, ErrorCode::singular_m) + s;
    const Matrix<Scalar> m = checked_inverse(info, ErrorCode::singular_m);
    out.m = (m + m.adjoint()) / RealOf<Scalar>(2);
    out.x = predicted.x + out.m * (r - s * predicted.x);
    return out;
}

/// sum_k weights[k] * local_estimates[k].
template <typename Scalar>
Vector<Scalar> diffuse(std::span<const Vector<Scalar>> local_estimates, std::span<const double> weights) {
    if (local_estimates.size() != weights.size() || local_estimates.empty())
        throw Error(ErrorCode::dimension_mismatch, "one weight per local estimate required");
    Vector<Scalar> out = Vector<Scalar>::Zero(local_estimates.front().size());
    for (std::size_t k = 0; k < weights.size(); ++k) out += weights[k] * local_estimates[k];
    return out;
}

} // namespace wlkf
