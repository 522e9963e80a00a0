#include "wlkf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wlkf {

namespace {

/// Positions of a filter's stacked observation noise inside the lifted network noise vector.
std::vector<Eigen::Index> channel_noise_index(const NetworkFilterModel<cplx>& fm, int filter, Eigen::Index total) {
    const auto& ch = fm.channels[static_cast<std::size_t>(filter)];
    const auto k = fm.obs_dim;
    const auto m = static_cast<Eigen::Index>(ch.nodes.size());
    const bool augmented = fm.algebra == Algebra::augmented;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(augmented ? 2 * m * k : m * k));
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index node = ch.nodes[static_cast<std::size_t>(a)];
        for (Eigen::Index c = 0; c < k; ++c) {
            const Eigen::Index upper = node * k + c;
            if (!augmented) {
                idx[static_cast<std::size_t>(a * k + c)] = upper;
            } else if (fm.information_form) {
                idx[static_cast<std::size_t>(a * 2 * k + c)] = upper;
                idx[static_cast<std::size_t>(a * 2 * k + k + c)] = total + upper;
            } else {
                idx[static_cast<std::size_t>(a * k + c)] = upper;
                idx[static_cast<std::size_t>(m * k + a * k + c)] = total + upper;
            }
        }
    }
    return idx;
}

double relative_gap(const CMatrix& a, const CMatrix& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0 ? 0.0 : (a - b).norm() / scale;
}

std::vector<int> mixing_support(const NetworkFilterModel<cplx>& fm, int filter) {
    std::vector<int> out;
    for (int k = 0; k < fm.filter_count(); ++k)
        if (fm.weights(k, filter) != 0) out.push_back(k);
    return out;
}

} // namespace

double CovariancePropagation::local_mse(int filter) const {
    const auto block = sigma.front().rows();
    return trace_scale * gamma.block(filter * block, filter * block, block, block).trace().real();
}

double worst_node_bound(const CMatrix& gamma, std::span<const int> filters, Eigen::Index block, double scale) {
    double bound = 0;
    for (int k : filters)
        bound = std::max(bound, scale * gamma.block(k * block, k * block, block, block).trace().real());
    return bound;
}

CMatrix deterministic_initial_error(const NetworkFilterModel<cplx>& fm, const CVector& x0) {
    const CVector e = x0 - lower_vector<cplx>(fm.algebra, fm.x0);
    const CVector lifted = lift_vector<cplx>(fm.algebra, e);
    return lifted * lifted.adjoint();
}

CovariancePropagation propagate_covariance(const StateSpaceModel& model, const NetworkFilterModel<cplx>& fm,
                                           const GainSchedule<cplx>& schedule, const PropagationOptions& options) {
    if (fm.algebra == Algebra::real)
        throw Error(ErrorCode::config, "covariance propagation runs in a complex algebra");
    if (fm.algebra == Algebra::strict && !model.strictly_linear())
        throw Error(ErrorCode::config, "a strictly-linear filter cannot be analysed on a widely-linear model");
    if (options.steps < 1) throw Error(ErrorCode::config, "propagation needs at least one step");

    const int filters = fm.filter_count();
    const Eigen::Index d = fm.f.rows();
    const Eigen::Index jd = filters * d;
    const Eigen::Index total = model.node_count() * model.obs_dim();

    const CMatrix r_net = fm.algebra == Algebra::augmented ? model.observation_noise.stats().augmented().full()
                                                           : model.observation_noise.stats().covariance();
    std::vector<std::vector<Eigen::Index>> noise_idx;
    for (int f = 0; f < filters; ++f) noise_idx.push_back(channel_noise_index(fm, f, total));

    CMatrix w = CMatrix::Zero(jd, jd);
    for (int i = 0; i < filters; ++i)
        for (int j = 0; j < filters; ++j)
            if (fm.weights(j, i) != 0) w.block(i * d, j * d, d, d) = fm.weights(j, i) * CMatrix::Identity(d, d);

    const CMatrix e0 = options.initial_error.value_or(fm.m0);
    if (e0.rows() != d || e0.cols() != d)
        throw Error(ErrorCode::dimension_mismatch, "initial error moment must match the filter state");
    CMatrix joint(jd, jd);
    for (int i = 0; i < filters; ++i)
        for (int j = 0; j < filters; ++j) joint.block(i * d, j * d, d, d) = e0;

    CovariancePropagation out;
    out.algebra = fm.algebra;
    out.trace_scale = fm.algebra == Algebra::augmented ? 0.5 : 1.0;

    // Step operators only change while the gain schedule does.
    CMatrix a_op, t_op, g_op;
    std::size_t cached = static_cast<std::size_t>(-1);
    int quiet = 0;
    const auto nodes = static_cast<std::size_t>(fm.node_count());
    std::vector<CMatrix> sigma(nodes), sigma_sum(nodes);
    for (int n = 0; n < options.steps; ++n) {
        const auto entry = std::min<std::size_t>(static_cast<std::size_t>(n), schedule.steps.size() - 1);
        if (entry != cached) {
            a_op = CMatrix::Zero(jd, jd);
            t_op.resize(jd, d);
            g_op = CMatrix::Zero(jd, r_net.rows());
            for (int f = 0; f < filters; ++f) {
                const auto& e = schedule.steps[entry][static_cast<std::size_t>(f)];
                const auto& h = fm.channels[static_cast<std::size_t>(f)].h;
                const CMatrix t = CMatrix::Identity(d, d) - e.gain * h;
                a_op.block(f * d, f * d, d, d) = t * fm.f;
                t_op.middleRows(f * d, d) = t;
                const auto& idx = noise_idx[static_cast<std::size_t>(f)];
                for (std::size_t p = 0; p < idx.size(); ++p)
                    g_op.block(f * d, idx[p], d, 1) = e.gain.col(static_cast<Eigen::Index>(p));
            }
            cached = entry;
        }
        CMatrix gamma = a_op * joint * a_op.adjoint();
        gamma.noalias() += t_op * fm.q * t_op.adjoint();
        gamma.noalias() += g_op * r_net * g_op.adjoint();
        gamma = (gamma + gamma.adjoint()).eval() / 2.0;

        CMatrix next = w * gamma * w.adjoint();
        next = (next + next.adjoint()).eval() / 2.0;

        std::vector<double> mse(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            const int f = fm.node_filter[i];
            sigma[i] = next.block(f * d, f * d, d, d);
            CMatrix s = CMatrix::Zero(d, d);
            for (int j = 0; j < filters; ++j) {
                const double cj = fm.weights(j, f);
                if (cj == 0) continue;
                for (int k = 0; k < filters; ++k) {
                    const double ck = fm.weights(k, f);
                    if (ck != 0) s += cj * ck * gamma.block(j * d, k * d, d, d);
                }
            }
            sigma_sum[i] = s;
            out.path_discrepancy = std::max(out.path_discrepancy, relative_gap(sigma[i], s));
            mse[i] = out.trace_scale * sigma[i].trace().real();
        }
        out.mse.push_back(std::move(mse));

        const double change = relative_gap(next, joint);
        joint = std::move(next);
        out.gamma = std::move(gamma);
        quiet = change < options.settle_tolerance ? quiet + 1 : 0;
        if (quiet == options.settle_run && out.settled_at < 0) out.settled_at = n + 1 - options.settle_run;
        if (quiet == 0) out.settled_at = -1;
    }
    if (!joint.allFinite()) throw Error(ErrorCode::non_finite, "error covariance diverged");

    out.joint = std::move(joint);
    out.sigma = std::move(sigma);
    out.sigma_double_sum = std::move(sigma_sum);
    out.worst_node_bound.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const auto support = mixing_support(fm, fm.node_filter[i]);
        out.worst_node_bound[i] = worst_node_bound(out.gamma, support, d, out.trace_scale);
    }
    return out;
}

CovariancePropagation propagate_covariance(FilterVariant variant, const StateSpaceModel& model,
                                           const Topology& topology, const DiffusionWeights& weights,
                                           const FilterPrior& prior, PropagationOptions options) {
    const auto fm = build_filter_model<cplx>(variant, model, topology, weights, prior);
    const auto schedule = compute_gain_schedule(fm, options.steps);
    return propagate_covariance(model, fm, schedule, options);
}

// ---------------------------------------------------------------------------

BiasAccumulator::BiasAccumulator(Eigen::Index state_dim)
    : mean_(RVector::Zero(2 * state_dim)), m2_(RVector::Zero(2 * state_dim)) {}

void BiasAccumulator::add(const CVector& error) {
    const auto l = error.size();
    if (mean_.size() == 0 && count_ == 0) {
        mean_ = RVector::Zero(2 * l);
        m2_ = RVector::Zero(2 * l);
    }
    if (2 * l != mean_.size()) throw Error(ErrorCode::dimension_mismatch, "bias sample length");
    RVector x(2 * l);
    x << error.real(), error.imag();
    ++count_;
    const RVector delta = x - mean_;
    mean_ += delta / count_;
    m2_ += delta.cwiseProduct(x - mean_);
}

void BiasAccumulator::merge(const BiasAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    if (other.mean_.size() != mean_.size()) throw Error(ErrorCode::dimension_mismatch, "bias sample length");
    const double na = count_, nb = other.count_, n = na + nb;
    const RVector delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
    count_ += other.count_;
}

BiasEstimate BiasAccumulator::estimate() const {
    if (count_ < minimum_bias_trials)
        throw Error(ErrorCode::insufficient_trials, "bias needs at least " + std::to_string(minimum_bias_trials) +
                                                        " trials, got " + std::to_string(count_));
    BiasEstimate b;
    b.trials = count_;
    b.mean = mean_;
    b.standard_error = (m2_ / (count_ - 1) / count_).cwiseSqrt();
    return b;
}

bool BiasEstimate::within(double k) const {
    for (Eigen::Index c = 0; c < mean.size(); ++c)
        if (std::abs(mean(c)) > k * standard_error(c)) return false;
    return true;
}

BiasEstimate empirical_bias(std::span<const CVector> errors) {
    BiasAccumulator acc(errors.empty() ? 0 : errors.front().size());
    for (const auto& e : errors) acc.add(e);
    return acc.estimate();
}

MseReport make_mse_report(const CovariancePropagation& propagation, std::span<const double> empirical) {
    const auto nodes = propagation.sigma.size();
    if (empirical.size() != nodes) throw Error(ErrorCode::dimension_mismatch, "one empirical MSE per node");
    MseReport r;
    r.theoretical = propagation.mse.back();
    r.empirical.assign(empirical.begin(), empirical.end());
    r.worst_node_bound = propagation.worst_node_bound;
    for (std::size_t i = 0; i < nodes; ++i) {
        r.network_theoretical += r.theoretical[i] / static_cast<double>(nodes);
        r.network_empirical += r.empirical[i] / static_cast<double>(nodes);
    }
    return r;
}

} // namespace wlkf
