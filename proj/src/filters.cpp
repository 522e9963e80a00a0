#include "wlkf/filters.hpp"

#include <array>
#include <string>

namespace wlkf {

namespace {

constexpr std::array<FilterVariant, 8> variant_list{
    FilterVariant::dckf,        FilterVariant::dackf, FilterVariant::dackf_info, FilterVariant::central_ckf,
    FilterVariant::central_ackf, FilterVariant::drkf, FilterVariant::local,      FilterVariant::diffusion_kf,
};

template <typename Scalar>
constexpr bool scalar_matches(Algebra algebra) {
    if constexpr (ScalarTraits<Scalar>::is_complex) return algebra != Algebra::real;
    else return algebra == Algebra::real;
}

template <typename Scalar>
void require_scalar(Algebra algebra) {
    if (!scalar_matches<Scalar>(algebra))
        throw Error(ErrorCode::dimension_mismatch, "scalar type does not match the filter algebra");
}

/// Writes a lifted copy of the complex segment y into out at the given offsets.
template <typename Scalar>
void write_lifted(Algebra algebra, const CVector& y, Vector<Scalar>& out, Eigen::Index upper, Eigen::Index lower) {
    const auto k = y.size();
    if constexpr (ScalarTraits<Scalar>::is_complex) {
        out.segment(upper, k) = y;
        if (algebra == Algebra::augmented) out.segment(lower, k) = y.conjugate();
    } else {
        out.segment(upper, k) = y.real();
        out.segment(lower, k) = y.imag();
    }
}

template <typename Scalar>
Matrix<Scalar> vstack(const std::vector<InformationTerm<Scalar>>& terms) {
    Eigen::Index rows = 0;
    for (const auto& t : terms) rows += t.h.rows();
    Matrix<Scalar> out(rows, terms.front().h.cols());
    Eigen::Index at = 0;
    for (const auto& t : terms) {
        out.middleRows(at, t.h.rows()) = t.h;
        at += t.h.rows();
    }
    return out;
}

template <typename Scalar>
double relative_change(const Matrix<Scalar>& now, const Matrix<Scalar>& before) {
    const double scale = now.norm();
    if (scale == 0) return before.norm() == 0 ? 0.0 : 1.0;
    return (now - before).norm() / scale;
}

} // namespace

std::string_view to_string(FilterVariant variant) noexcept {
    switch (variant) {
    case FilterVariant::dckf: return "dckf";
    case FilterVariant::dackf: return "dackf";
    case FilterVariant::dackf_info: return "dackf_info";
    case FilterVariant::central_ckf: return "cckf";
    case FilterVariant::central_ackf: return "cackf";
    case FilterVariant::drkf: return "drkf";
    case FilterVariant::local: return "local";
    case FilterVariant::diffusion_kf: return "dkf";
    }
    return "unknown";
}

std::optional<FilterVariant> parse_variant(std::string_view name) noexcept {
    for (auto v : variant_list)
        if (to_string(v) == name) return v;
    return std::nullopt;
}

std::span<const FilterVariant> all_variants() noexcept { return variant_list; }

VariantTraits traits(FilterVariant variant) noexcept {
    switch (variant) {
    case FilterVariant::dckf: return {Algebra::strict, FilterScope::neighbourhood, false, true, false};
    case FilterVariant::dackf: return {Algebra::augmented, FilterScope::neighbourhood, false, true, false};
    case FilterVariant::dackf_info: return {Algebra::augmented, FilterScope::neighbourhood, true, true, true};
    case FilterVariant::central_ckf: return {Algebra::strict, FilterScope::centralised, false, false, false};
    case FilterVariant::central_ackf: return {Algebra::augmented, FilterScope::centralised, false, false, false};
    case FilterVariant::drkf: return {Algebra::real, FilterScope::neighbourhood, false, true, false};
    case FilterVariant::local: return {Algebra::strict, FilterScope::isolated, false, false, false};
    case FilterVariant::diffusion_kf: return {Algebra::strict, FilterScope::neighbourhood, true, true, false};
    }
    return {};
}

DiffusionWeights weights_for(FilterVariant variant, const DiffusionWeights& weights) {
    return traits(variant).diffuse ? weights : DiffusionWeights::identity(weights.node_count());
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> lift_operator(Algebra algebra, const CMatrix& m1, const CMatrix& m2) {
    require_scalar<Scalar>(algebra);
    if constexpr (ScalarTraits<Scalar>::is_complex) {
        if (algebra == Algebra::strict) return m1;
        return AugmentedMatrix<>(m1, m2).full();
    } else {
        return to_real_operator<double>(AugmentedMatrix<>(m1, m2));
    }
}

template <typename Scalar>
Matrix<Scalar> lift_covariance(Algebra algebra, const SecondOrderStats<>& stats) {
    require_scalar<Scalar>(algebra);
    if constexpr (ScalarTraits<Scalar>::is_complex) {
        if (algebra == Algebra::strict) return stats.covariance();
        return stats.augmented().full();
    } else {
        return to_real_covariance<double>(stats.augmented());
    }
}

template <typename Scalar>
Vector<Scalar> lift_vector(Algebra algebra, const CVector& v) {
    require_scalar<Scalar>(algebra);
    Vector<Scalar> out(algebra == Algebra::strict ? v.size() : 2 * v.size());
    write_lifted<Scalar>(algebra, v, out, 0, v.size());
    return out;
}

template <typename Scalar>
CVector lower_vector(Algebra algebra, const Vector<Scalar>& x) {
    require_scalar<Scalar>(algebra);
    if constexpr (ScalarTraits<Scalar>::is_complex) {
        if (algebra == Algebra::strict) return x;
        return x.head(x.size() / 2);
    } else {
        const auto l = x.size() / 2;
        CVector out(l);
        for (Eigen::Index k = 0; k < l; ++k) out(k) = {x(k), x(l + k)};
        return out;
    }
}

template <typename Scalar>
void NetworkFilterModel<Scalar>::stack_observations(int filter, std::span<const CVector> observations,
                                                    Vector<Scalar>& out) const {
    const auto& ch = channels[static_cast<std::size_t>(filter)];
    const auto k = obs_dim;
    const auto m = static_cast<Eigen::Index>(ch.nodes.size());
    const Eigen::Index width = algebra == Algebra::strict ? k : 2 * k;
    out.resize(m * width);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto node = static_cast<std::size_t>(ch.nodes[static_cast<std::size_t>(a)]);
        if (node >= observations.size() || observations[node].size() != k)
            throw Error(ErrorCode::missing_observation, "no observation from node " + std::to_string(node + 1));
        const CVector& y = observations[node];
        if (information_form) {
            // Per-node lifted blocks, matching the per-node information terms.
            write_lifted<Scalar>(algebra, y, out, a * width, a * width + k);
        } else {
            write_lifted<Scalar>(algebra, y, out, a * k, m * k + a * k);
        }
    }
}

template <typename Scalar>
NetworkFilterModel<Scalar> build_filter_model(FilterVariant variant, const StateSpaceModel& model,
                                              const Topology& topology, const DiffusionWeights& weights,
                                              const FilterPrior& prior) {
    const auto t = traits(variant);
    require_scalar<Scalar>(t.algebra);
    model.validate();
    const int n = model.node_count();
    if (topology.node_count() != n || weights.node_count() != n)
        throw Error(ErrorCode::dimension_mismatch, "topology, weights and model disagree on the node count");

    NetworkFilterModel<Scalar> fm;
    fm.variant = variant;
    fm.algebra = t.algebra;
    fm.information_form = t.information_form;
    fm.obs_dim = model.obs_dim();
    fm.state_dim = model.state_dim();
    fm.f = lift_operator<Scalar>(t.algebra, model.transition, model.conjugate_transition);
    fm.q = lift_covariance<Scalar>(t.algebra, model.state_noise());
    fm.u = lift_vector<Scalar>(t.algebra, model.input);

    std::vector<std::vector<int>> groups;
    switch (t.scope) {
    case FilterScope::neighbourhood: groups = topology.neighbourhoods(); break;
    case FilterScope::centralised: {
        std::vector<int> all(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
        groups.push_back(std::move(all));
        break;
    }
    case FilterScope::isolated:
        for (int i = 0; i < n; ++i) groups.push_back({i});
        break;
    }

    for (const auto& nodes : groups) {
        FilterChannel<Scalar> ch;
        ch.nodes = nodes;
        if (t.information_form) {
            if (t.requires_uncorrelated_noise && !model.observation_noise.uncorrelated_within(nodes))
                throw Error(ErrorCode::config, std::string(to_string(variant)) +
                                                   " assumes uncorrelated node noises but the neighbourhood has "
                                                   "cross-covariance or cross-pseudocovariance");
            for (int node : nodes) {
                const int single[] = {node};
                const auto s = stack_model(single, model);
                ch.info.push_back({lift_operator<Scalar>(t.algebra, s.h, s.b),
                                   lift_covariance<Scalar>(t.algebra, s.noise), Vector<Scalar>()});
            }
            ch.h = vstack(ch.info);
        } else {
            const auto s = stack_model(nodes, model);
            ch.h = lift_operator<Scalar>(t.algebra, s.h, s.b);
            ch.r = lift_covariance<Scalar>(t.algebra, s.noise);
        }
        fm.channels.push_back(std::move(ch));
    }

    if (t.scope == FilterScope::centralised) {
        fm.weights = Eigen::MatrixXd::Identity(1, 1);
        fm.node_filter.assign(static_cast<std::size_t>(n), 0);
    } else {
        fm.weights = t.diffuse ? weights.matrix() : Eigen::MatrixXd::Identity(n, n);
        fm.node_filter.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) fm.node_filter[static_cast<std::size_t>(i)] = i;
    }

    const auto l = model.state_dim();
    const CVector mean = prior.mean.size() == 0 ? CVector(CVector::Zero(l)) : prior.mean;
    if (mean.size() != l) throw Error(ErrorCode::dimension_mismatch, "prior mean must have the state length");
    if (!(prior.variance > 0)) throw Error(ErrorCode::config, "prior variance must be positive");
    fm.x0 = lift_vector<Scalar>(t.algebra, mean);
    fm.m0 = lift_covariance<Scalar>(t.algebra, SecondOrderStats<>::circular(prior.variance * CMatrix::Identity(l, l)));
    return fm;
}

template <typename Scalar>
NetworkState<Scalar> initial_network_state(const NetworkFilterModel<Scalar>& fm) {
    NetworkState<Scalar> s;
    s.filters.assign(static_cast<std::size_t>(fm.filter_count()), NodeFilterState<Scalar>{fm.x0, fm.m0});
    return s;
}

template <typename Scalar>
NetworkState<Scalar> step_network(const NetworkState<Scalar>& state, const NetworkFilterModel<Scalar>& fm,
                                  std::span<const CVector> observations, StepDetail<Scalar>* detail) {
    const auto filters = static_cast<std::size_t>(fm.filter_count());
    if (state.filters.size() != filters) throw Error(ErrorCode::dimension_mismatch, "network state size");
    std::vector<NodeFilterState<Scalar>> local(filters);
    std::vector<Matrix<Scalar>> gains(filters);
    for (std::size_t i = 0; i < filters; ++i) {
        const auto pred = predict(state.filters[i], fm.f, fm.q, fm.u);
        const Vector<Scalar> y = fm.stack_observations(static_cast<int>(i), observations);
        const auto& ch = fm.channels[i];
        if (fm.information_form) {
            std::vector<InformationTerm<Scalar>> terms = ch.info;
            Eigen::Index at = 0;
            for (auto& term : terms) {
                term.y = y.segment(at, term.h.rows());
                at += term.h.rows();
            }
            local[i] = info_update<Scalar>(pred, terms);
        } else {
            auto res = local_update(pred, ch.h, ch.r, y);
            local[i] = std::move(res.state);
            gains[i] = std::move(res.gain);
        }
    }
    NetworkState<Scalar> next;
    next.filters.resize(filters);
    for (std::size_t i = 0; i < filters; ++i) {
        std::vector<Vector<Scalar>> members;
        std::vector<double> w;
        for (std::size_t k = 0; k < filters; ++k) {
            const double c = fm.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
            if (c != 0) {
                members.push_back(local[k].x);
                w.push_back(c);
            }
        }
        next.filters[i].x = diffuse<Scalar>(members, w);
        next.filters[i].m = local[i].m;
    }
    if (detail) {
        detail->local = std::move(local);
        detail->gain = std::move(gains);
    }
    return next;
}

template <typename Scalar>
std::vector<CVector> node_estimates(const NetworkState<Scalar>& state, const NetworkFilterModel<Scalar>& fm) {
    std::vector<CVector> out;
    for (int f : fm.node_filter) out.push_back(lower_vector<Scalar>(fm.algebra, state.filters[static_cast<std::size_t>(f)].x));
    return out;
}

template <typename Scalar>
GainSchedule<Scalar> compute_gain_schedule(const NetworkFilterModel<Scalar>& fm, int horizon) {
    if (horizon < 1) throw Error(ErrorCode::config, "gain schedule horizon must be at least 1");
    constexpr double settle_tol = 1e-14;
    constexpr int settle_run = 5;
    const auto filters = static_cast<std::size_t>(fm.filter_count());
    const auto dim = fm.f.rows();
    const Matrix<Scalar> eye = Matrix<Scalar>::Identity(dim, dim);
    const Vector<Scalar> zero_x = Vector<Scalar>::Zero(dim);

    // Inverse noise blocks for the information-form effective gain.
    std::vector<Matrix<Scalar>> r_inv(filters);
    if (fm.information_form) {
        for (std::size_t i = 0; i < filters; ++i) {
            const auto& ch = fm.channels[i];
            Matrix<Scalar> blk = Matrix<Scalar>::Zero(ch.h.rows(), ch.h.rows());
            Eigen::Index at = 0;
            for (const auto& term : ch.info) {
                blk.block(at, at, term.r.rows(), term.r.rows()) = checked_inverse(term.r);
                at += term.r.rows();
            }
            r_inv[i] = std::move(blk);
        }
    }

    GainSchedule<Scalar> out;
    out.horizon = horizon;
    std::vector<Matrix<Scalar>> m(filters, fm.m0);
    int quiet = 0;
    for (int n = 0; n < horizon; ++n) {
        std::vector<GainEntry<Scalar>> row(filters);
        for (std::size_t i = 0; i < filters; ++i) {
            const auto& ch = fm.channels[i];
            auto& e = row[i];
            const auto pred = predict(NodeFilterState<Scalar>{zero_x, m[i]}, fm.f, fm.q, zero_x);
            e.m_pred = pred.m;
            if (fm.information_form) {
                std::vector<InformationTerm<Scalar>> terms = ch.info;
                for (auto& term : terms) term.y = Vector<Scalar>::Zero(term.h.rows());
                e.m_post = info_update<Scalar>(pred, terms).m;
                e.gain = e.m_post * ch.h.adjoint() * r_inv[i];
            } else {
                const Vector<Scalar> y0 = Vector<Scalar>::Zero(ch.h.rows());
                auto res = local_update(pred, ch.h, ch.r, y0);
                e.m_post = std::move(res.state.m);
                e.gain = std::move(res.gain);
            }
            const Matrix<Scalar> t = eye - e.gain * ch.h;
            e.correction = t * fm.f;
            e.offset = t * fm.u;
            m[i] = e.m_post;
        }
        double change = 1;
        if (!out.steps.empty()) {
            change = 0;
            for (std::size_t i = 0; i < filters; ++i) {
                change = std::max(change, relative_change(row[i].gain, out.steps.back()[i].gain));
                change = std::max(change, relative_change(row[i].m_post, out.steps.back()[i].m_post));
            }
        }
        out.steps.push_back(std::move(row));
        quiet = change <= settle_tol ? quiet + 1 : 0;
        if (quiet >= settle_run && n + 1 < horizon) {
            out.settled_at = n + 1;
            break;
        }
    }
    return out;
}

template <typename Scalar>
ScheduledFilter<Scalar>::ScheduledFilter(const NetworkFilterModel<Scalar>& fm, const GainSchedule<Scalar>& schedule)
    : fm_(&fm), schedule_(&schedule) {
    const auto filters = static_cast<std::size_t>(fm.filter_count());
    x_.resize(filters);
    local_.resize(filters);
    y_.resize(filters);
    mix_.resize(filters);
    for (std::size_t i = 0; i < filters; ++i) {
        for (std::size_t k = 0; k < filters; ++k) {
            const double c = fm.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
            if (c != 0) mix_[i].emplace_back(static_cast<int>(k), c);
        }
        local_[i].resize(fm.x0.size());
    }
    reset();
}

template <typename Scalar>
void ScheduledFilter<Scalar>::reset() {
    for (auto& x : x_) x = fm_->x0;
}

template <typename Scalar>
void ScheduledFilter<Scalar>::step(int n, std::span<const CVector> observations) {
    const auto filters = x_.size();
    for (std::size_t i = 0; i < filters; ++i) {
        fm_->stack_observations(static_cast<int>(i), observations, y_[i]);
        const auto& e = schedule_->at(n, static_cast<int>(i));
        local_[i].noalias() = e.correction * x_[i];
        local_[i] += e.offset;
        local_[i].noalias() += e.gain * y_[i];
    }
    for (std::size_t i = 0; i < filters; ++i) {
        x_[i].setZero();
        for (auto [k, c] : mix_[i]) x_[i] += c * local_[static_cast<std::size_t>(k)];
    }
}

template <typename Scalar>
void ScheduledFilter<Scalar>::estimate(int node, CVector& out) const {
    const auto& x = x_[static_cast<std::size_t>(fm_->node_filter[static_cast<std::size_t>(node)])];
    const auto l = fm_->state_dim;
    out.resize(l);
    if constexpr (ScalarTraits<Scalar>::is_complex) {
        out = x.head(l);
    } else {
        for (Eigen::Index k = 0; k < l; ++k) out(k) = {x(k), x(l + k)};
    }
}

// ---------------------------------------------------------------------------

namespace {

template <typename Scalar>
class ScheduledRunner final : public FilterRunner {
public:
    ScheduledRunner(const NetworkFilterModel<Scalar>& fm, const GainSchedule<Scalar>& s) : filter_(fm, s) {}
    void reset() override { filter_.reset(); }
    void step(int n, std::span<const CVector> observations) override { filter_.step(n, observations); }
    void estimate(int node, CVector& out) const override { filter_.estimate(node, out); }

private:
    ScheduledFilter<Scalar> filter_;
};

} // namespace

CompiledFilter::CompiledFilter(FilterVariant variant, const StateSpaceModel& model, const Topology& topology,
                               const DiffusionWeights& weights, const FilterPrior& prior, int horizon)
    : variant_(variant), impl_(Compiled<cplx>{}) {
    if (traits(variant).algebra == Algebra::real) {
        Compiled<double> c;
        c.model = build_filter_model<double>(variant, model, topology, weights, prior);
        c.schedule = compute_gain_schedule(c.model, horizon);
        impl_ = std::move(c);
    } else {
        Compiled<cplx> c;
        c.model = build_filter_model<cplx>(variant, model, topology, weights, prior);
        c.schedule = compute_gain_schedule(c.model, horizon);
        impl_ = std::move(c);
    }
}

std::unique_ptr<FilterRunner> CompiledFilter::runner() const {
    return std::visit(
        [](const auto& c) -> std::unique_ptr<FilterRunner> {
            using S = typename std::decay_t<decltype(c.model.f)>::Scalar;
            return std::make_unique<ScheduledRunner<S>>(c.model, c.schedule);
        },
        impl_);
}

const NetworkFilterModel<cplx>* CompiledFilter::complex_model() const {
    const auto* c = std::get_if<Compiled<cplx>>(&impl_);
    return c ? &c->model : nullptr;
}

const GainSchedule<cplx>* CompiledFilter::complex_schedule() const {
    const auto* c = std::get_if<Compiled<cplx>>(&impl_);
    return c ? &c->schedule : nullptr;
}

#define WLKF_FILTERS_INSTANTIATE(S)                                                                                  \
    template Matrix<S> lift_operator<S>(Algebra, const CMatrix&, const CMatrix&);                                    \
    template Matrix<S> lift_covariance<S>(Algebra, const SecondOrderStats<>&);                                       \
    template Vector<S> lift_vector<S>(Algebra, const CVector&);                                                      \
    template CVector lower_vector<S>(Algebra, const Vector<S>&);                                                     \
    template struct NetworkFilterModel<S>;                                                                           \
    template NetworkFilterModel<S> build_filter_model<S>(FilterVariant, const StateSpaceModel&, const Topology&,     \
                                                         const DiffusionWeights&, const FilterPrior&);               \
    template NetworkState<S> initial_network_state<S>(const NetworkFilterModel<S>&);                                 \
    template NetworkState<S> step_network<S>(const NetworkState<S>&, const NetworkFilterModel<S>&,                   \
                                             std::span<const CVector>, StepDetail<S>*);                              \
    template std::vector<CVector> node_estimates<S>(const NetworkState<S>&, const NetworkFilterModel<S>&);           \
    template GainSchedule<S> compute_gain_schedule<S>(const NetworkFilterModel<S>&, int);                            \
    template class ScheduledFilter<S>;

WLKF_FILTERS_INSTANTIATE(cplx)
WLKF_FILTERS_INSTANTIATE(double)

} // namespace wlkf
