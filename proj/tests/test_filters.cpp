#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "support/random_models.hpp"

using namespace wlkf;
using wlkf::testing::ModelShape;
using wlkf::testing::random_model;

namespace {

template <typename S>
struct Run {
    NetworkFilterModel<S> fm;
    std::vector<NetworkState<S>> states;
};

template <typename S>
Run<S> run_variant(FilterVariant v, const StateSpaceModel& m, const Topology& topo, int steps, std::uint64_t seed,
                   const FilterPrior& prior = {}) {
    Run<S> r{build_filter_model<S>(v, m, topo, nearest_neighbour_weights(topo), prior), {}};
    const auto obs = wlkf::testing::observations_of(m, steps, seed);
    auto state = initial_network_state(r.fm);
    for (const auto& y : obs) {
        state = step_network(state, r.fm, y);
        r.states.push_back(state);
    }
    return r;
}

CMatrix scalar(cplx v) { return CMatrix::Constant(1, 1, v); }

double max_node_gap(const std::vector<CVector>& a, const std::vector<CVector>& b) {
    double gap = 0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return gap;
}

} // namespace

TEST_CASE("variant names round-trip") {
    for (auto v : all_variants()) CHECK(parse_variant(to_string(v)) == v);
    CHECK_FALSE(parse_variant("nope").has_value());
    CHECK(traits(FilterVariant::drkf).algebra == Algebra::real);
    CHECK(traits(FilterVariant::dckf).algebra == Algebra::strict);
}

TEST_CASE("predict") {
    NodeFilterState<cplx> s{CVector::Constant(2, cplx(1, 1)), CMatrix::Identity(2, 2)};
    const auto same = predict<cplx>(s, CMatrix::Identity(2, 2), CMatrix::Zero(2, 2), CVector::Zero(2));
    CHECK(same.x == s.x);
    CHECK(same.m == s.m);

    NodeFilterState<double> one{RVector::Zero(1), RMatrix::Constant(1, 1, 1.0)};
    const auto p = predict<double>(one, RMatrix::Constant(1, 1, 0.5), RMatrix::Constant(1, 1, 2.0), RVector::Zero(1));
    CHECK(p.m(0, 0) == doctest::Approx(2.25));
}

TEST_CASE("augmented predict equals the transported real predict") {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 10; ++t) {
        const AugmentedMatrix<> fa(wlkf::testing::random_cmatrix(2, 2, gen), wlkf::testing::random_cmatrix(2, 2, gen));
        const auto q = wlkf::testing::random_stats(2, gen).augmented();
        const auto m0 = wlkf::testing::random_stats(2, gen).augmented();
        const CVector x = augment_vector(wlkf::testing::random_cvector(2, gen));
        const CVector u = augment_vector(wlkf::testing::random_cvector(2, gen));
        const auto pa = predict<cplx>({x, m0.full()}, fa.full(), q.full(), u);
        const auto pr = predict<double>({complex_to_real(x), to_real_covariance<double>(m0)},
                                        to_real_operator<double>(fa), to_real_covariance<double>(q), complex_to_real(u));
        CHECK(complex_to_real(pa.x).isApprox(pr.x, 1e-12));
        CHECK(to_real_covariance<double>(pa.m).isApprox(pr.m, 1e-12));
    }
}

TEST_CASE("local_update") {
    SUBCASE("scalar hand computation") {
        NodeFilterState<double> pred{RVector::Zero(1), RMatrix::Constant(1, 1, 1.0)};
        const auto r = local_update<double>(pred, RMatrix::Constant(1, 1, 1.0), RMatrix::Constant(1, 1, 1.0),
                                            RVector::Constant(1, 2.0));
        CHECK(r.gain(0, 0) == doctest::Approx(0.5));
        CHECK(r.state.x(0) == doctest::Approx(1.0));
        CHECK(r.state.m(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("perfect measurement") {
        NodeFilterState<cplx> pred{CVector::Zero(2), 10.0 * CMatrix::Identity(2, 2)};
        CVector y(2);
        y << cplx(1, 2), cplx(-1, 0);
        const auto r = local_update<cplx>(pred, CMatrix::Identity(2, 2), 1e-9 * CMatrix::Identity(2, 2), y);
        CHECK(r.gain.isApprox(CMatrix::Identity(2, 2), 1e-9));
        CHECK(r.state.x.isApprox(y, 1e-9));
    }
    SUBCASE("Joseph form equals the short form") {
        std::mt19937_64 gen(5);
        for (int t = 0; t < 10; ++t) {
            const CMatrix m = wlkf::testing::random_stats(3, gen).covariance();
            const CMatrix h = wlkf::testing::random_cmatrix(2, 3, gen);
            const CMatrix r = wlkf::testing::random_stats(2, gen).covariance();
            const auto out = local_update<cplx>({CVector::Zero(3), m}, h, r, CVector::Zero(2));
            const CMatrix short_form = (CMatrix::Identity(3, 3) - out.gain * h) * m;
            CHECK(out.state.m.isApprox(short_form, 1e-10));
        }
    }
}

TEST_CASE("info_update") {
    std::mt19937_64 gen(7);
    const CMatrix m = wlkf::testing::random_stats(2, gen).covariance();
    const NodeFilterState<cplx> pred{wlkf::testing::random_cvector(2, gen), m};
    std::vector<InformationTerm<cplx>> terms;
    for (int k = 0; k < 3; ++k)
        terms.push_back({wlkf::testing::random_cmatrix(1, 2, gen), wlkf::testing::random_stats(1, gen).covariance(),
                         wlkf::testing::random_cvector(1, gen)});

    const auto single = info_update<cplx>(pred, std::span(terms).first(1));
    const auto cov = local_update<cplx>(pred, terms[0].h, terms[0].r, terms[0].y);
    CHECK(single.x.isApprox(cov.state.x, 1e-10));
    CHECK(single.m.isApprox(cov.state.m, 1e-10));

    const auto none = info_update<cplx>(pred, std::span<const InformationTerm<cplx>>());
    CHECK(none.x == pred.x);

    auto reversed = terms;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = info_update<cplx>(pred, terms);
    const auto b = info_update<cplx>(pred, reversed);
    CHECK(a.x.isApprox(b.x, 1e-12));
    CHECK(a.m.isApprox(b.m, 1e-12));
}

TEST_CASE("diffuse") {
    CVector a(1), b(1);
    a << cplx(1, 1);
    b << cplx(3, -1);
    const std::vector<CVector> est{a, b};
    const std::vector<double> w{0.4, 0.6};
    CHECK(std::abs(diffuse<cplx>(est, w)(0) - cplx(2.2, -0.2)) < 1e-15);
    const std::vector<double> own{1.0};
    CHECK(diffuse<cplx>(std::span(est).first(1), own) == a);
    const std::vector<CVector> same{a, a, a};
    const std::vector<double> thirds{0.2, 0.3, 0.5};
    CHECK(diffuse<cplx>(same, thirds).isApprox(a, 1e-15));
}

TEST_CASE("single-node network: dckf, centralised and local filters coincide") {
    std::mt19937_64 gen(9);
    const auto m = random_model({2, 1, 1, false, true}, gen);
    const auto topo = Topology::complete(1);
    const auto a = run_variant<cplx>(FilterVariant::dckf, m, topo, 50, 1);
    const auto b = run_variant<cplx>(FilterVariant::central_ckf, m, topo, 50, 1);
    const auto c = run_variant<cplx>(FilterVariant::local, m, topo, 50, 1);
    for (std::size_t n = 0; n < a.states.size(); ++n) {
        CHECK(a.states[n].filters[0].x.isApprox(b.states[n].filters[0].x, 1e-12));
        CHECK(a.states[n].filters[0].x.isApprox(c.states[n].filters[0].x, 1e-12));
    }
}

TEST_CASE("drkf is the real dual of dackf") {
    std::mt19937_64 gen(11);
    const auto m = random_model({2, 1, 4}, gen);
    const auto topo = wlkf::testing::random_topology(4, gen);
    const auto aug = run_variant<cplx>(FilterVariant::dackf, m, topo, 60, 2);
    const auto real = run_variant<double>(FilterVariant::drkf, m, topo, 60, 2);
    for (std::size_t n = 0; n < aug.states.size(); ++n)
        for (int i = 0; i < 4; ++i) {
            const auto& xa = aug.states[n].filters[static_cast<std::size_t>(i)].x;
            const auto& xr = real.states[n].filters[static_cast<std::size_t>(i)].x;
            CHECK((complex_to_real(xa) - xr).norm() <= 1e-10 * std::max(1.0, xr.norm()));
        }
}

TEST_CASE("circular strictly-linear models: dackf upper half equals dckf") {
    std::mt19937_64 gen(13);
    const auto m = random_model({2, 1, 3, false, true}, gen);
    const auto topo = Topology::path(3);
    const auto aug = run_variant<cplx>(FilterVariant::dackf, m, topo, 100, 3);
    const auto strict = run_variant<cplx>(FilterVariant::dckf, m, topo, 100, 3);
    for (std::size_t n = 0; n < aug.states.size(); ++n)
        CHECK(max_node_gap(node_estimates(aug.states[n], aug.fm), node_estimates(strict.states[n], strict.fm)) <= 1e-10);
}

TEST_CASE("information form matches the covariance form without cross-node correlation") {
    std::mt19937_64 gen(15);
    ModelShape shape{2, 1, 4};
    shape.correlated_nodes = false;
    const auto m = random_model(shape, gen);
    const auto topo = wlkf::testing::random_topology(4, gen);
    const auto cov = run_variant<cplx>(FilterVariant::dackf, m, topo, 100, 4);
    const auto info = run_variant<cplx>(FilterVariant::dackf_info, m, topo, 100, 4);
    for (std::size_t n = 0; n < cov.states.size(); ++n)
        CHECK(max_node_gap(node_estimates(cov.states[n], cov.fm), node_estimates(info.states[n], info.fm)) <= 1e-8);
}

TEST_CASE("information form refuses correlated neighbourhood noise") {
    std::mt19937_64 gen(17);
    const auto m = random_model({2, 1, 3}, gen);
    const auto topo = Topology::complete(3);
    try {
        build_filter_model<cplx>(FilterVariant::dackf_info, m, topo, nearest_neighbour_weights(topo));
        FAIL("expected a configuration error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
    }
    // The baseline emulation ignores the correlation instead.
    CHECK_NOTHROW(build_filter_model<cplx>(FilterVariant::diffusion_kf, m, topo, nearest_neighbour_weights(topo)));
}

TEST_CASE("strict information-form baseline equals dckf for uncorrelated circular data") {
    std::mt19937_64 gen(19);
    ModelShape shape{2, 1, 5, false, true};
    shape.correlated_nodes = false;
    const auto m = random_model(shape, gen);
    const auto topo = wlkf::testing::random_topology(5, gen);
    const auto a = run_variant<cplx>(FilterVariant::dckf, m, topo, 80, 5);
    const auto b = run_variant<cplx>(FilterVariant::diffusion_kf, m, topo, 80, 5);
    for (std::size_t n = 0; n < a.states.size(); ++n)
        CHECK(max_node_gap(node_estimates(a.states[n], a.fm), node_estimates(b.states[n], b.fm)) <= 1e-9);
}

TEST_CASE("M stays Hermitian PSD and augmented estimates keep conjugate pairs") {
    std::mt19937_64 gen(21);
    const auto m = random_model({3, 2, 4}, gen);
    const auto topo = wlkf::testing::random_topology(4, gen);
    const auto aug = run_variant<cplx>(FilterVariant::dackf, m, topo, 100, 6);
    const auto real = run_variant<double>(FilterVariant::drkf, m, topo, 100, 6);
    for (std::size_t n = 0; n < aug.states.size(); ++n) {
        for (const auto& f : aug.states[n].filters) {
            CHECK(is_psd(f.m, 1e-9));
            CHECK(is_augmented_matrix(f.m, 1e-9));
            CHECK(conjugate_pair_defect(f.x) <= 1e-10 * std::max(1.0, f.x.norm()));
        }
        for (const auto& f : real.states[n].filters) CHECK(is_psd(f.m, 1e-9));
    }
}

TEST_CASE("relabelling nodes permutes the trajectories") {
    std::mt19937_64 gen(23);
    const auto m = random_model({2, 1, 5}, gen);
    const auto topo = wlkf::testing::random_topology(5, gen);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<int> old_of_new(5);
    for (int i = 0; i < 5; ++i) old_of_new[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

    StateSpaceModel pm = m;
    for (int k = 0; k < 5; ++k) {
        pm.observation[static_cast<std::size_t>(k)] = m.observation[static_cast<std::size_t>(old_of_new[static_cast<std::size_t>(k)])];
        pm.conjugate_observation[static_cast<std::size_t>(k)] =
            m.conjugate_observation[static_cast<std::size_t>(old_of_new[static_cast<std::size_t>(k)])];
    }
    pm.observation_noise = NoiseSpec(m.observation_noise.select(old_of_new), 1);
    const auto ptopo = topo.permuted(perm);

    const auto fm = build_filter_model<cplx>(FilterVariant::dackf, m, topo, nearest_neighbour_weights(topo));
    const auto pfm = build_filter_model<cplx>(FilterVariant::dackf, pm, ptopo, nearest_neighbour_weights(ptopo));
    const auto obs = wlkf::testing::observations_of(m, 40, 7);
    auto s = initial_network_state(fm);
    auto ps = initial_network_state(pfm);
    for (const auto& y : obs) {
        std::vector<CVector> py(5);
        for (int k = 0; k < 5; ++k) py[static_cast<std::size_t>(k)] = y[static_cast<std::size_t>(old_of_new[static_cast<std::size_t>(k)])];
        s = step_network(s, fm, y);
        ps = step_network(ps, pfm, py);
        for (int i = 0; i < 5; ++i)
            CHECK(s.filters[static_cast<std::size_t>(i)].x.isApprox(ps.filters[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].x, 1e-9));
    }
}

TEST_CASE("estimates converge to the true state without process noise") {
    auto m = StateSpaceModel::shared_observation(CMatrix::Identity(2, 2), CMatrix::Identity(1, 2),
                                                 CMatrix::Identity(2, 1), SecondOrderStats<>::scalar(0, 0),
                                                 NoiseSpec::scalar_nodes(std::vector<double>{1e-6, 1e-6, 1e-6},
                                                                         std::vector<cplx>{0, 0, 0}));
    m.transition(0, 1) = 0.1;
    m.initial_state << cplx(3, -2), cplx(0.5, 0.5);
    const auto topo = Topology::path(3);
    const auto fm = build_filter_model<cplx>(FilterVariant::dckf, m, topo, nearest_neighbour_weights(topo));
    const auto t = simulate(m, 200, RngStream(8));
    auto s = initial_network_state(fm);
    for (const auto& y : t.observations) s = step_network(s, fm, y);
    for (const auto& est : node_estimates(s, fm)) CHECK((est - t.states.back()).norm() <= 1e-2);
}

TEST_CASE("precomputed gains reproduce the full recursion") {
    std::mt19937_64 gen(25);
    ModelShape shape{2, 1, 4};
    for (auto v : all_variants()) {
        shape.correlated_nodes = v != FilterVariant::dackf_info;
        const auto m = random_model(shape, gen);
        const auto topo = wlkf::testing::random_topology(4, gen);
        const auto w = nearest_neighbour_weights(topo);
        const CompiledFilter compiled(v, m, topo, w, {}, 300);
        auto runner = compiled.runner();
        const auto obs = wlkf::testing::observations_of(m, 300, 9);
        const auto check = [&](auto tag) {
            using S = decltype(tag);
            const auto fm = build_filter_model<S>(v, m, topo, w);
            auto s = initial_network_state(fm);
            CVector est;
            double gap = 0;
            for (int n = 0; n < 300; ++n) {
                s = step_network(s, fm, obs[static_cast<std::size_t>(n)]);
                runner->step(n, obs[static_cast<std::size_t>(n)]);
                const auto full = node_estimates(s, fm);
                for (int i = 0; i < 4; ++i) {
                    runner->estimate(i, est);
                    gap = std::max(gap, (est - full[static_cast<std::size_t>(i)]).norm() /
                                            std::max(1.0, full[static_cast<std::size_t>(i)].norm()));
                }
            }
            CHECK_MESSAGE(gap <= 1e-9, to_string(v));
        };
        if (traits(v).algebra == Algebra::real) check(double{});
        else check(cplx{});
    }
}

TEST_CASE("gain schedule settles and reuses its last entry") {
    std::mt19937_64 gen(27);
    const auto m = random_model({2, 1, 3}, gen);
    const auto topo = Topology::path(3);
    const auto fm = build_filter_model<cplx>(FilterVariant::dackf, m, topo, nearest_neighbour_weights(topo));
    const auto schedule = compute_gain_schedule(fm, 5000);
    CHECK(schedule.settled_at > 0);
    CHECK(schedule.settled_at < 5000);
    CHECK(&schedule.at(4999, 1) == &schedule.at(schedule.settled_at + 10, 1));
}

TEST_CASE("lift and lower") {
    CVector v(2);
    v << cplx(1, 2), cplx(3, -4);
    CHECK(lower_vector<cplx>(Algebra::augmented, lift_vector<cplx>(Algebra::augmented, v)) == v);
    CHECK(lower_vector<double>(Algebra::real, lift_vector<double>(Algebra::real, v)) == v);
    CHECK(lift_vector<cplx>(Algebra::strict, v) == v);
    CHECK_THROWS_AS(lift_vector<double>(Algebra::strict, v), Error);
}
