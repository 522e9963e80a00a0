#include <doctest.h>

#include <cmath>

#include "support/random_models.hpp"

using namespace wlkf;

TEST_CASE("RngStream addresses are reproducible and distinct") {
    const RngStream a(42, 3, 1);
    auto e1 = a.engine();
    auto e2 = RngStream(42, 3, 1).engine();
    CHECK(e1() == e2());
    CHECK(RngStream(42, 3, 1).engine()() != RngStream(42, 3, 2).engine()());
    CHECK(RngStream(42, 3, 0).engine()() != RngStream(42, 4, 0).engine()());
    CHECK(RngStream(41, 3, 0).engine()() != RngStream(42, 3, 0).engine()());
    CHECK(a.with_stream(9).substream() == 0);
    CHECK(a.with_substream(5).stream() == 3);
}

TEST_CASE("bivariate_params splits variance and pseudovariance") {
    const auto b = bivariate_params(2.0, cplx(1.0, 0.5));
    CHECK(b.var_real == doctest::Approx(1.5));
    CHECK(b.var_imag == doctest::Approx(0.5));
    CHECK(b.cov_ri == doctest::Approx(0.25));
    const auto circ = bivariate_params(2.0, 0.0);
    CHECK(circ.var_real == doctest::Approx(1.0));
    CHECK(circ.var_imag == doctest::Approx(1.0));
    try {
        bivariate_params(1.0, cplx(1.5, 0));
        FAIL("expected InfeasiblePseudovariance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::infeasible_pseudovariance);
    }
}

TEST_CASE("sampler root reproduces the composite covariance") {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 10; ++t) {
        const auto s = wlkf::testing::random_stats(1 + t % 4, gen, t % 2 ? 0.0 : 0.1);
        ComplexGaussianSampler sampler(s);
        const RMatrix c = sampler.root() * sampler.root().transpose();
        CHECK(c.isApprox(real_composite_covariance(s), 1e-10));
    }
    // Rank one (maximally noncircular) is allowed.
    ComplexGaussianSampler edge(SecondOrderStats<>::scalar(2.0, 2.0));
    std::mt19937_64 e(3);
    for (int k = 0; k < 10; ++k) CHECK(std::abs(edge(e)(0).imag()) < 1e-12);
}

TEST_CASE("NoiseSpec::scalar_nodes builds Hermitian cross blocks") {
    const std::vector<double> var{5, 6, 7};
    const std::vector<cplx> pseudo{0, 0, 0};
    const auto spec = NoiseSpec::scalar_nodes(var, pseudo, cplx(1, 1), 0);
    CHECK(spec.node_count() == 3);
    CHECK(spec.covariance_block(0, 2)(0, 0) == cplx(1, 1));
    CHECK(spec.covariance_block(2, 0)(0, 0) == cplx(1, -1));
    CHECK(spec.covariance_block(1, 1)(0, 0) == cplx(6, 0));
    CHECK_FALSE(spec.uncorrelated_within(std::vector<int>{0, 1}));
    CHECK(spec.uncorrelated_within(std::vector<int>{1}));

    const int pick[] = {2, 0};
    const auto sel = spec.select(pick);
    CHECK(sel.covariance()(0, 0) == cplx(7, 0));
    CHECK(sel.covariance()(0, 1) == cplx(1, -1));

    const std::vector<cplx> too_big{0, 7, 0};
    CHECK_THROWS_AS(NoiseSpec::scalar_nodes(var, too_big), Error);
}

TEST_CASE("AR(2) stability check and analytic variance") {
    CHECK_NOTHROW(check_ar2_stable(1.2, -0.8));
    try {
        check_ar2_stable(1.2, 0.5);
        FAIL("expected UnstableAR");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unstable_ar);
    }

    // Stationary variance (1 - a2) s2 / ((1 + a2)((1 - a2)^2 - a1^2)) = 10 for s2 = 2.
    const auto z = ar2_sequence(1.2, -0.8, SecondOrderStats<>::scalar(2.0, 0.0), 200000, RngStream(7));
    double power = 0;
    for (auto v : z) power += std::norm(v);
    power /= static_cast<double>(z.size());
    CHECK(power == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("AR(2) pseudovariance follows the driving noise") {
    // For real coefficients the pseudovariance obeys the same recursion, so its ratio to the
    // variance equals the driving noise's.
    const auto z = ar2_sequence(1.2, -0.8, SecondOrderStats<>::scalar(2.0, 1.6), 200000, RngStream(9));
    cplx pseudo = 0;
    double power = 0;
    for (auto v : z) {
        pseudo += v * v;
        power += std::norm(v);
    }
    CHECK(std::abs(pseudo) / power == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("sample_network_noise has the requested dimension and is reproducible") {
    const std::vector<double> var{1, 2};
    const std::vector<cplx> pseudo{0.5, 0.5};
    const auto spec = NoiseSpec::scalar_nodes(var, pseudo, 0.3, 0.1);
    const CVector a = sample_network_noise(spec, RngStream(5, 1));
    const CVector b = sample_network_noise(spec, RngStream(5, 1));
    CHECK(a.size() == 2);
    CHECK(a == b);
}
