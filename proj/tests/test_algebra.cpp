#include <doctest.h>

#include "support/random_models.hpp"

using namespace wlkf;
using wlkf::testing::random_cmatrix;
using wlkf::testing::random_cvector;
using wlkf::testing::random_stats;

namespace {
const cplx j{0, 1};
}

TEST_CASE("augment_vector stacks the conjugate") {
    CVector x(1);
    x << cplx(1, 2);
    const CVector a = augment_vector(x);
    REQUIRE(a.size() == 2);
    CHECK(a(0) == cplx(1, 2));
    CHECK(a(1) == cplx(1, -2));

    CHECK(augment_vector(CVector::Zero(2)).isZero());

    CVector r(2);
    r << 3, -1;
    CVector expected(4);
    expected << 3, -1, 3, -1;
    CHECK(augment_vector(r) == expected);
}

TEST_CASE("build_augmented_cov assembles and checks PSD") {
    const auto circ = build_augmented_cov(SecondOrderStats<>::circular(CMatrix::Constant(1, 1, 1.0)));
    CHECK(circ.full().isApprox(CMatrix::Identity(2, 2)));

    CMatrix r(1, 1), p(1, 1);
    r << 2;
    p << 2;
    const CMatrix full = build_augmented_cov(SecondOrderStats<>(r, p)).full();
    CHECK(full.isApprox(CMatrix::Constant(2, 2, 2.0)));

    p << 3;
    try {
        SecondOrderStats<> bad(r, p);
        FAIL("expected NotPSD");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::not_psd);
    }
}

TEST_CASE("SecondOrderStats rejects asymmetric pseudocovariance and non-Hermitian covariance") {
    CMatrix r = CMatrix::Identity(2, 2);
    CMatrix p = CMatrix::Zero(2, 2);
    p(0, 1) = 0.3;
    CHECK_THROWS_AS(SecondOrderStats<>(r, p), Error);
    p.setZero();
    r(0, 1) = cplx(0.1, 0.1);
    r(1, 0) = cplx(0.1, 0.1);
    CHECK_THROWS_AS(SecondOrderStats<>(r, p), Error);
}

TEST_CASE("circularity_degree is |P|/R") {
    CHECK(circularity_degree(2.0, cplx(0)) == doctest::Approx(0.0));
    CHECK(circularity_degree(2.0, cplx(2)) == doctest::Approx(1.0));
    CHECK(circularity_degree(2.0, std::polar(1.7, 0.4)) == doctest::Approx(0.85));
    try {
        circularity_degree(0.0, cplx(0));
        FAIL("expected ZeroVariance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_variance);
    }
}

TEST_CASE("complex_to_real and real_to_complex") {
    CVector za(2);
    za << cplx(1, 2), cplx(1, -2);
    const RVector zr = complex_to_real(za);
    CHECK(zr(0) == doctest::Approx(1));
    CHECK(zr(1) == doctest::Approx(2));

    CVector broken(2);
    broken << cplx(1, 2), cplx(1, 2);
    try {
        complex_to_real(broken);
        FAIL("expected NotAugmented");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::not_augmented);
    }

    std::mt19937_64 gen(3);
    for (Eigen::Index q : {1, 2, 5, 17, 64}) {
        const CVector v = augment_vector(random_cvector(q, gen));
        const CVector back = real_to_complex(complex_to_real(v));
        CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("duality map inverse is half its adjoint") {
    for (Eigen::Index q : {1, 2, 4, 8}) {
        const DualityMap<> jm(q);
        const CMatrix m = jm.matrix();
        CHECK((m * jm.inverse() - CMatrix::Identity(2 * q, 2 * q)).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK((jm.inverse() * m - CMatrix::Identity(2 * q, 2 * q)).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("operator and covariance transport") {
    CHECK(to_real_operator<double>(CMatrix(CMatrix::Identity(4, 4))).isApprox(RMatrix::Identity(4, 4)));

    std::mt19937_64 gen(5);
    const AugmentedMatrix<> fa(random_cmatrix(3, 3, gen), random_cmatrix(3, 3, gen));
    const RMatrix fr = to_real_operator<double>(fa);
    // Applying F^a to an augmented vector matches applying F^r to its composite.
    const CVector x = random_cvector(3, gen);
    const RVector lhs = complex_to_real(CVector(fa.full() * augment_vector(x)));
    const RVector rhs = fr * complex_to_real(augment_vector(x));
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    CHECK(to_augmented_operator<double>(fr).isApprox(fa.full(), 1e-12));

    const auto s = random_stats(3, gen);
    const RMatrix cr = to_real_covariance<double>(s.augmented());
    CHECK(cr.isApprox(cr.transpose(), 1e-14));
    CHECK(to_augmented_covariance<double>(cr).isApprox(s.augmented().full(), 1e-12));
    CHECK(cr.isApprox(real_composite_covariance(s), 1e-12));
}

TEST_CASE("wl_mmse_coefficients") {
    std::mt19937_64 gen(11);
    SUBCASE("proper case reduces to strictly linear") {
        const auto sx = SecondOrderStats<>::circular(random_stats(2, gen).covariance());
        const CMatrix r_yx = random_cmatrix(2, 2, gen);
        const auto w = wl_mmse_coefficients<double>(sx.covariance(), sx.pseudocovariance(), r_yx, CMatrix::Zero(2, 2));
        CHECK(w.b.isApprox(r_yx * sx.covariance().inverse(), 1e-12));
        CHECK(w.c.norm() <= 1e-12);
    }
    SUBCASE("maximally noncircular scalar is singular") {
        CMatrix r(1, 1), p(1, 1);
        r << 2;
        p << 2;
        try {
            wl_mmse_coefficients<double>(r, p, r, p);
            FAIL("expected Singular");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::singular);
        }
    }
    SUBCASE("matches the augmented normal equations") {
        for (int trial = 0; trial < 20; ++trial) {
            // Joint statistics of (x, y) with x and y both 2-dimensional.
            const auto joint = random_stats(4, gen);
            const CMatrix ra = joint.covariance(), pa = joint.pseudocovariance();
            const CMatrix r_x = ra.topLeftCorner(2, 2), p_x = pa.topLeftCorner(2, 2);
            const CMatrix r_yx = ra.bottomLeftCorner(2, 2), p_yx = pa.bottomLeftCorner(2, 2);
            const auto w = wl_mmse_coefficients<double>(r_x, p_x, r_yx, p_yx);
            CMatrix cross(2, 4);
            cross << r_yx, p_yx;
            const CMatrix oracle = cross * SecondOrderStats<>(r_x, p_x).augmented().full().inverse();
            CHECK(w.b.isApprox(oracle.leftCols(2), 1e-9));
            CHECK(w.c.isApprox(oracle.rightCols(2), 1e-9));
        }
    }
}

TEST_CASE("augmented matrices from valid statistics are Hermitian PSD") {
    std::mt19937_64 gen(17);
    for (int t = 0; t < 50; ++t) {
        const auto s = random_stats(1 + t % 6, gen, 0.0);
        const CMatrix full = s.augmented().full();
        CHECK(is_hermitian(full));
        CHECK(min_eigenvalue(full) >= -1e-10 * max_norm(full));
    }
}

TEST_CASE("augmented block pattern is closed under products and inverses") {
    std::mt19937_64 gen(19);
    for (int t = 0; t < 20; ++t) {
        const AugmentedMatrix<> a(random_cmatrix(3, 3, gen), random_cmatrix(3, 3, gen));
        const AugmentedMatrix<> b(random_cmatrix(3, 3, gen), random_cmatrix(3, 3, gen));
        const CMatrix prod = a.full() * b.full();
        CHECK(is_augmented_matrix(prod));
        CHECK((a * b).full().isApprox(prod, 1e-12));
        const CMatrix inv = checked_inverse(a.full());
        CHECK(is_augmented_matrix(inv, 1e-10));
        CHECK(a.adjoint().full().isApprox(a.full().adjoint(), 1e-14));
        const CVector x = random_cvector(3, gen);
        CHECK(augment_vector(a.apply(x)).isApprox(a.full() * augment_vector(x), 1e-12));
    }
}

TEST_CASE("checked_inverse refuses ill-conditioned input") {
    CMatrix m(2, 2);
    m << 1, 1, 1, 1 + 1e-14;
    try {
        checked_inverse(m);
        FAIL("expected Singular");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::singular);
    }
    CMatrix ok(2, 2);
    ok << 2, j, -j, 2;
    CHECK((checked_inverse(ok) * ok).isApprox(CMatrix::Identity(2, 2)));
}
