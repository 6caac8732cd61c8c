#include <gtest/gtest.h>

#include "covmany/matcore.hpp"
#include "covmany/simgen.hpp"
#include "test_util.hpp"

using namespace covmany;
using namespace covmany::testing;

TEST(SymMat, RejectsNonSquareAsymmetricAndNonFinite) {
  EXPECT_THROW(SymMat(Matrix::Zero(2, 3)), InputError);
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_THROW(SymMat{a}, InputError);
  a << 1, NAN, NAN, 1;
  EXPECT_THROW(SymMat{a}, InputError);
}

TEST(SymMat, SymmetrizesRoundingNoise) {
  Matrix a(2, 2);
  a << 1, 2, 2 + 1e-14, 4;
  const SymMat s(a);
  EXPECT_EQ(s.matrix()(0, 1), s.matrix()(1, 0));
}

TEST(PsdMat, CertifyRejectsIndefinite) {
  EXPECT_THROW(PsdMat::certify(diag_sym({1.0, -0.5})), InputError);
  EXPECT_NO_THROW(PsdMat::certify(diag_sym({1.0, 0.0})));
  // eigensolver noise on a genuinely singular PSD matrix is absorbed
  Rng rng(5);
  const Matrix v = rand_matrix(6, 3, rng);
  EXPECT_NO_THROW(PsdMat::certify(SymMat::from_symmetric(v * v.transpose())));
}

TEST(DProp, Examples) {
  EXPECT_DOUBLE_EQ(d_prop(SymMat::identity(5), SymMat::identity(5)), 0.0);
  EXPECT_NEAR(d_prop(SymMat::identity(3), SymMat::identity(3).scaled(3.0)), 0.0, 1e-14);
  EXPECT_NEAR(d_prop(diag_sym({1, 2}), diag_sym({2, 1})), 4.5, 1e-14);
}

TEST(DZero, Examples) {
  Rng rng(1);
  const SymMat a = rand_sym(4, rng);
  EXPECT_DOUBLE_EQ(d_zero(a, a), 0.0);
  EXPECT_NEAR(d_zero(diag_sym({1, 2}), diag_sym({2, 1})), 2.0, 1e-14);
  EXPECT_NEAR(d_zero(SymMat::identity(3).scaled(2.0), SymMat::identity(3)), 3.0, 1e-14);
}

TEST(SigmaInner, Examples) {
  EXPECT_NEAR(sigma_inner(SymMat::identity(7), SymMat::identity(7), PsdMat::identity(7), 3.0), 2.0, 1e-14);
  EXPECT_NEAR(sigma_inner(SymMat::identity(2), SymMat::identity(2), PsdMat::identity(2), 4.5), 3.5, 1e-14);
  EXPECT_NEAR(sigma_inner(SymMat::identity(2), SymMat::identity(2), diag_psd({1, 2}), 3.0), 5.0, 1e-14);
}

TEST(SigmaInner, MatchesBruteForceDefinition) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Index p = 2 + static_cast<Index>(seed % 6);
    const SymMat a = rand_sym(p, rng), b = rand_sym(p, rng);
    const PsdMat s = rand_psd(p, rng);
    const double nu4 = 1.0 + 4.0 * rng.uniform();
    // square root from an independent eigendecomposition
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
    const Matrix r = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const Matrix ra = r * a.matrix() * r, rb = r * b.matrix() * r;
    double diag = 0.0;
    for (Index k = 0; k < p; ++k) diag += ra(k, k) * rb(k, k);
    const double want = (2.0 * (a.matrix() * s.matrix() * b.matrix() * s.matrix()).trace() + (nu4 - 3.0) * diag) /
                        static_cast<double>(p);
    EXPECT_LE(rel_err(sigma_inner(a, b, s, nu4), want), 1e-10) << "seed " << seed;
  }
}

TEST(PsdSqrt, Examples) {
  EXPECT_LE((psd_sqrt(PsdMat::identity(4)).matrix() - Matrix::Identity(4, 4)).norm(), 1e-14);
  const Matrix r = psd_sqrt(diag_psd({4, 9})).matrix();
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(PsdSqrt, RoundTripOnRandomPsd) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const PsdMat m = rand_psd(3 + static_cast<Index>(seed % 10), rng);
    const Matrix r = psd_sqrt(m).matrix();
    EXPECT_LE((r * r - m.matrix()).norm() / m.matrix().norm(), 1e-9) << "seed " << seed;
  }
}

TEST(DiagPart, Examples) {
  EXPECT_EQ(diag_part(SymMat::identity(3)).matrix(), Matrix::Identity(3, 3));
  Matrix m(2, 2);
  m << 1, 5, 5, 2;
  EXPECT_EQ(diag_part(SymMat(m)).matrix(), diag_sym({1, 2}).matrix());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const SymMat a = rand_sym(5, rng);
    EXPECT_NEAR(diag_part(a).trace(), a.trace(), 1e-12);
  }
}

TEST(NormalizePropBasis, TraceAndDistanceTargets) {
  Rng rng(3);
  const auto [s0, l0] = normalize_prop_basis(PsdMat::identity(4).scaled(2.0), rand_psd(4, rng));
  EXPECT_LE((s0.matrix() - Matrix::Identity(4, 4)).norm(), 1e-14);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(200 + seed);
    const Index p = 10 + static_cast<Index>(seed);
    const auto [sigma, lambda] = case_b_pair(p, r, kPropSpectrum);
    const auto [a, b] = normalize_prop_basis(sigma, lambda);
    EXPECT_NEAR(a.trace() / static_cast<double>(p), 1.0, 1e-12);
    EXPECT_NEAR(d_prop(a.sym(), b.sym()) / static_cast<double>(p), 1.0, 1e-9);
  }
}

TEST(NormalizePropBasis, RejectsProportionalPair) {
  EXPECT_THROW(normalize_prop_basis(PsdMat::identity(3), PsdMat::identity(3).scaled(2.0)), InputError);
}

TEST(NormalizeFrob, Examples) {
  EXPECT_LE((normalize_frob(SymMat::identity(4).scaled(2.0)).matrix() - Matrix::Identity(4, 4)).norm(), 1e-14);
  const SymMat m = normalize_frob(diag_sym({3, 4}));
  EXPECT_NEAR(m.matrix()(0, 0), 3.0 / std::sqrt(12.5), 1e-14);
  EXPECT_NEAR(m.matrix()(1, 1), 4.0 / std::sqrt(12.5), 1e-14);
  Rng rng(9);
  const SymMat a = normalize_frob(rand_sym(6, rng));
  EXPECT_LE((normalize_frob(a).matrix() - a.matrix()).norm(), 1e-14);
}

// Properties over hand-rolled random inputs.

TEST(MatcoreProperties, DPropSymmetryAndScaling) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(1000 + seed);
    const Index p = 2 + static_cast<Index>(rng() % 11);  // d_prop vanishes identically at p = 1
    const SymMat a = rand_sym(p, rng), b = rand_sym(p, rng);
    const double x = 0.1 + 5.0 * rng.uniform(), y = 0.1 + 5.0 * rng.uniform();
    const double d = d_prop(a, b);
    EXPECT_LE(rel_err(d, d_prop(b, a)), 1e-12);
    EXPECT_LE(rel_err(d_prop(a.scaled(x), b.scaled(y)), x * x * y * y * d), 1e-10);
    const double norm4 = std::pow(a.matrix().squaredNorm(), 2);
    EXPECT_LE(d_prop(a, a.scaled(x)) / std::max(norm4 * x * x, 1e-300), 1e-10);
  }
}

TEST(MatcoreProperties, SigmaInnerBilinearSymmetricNonnegative) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(2000 + seed);
    const Index p = 1 + static_cast<Index>(rng() % 10);
    const SymMat a = rand_sym(p, rng), b = rand_sym(p, rng), c = rand_sym(p, rng);
    const PsdMat s = rand_psd(p, rng);
    const double nu4 = 1.0 + 5.0 * rng.uniform();
    const double t = rng.uniform() * 3.0 - 1.5;
    const double ab = sigma_inner(a, b, s, nu4);
    EXPECT_LE(std::abs(ab - sigma_inner(b, a, s, nu4)), 1e-10 * (1.0 + std::abs(ab)));
    const double lin = sigma_inner(a + c.scaled(t), b, s, nu4);
    const double want = ab + t * sigma_inner(c, b, s, nu4);
    EXPECT_LE(std::abs(lin - want), 1e-9 * (1.0 + std::abs(want)));
    EXPECT_GE(sigma_inner(a, a, s, nu4), -1e-10);
  }
}

TEST(MatcoreProperties, DZeroNonnegativeAndZeroOnlyOnEquality) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(3000 + seed);
    const Index p = 2 + static_cast<Index>(rng() % 10);
    const SymMat a = normalize_frob(rand_sym(p, rng)), b = normalize_frob(rand_sym(p, rng));
    EXPECT_GE(d_zero(a, b), 0.0);
    EXPECT_GT(d_zero(a, b), 1e-12);
    EXPECT_LE(d_zero(a, a), 1e-12);
  }
}

TEST(Matcore, DimensionMismatchThrows) {
  EXPECT_THROW(d_prop(SymMat::identity(2), SymMat::identity(3)), InputError);
  EXPECT_THROW(d_zero(SymMat::identity(2), SymMat::identity(3)), InputError);
  EXPECT_THROW(sigma_inner(SymMat::identity(2), SymMat::identity(2), PsdMat::identity(3), 3.0), InputError);
}
