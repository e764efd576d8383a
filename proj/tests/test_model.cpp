#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fvsr/model.hpp"

using namespace fvsr;

TEST(Alphabet, SymbolsAndHull) {
    const Alphabet a(0.5, 3);
    EXPECT_DOUBLE_EQ(a.bound(), 1.5);
    EXPECT_EQ(a.size(), 7);
    const auto s = a.symbols();
    ASSERT_EQ(s.size(), 7u);
    EXPECT_DOUBLE_EQ(s.front(), -1.5);
    EXPECT_DOUBLE_EQ(s[3], 0.0);
    EXPECT_TRUE(Alphabet::ternary().is_ternary());
    EXPECT_FALSE(a.is_ternary());
}

TEST(Alphabet, RejectsBadParameters) {
    EXPECT_THROW(Alphabet(0.0, 1), InvalidArgument);
    EXPECT_THROW(Alphabet(-1.0, 1), InvalidArgument);
    EXPECT_THROW(Alphabet(1.0, 0), InvalidArgument);
}

TEST(Alphabet, QuantizeNearestWithTiesTowardZero) {
    const Alphabet a(1.0, 2);
    EXPECT_EQ(a.quantize(0.5), 0.0);
    EXPECT_EQ(a.quantize(-0.5), 0.0);
    EXPECT_FALSE(std::signbit(a.quantize(-0.4)));
    EXPECT_EQ(a.quantize(1.5), 1.0);
    EXPECT_EQ(a.quantize(1.51), 2.0);
    EXPECT_EQ(a.quantize(-7.0), -2.0);
    EXPECT_EQ(a.quantize(0.7), 1.0);
}

TEST(GenGaussianMatrix, DeterministicGivenSeed) {
    EXPECT_EQ(gen_gaussian_matrix(3, 5, 7), gen_gaussian_matrix(3, 5, 7));
    EXPECT_NE(gen_gaussian_matrix(3, 5, 7), gen_gaussian_matrix(3, 5, 8));
}

TEST(GenGaussianMatrix, SmallestCase) {
    const Matrix A = gen_gaussian_matrix(1, 1, 0);
    ASSERT_EQ(A.rows(), 1);
    EXPECT_TRUE(std::isfinite(A(0, 0)));
}

TEST(GenGaussianMatrix, VarianceIsOneOverM) {
    const Matrix A = gen_gaussian_matrix(40, 100, 11);
    const double mean = A.mean();
    const double var = (A.array() - mean).square().sum() / (A.size() - 1);
    EXPECT_NEAR(var, 1.0 / 40, 0.2 / 40);
    EXPECT_NEAR(mean, 0.0, 0.01);
}

TEST(GenGaussianMatrix, RejectsEmpty) { EXPECT_THROW(gen_gaussian_matrix(0, 3, 1), InvalidArgument); }

TEST(GenSignal, ZeroSparsity) {
    const auto x = gen_signal(100, 0, Alphabet::ternary(), 5);
    EXPECT_EQ(x.values(), Vector::Zero(100));
    EXPECT_EQ(x.sparsity(), 0);
}

TEST(GenSignal, TernaryEntries) {
    const auto x = gen_signal(100, 10, Alphabet::ternary(), 5);
    EXPECT_EQ(x.sparsity(), 10);
    int zeros = 0;
    for (Eigen::Index i = 0; i < 100; ++i) {
        const double v = x.values()[i];
        if (v == 0) ++zeros;
        else EXPECT_EQ(std::abs(v), 1.0);
    }
    EXPECT_EQ(zeros, 90);
}

TEST(GenSignal, RejectsSparsityAboveLength) {
    EXPECT_THROW(gen_signal(5, 6, Alphabet::ternary(), 1), InvalidArgument);
    EXPECT_THROW(gen_signal(5, -1, Alphabet::ternary(), 1), InvalidArgument);
}

TEST(GenSignal, SymbolFrequenciesUniform) {
    const Alphabet a(1.0, 5);
    std::map<int, int> counts;
    int total = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto x = gen_signal(100, 10, a, seed);
        for (int i : x.support()) {
            ++counts[static_cast<int>(x.values()[i])];
            ++total;
        }
    }
    ASSERT_EQ(counts.size(), 10u);
    EXPECT_EQ(counts.count(0), 0u);
    double chi2 = 0;
    const double expected = total / 10.0;
    for (auto [sym, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 27.88);  // 9 dof, p = 0.001
}

TEST(GenSignal, SupportPositionsUniform) {
    std::vector<int> hits(20, 0);
    const int reps = 4000;
    for (int seed = 0; seed < reps; ++seed) {
        const auto x = gen_signal(20, 3, Alphabet::ternary(), seed);
        for (int i : x.support()) ++hits[i];
    }
    double chi2 = 0;
    const double expected = reps * 3 / 20.0;
    for (int h : hits) chi2 += (h - expected) * (h - expected) / expected;
    EXPECT_LT(chi2, 43.82);  // 19 dof, p = 0.001
}

TEST(GenSignal, QuantizationIsIdentity) {
    const Alphabet a(0.5, 4);
    for (int s = 0; s < 20; ++s) {
        const auto x = gen_signal(30, 6, a, s);
        EXPECT_EQ(a.quantize(x.values()), x.values());
    }
}

TEST(SparseSignal, RejectsNonSymbols) {
    Vector v = Vector::Zero(4);
    v[1] = 0.7;
    EXPECT_THROW(SparseSignal(v, Alphabet::ternary()), InvalidArgument);
    v[1] = 2.0;
    EXPECT_THROW(SparseSignal(v, Alphabet::ternary()), InvalidArgument);
}

TEST(Problem, FromTruthIsExactWithoutNoise) {
    const Matrix A = gen_gaussian_matrix(8, 12, 3);
    const auto x = gen_signal(12, 3, Alphabet::ternary(), 4);
    const auto p = Problem::from_truth(A, x);
    EXPECT_EQ((A * x.values() - p.y).norm(), 0.0);
}

TEST(Problem, FromTruthWithNoiseRecords) {
    const Matrix A = gen_gaussian_matrix(8, 12, 3);
    const auto x = gen_signal(12, 3, Alphabet::ternary(), 4);
    const Vector delta = Vector::Constant(12, 0.01);
    const Vector eps = Vector::Constant(8, -0.02);
    const auto p = Problem::from_truth(A, x, delta, eps);
    EXPECT_LT((A * (x.values() + delta) + eps - p.y).norm(), 1e-15);
}

TEST(Problem, DimensionChecks) {
    EXPECT_THROW(Problem(Matrix::Zero(3, 4), Vector::Zero(2)), InvalidArgument);
    EXPECT_THROW(Problem::from_truth(Matrix::Zero(3, 4), gen_signal(5, 1, Alphabet::ternary(), 1)), InvalidArgument);
}

TEST(MeasurementNoise, SentinelMeansNoNoise) {
    const Vector y = Vector::LinSpaced(5, 1, 5);
    const auto r = add_measurement_noise(y, kNoNoise, 1);
    EXPECT_EQ(r.y, y);
    EXPECT_EQ(r.noise, Vector::Zero(5));
}

TEST(MeasurementNoise, ZeroNormRejected) {
    EXPECT_THROW(add_measurement_noise(Vector::Zero(3), 10.0, 1), InvalidArgument);
}

TEST(MeasurementNoise, EmpiricalSnrMatches) {
    const Vector y = gen_gaussian_matrix(40, 1, 9).col(0);
    double snr_sum = 0;
    for (int s = 0; s < 1000; ++s) {
        const auto r = add_measurement_noise(y, 25.0, s);
        snr_sum += 10 * std::log10(y.squaredNorm() / r.noise.squaredNorm());
        ASSERT_LT((r.y - y - r.noise).norm(), 1e-15);
    }
    EXPECT_NEAR(snr_sum / 1000, 25.0, 0.5);
}

TEST(MeasurementNoise, ZeroDbNoiseNormMatchesSignal) {
    const Vector y = gen_gaussian_matrix(40, 1, 9).col(0);
    double norm_sum = 0;
    for (int s = 0; s < 1000; ++s) norm_sum += add_measurement_noise(y, 0.0, s).noise.norm();
    EXPECT_NEAR(norm_sum / 1000 / y.norm(), 1.0, 0.05);
}
