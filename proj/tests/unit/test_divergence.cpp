#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sonifw/divergence.hpp"
#include "sonifw/errors.hpp"

using namespace sonifw;

TEST(JensenShannon, MatchesEntropyIdentityOnRandomPairs) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(2, 400);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = len(rng);
        const auto p = oracle::random_distribution(n, rng, 1e-6);
        const auto q = oracle::random_distribution(n, rng, 1e-6);
        const double v = jensen_shannon(p, q);
        EXPECT_NEAR(v, oracle::jsd(p, q), 1e-9);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_EQ(v, jensen_shannon(q, p));
    }
}

TEST(JensenShannon, IdenticalIsZero) {
    std::mt19937_64 rng(1);
    const auto p = oracle::random_distribution(186, rng, 1e-6);
    EXPECT_EQ(jensen_shannon(p, p), 0.0);
}

TEST(JensenShannon, DisjointIsOne) {
    std::vector<double> p(10, 0.0), q(10, 0.0);
    p[0] = 1.0;
    q[1] = 1.0;
    EXPECT_NEAR(jensen_shannon(p, q), 1.0, 1e-15);
}

TEST(JensenShannon, SkewedPairsStayBounded) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(186, 1e-300), q(186, 1e-300);
        p[i % 186] = 1.0;
        q[(i * 7 + 1) % 186] = 1.0;
        const double v = jensen_shannon(p, q);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(KlDivergence, MatchesDefinition) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto p = oracle::random_distribution(50, rng, 1e-3);
        const auto q = oracle::random_distribution(50, rng, 1e-3);
        EXPECT_NEAR(kl_divergence(p, q), oracle::kl_bits(p, q), 1e-10);
    }
}

TEST(TotalVariation, HalfL1) {
    const std::vector<double> p{0.5, 0.5, 0.0}, q{0.0, 0.5, 0.5};
    EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
}

TEST(Divergence, SizeMismatchIsContractViolation) {
    const std::vector<double> p{0.5, 0.5}, q{1.0};
    EXPECT_THROW(jensen_shannon(p, q), ContractViolation);
    EXPECT_THROW(kl_divergence(p, q), ContractViolation);
}
