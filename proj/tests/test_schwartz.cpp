#include <hodgelab/schwartz.hpp>

#include <gtest/gtest.h>

using namespace hodgelab;

namespace {

// Gaussian moments of g^2 with g = pi^{-1/4} e^{-x^2/2}
constexpr double m2 = 0.5;  // <x^2>
constexpr double m4 = 0.75; // <x^4>

CochainComplex fine_line(int n = 1024) { return CochainComplex(ManifoldSpec({FactorSpec::line(1.0, 8.0, n)})); }

double ground(double x) { return std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x); }

/// Sample f at barycenters, scaled by cell volume.
DiscreteForm sample(const CochainComplex& k, int p, const std::function<double(double)>& f)
{
    Eigen::VectorXd v(k.cell_count(p));
    for (Index i = 0; i < v.size(); ++i) v[i] = f(k.barycenter(p, i)[0]) * k.primal_volume(p)[i];
    return DiscreteForm(p, v);
}

} // namespace

TEST(Seminorm, GroundStateMoments)
{
    CochainComplex k = fine_line();
    DiscreteForm g = sample(k, 0, ground);
    EXPECT_NEAR(seminorm(k, g, 0, {0}), 1.0, 1e-6);
    EXPECT_NEAR(seminorm(k, g, 1, {0}), std::sqrt(m2), 1e-6);
    EXPECT_NEAR(seminorm(k, g, 0, {1}), std::sqrt(m2), 1e-4);
    // g'' = (x^2 - 1) g
    EXPECT_NEAR(seminorm(k, g, 0, {2}), std::sqrt(m4 - 2 * m2 + 1), 1e-4);
    EXPECT_NEAR(seminorm(k, g, 2, {0}), std::sqrt(m4), 1e-6);
}

TEST(Seminorm, SecondOrderConvergence)
{
    std::vector<double> err;
    for (int n : {128, 256, 512}) {
        CochainComplex k = fine_line(n);
        err.push_back(std::abs(seminorm(k, sample(k, 0, ground), 0, {1}) - std::sqrt(m2)));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double order = std::log2(err[i - 1] / err[i]);
        EXPECT_GT(order, 1.7);
        EXPECT_LT(order, 2.3);
    }
}

TEST(Seminorm, RejectsBadIndices)
{
    CochainComplex k = fine_line(64);
    DiscreteForm g = sample(k, 0, ground);
    EXPECT_THROW(seminorm(k, g, 0, {3}), InvalidSpecError);
    EXPECT_THROW(seminorm(k, g, -1, {0}), InvalidSpecError);
    EXPECT_THROW(seminorm(k, g, 0, {0, 1}), InvalidSpecError);
    EXPECT_THROW(seminorm(k, g, 0, {-1}), InvalidSpecError);
    CochainComplex k2(ManifoldSpec({FactorSpec::line(1.0, 4.0, 8), FactorSpec::line(1.0, 4.0, 8)}));
    DiscreteForm z(0, Eigen::VectorXd::Ones(k2.cell_count(0)));
    EXPECT_THROW(seminorm(k2, z, 0, {2, 1}), InvalidSpecError);
    EXPECT_NO_THROW(seminorm(k2, z, 0, {1, 1}));
}

TEST(Seminorm, MultiIndexEnumeration)
{
    auto a = multi_indices(2, 2);
    std::vector<MultiIndex> want{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    EXPECT_EQ(a, want);
    EXPECT_EQ(multi_indices(3, 1).size(), 4u);
    SeminormReport rep = seminorm_table(fine_line(64), sample(fine_line(64), 0, ground), 3, 2);
    EXPECT_EQ(rep.entries.size(), 4u * 3u);
    EXPECT_EQ(rep.resolution, 64);
}

TEST(Garding, GroundStateAndKernelForm)
{
    CochainComplex k = fine_line();
    // 0-form ground state: (1/2 + 1/2) / (2 + 1)
    DiscreteForm g = sample(k, 0, ground);
    EXPECT_NEAR(garding_ratio(k, g, laplacian_h_direct(k, 0)), 1.0 / 3.0, 1e-4);
    EXPECT_NEAR(garding_ratio(k, g, conjugate_to_h(k, 0)), 1.0 / 3.0, 1e-4);
    // the kernel 1-form g dx has zero energy: ratio 1
    DiscreteForm w = sample(k, 1, ground);
    EXPECT_NEAR(garding_ratio(k, w, laplacian_h_direct(k, 1)), 1.0, 1e-4);
    EXPECT_THROW(garding_ratio(k, DiscreteForm(0, Eigen::VectorXd::Zero(k.cell_count(0))), laplacian_h_direct(k, 0)),
                 InvalidSpecError);
}

TEST(Ladder, GroundStateLevels)
{
    CochainComplex k = fine_line();
    DiscreteForm g = sample(k, 0, ground);
    auto lap = laplacian_h_direct(k, 0);
    // l = 1: |g|^2 + |g'|^2 + |xg|^2 over <Hg,g> + |g|^2
    LadderResult l1 = seminorm_ladder_check(k, g, lap, 1);
    EXPECT_NEAR(l1.lhs, 1 + m2 + m2, 1e-4);
    EXPECT_NEAR(l1.rhs, 2 + 1, 1e-4);
    EXPECT_NEAR(l1.ratio, 2.0 / 3.0, 1e-4);
    // l = 2 adds |g''|^2, |xg'|^2, |x^2 g|^2 against |Hg|^2 + |g|^2
    LadderResult l2 = seminorm_ladder_check(k, g, lap, 2);
    const double lhs2 = 1 + m2 + (m4 - 2 * m2 + 1) + m2 + m4 + m4;
    EXPECT_NEAR(l2.lhs, lhs2, 1e-3);
    EXPECT_NEAR(l2.rhs, 4 + 1, 1e-3);
    EXPECT_NEAR(l2.ratio, lhs2 / 5.0, 1e-3);
    EXPECT_THROW(seminorm_ladder_check(k, g, lap, 3), InvalidSpecError);
}

TEST(Ladder, StableUnderRefinement)
{
    std::vector<double> r1, r2;
    for (int n : {256, 512, 1024}) {
        CochainComplex k = fine_line(n);
        // first excited state x g
        DiscreteForm g = sample(k, 0, [](double x) { return std::sqrt(2.0) * x * ground(x); });
        auto lap = laplacian_h_direct(k, 0);
        r1.push_back(seminorm_ladder_check(k, g, lap, 1).ratio);
        r2.push_back(seminorm_ladder_check(k, g, lap, 2).ratio);
    }
    for (auto* r : {&r1, &r2}) {
        for (double v : *r) EXPECT_TRUE(std::isfinite(v) && v > 0.0);
        EXPECT_LT(std::abs((*r)[2] - (*r)[1]), std::abs((*r)[1] - (*r)[0]) + 1e-12);
        EXPECT_LT(std::abs((*r)[2] - (*r)[1]), 1e-3);
    }
}

TEST(Decay, CompactSupportAndGaussian)
{
    CochainComplex k = fine_line(256);
    DiscreteForm bump = sample(k, 1, [](double x) { return std::abs(x) < 2.0 ? std::pow(4.0 - x * x, 3) : 0.0; });
    auto prof = decay_profile(k, bump, 0);
    ASSERT_EQ(prof.size(), 8u);
    for (int m = 3; m < 8; ++m) {
        EXPECT_EQ(prof[m].sup_value, 0.0) << m;
        EXPECT_EQ(prof[m].sup_moment[3], 0.0) << m;
    }
    EXPECT_GT(prof[0].sup_value, 0.0);

    auto gp = decay_profile(k, sample(k, 1, ground), 0);
    for (int m = 1; m < 8; ++m) EXPECT_LT(gp[m].sup_value, gp[m - 1].sup_value) << m;
    // |x^3 g'| decreases past its turning point
    for (int m = 4; m < 8; ++m) EXPECT_LT(gp[m].sup_moment[3], gp[m - 1].sup_moment[3]) << m;
    EXPECT_THROW(decay_profile(k, bump, 1), InvalidSpecError);
}

TEST(Envelope, GaussianPassesSlowerDecayFails)
{
    CochainComplex k = fine_line(512);
    EnvelopeReport good = envelope_check(k, sample(k, 1, ground), 0);
    EXPECT_TRUE(good.pass);
    EXPECT_EQ(good.x.size(), 4u);
    EXPECT_DOUBLE_EQ(good.x[0], 2.5);
    // polynomial prefactors within x^3 pass
    EXPECT_TRUE(envelope_check(k, sample(k, 1, [](double x) { return x * x * ground(x); }), 0).pass);
    EnvelopeReport slow = envelope_check(k, sample(k, 1, [](double x) { return std::exp(-0.25 * x * x); }), 0);
    EXPECT_FALSE(slow.pass);
    EXPECT_GT(slow.max_excess, 0.0);
    // nothing in the first shell: no envelope
    DiscreteForm zero(1, Eigen::VectorXd::Zero(k.cell_count(1)));
    EXPECT_FALSE(envelope_check(k, zero, 0).pass);
}
